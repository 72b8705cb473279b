#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vtreid/evalkit/report.hpp"
#include "vtreid/pipeline/config.hpp"

namespace vtreid::pipeline {

namespace fs = std::filesystem;

using Progress = std::function<void(const std::string&)>;

// Output tree under one run directory:
//   data/{source,target,test}/   gen-data
//   translate/                   train-translate (checkpoint/, log.csv)
//   translated/source/           translate
//   reid/<variant>/              train-reid (checkpoint/, log.csv)
//   eval/                        evaluate (report.csv/json, cmc@<size>.csv)
//   plots/                       plot
// Every stage directory holds artifact.json: stage name, config hash,
// the hash of the config keys the stage depends on, and a hash of each file.

void gen_data(const RunConfig& config, const fs::path& run, const Progress& progress = {});
void train_translate(const RunConfig& config, const fs::path& run, bool resume = false, const Progress& progress = {});
void translate(const RunConfig& config, const fs::path& run, const Progress& progress = {});
// `variant` empty trains all four.
void train_reid(const RunConfig& config, const fs::path& run, const std::string& variant = {}, bool resume = false,
                const Progress& progress = {});
// Scores every trained variant; reads checkpoints, never writes them.
eval::EvalReport evaluate(const RunConfig& config, const fs::path& run, const Progress& progress = {});
std::vector<fs::path> plot(const RunConfig& config, const fs::path& run);

struct VerifyResult {
  std::size_t artifacts = 0;
  std::size_t files = 0;
  std::vector<std::string> problems;
  bool ok() const { return artifacts > 0 && problems.empty(); }
};
// Recomputes every recorded file hash and compares recorded config hashes
// with `config`.
VerifyResult verify(const RunConfig& config, const fs::path& run);

// Fingerprint of a file's bytes (FNV-1a, hex).
std::string file_hash(const fs::path& file);

// Exclusive writer lock on a run directory; IoError if already held.
class RunLock {
 public:
  explicit RunLock(const fs::path& run);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

}  // namespace vtreid::pipeline
