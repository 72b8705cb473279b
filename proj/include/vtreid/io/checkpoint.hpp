#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "vtreid/nn/optim.hpp"
#include "json.hpp"

namespace vtreid::io {

using nn::NamedTensors;
using Json = nlohmann::json;

inline constexpr int kBlobVersion = 1;
inline constexpr int kBundleVersion = 1;

// Current parameter values paired with their names.
NamedTensors named_values(const nn::ParamStore& params);

// Versioned binary tensor blob: magic, version, role tag, named tensors.
// Values are stored as little-endian IEEE doubles.
void write_blob(const std::filesystem::path& file, const std::string& role, const NamedTensors& tensors);
NamedTensors read_blob(const std::filesystem::path& file, const std::string& expected_role);

// Assembles a bundle in a sibling temp directory and renames it into place
// on commit, so readers never see a partial bundle.
class BundleWriter {
 public:
  explicit BundleWriter(std::filesystem::path dir);
  ~BundleWriter();
  BundleWriter(const BundleWriter&) = delete;
  BundleWriter& operator=(const BundleWriter&) = delete;

  void add_tensors(const std::string& role, const NamedTensors& tensors);
  void add_text(const std::string& name, const std::string& content);
  void commit(Json metadata);

 private:
  std::filesystem::path dir_;
  std::filesystem::path tmp_;
  Json blobs_ = Json::object();
  Json texts_ = Json::object();
  bool committed_ = false;
};

class BundleReader {
 public:
  explicit BundleReader(std::filesystem::path dir);

  const Json& metadata() const { return metadata_; }
  bool has_tensors(const std::string& role) const;
  NamedTensors tensors(const std::string& role) const;
  std::string text(const std::string& name) const;

 private:
  std::filesystem::path dir_;
  Json metadata_;
};

}  // namespace vtreid::io
