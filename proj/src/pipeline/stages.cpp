#include "vtreid/pipeline/stages.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vtreid/attnet/train.hpp"
#include "vtreid/core/error.hpp"
#include "vtreid/core/hash.hpp"
#include "vtreid/datamodel/dataset.hpp"
#include "vtreid/pipeline/benchmark.hpp"
#include "vtreid/pipeline/plot.hpp"
#include "vtreid/vtgan/train.hpp"

namespace vtreid::pipeline {

using Json = nlohmann::json;

namespace {

constexpr const char* kArtifact = "artifact.json";

enum class Scope { data, translate, reid, all };

// Hash of the canonical lines a stage's output depends on.
std::string scope_hash(const RunConfig& config, Scope scope) {
  if (scope == Scope::all) return config.hash();
  std::vector<std::string> prefixes{"preset=", "data."};
  if (scope != Scope::data) prefixes.insert(prefixes.end(), {"seed=", "translate."});
  if (scope == Scope::reid) prefixes.push_back("reid.");
  std::istringstream in(config.canonical());
  std::string line, kept;
  while (std::getline(in, line)) {
    for (const auto& p : prefixes) {
      if (line.rfind(p, 0) == 0) {
        kept += line + "\n";
        break;
      }
    }
  }
  return hex64(fnv1a64(kept));
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + p.string());
}

// Records every file under `dir` (except artifact.json itself).
void write_artifact(const fs::path& dir, const std::string& stage, const RunConfig& config, Scope scope) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == kArtifact) continue;
    files.push_back(fs::relative(e.path(), dir).generic_string());
  }
  std::sort(files.begin(), files.end());
  Json hashes = Json::object();
  for (const auto& f : files) hashes[f] = file_hash(dir / f);
  Json a;
  a["stage"] = stage;
  a["config_hash"] = config.hash();
  a["scope_hash"] = scope_hash(config, scope);
  a["files"] = hashes;
  write_text(dir / kArtifact, a.dump(2) + "\n");
}

// An upstream stage's output must exist and match the current config.
void require_upstream(const fs::path& dir, const std::string& stage, const RunConfig& config, Scope scope) {
  const fs::path a = dir / kArtifact;
  if (!fs::exists(a)) throw IoError(dir.string() + " is missing; run `" + stage + "` first");
  const Json j = Json::parse(read_text(a));
  if (j.value("scope_hash", "") != scope_hash(config, scope)) {
    throw ConfigError(dir.string() + " was produced under a different config; rerun `" + stage + "`");
  }
}

void say(const Progress& p, const std::string& msg) {
  if (p) p(msg);
}

data::DomainDataset load_source(const fs::path& dir) { return data::load_manifest(dir / "manifest.csv", data::DomainTag::source); }

}  // namespace

std::string file_hash(const fs::path& file) { return hex64(fnv1a64(read_text(file))); }

RunLock::RunLock(const fs::path& run) : path_(run / ".lock") {
  fs::create_directories(run);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    path_.clear();
    throw IoError("run directory " + run.string() + " is locked by another writer (remove " +
                  (run / ".lock").string() + " if no other process is running)");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  if (path_.empty()) return;
  std::error_code ec;
  fs::remove(path_, ec);
}

void gen_data(const RunConfig& config, const fs::path& run, const Progress& progress) {
  const BenchmarkData b = render_benchmark(config.data);
  const fs::path dir = run / "data";
  fs::remove_all(dir);
  data::save_dataset(b.source, dir / "source");
  data::save_dataset(b.target, dir / "target");
  data::save_dataset(b.test, dir / "test");
  write_artifact(dir, "gen-data", config, Scope::data);
  say(progress, "wrote " + std::to_string(b.source.size()) + " source, " + std::to_string(b.target.size()) +
                    " target and " + std::to_string(b.test.size()) + " test images");
}

void train_translate(const RunConfig& config, const fs::path& run, bool resume, const Progress& progress) {
  require_upstream(run / "data", "gen-data", config, Scope::data);
  const auto source = load_source(run / "data" / "source");
  const auto target = data::load_manifest(run / "data" / "target" / "manifest.csv", data::DomainTag::target);
  const fs::path dir = run / "translate";
  if (!resume) fs::remove_all(dir);
  fs::remove(dir / kArtifact);
  const auto tc = config.translation_config();
  const long total = tc.total_steps(source.size());
  const auto result = vtgan::train_translation(source, target, tc, dir, resume, 0,
                                               [&](long step, const vtgan::TranslationLossReport& r) {
                                                 if (step % 100 == 0 || step == total) {
                                                   char buf[128];
                                                   std::snprintf(buf, sizeof buf, "step %ld/%ld l_total %.4f", step,
                                                                 total, r.l_total);
                                                   say(progress, buf);
                                                 }
                                               });
  write_artifact(dir, "train-translate", config, Scope::translate);
  say(progress, "translation trained for " + std::to_string(result.steps) + " steps");
}

void translate(const RunConfig& config, const fs::path& run, const Progress& progress) {
  require_upstream(run / "data", "gen-data", config, Scope::data);
  require_upstream(run / "translate", "train-translate", config, Scope::translate);
  const auto source = load_source(run / "data" / "source");
  const auto g = vtgan::load_generator(run / "translate" / "checkpoint", config.translate.generator);
  const auto translated = with_images(source, vtgan::translate(source.images(), *g));
  const fs::path dir = run / "translated";
  fs::remove_all(dir);
  data::save_dataset(translated, dir / "source");
  write_artifact(dir, "translate", config, Scope::translate);
  say(progress, "translated " + std::to_string(source.size()) + " source images");
}

void train_reid(const RunConfig& config, const fs::path& run, const std::string& variant, bool resume,
                const Progress& progress) {
  std::vector<Variant> todo;
  if (variant.empty()) {
    todo.assign(kVariants.begin(), kVariants.end());
  } else {
    todo.push_back(find_variant(variant));
  }
  require_upstream(run / "data", "gen-data", config, Scope::data);
  const bool need_translated = std::any_of(todo.begin(), todo.end(), [](const Variant& v) { return v.translated; });
  if (need_translated) require_upstream(run / "translated", "translate", config, Scope::translate);
  const auto direct = load_source(run / "data" / "source");
  const auto translated = need_translated ? load_source(run / "translated" / "source") : data::DomainDataset{};
  for (const auto& v : todo) {
    const fs::path dir = run / "reid" / v.id;
    if (!resume) fs::remove_all(dir);
    fs::remove(dir / kArtifact);
    const auto& ds = v.translated ? translated : direct;
    const auto rc = config.reid_config(v.attention);
    const long total = rc.total_steps(ds.size());
    const auto result = attnet::train_reid(ds, rc, dir, resume, 0, [&](long step, const attnet::ReidLossReport& r) {
      if (step % 100 == 0 || step == total) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s step %ld/%ld l_total %.4f acc_id %.3f", v.id, step, total, r.l_total,
                      r.acc_id);
        say(progress, buf);
      }
    });
    write_artifact(dir, "train-reid", config, Scope::reid);
    say(progress, std::string(v.id) + " trained for " + std::to_string(result.steps) + " steps");
  }
}

eval::EvalReport evaluate(const RunConfig& config, const fs::path& run, const Progress& progress) {
  require_upstream(run / "data", "gen-data", config, Scope::data);
  const auto test = load_source(run / "data" / "test");
  std::vector<eval::MethodResult> rows;
  std::vector<std::string> labels;
  std::vector<std::vector<std::vector<double>>> curves;  // [method][size]
  for (const auto& v : kVariants) {
    const fs::path dir = run / "reid" / v.id;
    if (!fs::exists(dir / kArtifact)) continue;
    require_upstream(dir, "train-reid", config, Scope::reid);
    attnet::ReidTrainConfig rc = config.reid_config(v.attention);
    rc.model.num_classes = config.data.spec.n_identities;
    const auto net = attnet::load_reid_net(dir / "checkpoint", rc.model);
    auto m = evaluate_method(*net, v.label, test, config.eval, config.split_seed());
    rows.push_back(m.result);
    labels.push_back(v.label);
    curves.push_back(std::move(m.cmc));
    say(progress, std::string("evaluated ") + v.id);
  }
  if (rows.empty()) throw IoError("no trained reID variants under " + (run / "reid").string() + "; run `train-reid` first");
  const auto report = eval::compose_report(config.eval.sizes, rows, config.hash());
  const fs::path dir = run / "eval";
  fs::remove_all(dir);
  write_text(dir / "report.csv", report.to_csv());
  write_text(dir / "report.json", report.to_json().dump(2) + "\n");
  for (std::size_t s = 0; s < config.eval.sizes.size(); ++s) {
    std::vector<std::vector<double>> per_method;
    for (const auto& c : curves) per_method.push_back(c[s]);
    write_text(dir / ("cmc@" + std::to_string(config.eval.sizes[s]) + ".csv"), eval::cmc_csv(labels, per_method));
  }
  write_artifact(dir, "evaluate", config, Scope::all);
  return report;
}

std::vector<fs::path> plot(const RunConfig& config, const fs::path& run) {
  require_upstream(run / "eval", "evaluate", config, Scope::all);
  std::vector<std::pair<std::string, fs::path>> logs;
  if (fs::exists(run / "translate" / "log.csv")) logs.emplace_back("translate", run / "translate" / "log.csv");
  for (const auto& v : kVariants) {
    const fs::path log = run / "reid" / v.id / "log.csv";
    if (fs::exists(log)) logs.emplace_back(v.id, log);
  }
  const fs::path dir = run / "plots";
  fs::remove_all(dir);
  auto files = emit_plots(run / "eval", logs, dir);
  write_artifact(dir, "plot", config, Scope::all);
  return files;
}

VerifyResult verify(const RunConfig& config, const fs::path& run) {
  VerifyResult out;
  if (!fs::exists(run)) {
    out.problems.push_back(run.string() + " does not exist");
    return out;
  }
  std::vector<fs::path> artifacts;
  for (const auto& e : fs::recursive_directory_iterator(run))
    if (e.is_regular_file() && e.path().filename() == kArtifact) artifacts.push_back(e.path());
  std::sort(artifacts.begin(), artifacts.end());
  for (const auto& a : artifacts) {
    ++out.artifacts;
    const fs::path dir = a.parent_path();
    Json j;
    try {
      j = Json::parse(read_text(a));
    } catch (const std::exception& e) {
      out.problems.push_back(a.string() + ": unreadable (" + e.what() + ")");
      continue;
    }
    const std::string stage = j.value("stage", "");
    const Scope scope = stage == "gen-data"                                   ? Scope::data
                        : stage == "train-translate" || stage == "translate" ? Scope::translate
                        : stage == "train-reid"                              ? Scope::reid
                                                                             : Scope::all;
    if (j.value("scope_hash", "") != scope_hash(config, scope)) {
      out.problems.push_back(a.string() + ": config hash does not match the given config");
    }
    const Json files = j.value("files", Json::object());
    for (const auto& [name, hash] : files.items()) {
      ++out.files;
      const fs::path f = dir / name;
      if (!fs::exists(f)) {
        out.problems.push_back(f.string() + ": missing");
      } else if (file_hash(f) != hash.get<std::string>()) {
        out.problems.push_back(f.string() + ": content changed");
      }
    }
  }
  if (artifacts.empty()) out.problems.push_back("no artifacts under " + run.string());
  return out;
}

}  // namespace vtreid::pipeline
