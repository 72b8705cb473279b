// vtreid <stage> --config <path> [--out <dir>] [--seed <int>]
#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "vtreid/core/error.hpp"
#include "vtreid/pipeline/config.hpp"
#include "vtreid/pipeline/stages.hpp"

namespace pl = vtreid::pipeline;

namespace {

constexpr int kOk = 0, kInvalid = 1, kFailed = 2;

struct Options {
  std::string config;
  std::string preset;
  std::string out = "run";
  std::optional<std::uint64_t> seed;
  std::string variant;
  bool resume = false;
};

void add_common(CLI::App* cmd, Options& o, bool needs_config = true) {
  auto* c = cmd->add_option("--config", o.config, "run configuration file");
  if (needs_config) {
    cmd->add_option("--preset", o.preset, "use a built-in preset instead of a file (desk-scale, paper-scale)")
        ->excludes(c);
  }
  cmd->add_option("--out", o.out, "run directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "overrides the config seed");
}

pl::RunConfig resolve(const Options& o) {
  pl::RunConfig c;
  if (!o.config.empty()) {
    c = pl::load_run_config(o.config);
  } else if (!o.preset.empty()) {
    c = pl::preset(o.preset);
  } else {
    throw vtreid::ConfigError("one of --config or --preset is required");
  }
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

void report(const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vtreid: cross-domain vehicle re-identification pipeline"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "render the synthetic benchmark");
  auto* trt = app.add_subcommand("train-translate", "train the translation model");
  auto* tr = app.add_subcommand("translate", "translate the source training set");
  auto* reid = app.add_subcommand("train-reid", "train the reID variants");
  auto* ev = app.add_subcommand("evaluate", "score trained variants on the test set");
  auto* pt = app.add_subcommand("plot", "render CMC and loss plots");
  auto* vf = app.add_subcommand("verify", "recompute artifact hashes");
  auto* show = app.add_subcommand("show-config", "print the resolved configuration");
  for (auto* cmd : {gen, trt, tr, reid, ev, pt, vf, show}) add_common(cmd, o);
  for (auto* cmd : {trt, reid}) cmd->add_flag("--resume", o.resume, "continue from the last checkpoint");
  reid->add_option("--variant", o.variant, "train one variant only")
      ->check(CLI::IsMember({"direct-baseline", "translated-baseline", "direct-attnet", "translated-attnet"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  pl::RunConfig config;
  try {
    config = resolve(o);
  } catch (const vtreid::ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kInvalid;
  } catch (const vtreid::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailed;
  }

  try {
    if (show->parsed()) {
      std::cout << pl::format_run_config(config) << "# config_hash " << config.hash() << "\n";
      return kOk;
    }
    if (vf->parsed()) {
      const auto r = pl::verify(config, o.out);
      for (const auto& p : r.problems) std::printf("MISMATCH %s\n", p.c_str());
      std::printf("%s: %zu artifacts, %zu files, config_hash %s\n", r.ok() ? "verified" : "FAILED", r.artifacts,
                  r.files, config.hash().c_str());
      return r.ok() ? kOk : kFailed;
    }
    pl::RunLock lock(o.out);
    if (gen->parsed()) pl::gen_data(config, o.out, report);
    if (trt->parsed()) pl::train_translate(config, o.out, o.resume, report);
    if (tr->parsed()) pl::translate(config, o.out, report);
    if (reid->parsed()) pl::train_reid(config, o.out, o.variant, o.resume, report);
    if (ev->parsed()) std::cout << pl::evaluate(config, o.out, report).to_csv();
    if (pt->parsed()) {
      for (const auto& f : pl::plot(config, o.out)) std::printf("%s\n", f.string().c_str());
    }
  } catch (const vtreid::ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailed;
  }
  return kOk;
}
