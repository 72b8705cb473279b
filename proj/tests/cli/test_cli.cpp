#include <sys/wait.h>

#include <cstdlib>

#include "doctest.h"
#include "temp_dir.hpp"

using vtreid::testing::read_file;
using vtreid::testing::TempDir;
using vtreid::testing::write_file;

namespace {

struct Outcome {
  int code = -1;
  std::string out, err;
};

Outcome run(const TempDir& tmp, const std::string& args) {
  const auto out = tmp / "stdout.txt", err = tmp / "stderr.txt";
  const std::string cmd = std::string(VTREID_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
}

const std::string kTiny = VTREID_FIXTURE_DIR "/tiny.toml";

}  // namespace

TEST_CASE("validation failures exit 1 and name the field") {
  TempDir tmp;
  write_file(tmp / "bad.toml", "[translate]\nlambda1 = -1\n");
  auto r = run(tmp, "gen-data --config " + (tmp / "bad.toml").string() + " --out " + (tmp / "run").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("translate.lambda1") != std::string::npos);
  CHECK(!std::filesystem::exists(tmp / "run/data"));

  write_file(tmp / "typo.toml", "[reid]\nlr = 0.1\nlrr = 0.2\n");
  r = run(tmp, "gen-data --config " + (tmp / "typo.toml").string() + " --out " + (tmp / "run").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("reid.lrr") != std::string::npos);

  CHECK(run(tmp, "fly --config " + kTiny).code == 1);
  CHECK(run(tmp, "").code == 1);
  CHECK(run(tmp, "gen-data").code == 1);
  CHECK(run(tmp, "gen-data --preset galactic").code == 1);
  CHECK(run(tmp, "train-reid --config " + kTiny + " --variant everything").code == 1);
}

TEST_CASE("missing upstream output is a runtime failure") {
  TempDir tmp;
  const auto r = run(tmp, "train-translate --config " + kTiny + " --out " + (tmp / "run").string());
  CHECK(r.code == 2);
  CHECK(r.err.find("gen-data") != std::string::npos);
}

TEST_CASE("five-stage pipeline through the command line") {
  TempDir tmp;
  const std::string common = " --config " + kTiny + " --out " + (tmp / "run").string();
  for (const char* stage : {"gen-data", "train-translate", "translate", "train-reid", "evaluate", "plot", "verify"}) {
    const auto r = run(tmp, std::string(stage) + common);
    INFO(stage, ": ", r.err);
    CHECK(r.code == 0);
    if (std::string(stage) == "evaluate") {
      for (const char* row : {"Direct Transfer + Baseline,", "VTGAN + Baseline,", "Direct Transfer + ATTNet,",
                              "VTGAN + ATTNet,"}) {
        CHECK(r.out.find(row) != std::string::npos);
      }
    }
  }
  CHECK(run(tmp, "verify" + common + " --seed 12").code == 2);

  // A held lock blocks a second writer.
  write_file(tmp / "run/.lock", "1\n");
  const auto locked = run(tmp, "evaluate" + common);
  CHECK(locked.code == 2);
  CHECK(locked.err.find("locked") != std::string::npos);
}
