#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "chaoslab/error.hpp"
#include "chaoslab/harness.hpp"
#include "doctest.h"

using namespace chaoslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("chaoslab_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_run(const fs::path& dir) {
  ::unsetenv("CHAOSLAB_OUTPUT_DIR");
  auto c = parse_config(R"({"preset": "custom", "N": 4, "M": 64, "t_max": 0.2, "dt": 0.01,
                            "output_interval": 0.05, "initial": {"kind": "cosine", "amplitude": 0.5}})");
  c.output_dir = dir.string();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error_path(const std::string& json) {
  try {
    parse_config(json);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("strict schema names the offending key") {
  CHECK(config_error_path(R"({"preset": "custom", "Nn": 3})") == "Nn");
  CHECK(config_error_path(R"({"preset": "custom", "kernel": {"nmae": "zero"}})") == "kernel.nmae");
  CHECK(config_error_path(R"({"preset": "custom", "initial": {"amp": 1}})") == "initial.amp");
  CHECK(config_error_path(R"({"preset": "counterexample", "thresholds": {"bogus": 1}})") ==
        "thresholds.bogus");
  CHECK(config_error_path(R"({"preset": "custom", "N": "four"})") == "N");
  CHECK(config_error_path(R"({"preset": "nope"})") == "preset");
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  const auto c = parse_config(R"({"preset": "counterexample", "thresholds": {"particle_l1_uniform": 0.2}})");
  CHECK(c.threshold("particle_l1_uniform") == 0.2);
  CHECK(c.N == 16);
}

TEST_CASE("every preset resolves and validates") {
  for (const auto& name : preset_names()) {
    const auto c = preset_config(name);
    CHECK(c.preset == name);
    CHECK_NOTHROW(validate_config(c));
    CHECK(parse_config(config_to_json(c)).preset == name);
    CHECK(config_hash(parse_config(config_to_json(c))) == config_hash(c));
  }
}

TEST_CASE("identical configs give identical diagnostics") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto ra = run_preset(small_run(a), {std::nullopt, true});
  const auto rb = run_preset(small_run(b), {std::nullopt, true});
  CHECK(ra.exit_code() == 0);
  CHECK(rb.exit_code() == 0);
  CHECK(same_diagnostics((a / "series.csv").string(), (b / "series.csv").string()));
  CHECK(slurp(a / "verdict.json") == slurp(b / "verdict.json"));
}

TEST_CASE("interrupted runs resume to the same result") {
  const auto full = scratch("full"), cut = scratch("cut");
  run_preset(small_run(full), {std::nullopt, true});
  CHECK_THROWS_AS(run_preset(small_run(cut), {2, true}), Interrupted);
  CHECK_FALSE(fs::exists(cut / "series.csv"));
  const auto r = resume(cut.string(), {std::nullopt, true});
  CHECK(r.resumed);
  CHECK(same_diagnostics((full / "series.csv").string(), (cut / "series.csv").string()));
  const auto again = resume(cut.string(), {std::nullopt, true});
  CHECK(again.already_complete);
  CHECK(again.exit_code() == 0);
}

TEST_CASE("corrupt checkpoints are refused by name") {
  const auto dir = scratch("corrupt");
  CHECK_THROWS_AS(run_preset(small_run(dir), {1, true}), Interrupted);
  fs::path snap;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".snap") snap = e.path();
  REQUIRE_FALSE(snap.empty());
  {
    std::fstream f(snap, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x5a');
  }
  try {
    resume(dir.string(), {std::nullopt, true});
    FAIL("resume accepted a corrupt snapshot");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(snap.filename().string()) != std::string::npos);
  }
}

TEST_CASE("zero horizon writes the initial rows only") {
  const auto dir = scratch("t0");
  auto c = small_run(dir);
  c.t_max = 0.0;
  CHECK(run_preset(c, {std::nullopt, true}).exit_code() == 0);
  std::ifstream in(dir / "series.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
    CHECK(line.rfind("0,", 0) == 0);
    ++rows;
  }
  CHECK(rows > 0);
}

TEST_CASE("plot data merges runs and lists missing inputs") {
  const auto a = scratch("plot_a"), b = scratch("plot_b");
  auto ca = small_run(a), cb = small_run(b);
  cb.seed = 9;
  run_preset(ca, {std::nullopt, true});
  run_preset(cb, {std::nullopt, true});
  const auto out = scratch("plot_out.csv");
  emit_plotdata({(a / "series.csv").string(), (b / "series.csv").string()}, out.string());
  std::ifstream in(out);
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "t,k,N,sigma,metric,value,stderr,seed");
  bool seed1 = false, seed9 = false;
  while (std::getline(in, line)) {
    seed1 |= line.size() > 2 && line.substr(line.rfind(',') + 1) == "1";
    seed9 |= line.size() > 2 && line.substr(line.rfind(',') + 1) == "9";
  }
  CHECK(seed1);
  CHECK(seed9);

  try {
    emit_plotdata({"/nonexistent/one.csv", (a / "series.csv").string(), "/nonexistent/two.csv"},
                  out.string());
    FAIL("missing inputs accepted");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("one.csv") != std::string::npos);
    CHECK(msg.find("two.csv") != std::string::npos);
  }

  emit_plotdata({}, out.string());
  std::ifstream empty(out);
  std::getline(empty, header);
  CHECK(header == "t,k,N,sigma,metric,value,stderr,seed");
  CHECK_FALSE(std::getline(empty, line));
}
