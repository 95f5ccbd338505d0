// chaoslab command-line harness.
//
// Exit codes: 0 pass, 1 property failure, 2 configuration or input error,
// 3 numerical failure (blow-up, step size, singularity), 5 interrupted.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chaoslab/error.hpp"
#include "chaoslab/harness.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInterrupted = 5;

void print_result(const chaoslab::RunResult& r, bool quiet) {
  if (r.already_complete) {
    std::cout << "run already complete; nothing to do\n";
    return;
  }
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  if (quiet) return;
  for (const auto& v : r.verdicts) {
    std::printf("%-4s %-28s measured=%-14.6g threshold=%-12.6g%s%s%s\n", v.passed ? "PASS" : "FAIL",
                v.id.c_str(), v.measured, v.threshold, v.hard ? "" : " (soft)",
                v.note.empty() ? "" : "  ", v.note.c_str());
  }
  for (const auto& f : r.files) std::cout << "wrote " << f << "\n";
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const chaoslab::Interrupted& e) {
    std::cerr << e.what() << "\n";
    return kExitInterrupted;
  } catch (const chaoslab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const chaoslab::NumericalBlowup& e) {
    std::cerr << "numerical blow-up: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const chaoslab::StepSizeError& e) {
    std::cerr << "step size: " << e.what() << " (suggested dt " << e.suggested_dt() << ")\n";
    return kExitNumerical;
  } catch (const chaoslab::SingularityError& e) {
    std::cerr << "singularity: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chaoslab: propagation-of-chaos experiments on the torus"};
  app.set_version_flag("--version", chaoslab::version_string());
  app.require_subcommand(1);

  std::string config_path, preset, output_dir;
  int interrupt_after = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a preset or a config file");
  run->add_option("config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--preset", preset, "Preset with default settings (when no config file)");
  run->add_option("--output-dir", output_dir, "Output directory (overrides config and environment)");
  run->add_option("--interrupt-after", interrupt_after,
                  "Stop after this many checkpoints, leaving the run resumable (exit 5)")
      ->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "Only print warnings and errors");

  std::string run_dir;
  auto* res = app.add_subcommand("resume", "Continue an interrupted run");
  res->add_option("run_dir", run_dir, "Run directory containing manifest.json")->required();
  res->add_option("--interrupt-after", interrupt_after, "Stop after this many checkpoints")
      ->check(CLI::PositiveNumber);
  res->add_flag("--quiet", quiet, "Only print warnings and errors");

  std::vector<std::string> inputs;
  std::string out_path = "plotdata.csv";
  auto* emit = app.add_subcommand("emit-plotdata", "Merge series CSVs into long-format plot data");
  emit->add_option("inputs", inputs, "series.csv files or run directories");
  emit->add_option("-o,--output", out_path, "Output CSV");

  auto* list = app.add_subcommand("list-presets", "List presets");

  std::string validate_path;
  auto* val = app.add_subcommand("validate-config", "Check a config file and print it resolved");
  val->add_option("config", validate_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  chaoslab::RunOptions options;
  if (interrupt_after > 0) options.interrupt_after = interrupt_after;
  options.quiet = quiet;

  if (*run) {
    return guarded([&] {
      if (config_path.empty() == preset.empty())
        throw chaoslab::ConfigError("", "give exactly one of a config file or --preset");
      auto config = config_path.empty() ? chaoslab::preset_config(preset)
                                        : chaoslab::load_config(config_path);
      if (!output_dir.empty()) ::setenv("CHAOSLAB_OUTPUT_DIR", output_dir.c_str(), 1);
      const auto result = chaoslab::run_preset(config, options);
      print_result(result, quiet);
      return result.exit_code();
    });
  }
  if (*res) {
    return guarded([&] {
      const auto result = chaoslab::resume(run_dir, options);
      print_result(result, quiet);
      return result.exit_code();
    });
  }
  if (*emit) {
    return guarded([&] {
      std::vector<std::string> files;
      for (const auto& in : inputs)
        files.push_back(std::filesystem::is_directory(in) ? (std::filesystem::path(in) / "series.csv").string()
                                                          : in);
      chaoslab::emit_plotdata(files, out_path);
      std::cout << "wrote " << out_path << "\n";
      return kExitPass;
    });
  }
  if (*list) {
    for (const auto& name : chaoslab::preset_names())
      std::printf("%-18s %s\n", name.c_str(), chaoslab::preset_description(name).c_str());
    return kExitPass;
  }
  if (*val) {
    return guarded([&] {
      const auto config = chaoslab::load_config(validate_path);
      std::cout << chaoslab::config_to_json(config, 2) << "\n";
      return kExitPass;
    });
  }
  return kExitPass;
}
