// Command-line front-end: run, validate and preset.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <system_error>

#include "CLI11.hpp"
#include "freqalloc/error.hpp"
#include "freqalloc/experiment.hpp"

namespace fs = std::filesystem;
using namespace freqalloc;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kRuntime = 2, kIo = 3 };

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FREQALLOC_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

void print_warnings(const ValidationReport& rep) {
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
}

int run(const std::string& config_path, const std::string& out_flag) {
  const ExperimentConfig cfg = load_config(config_path);
  print_warnings(validate_config(cfg));
  const RunResult result = run_experiment(cfg, output_dir(out_flag));
  for (const auto& f : result.files) std::cout << f.string() << "\n";
  if (result.exit_code != 0) {
    std::cerr << "error: " << result.message << "\n" << dump_json(result.summary["failure"]);
  }
  return result.exit_code;
}

int validate(const std::string& config_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const ValidationReport rep = validate_config(cfg);
  std::cout << "valid: " << config_path << "\n" << dump_json(rep.derived);
  print_warnings(rep);
  return kOk;
}

int emit_preset(const std::string& name, const std::string& out_path) {
  const std::string text = dump_json(preset(name));
  if (out_path.empty()) {
    std::cout << text;
    return kOk;
  }
  std::ofstream out;
  out.exceptions(std::ios::failbit | std::ios::badbit);
  out.open(out_path, std::ios::binary | std::ios::trunc);
  out << text;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed frequency allocation: experiments and verification"};
  app.set_version_flag("--version", std::string(FREQALLOC_VERSION));
  app.require_subcommand(1);

  std::string config_path, out_flag, preset_name, preset_out;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
  run_cmd->add_option("config", config_path, "Config JSON")->required();
  run_cmd->add_option("--output-dir", out_flag, "Output directory (else $FREQALLOC_OUTPUT_DIR, else .)");

  auto* validate_cmd = app.add_subcommand("validate", "Check a config without running it");
  validate_cmd->add_option("config", config_path, "Config JSON")->required();

  auto* preset_cmd = app.add_subcommand("preset", "Print a figure-reproduction config");
  preset_cmd->add_option("name", preset_name, "Preset name")
      ->required()
      ->check(CLI::IsMember(preset_names()));
  preset_cmd->add_option("-o,--output", preset_out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run_cmd) return run(config_path, out_flag);
    if (*validate_cmd) return validate(config_path);
    return emit_preset(preset_name, preset_out);
  } catch (const ValidationError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
