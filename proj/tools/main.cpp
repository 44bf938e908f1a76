// Experiment runner for the balanced modality selection simulator.
//
//   bmsfed run <config> [--out <dir>]
//   bmsfed compare <config>... --seeds 1,2,3 [--out <dir>]
//   bmsfed --version
//
// BMSFED_OUT_DIR serves as the default output root when --out is absent.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bmsfed/error.hpp"
#include "bmsfed/experiment.hpp"
#include "bmsfed/version.hpp"

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("BMSFED_OUT_DIR");
  return env && *env ? env : ".";
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    const std::string tok =
        csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) throw bmsfed::ConfigError("--seeds: empty entry in '" + csv + "'");
    std::size_t used = 0;
    const auto v = std::stoull(tok, &used);
    if (used != tok.size()) {
      throw bmsfed::ConfigError("--seeds: bad seed '" + tok + "'");
    }
    seeds.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return seeds;
}

int do_run(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = bmsfed::load_config_file(config_path);
  const auto result = bmsfed::run_experiment(cfg);
  bmsfed::write_run_outputs(result, out_dir);
  std::cout << "wrote " << out_dir << "/metrics.csv (" << result.rounds.size()
            << " rounds, final acc_multi "
            << result.final_round().acc_multi << ")\n";
  return 0;
}

int do_compare(const std::vector<std::string>& config_paths,
               const std::string& seeds_csv, const std::string& out_dir) {
  std::vector<bmsfed::ExperimentConfig> configs;
  for (const auto& path : config_paths) {
    configs.push_back(bmsfed::load_config_file(path));
  }
  const auto seeds = parse_seeds(seeds_csv);
  const auto rows = bmsfed::compare_methods(configs, seeds);
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/comparison.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bmsfed::DataError("cannot open " + path);
  out << bmsfed::comparison_csv(rows);
  std::cout << "wrote " << path << " (" << rows.size() << " methods, "
            << seeds.size() << " seeds)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balanced modality selection simulator for multi-modal federated learning"};
  app.set_version_flag("--version", std::string("bmsfed ") + bmsfed::kVersion);
  app.require_subcommand(0, 1);

  std::string run_config;
  std::string run_out = default_out_dir();
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", run_config, "Path to a key = value config file")
      ->required();
  run->add_option("--out", run_out, "Output directory for metrics.csv/summary.json");

  std::vector<std::string> cmp_configs;
  std::string cmp_seeds;
  std::string cmp_out = default_out_dir();
  auto* cmp = app.add_subcommand("compare", "Run several configs across seeds");
  cmp->add_option("configs", cmp_configs, "Config files differing only in method")
      ->required()
      ->expected(-1);
  cmp->add_option("--seeds", cmp_seeds, "Comma-separated seed list")->required();
  cmp->add_option("--out", cmp_out, "Output directory for comparison.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return do_run(run_config, run_out);
    if (cmp->parsed()) return do_compare(cmp_configs, cmp_seeds, cmp_out);
    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "bmsfed: " << e.what() << "\n";
    return 1;
  }
}
