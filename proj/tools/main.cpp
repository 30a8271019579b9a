// Command-line driver: micstokes run <config> [options]

#include <iostream>

#include <CLI11.hpp>

#include "micstokes/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Marker-in-cell Stokes solver"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a configuration file");
  std::string config;
  std::vector<std::string> sets;
  std::string mode, ranks, out;
  std::uint64_t seed = 0;
  bool print_json = false;
  run->add_option("config", config, "Configuration file")->required();
  run->add_option("--set", sets, "Override a key (key=value); repeatable");
  auto* mode_opt = run->add_option("--mode", mode, "full, solve or advect")
                       ->check(CLI::IsMember({"full", "solve", "advect"}));
  auto* ranks_opt = run->add_option("--ranks", ranks, "Rank grid PXxPY");
  auto* out_opt = run->add_option("--out", out, "Output directory");
  auto* seed_opt = run->add_option("--seed", seed, "Marker seed");
  run->add_flag("--print-config", print_json, "Print the resolved configuration as JSON and exit");

  CLI11_PARSE(app, argc, argv);

  mic::CliOverrides o;
  o.set = sets;
  if (*mode_opt) o.mode = mode;
  if (*out_opt) o.out = out;
  if (*seed_opt) o.seed = seed;
  try {
    if (*ranks_opt) o.ranks = mic::parse_ranks(ranks);
    if (print_json) {
      auto kv = mic::parse_config_file(config);
      for (const auto& a : sets) mic::apply_override(kv, a);
      std::cout << mic::config_to_json(mic::run_config_from(kv)) << "\n";
      return mic::exit_code::ok;
    }
  } catch (const mic::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return mic::exit_code::config;
  }
  return mic::run_from_file(config, o, std::cout, std::cerr);
}
