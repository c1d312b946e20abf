#include <iostream>

#include "CLI11.hpp"
#include "cli.hpp"
#include "hyco/kernels.hpp"

using namespace hyco::cli;

int main(int argc, char** argv) {
  CLI::App app{"Hybrid physical/synthetic model co-training"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "train one method on one scenario");
  std::string preset_name, config_path, method, ghost_mode, out;
  std::uint64_t seed = 0;
  int epochs = -1, threads = 0;
  bool parallel = false;
  std::vector<std::string> sets;
  run->add_option("--preset", preset_name, "preset name, e.g. helmholtz_q2_desk");
  run->add_option("--config", config_path, "TOML-style config file")->check(CLI::ExistingFile);
  run->add_option("--method", method, "hyco | physics_only | nn_only | pinn");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out, "output directory");
  run->add_option("--epochs", epochs, "override train.epochs");
  run->add_option("--ghost-mode", ghost_mode, "per_epoch | fixed");
  run->add_flag("--parallel", parallel, "parallel finite-difference solves and player updates");
  run->add_option("--threads", threads, "OpenMP thread count (0 = runtime default)");
  run->add_option("--set", sets, "override section.key=value (repeatable)");
  bool list_presets = false, print_config = false;
  run->add_flag("--list-presets", list_presets, "print preset names and exit");
  run->add_flag("--print-config", print_config, "print the resolved config and exit");

  auto* compare = app.add_subcommand("compare", "tabulate finished runs");
  std::vector<std::string> runs;
  std::string table = "comparison.csv";
  compare->add_option("runs", runs, "run directories")->required();
  compare->add_option("-o,--out", table, "output CSV");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  std::string vconfig;
  validate->add_option("config", vconfig, "config file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    if (list_presets) {
      for (const auto& n : hyco::preset_names()) std::cout << n << '\n';
      return 0;
    }
    try {
      RunSpec spec = config_path.empty() ? RunSpec{} : load_config(config_path);
      if (!preset_name.empty()) spec.preset_name = preset_name;
      if (!method.empty()) spec.method = method_from_string(method);
      if (run->count("--seed")) spec.seed = seed;
      if (!out.empty()) spec.out = out;
      if (epochs >= 0) spec.overrides.emplace_back("train.epochs", std::to_string(epochs));
      if (!ghost_mode.empty()) spec.overrides.emplace_back("train.ghost_mode", ghost_mode);
      if (parallel) spec.overrides.emplace_back("train.parallel", "true");
      for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set " + kv + ": expected section.key=value");
        spec.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
      }
      resolve(spec);
      if (print_config) {
        write_config(std::cout, spec);
        return 0;
      }
      if (threads > 0) hyco::kernels::set_threads(threads);
      return cmd_run(spec, std::cout);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 1;
    }
  }
  if (*compare) {
    std::vector<std::filesystem::path> dirs(runs.begin(), runs.end());
    return cmd_compare(dirs, table, std::cout);
  }
  return cmd_validate(vconfig, std::cout);
}
