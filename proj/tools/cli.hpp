#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hyco/experiments.hpp"

namespace hyco::cli {

/// Config problem; exit status 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Method { hyco, physics_only, nn_only, pinn };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct RunSpec {
  std::string preset_name = "helmholtz_desk";
  Method method = Method::hyco;
  std::uint64_t seed = 0;
  std::filesystem::path out = "runs/out";
  Preset resolved;
  /// Overrides in application order ("section.key", raw value).
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// Parses "key = value" lines grouped under [run], [scenario], [train] and
/// [network]; '#' starts a comment. Errors name the line and field.
RunSpec parse_config(std::istream& is, const std::string& source = "<config>");
RunSpec load_config(const std::filesystem::path& path);

/// Rebuilds spec.resolved from the preset plus overrides, then checks invariants.
void resolve(RunSpec& spec);
void apply_override(Preset& p, const std::string& key, const std::string& value);

/// Fully resolved config in the same format parse_config reads.
void write_config(std::ostream& os, const RunSpec& spec);

/// Runs the spec and writes history.csv, summary.json, config.toml,
/// dataset.{csv,json} and fields/*.csv under spec.out. Returns the exit status.
int cmd_run(const RunSpec& spec, std::ostream& log);

/// Merges the summaries of completed runs into a table
/// (method, region, time_s, e_p, e_s, e_d); returns the exit status.
int cmd_compare(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out_csv,
                std::ostream& log);

int cmd_validate(const std::filesystem::path& config, std::ostream& log);

}  // namespace hyco::cli
