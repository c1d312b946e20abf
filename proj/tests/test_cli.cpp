#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace hyco;
using namespace hyco::cli;
namespace fs = std::filesystem;

namespace {

std::string config_text(const RunSpec& spec) {
  std::ostringstream os;
  write_config(os, spec);
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hyco_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string error_of(const std::string& text) {
  try {
    std::istringstream is(text);
    parse_config(is, "cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

RunSpec tiny(const std::string& preset_name, Method m, const fs::path& out) {
  RunSpec spec;
  spec.preset_name = preset_name;
  spec.method = m;
  spec.out = out;
  spec.overrides = {{"train.epochs", "3"}, {"train.metrics_every", "1"}, {"network.hidden", "[16, 16]"},
                    {"network.pinn_hidden", "[16]"},  {"train.colloc_interior", "50"},
                    {"train.colloc_boundary", "40"}};
  resolve(spec);
  return spec;
}

}  // namespace

TEST_CASE("config round trip") {
  for (const auto& name : preset_names()) {
    RunSpec spec;
    spec.preset_name = name;
    spec.seed = 7;
    spec.overrides = {{"train.lr_phy", "0.0025"}, {"scenario.noise", "0.1"}};
    resolve(spec);
    std::istringstream is(config_text(spec));
    const RunSpec back = parse_config(is);
    CHECK(config_text(back) == config_text(spec));
    CHECK(back.resolved.config.lr_phy == 0.0025);
    CHECK(back.resolved.scenario.noise == 0.1);
    CHECK(back.seed == 7);
  }
}

TEST_CASE("config: defaults come from the preset") {
  std::istringstream is("[run]\npreset = \"darcy_q2_desk\"  # comment\nmethod = \"physics_only\"\n");
  const RunSpec spec = parse_config(is);
  const Preset p = preset("darcy_q2_desk");
  CHECK(spec.method == Method::physics_only);
  CHECK(spec.resolved.scenario.init == p.scenario.init);
  CHECK(spec.resolved.scenario.region.name == "q2");
  CHECK(spec.resolved.config.H == p.config.H);
}

TEST_CASE("config errors name the line and field") {
  CHECK(error_of("[train]\nlr_phy = abc\n") == "cfg:2: train.lr_phy: expected a number, got 'abc'");
  CHECK(error_of("[train]\n\nfoo = 1\n") == "cfg:3: train.foo: unknown field");
  CHECK(error_of("[solver]\n") == "cfg:1: unknown section [solver]");
  CHECK(error_of("lr = 1\n") == "cfg:1: lr: outside of any section");
  CHECK(error_of("[run]\nmethod = \"svm\"\n").find("cfg:2: method: unknown method") == 0);
  CHECK(error_of("[train]\nH = 0\n") == "H: must be >= 1");
  CHECK(error_of("[scenario]\nregion = \"q7\"\n").find("cfg:2: scenario.region:") == 0);
  CHECK(error_of("[network]\nhidden = 3\n") == "cfg:2: network.hidden: expected a [list]");
  CHECK(error_of("[train]\nstopping = yes\n") == "cfg:2: train.stopping: expected true or false, got 'yes'");
}

TEST_CASE("overrides: grid changes move the input map") {
  RunSpec spec;
  spec.preset_name = "heat_desk";
  spec.overrides = {{"scenario.nx", "10"}, {"scenario.t_end", "2"}};
  resolve(spec);
  const Scenario& s = spec.resolved.scenario;
  CHECK(s.model.cfg.domain.nx == 10);
  CHECK(s.reference.cfg.domain.nx == 10);  // heat data comes from the training grid
  CHECK(spec.resolved.config.arch.input_scale[2] == doctest::Approx(0.5));

  spec.preset_name = "helmholtz_desk";
  spec.overrides = {{"scenario.nx", "10"}, {"network.input_scaling", "false"}};
  resolve(spec);
  CHECK(spec.resolved.scenario.reference.cfg.domain.nx == 69);
  CHECK(spec.resolved.config.arch.input_scale.empty());

  spec.overrides = {{"scenario.region_box", "[0, 1, 0, 2]"}};
  resolve(spec);
  CHECK(spec.resolved.scenario.region.name == "custom");
  CHECK(spec.resolved.scenario.region.y1 == 2.0);
}

TEST_CASE("run writes the documented artefacts") {
  const fs::path out = scratch("run");
  const RunSpec spec = tiny("helmholtz_desk", Method::hyco, out);
  std::ostringstream log;
  REQUIRE(cmd_run(spec, log) == 0);
  for (const char* f : {"history.csv", "summary.json", "config.toml", "dataset.csv", "dataset.json",
                        "fields/reference.csv", "fields/physical.csv", "fields/synthetic.csv",
                        "fields/coefficients.csv", "fields/theta.json"})
    CHECK_MESSAGE(fs::exists(out / f), f);

  std::ifstream h(out / "history.csv");
  std::string header, line;
  std::getline(h, header);
  CHECK(header.rfind("method,epoch,L_syn,L_phy,L_int,lambda_alpha1", 0) == 0);
  int rows = 0;
  while (std::getline(h, line)) ++rows;
  CHECK(rows == 3);

  std::ifstream js(out / "summary.json");
  const auto j = nlohmann::json::parse(js);
  CHECK(j["method"] == "hyco");
  CHECK(j["stop_epoch"] == 3);
  CHECK(j.contains("e_p"));
  CHECK(j["synthetic"].contains("e_s"));
  CHECK(j["config"]["train"]["epochs"] == 3);
  CHECK(j["lambda_truth"]["alpha1"] == 4.0);

  // the echoed config reruns the same experiment
  const RunSpec again = load_config(out / "config.toml");
  CHECK(config_text(again) == config_text(spec));
  CHECK(cmd_validate(out / "config.toml", log) == 0);
  fs::remove_all(out);
}

TEST_CASE("run: nn_only has no parameter error, dynamic fields carry time") {
  const fs::path out = scratch("nn");
  const RunSpec spec = tiny("heat_desk", Method::nn_only, out);
  std::ostringstream log;
  REQUIRE(cmd_run(spec, log) == 0);
  std::ifstream js(out / "summary.json");
  const auto j = nlohmann::json::parse(js);
  CHECK_FALSE(j.contains("e_p"));
  CHECK_FALSE(j.contains("lambda"));
  CHECK_FALSE(fs::exists(out / "fields/physical.csv"));
  std::ifstream f(out / "fields/synthetic.csv");
  std::string header;
  std::getline(f, header);
  CHECK(header == "x,y,t,u0");
  fs::remove_all(out);
}

TEST_CASE("compare merges summaries into the fixed table") {
  const fs::path a = scratch("cmp_a"), b = scratch("cmp_b"), table = scratch("cmp.csv");
  std::ostringstream log;
  REQUIRE(cmd_run(tiny("helmholtz_desk", Method::physics_only, a), log) == 0);
  REQUIRE(cmd_run(tiny("helmholtz_desk", Method::pinn, b), log) == 0);
  REQUIRE(cmd_compare({a, b}, table, log) == 0);
  std::ifstream is(table);
  std::string header, r1, r2, extra;
  std::getline(is, header);
  std::getline(is, r1);
  std::getline(is, r2);
  CHECK(header == "method,region,time_s,e_p,e_s,e_d");
  CHECK(r1.rfind("physics_only,omega,", 0) == 0);
  CHECK(r2.rfind("pinn,omega,", 0) == 0);
  CHECK_FALSE(std::getline(is, extra));
  CHECK(log.str().find('*') != std::string::npos);

  CHECK(cmd_compare({a}, table, log) == 1);
  CHECK(cmd_compare({a, scratch("missing")}, table, log) == 1);
  for (const auto& p : {a, b, table}) fs::remove_all(p);
}

TEST_CASE("run: runtime failures exit with status 2") {
  RunSpec spec = tiny("helmholtz_desk", Method::hyco, scratch("fail"));
  // out path collides with a regular file
  const fs::path blocker = scratch("blocker");
  std::ofstream(blocker) << "x";
  spec.out = blocker / "sub";
  std::ostringstream log;
  CHECK(cmd_run(spec, log) == 2);
  CHECK(log.str().find("error:") != std::string::npos);
  fs::remove_all(blocker);
}
