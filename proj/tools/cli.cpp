#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "hyco/baselines.hpp"
#include "hyco/hyco.hpp"
#include "json.hpp"

namespace hyco::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') throw ConfigError(key + ": expected a [list]");
  std::vector<std::string> out;
  std::stringstream ss(v.substr(1, v.size() - 2));
  for (std::string item; std::getline(ss, item, ',');)
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  for (const auto& s : to_list(key, raw)) out.push_back(to_double(key, s));
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& raw) {
  std::vector<int> out;
  for (const auto& s : to_list(key, raw)) out.push_back(static_cast<int>(to_int(key, s)));
  return out;
}

template <class T>
std::string list(const std::vector<T>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) s += num(v[i]);
    else s += std::to_string(v[i]);
  }
  return s + "]";
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

void resize_grid(Domain2D& d, int n) { d = Domain2D(d.x_min, d.x_max, d.y_min, d.y_max, n, n); }

bool is_named_region(const Region& r) { return r.name == "omega" || r.name == "q1" || r.name == "q2"; }

struct Entry {
  std::string section, key, toml;
  json value;
};

std::vector<Entry> config_entries(const RunSpec& spec) {
  const Scenario& s = spec.resolved.scenario;
  const TrainConfig& c = spec.resolved.config;
  std::vector<Entry> e;
  auto add = [&](const std::string& sec, const std::string& key, std::string toml, json v) {
    e.push_back({sec, key, std::move(toml), std::move(v)});
  };
  add("run", "preset", quoted(spec.preset_name), spec.preset_name);
  add("run", "method", quoted(to_string(spec.method)), to_string(spec.method));
  add("run", "seed", std::to_string(spec.seed), spec.seed);
  if (is_named_region(s.region)) {
    add("scenario", "region", quoted(s.region.name), s.region.name);
  } else {
    const std::vector<double> box = {s.region.x0, s.region.x1, s.region.y0, s.region.y1};
    add("scenario", "region_box", list(box), box);
  }
  add("scenario", "noise", num(s.noise), s.noise);
  add("scenario", "M", std::to_string(s.M), s.M);
  add("scenario", "N", std::to_string(s.N), s.N);
  add("scenario", "nx", std::to_string(s.model.cfg.domain.nx), s.model.cfg.domain.nx);
  add("scenario", "reference_nx", std::to_string(s.reference.cfg.domain.nx), s.reference.cfg.domain.nx);
  if (s.dynamic()) {
    add("scenario", "nt", std::to_string(s.model.cfg.nt), s.model.cfg.nt);
    add("scenario", "t_end", num(s.model.cfg.t_end), s.model.cfg.t_end);
    add("scenario", "frame_stride", std::to_string(s.model.cfg.frame_stride), s.model.cfg.frame_stride);
    add("scenario", "metric_frame_stride", std::to_string(s.metric_frame_stride), s.metric_frame_stride);
  }
  add("scenario", "init", list(s.init), s.init);
  add("scenario", "param_scale", list(s.param_scale), s.param_scale);
  add("train", "alpha", num(c.alpha), c.alpha);
  add("train", "beta", num(c.beta), c.beta);
  add("train", "gamma", num(c.gamma), c.gamma);
  add("train", "lr_phy", num(c.lr_phy), c.lr_phy);
  add("train", "lr_syn", num(c.lr_syn), c.lr_syn);
  add("train", "epochs", std::to_string(c.epochs), c.epochs);
  add("train", "H", std::to_string(c.H), c.H);
  add("train", "Z", std::to_string(c.Z), c.Z);
  add("train", "eps_stop", num(c.eps_stop), c.eps_stop);
  add("train", "stopping", c.stopping ? "true" : "false", c.stopping);
  add("train", "fd_rel_step", num(c.fd_rel_step), c.fd_rel_step);
  add("train", "ghost_mode", quoted(to_string(c.ghost_mode)), to_string(c.ghost_mode));
  add("train", "update_order", quoted(to_string(c.order)), to_string(c.order));
  add("train", "phys_optimizer", quoted(to_string(c.phys_optimizer)), to_string(c.phys_optimizer));
  add("train", "batch_size", std::to_string(c.batch_size), c.batch_size);
  add("train", "metrics_every", std::to_string(c.metrics_every), c.metrics_every);
  add("train", "parallel", c.parallel ? "true" : "false", c.parallel);
  add("train", "colloc_interior", std::to_string(c.colloc_interior), c.colloc_interior);
  add("train", "colloc_boundary", std::to_string(c.colloc_boundary), c.colloc_boundary);
  add("train", "h_res_rel", num(c.h_res_rel), c.h_res_rel);
  add("train", "int_weight", num(c.int_weight), c.int_weight);
  add("network", "hidden", list(c.arch.hidden), c.arch.hidden);
  add("network", "activation", quoted(nn::to_string(c.arch.activation)), nn::to_string(c.arch.activation));
  add("network", "residual", c.arch.residual ? "true" : "false", c.arch.residual);
  const bool scaled = !c.arch.input_scale.empty();
  add("network", "input_scaling", scaled ? "true" : "false", scaled);
  add("network", "pinn_hidden", list(c.pinn_arch.hidden), c.pinn_arch.hidden);
  add("network", "pinn_activation", quoted(nn::to_string(c.pinn_arch.activation)),
      nn::to_string(c.pinn_arch.activation));
  return e;
}

json metrics_json(const Metrics& m) {
  json j;
  j["e_d"] = m.e_d;
  j["e_s"] = m.e_s;
  if (m.e_p) j["e_p"] = *m.e_p;
  return j;
}

// Frames written to fields/*.csv: about ten snapshots of a dynamic run.
int snapshot_stride(int frames) { return std::max(1, (frames - 1) / 10); }

void write_synthetic_field(std::ostream& os, const nn::MlpParams& theta, const nn::MlpArch& arch,
                           const Domain2D& d, const std::vector<double>& times, bool dynamic) {
  std::vector<Point> pts;
  for (double t : times)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) pts.push_back({d.x(i), d.y(j), t});
  const auto out = nn::mlp_forward(theta, arch, network_inputs(pts, arch.input_dim));
  os.precision(17);
  os << "x,y";
  if (dynamic) os << ",t";
  for (int c = 0; c < arch.output_dim; ++c) os << ",u" << c;
  os << '\n';
  for (std::size_t n = 0; n < pts.size(); ++n) {
    os << pts[n].x << ',' << pts[n].y;
    if (dynamic) os << ',' << pts[n].t;
    for (int c = 0; c < arch.output_dim; ++c) os << ',' << out[n * arch.output_dim + c];
    os << '\n';
  }
}

void write_coefficients(std::ostream& os, const Scenario& s, std::span<const double> lam) {
  const Domain2D& d = s.model.cfg.domain;
  const bool eta = s.kind == ScenarioKind::helmholtz;
  os.precision(17);
  os << "x,y,kappa,kappa_truth";
  if (eta) os << ",eta,eta_truth";
  os << '\n';
  auto coeffs = [&](double x, double y, std::span<const double> p) -> std::pair<double, double> {
    switch (s.kind) {
      case ScenarioKind::helmholtz: return helmholtz_coeffs(x, y, HelmholtzParams::from(p));
      case ScenarioKind::heat: return {heat_kappa(x, y, HeatParams::from(p)), 0.0};
      default: return {darcy_kappa(x, y, DarcyParams::from(p)), 0.0};
    }
  };
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      const auto m = coeffs(d.x(i), d.y(j), lam);
      const auto t = coeffs(d.x(i), d.y(j), s.truth);
      os << d.x(i) << ',' << d.y(j) << ',' << m.first << ',' << t.first;
      if (eta) os << ',' << m.second << ',' << t.second;
      os << '\n';
    }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::hyco: return "hyco";
    case Method::physics_only: return "physics_only";
    case Method::nn_only: return "nn_only";
    case Method::pinn: return "pinn";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "hyco") return Method::hyco;
  if (s == "physics_only") return Method::physics_only;
  if (s == "nn_only") return Method::nn_only;
  if (s == "pinn") return Method::pinn;
  throw ConfigError("method: unknown method '" + s + "' (hyco, physics_only, nn_only, pinn)");
}

void apply_override(Preset& p, const std::string& key, const std::string& raw) {
  Scenario& s = p.scenario;
  TrainConfig& c = p.config;
  const std::string str = unquote(trim(raw));
  auto d = [&] { return to_double(key, raw); };
  auto i = [&] { return static_cast<int>(to_int(key, raw)); };
  auto b = [&] { return to_bool(key, raw); };
  const bool shared_grid = s.reference.cfg.domain == s.model.cfg.domain;
  try {
    if (key == "scenario.region") {
      s.region = named_region(s.kind, str);
    } else if (key == "scenario.region_box") {
      const auto v = to_doubles(key, raw);
      if (v.size() != 4) throw ConfigError(key + ": expected [x0, x1, y0, y1]");
      s.region = {"custom", v[0], v[1], v[2], v[3]};
    } else if (key == "scenario.noise") {
      s.noise = d();
    } else if (key == "scenario.M") {
      s.M = i();
    } else if (key == "scenario.N") {
      s.N = i();
    } else if (key == "scenario.nx") {
      // dynamic presets generate data on the training grid; keep them tied
      resize_grid(s.model.cfg.domain, i());
      if (shared_grid) resize_grid(s.reference.cfg.domain, i());
    } else if (key == "scenario.reference_nx") {
      resize_grid(s.reference.cfg.domain, i());
    } else if (key == "scenario.nt") {
      s.model.cfg.nt = s.reference.cfg.nt = i();
    } else if (key == "scenario.t_end") {
      s.model.cfg.t_end = s.reference.cfg.t_end = d();
    } else if (key == "scenario.frame_stride") {
      s.model.cfg.frame_stride = s.reference.cfg.frame_stride = i();
    } else if (key == "scenario.metric_frame_stride") {
      s.metric_frame_stride = i();
    } else if (key == "scenario.init") {
      s.init = to_doubles(key, raw);
    } else if (key == "scenario.param_scale") {
      s.param_scale = to_doubles(key, raw);
    } else if (key == "train.alpha") {
      c.alpha = d();
    } else if (key == "train.beta") {
      c.beta = d();
    } else if (key == "train.gamma") {
      c.gamma = d();
    } else if (key == "train.lr_phy") {
      c.lr_phy = d();
    } else if (key == "train.lr_syn") {
      c.lr_syn = d();
    } else if (key == "train.epochs") {
      c.epochs = i();
    } else if (key == "train.H") {
      c.H = i();
    } else if (key == "train.Z") {
      c.Z = i();
    } else if (key == "train.eps_stop") {
      c.eps_stop = d();
    } else if (key == "train.stopping") {
      c.stopping = b();
    } else if (key == "train.fd_rel_step") {
      c.fd_rel_step = d();
    } else if (key == "train.ghost_mode") {
      c.ghost_mode = ghost_mode_from_string(str);
    } else if (key == "train.update_order") {
      c.order = update_order_from_string(str);
    } else if (key == "train.phys_optimizer") {
      if (str != "adam" && str != "gd") throw ConfigError(key + ": expected adam or gd");
      c.phys_optimizer = str == "adam" ? PhysOptimizer::adam : PhysOptimizer::gd;
    } else if (key == "train.batch_size") {
      c.batch_size = i();
    } else if (key == "train.metrics_every") {
      c.metrics_every = i();
    } else if (key == "train.parallel") {
      c.parallel = b();
    } else if (key == "train.colloc_interior") {
      c.colloc_interior = i();
    } else if (key == "train.colloc_boundary") {
      c.colloc_boundary = i();
    } else if (key == "train.h_res_rel") {
      c.h_res_rel = d();
    } else if (key == "train.int_weight") {
      c.int_weight = d();
    } else if (key == "network.hidden") {
      c.arch.hidden = to_ints(key, raw);
    } else if (key == "network.activation") {
      c.arch.activation = nn::activation_from_string(str);
    } else if (key == "network.residual") {
      c.arch.residual = b();
    } else if (key == "network.input_scaling") {
      if (b()) {
        set_input_scaling(c.arch, s);
      } else {
        c.arch.input_shift.clear();
        c.arch.input_scale.clear();
      }
    } else if (key == "network.pinn_hidden") {
      c.pinn_arch.hidden = to_ints(key, raw);
    } else if (key == "network.pinn_activation") {
      c.pinn_arch.activation = nn::activation_from_string(str);
    } else {
      throw ConfigError(key + ": unknown field");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void resolve(RunSpec& spec) {
  try {
    spec.resolved = preset(spec.preset_name);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("preset: ") + e.what());
  }
  Preset& p = spec.resolved;
  bool rescale = true;
  for (const auto& [key, value] : spec.overrides) {
    apply_override(p, key, value);
    if (key == "network.input_scaling") rescale = to_bool(key, value);
  }
  // grid and time overrides move the input map with them
  if (rescale) set_input_scaling(p.config.arch, p.scenario);
  set_input_scaling(p.config.pinn_arch, p.scenario);
  p.config.seed = spec.seed;
  try {
    p.scenario.validate();
    p.config.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

RunSpec parse_config(std::istream& is, const std::string& source) {
  RunSpec spec;
  std::string section;
  int lineno = 0;
  for (std::string line; std::getline(is, line);) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "run" && section != "scenario" && section != "train" && section != "network")
        throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(where + key + ": outside of any section");
    const std::string full = section + "." + key;
    try {
      if (full == "run.preset") spec.preset_name = unquote(value);
      else if (full == "run.method") spec.method = method_from_string(unquote(value));
      else if (full == "run.seed") spec.seed = static_cast<std::uint64_t>(to_int(full, value));
      else if (full == "run.out") spec.out = unquote(value);
      else {
        Preset probe = preset(spec.preset_name);
        apply_override(probe, full, value);  // reject bad fields at their line
        spec.overrides.emplace_back(full, value);
      }
    } catch (const std::exception& e) {
      throw ConfigError(where + e.what());
    }
  }
  resolve(spec);
  return spec;
}

RunSpec load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  return parse_config(is, path.string());
}

void write_config(std::ostream& os, const RunSpec& spec) {
  std::string section;
  for (const auto& e : config_entries(spec)) {
    if (e.section != section) {
      if (!section.empty()) os << '\n';
      section = e.section;
      os << '[' << section << "]\n";
    }
    os << e.key << " = " << e.toml << '\n';
  }
}

int cmd_run(const RunSpec& spec, std::ostream& log) {
  const Scenario& s = spec.resolved.scenario;
  const TrainConfig& cfg = spec.resolved.config;
  const auto names = parameter_names(s.kind);
  TrainResult r;
  Dataset d;
  std::optional<ReferenceSolution> ref;
  try {
    fs::create_directories(spec.out / "fields");
    log << "[" << s.name << "] reference solve" << std::endl;
    ref.emplace(s);
    d = generate_dataset(s, ref->solution(), derive_seed(spec.seed, 0));
    if (s.noise > 0) d = apply_noise(d, s.noise, derive_seed(spec.seed, 4));
    const int every = std::max(1, cfg.epochs / 10);
    const EpochCallback progress = [&](const EpochRecord& rec) {
      if (rec.epoch % every != 0) return;
      log << "[" << to_string(spec.method) << "] epoch " << rec.epoch;
      if (rec.e_p) log << " e_p " << *rec.e_p;
      if (rec.e_s) log << " e_s " << *rec.e_s;
      log << std::endl;
    };
    switch (spec.method) {
      case Method::hyco: r = train_hyco(s, d, cfg, *ref, progress); break;
      case Method::physics_only: r = fit_physics_only(s, d, cfg, &*ref, progress); break;
      case Method::nn_only: r = train_nn_only(s, d, cfg, &*ref, progress); break;
      case Method::pinn: {
        const CollocationSet c =
            make_collocation(s, cfg.colloc_interior, cfg.colloc_boundary, cfg.h_res_rel, derive_seed(spec.seed, 5));
        r = train_pinn(s, d, c, cfg, &*ref, progress);
        break;
      }
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    {
      auto os = open_out(spec.out / "history.csv");
      write_history_csv(os, r, names);
    }
    {
      auto os = open_out(spec.out / "config.toml");
      write_config(os, spec);
    }
    {
      auto os = open_out(spec.out / "dataset.csv");
      write_dataset_csv(os, d);
      auto js = open_out(spec.out / "dataset.json");
      write_dataset_sidecar(js, d);
    }

    // fields: reference, physical model, network, coefficients
    const fs::path fields = spec.out / "fields";
    std::vector<double> times{0.0};
    {
      auto os = open_out(fields / "reference.csv");
      if (ref->solution().dynamic()) {
        const auto& series = ref->solution().series();
        write_csv(os, series, snapshot_stride(series.nt()));
      } else {
        write_csv(os, ref->solution().static_field());
      }
    }
    const bool has_solver = spec.method == Method::hyco || spec.method == Method::physics_only;
    if (has_solver) {
      const PhysicalSolution sol = s.model.solve(r.lambda);
      auto os = open_out(fields / "physical.csv");
      if (sol.dynamic()) {
        const int stride = snapshot_stride(sol.series().nt());
        write_csv(os, sol.series(), stride);
        times.clear();
        for (int n = 0; n < sol.series().nt(); n += stride) times.push_back(sol.series().time(n));
      } else {
        write_csv(os, sol.static_field());
      }
    } else if (s.dynamic()) {
      const int frames = s.model.cfg.nt / s.model.cfg.frame_stride + 1;
      const int stride = snapshot_stride(frames);
      times.clear();
      for (int n = 0; n < frames; n += stride) times.push_back(s.model.cfg.t_end * n / (frames - 1));
    }
    if (r.theta) {
      auto os = open_out(fields / "synthetic.csv");
      write_synthetic_field(os, *r.theta, r.arch, s.model.cfg.domain, times, s.dynamic());
      auto cp = open_out(fields / "theta.json");
      nn::save_checkpoint(cp, r.arch, *r.theta);
    }
    if (!r.lambda.empty() && s.kind != ScenarioKind::grayscott) {
      auto os = open_out(fields / "coefficients.csv");
      write_coefficients(os, s, r.lambda);
    }

    json j;
    j["method"] = to_string(spec.method);
    j["scenario"] = s.name;
    j["kind"] = hyco::to_string(s.kind);
    j["region"] = s.region.name;
    j["region_box"] = {s.region.x0, s.region.x1, s.region.y0, s.region.y1};
    j["seed"] = spec.seed;
    j["epochs_run"] = r.stop_epoch;
    j["stop_epoch"] = r.stop_epoch;
    j["stopped_early"] = r.stopped_early;
    j["aborted"] = r.aborted;
    if (r.aborted) j["abort_reason"] = r.abort_reason;
    j["time_s"] = r.wall_time;
    j["times"] = {{"solve", r.times.solve},
                  {"lambda_step", r.times.lambda_step},
                  {"theta_step", r.times.theta_step},
                  {"metrics", r.times.metrics}};
    // headline metrics: physical model when there is one, the network otherwise
    const Metrics& head = r.physical ? *r.physical : *r.synthetic;
    j["e_d"] = head.e_d;
    j["e_s"] = head.e_s;
    if (head.e_p) j["e_p"] = *head.e_p;
    if (r.physical) j["physical"] = metrics_json(*r.physical);
    if (r.synthetic) j["synthetic"] = metrics_json(*r.synthetic);
    if (!r.lambda.empty()) {
      json lam, truth, init;
      for (std::size_t i = 0; i < names.size(); ++i) {
        lam[names[i]] = r.lambda[i];
        truth[names[i]] = s.truth[i];
        init[names[i]] = s.init[i];
      }
      j["lambda"] = lam;
      j["lambda_truth"] = truth;
      j["lambda_init"] = init;
    }
    const Domain2D& dom = s.model.cfg.domain;
    j["domain"] = {{"x_min", dom.x_min}, {"x_max", dom.x_max}, {"y_min", dom.y_min},
                   {"y_max", dom.y_max}, {"nx", dom.nx},       {"ny", dom.ny}};
    j["dataset"] = {{"records", d.size()}, {"gamma", d.provenance.gamma}, {"seed", d.provenance.seed}};
    if (r.theta) j["checkpoint"] = "fields/theta.json";
    json conf;
    for (const auto& e : config_entries(spec)) conf[e.section][e.key] = e.value;
    j["config"] = conf;
    auto os = open_out(spec.out / "summary.json");
    os << j.dump(2) << '\n';
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }
  if (r.aborted) {
    log << "error: training aborted: " << r.abort_reason << '\n';
    return 2;
  }
  log << "[" << to_string(spec.method) << "] done in " << r.wall_time << " s: e_s " << (r.physical ? r.physical->e_s : r.synthetic->e_s);
  if (r.physical && r.physical->e_p) log << " e_p " << *r.physical->e_p;
  log << '\n';
  return 0;
}

int cmd_compare(const std::vector<fs::path>& runs, const fs::path& out_csv, std::ostream& log) {
  if (runs.size() < 2) {
    log << "error: compare needs at least two run directories\n";
    return 1;
  }
  struct Row {
    std::string method, region;
    double time_s, e_s, e_d;
    std::optional<double> e_p;
  };
  std::vector<Row> rows;
  for (const auto& dir : runs) {
    std::ifstream is(dir / "summary.json");
    if (!is) {
      log << "error: missing " << (dir / "summary.json").string() << '\n';
      return 1;
    }
    try {
      const json j = json::parse(is);
      Row r{j.at("method"), j.at("region"), j.at("time_s"), j.at("e_s"), j.at("e_d"), std::nullopt};
      if (j.contains("e_p")) r.e_p = j.at("e_p").get<double>();
      rows.push_back(r);
    } catch (const std::exception& e) {
      log << "error: " << (dir / "summary.json").string() << ": " << e.what() << '\n';
      return 1;
    }
  }
  // lowest e_s per region is flagged
  std::map<std::string, std::size_t> best;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto it = best.find(rows[i].region);
    if (it == best.end() || rows[i].e_s < rows[it->second].e_s) best[rows[i].region] = i;
  }
  std::ofstream os(out_csv);
  if (!os) {
    log << "error: cannot write " << out_csv.string() << '\n';
    return 1;
  }
  os << "method,region,time_s,e_p,e_s,e_d\n";
  log << std::left << std::setw(14) << "method" << std::setw(8) << "region" << std::setw(10) << "time_s"
      << std::setw(12) << "e_p" << std::setw(12) << "e_s" << "e_d\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    os << r.method << ',' << r.region << ',' << num(r.time_s) << ',' << (r.e_p ? num(*r.e_p) : "") << ','
       << num(r.e_s) << ',' << num(r.e_d) << '\n';
    const bool flag = best[r.region] == i;
    std::ostringstream ep;
    if (r.e_p) ep << std::setprecision(4) << *r.e_p;
    else ep << "--";
    log << std::left << std::setw(14) << r.method << std::setw(8) << r.region << std::setw(10)
        << std::setprecision(4) << r.time_s << std::setw(12) << ep.str() << std::setw(12)
        << (std::to_string(r.e_s).substr(0, 8) + (flag ? " *" : "")) << std::setprecision(4) << r.e_d << '\n';
  }
  log << "* lowest e_s in its region\n";
  return 0;
}

int cmd_validate(const fs::path& config, std::ostream& log) {
  try {
    const RunSpec spec = load_config(config);
    log << "ok: " << spec.preset_name << " / " << to_string(spec.method) << '\n';
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace hyco::cli
