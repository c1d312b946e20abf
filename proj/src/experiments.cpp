#include "hyco/experiments.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hyco {

namespace {

constexpr double kPi = std::numbers::pi;

// Portable U[a, b] from the raw 64-bit stream (std distributions are not
// specified bit-for-bit across standard libraries).
double uniform(std::mt19937_64& rng, double a, double b) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return a + (b - a) * u;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

nn::MlpArch residual_arch(int input_dim) {
  nn::MlpArch a;
  a.input_dim = input_dim;
  a.output_dim = 1;
  a.hidden = {256, 256};
  a.activation = nn::Activation::relu;
  a.residual = true;
  return a;
}

nn::MlpArch tanh_arch(int input_dim, int output_dim, std::vector<int> hidden) {
  nn::MlpArch a;
  a.input_dim = input_dim;
  a.output_dim = output_dim;
  a.hidden = std::move(hidden);
  a.activation = nn::Activation::tanh;
  return a;
}

Domain2D square(double lo, double hi, int n) { return Domain2D(lo, hi, lo, hi, n, n); }

Preset helmholtz_preset() {
  Preset p;
  Scenario& s = p.scenario;
  s.kind = ScenarioKind::helmholtz;
  s.truth = {4, -1, -1, 1, 2, 1};
  s.init = {2.41, 0.19, 0.42, 1.12, 0.50, 0.49};
  s.param_scale.assign(6, 1.0);
  s.model.kind = s.reference.kind = s.kind;
  s.model.cfg.domain = square(-kPi, kPi, 18);
  s.reference.cfg.domain = square(-kPi, kPi, 69);
  s.M = 25;
  TrainConfig& c = p.config;
  c.epochs = 3000;
  c.H = 200;
  c.arch = residual_arch(2);
  c.pinn_arch = tanh_arch(2, 1, {256, 256});
  return p;
}

Preset heat_preset() {
  Preset p;
  Scenario& s = p.scenario;
  s.kind = ScenarioKind::heat;
  s.truth = {3, -2, -2, 2.5, 1, 1};
  s.init = {1, -2, -1.1, 1, 1.4, -1.3};
  s.param_scale.assign(6, 1.0);
  s.model.kind = ScenarioKind::heat;
  s.model.cfg.domain = square(-kPi, kPi, 18);
  s.model.cfg.nt = 1000;
  s.model.cfg.t_end = 1.0;
  s.model.cfg.frame_stride = 10;
  s.reference = s.model;  // data come from the same 18x18 RK4 discretisation
  s.M = 60;
  s.N = 100;
  TrainConfig& c = p.config;
  c.epochs = 3000;
  c.H = 200;
  c.arch = residual_arch(3);
  c.pinn_arch = tanh_arch(3, 1, {256, 256});
  return p;
}

Preset grayscott_preset(bool desk) {
  Preset p;
  Scenario& s = p.scenario;
  s.kind = ScenarioKind::grayscott;
  s.truth = {2e-6, 0.8e-6};
  s.init = {1e-6, 0.5e-6};
  // 600 Adam steps of 1e-3 must be able to cover the 1e-6 gap between init and truth
  s.param_scale = {1e-5, 1e-5};
  s.model.kind = ScenarioKind::grayscott;
  if (desk) {
    s.model.cfg.domain = square(0, 1, 33);
    s.model.cfg.nt = 1200;
    s.model.cfg.t_end = 600;
    s.model.cfg.frame_stride = 10;
    s.M = 1500;
    s.metric_frame_stride = 5;
  } else {
    s.model.cfg.domain = square(0, 1, 65);
    s.model.cfg.nt = 5000;
    s.model.cfg.t_end = 2000;
    s.model.cfg.frame_stride = 10;
    s.M = 5000;
    s.metric_frame_stride = 25;
  }
  s.reference = s.model;
  s.N = 0;
  TrainConfig& c = p.config;
  c.alpha = 1;
  c.beta = 0;
  c.lr_phy = 1e-3;
  c.lr_syn = 1e-3;
  c.epochs = 600;
  c.H = desk ? 400 : 1000;
  c.metrics_every = 20;
  c.arch.input_dim = 3;
  c.arch.output_dim = 2;
  c.arch.hidden = {128, 128, 128, 128};
  c.arch.activation = nn::Activation::relu;
  c.pinn_arch = tanh_arch(3, 2, {128, 128, 128, 128});
  c.colloc_interior = desk ? 5000 : 50000;
  return p;
}

Preset darcy_preset() {
  Preset p;
  Scenario& s = p.scenario;
  s.kind = ScenarioKind::darcy;
  s.truth = {0.5, 1, 2, 3, 4, -1, -2, -3, -4, 5};
  s.init = {0.098, 0.211, 0.785, 4.031, 4.877, -0.131, 0.066, -1.031, -3.014, 0.932};
  s.param_scale.assign(10, 1.0);
  s.model.kind = s.reference.kind = s.kind;
  s.model.cfg.domain = square(-kPi, kPi, 18);
  s.reference.cfg.domain = square(-kPi, kPi, 69);
  s.M = 50;
  TrainConfig& c = p.config;
  c.epochs = 2000;
  c.H = 300;
  c.arch = residual_arch(2);
  c.pinn_arch = tanh_arch(2, 1, {256, 256});
  return p;
}

}  // namespace

bool Region::inside(const Domain2D& d) const {
  return x0 <= x1 && y0 <= y1 && d.contains(x0, y0) && d.contains(x1, y1);
}

void Scenario::validate() const {
  const auto n = static_cast<std::size_t>(parameter_count(kind));
  if (truth.size() != n || init.size() != n || param_scale.size() != n)
    throw std::invalid_argument("scenario " + name + ": expected " + std::to_string(n) + " parameters");
  for (double s : param_scale)
    if (!(s > 0)) throw std::invalid_argument("scenario " + name + ": param_scale must be positive");
  if (model.kind != kind || reference.kind != kind)
    throw std::invalid_argument("scenario " + name + ": solver kind mismatch");
  if (!region.inside(model.cfg.domain) || !region.inside(reference.cfg.domain))
    throw std::invalid_argument("scenario " + name + ": region " + region.name + " lies outside the domain");
  if (M < 1) throw std::invalid_argument("scenario " + name + ": M must be >= 1");
  if (N < 0) throw std::invalid_argument("scenario " + name + ": N must be >= 0");
  if (!(noise >= 0)) throw std::invalid_argument("scenario " + name + ": noise must be >= 0");
  if (metric_frame_stride < 1) throw std::invalid_argument("scenario " + name + ": metric_frame_stride must be >= 1");
  if (dynamic() && (model.cfg.nt < 1 || reference.cfg.nt < 1))
    throw std::invalid_argument("scenario " + name + ": dynamic scenarios need nt >= 1");
}

Dataset generate_dataset(const Scenario& s, std::uint64_t seed) {
  s.validate();
  return generate_dataset(s, s.reference.solve(s.truth), seed);
}

Dataset generate_dataset(const Scenario& s, const PhysicalSolution& reference, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Region& r = s.region;
  Dataset d;
  d.components = reference.components();
  d.dynamic = reference.dynamic();
  d.provenance = {s.name, r.name, seed, 0.0};
  auto draw_xy = [&](Point& p) {
    p.x = uniform(rng, r.x0, r.x1);
    p.y = uniform(rng, r.y0, r.y1);
  };
  if (!reference.dynamic()) {
    d.points.resize(s.M);
    for (auto& p : d.points) draw_xy(p);
  } else if (s.N > 0) {
    // mobile sampling: N equispaced times snapped to stored frames, M fresh points each
    const SpaceTimeField& series = reference.series();
    const double span = series.t1() - series.t0();
    for (int j = 1; j <= s.N; ++j) {
      const double t = series.time(series.nearest_frame(series.t0() + span * j / s.N));
      for (int i = 0; i < s.M; ++i) {
        Point p;
        draw_xy(p);
        p.t = t;
        d.points.push_back(p);
      }
    }
  } else {
    const SpaceTimeField& series = reference.series();
    d.points.resize(s.M);
    for (auto& p : d.points) {
      draw_xy(p);
      p.t = uniform(rng, series.t0(), series.t1());
    }
  }
  d.values = reference.predict(d.points);
  return d;
}

Dataset apply_noise(const Dataset& d, double gamma, std::uint64_t seed) {
  if (!(gamma >= 0)) throw std::invalid_argument("apply_noise: gamma must be >= 0");
  Dataset out = d;
  out.provenance.gamma = gamma;
  if (gamma == 0.0) return out;
  std::mt19937_64 rng(seed);
  for (double& v : out.values) v *= 1.0 + uniform(rng, 0.0, gamma);
  return out;
}

ReferenceSolution::ReferenceSolution(const Scenario& s) : ReferenceSolution(s, s.reference.solve(s.truth)) {}

ReferenceSolution::ReferenceSolution(const Scenario& s, PhysicalSolution solution) : solution_(std::move(solution)) {
  if (!solution_.dynamic()) {
    const Domain2D& d = solution_.static_field().domain();
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) points_.push_back({d.x(i), d.y(j), 0.0});
    const auto v = solution_.static_field().values();
    values_.assign(v.begin(), v.end());
    return;
  }
  const SpaceTimeField& series = solution_.series();
  const Domain2D& d = series.domain();
  std::vector<int> frames;
  for (int n = 0; n < series.nt(); n += s.metric_frame_stride) frames.push_back(n);
  if (frames.back() != series.nt() - 1) frames.push_back(series.nt() - 1);
  for (int n : frames) {
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) points_.push_back({d.x(i), d.y(j), series.time(n)});
    const auto v = series.frame(n).values();
    values_.insert(values_.end(), v.begin(), v.end());
  }
}

double ReferenceSolution::relative_l2(std::span<const double> model_values) const {
  if (model_values.size() != values_.size())
    throw std::invalid_argument("relative_l2: size mismatch");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double e = values_[i] - model_values[i];
    num += e * e;
    den += values_[i] * values_[i];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

double mean_squared_error(std::span<const double> prediction, const Dataset& d) {
  if (prediction.size() != d.values.size()) throw std::invalid_argument("mean_squared_error: size mismatch");
  if (d.size() == 0) return 0.0;
  double acc = 0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double e = prediction[i] - d.values[i];
    acc += e * e;
  }
  return acc / static_cast<double>(d.size());
}

double parameter_error(std::span<const double> truth, std::span<const double> estimate) {
  if (truth.size() != estimate.size()) throw std::invalid_argument("parameter_error: size mismatch");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    num += (truth[i] - estimate[i]) * (truth[i] - estimate[i]);
    den += truth[i] * truth[i];
  }
  return std::sqrt(num / den);
}

Metrics compute_metrics(const Predictor& model, std::optional<std::span<const double>> lambda_hat,
                        const Scenario& s, const Dataset& d, const ReferenceSolution& ref) {
  Metrics m;
  m.e_d = mean_squared_error(model(d.points), d);
  m.e_s = ref.relative_l2(model(ref.points()));
  if (lambda_hat) m.e_p = parameter_error(s.truth, *lambda_hat);
  return m;
}

void TrainConfig::validate() const {
  auto need = [](bool ok, const char* field, const char* rule) {
    if (!ok) throw std::invalid_argument(std::string(field) + ": " + rule);
  };
  need(alpha >= 0, "alpha", "must be >= 0");
  need(beta >= 0, "beta", "must be >= 0");
  need(gamma >= 0, "gamma", "must be >= 0");
  need(lr_phy > 0, "lr_phy", "must be > 0");
  need(lr_syn > 0, "lr_syn", "must be > 0");
  need(epochs >= 0, "epochs", "must be >= 0");
  need(H >= 1, "H", "must be >= 1");
  need(Z >= 1, "Z", "must be >= 1");
  need(eps_stop > 0, "eps_stop", "must be > 0");
  need(fd_rel_step > 0, "fd_rel_step", "must be > 0");
  need(batch_size >= 0, "batch_size", "must be >= 0");
  need(metrics_every >= 1, "metrics_every", "must be >= 1");
  need(colloc_interior >= 1, "colloc_interior", "must be >= 1");
  need(colloc_boundary >= 1, "colloc_boundary", "must be >= 1");
  need(h_res_rel > 0 && h_res_rel < 0.25, "h_res_rel", "must be in (0, 0.25)");
  need(int_weight >= 0, "int_weight", "must be >= 0");
  arch.validate();
  pinn_arch.validate();
}

std::string to_string(GhostMode m) { return m == GhostMode::per_epoch ? "per_epoch" : "fixed"; }
std::string to_string(UpdateOrder o) { return o == UpdateOrder::gauss_seidel ? "gauss_seidel" : "jacobi"; }
std::string to_string(PhysOptimizer o) { return o == PhysOptimizer::adam ? "adam" : "gd"; }

GhostMode ghost_mode_from_string(const std::string& s) {
  if (s == "per_epoch") return GhostMode::per_epoch;
  if (s == "fixed") return GhostMode::fixed;
  throw std::invalid_argument("unknown ghost mode '" + s + "' (per_epoch, fixed)");
}

UpdateOrder update_order_from_string(const std::string& s) {
  if (s == "gauss_seidel") return UpdateOrder::gauss_seidel;
  if (s == "jacobi") return UpdateOrder::jacobi;
  throw std::invalid_argument("unknown update order '" + s + "' (gauss_seidel, jacobi)");
}

Region named_region(ScenarioKind kind, const std::string& name) {
  if (kind == ScenarioKind::grayscott) {
    if (name == "omega") return {"omega", 0, 1, 0, 1};
    throw std::invalid_argument("unknown region '" + name + "' for grayscott (omega)");
  }
  if (name == "omega") return {"omega", -kPi, kPi, -kPi, kPi};
  if (name == "q1") return {"q1", -kPi / 2, kPi, -kPi / 2, kPi};
  if (name == "q2") return {"q2", 0, kPi, 0, kPi};
  throw std::invalid_argument("unknown region '" + name + "' (omega, q1, q2)");
}

void set_input_scaling(nn::MlpArch& arch, const Scenario& s) {
  const Domain2D& d = s.model.cfg.domain;
  arch.input_shift = {(d.x_min + d.x_max) / 2, (d.y_min + d.y_max) / 2};
  arch.input_scale = {2 / (d.x_max - d.x_min), 2 / (d.y_max - d.y_min)};
  if (arch.input_dim == 3) {
    arch.input_shift.push_back(0.0);
    arch.input_scale.push_back(1.0 / s.model.cfg.t_end);
  }
}

Preset preset(const std::string& name) {
  const auto parts = split(name, '_');
  if (parts.size() < 2 || parts.size() > 3) throw std::invalid_argument("unknown preset '" + name + "'");
  const std::string& kind = parts.front();
  const std::string& scale = parts.back();
  if (scale != "paper" && scale != "desk") throw std::invalid_argument("unknown preset '" + name + "'");
  const bool desk = scale == "desk";
  Preset p;
  if (kind == "helmholtz") p = helmholtz_preset();
  else if (kind == "heat") p = heat_preset();
  else if (kind == "grayscott") p = grayscott_preset(desk);
  else if (kind == "darcy") p = darcy_preset();
  else throw std::invalid_argument("unknown preset '" + name + "'");
  p.scenario.region = named_region(p.scenario.kind, parts.size() == 3 ? parts[1] : "omega");
  p.scenario.name = name;
  set_input_scaling(p.config.arch, p.scenario);
  set_input_scaling(p.config.pinn_arch, p.scenario);
  return p;
}

std::vector<std::string> parameter_names(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::helmholtz:
    case ScenarioKind::heat: return {"alpha1", "c1x", "c1y", "alpha2", "c2x", "c2y"};
    case ScenarioKind::grayscott: return {"Du", "Dv"};
    case ScenarioKind::darcy: return {"C", "A11", "A12", "A13", "A21", "A22", "A23", "A31", "A32", "A33"};
  }
  return {};
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const char* k : {"helmholtz", "heat", "darcy"})
    for (const char* r : {"", "q1_", "q2_"})
      for (const char* s : {"paper", "desk"}) out.push_back(std::string(k) + "_" + r + s);
  out.push_back("grayscott_paper");
  out.push_back("grayscott_desk");
  return out;
}

void write_dataset_csv(std::ostream& os, const Dataset& d) {
  const bool dyn = d.dynamic;
  os.precision(17);
  os << "x,y";
  if (dyn) os << ",t";
  for (int c = 0; c < d.components; ++c) os << ",u" << c;
  os << ",noise\n";
  const int flag = d.provenance.gamma > 0 ? 1 : 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    os << d.points[i].x << ',' << d.points[i].y;
    if (dyn) os << ',' << d.points[i].t;
    for (double v : d.value(i)) os << ',' << v;
    os << ',' << flag << '\n';
  }
}

void write_dataset_sidecar(std::ostream& os, const Dataset& d) {
  nlohmann::ordered_json j;
  j["scenario"] = d.provenance.scenario;
  j["region"] = d.provenance.region;
  j["seed"] = d.provenance.seed;
  j["gamma"] = d.provenance.gamma;
  j["dynamic"] = d.dynamic;
  j["records"] = d.size();
  j["components"] = d.components;
  os << j.dump(2) << '\n';
}

}  // namespace hyco
