#include "hyco/hyco.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <ostream>
#include <limits>

namespace hyco {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double uniform(std::mt19937_64& rng, double a, double b) {
  return a + (b - a) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::runtime_error(std::string("non-finite ") + what);
}

// Selects the synthetic player's data rows for this epoch.
std::vector<std::size_t> data_batch(const Dataset& d, int batch_size, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(d.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (batch_size <= 0 || static_cast<std::size_t>(batch_size) >= idx.size()) return idx;
  for (std::size_t i = 0; i < static_cast<std::size_t>(batch_size); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform(rng, 0.0, 1.0) * (idx.size() - i));
    std::swap(idx[i], idx[std::min(j, idx.size() - 1)]);
  }
  idx.resize(batch_size);
  return idx;
}

}  // namespace

std::vector<double> lambda_from_scaled(const Scenario& s, std::span<const double> z) {
  std::vector<double> lam(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) lam[i] = z[i] * s.param_scale[i];
  return lam;
}

std::vector<double> scaled_from_lambda(const Scenario& s, std::span<const double> lam) {
  std::vector<double> z(lam.size());
  for (std::size_t i = 0; i < lam.size(); ++i) z[i] = lam[i] / s.param_scale[i];
  return z;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

GhostSet sample_ghosts(const Scenario& s, int H, std::uint64_t seed, GhostMode mode) {
  if (H < 1) throw std::invalid_argument("sample_ghosts: H must be >= 1");
  std::mt19937_64 rng(seed);
  const Domain2D& d = s.model.cfg.domain;
  GhostSet g;
  g.seed = seed;
  g.mode = mode;
  g.points.resize(H);
  for (auto& p : g.points) {
    p.x = uniform(rng, d.x_min, d.x_max);
    p.y = uniform(rng, d.y_min, d.y_max);
    if (s.dynamic()) p.t = uniform(rng, 0.0, s.model.cfg.t_end);
  }
  return g;
}

std::vector<double> network_inputs(std::span<const Point> points, int input_dim) {
  std::vector<double> out(points.size() * input_dim);
  for (std::size_t n = 0; n < points.size(); ++n) {
    double* row = out.data() + n * input_dim;
    row[0] = points[n].x;
    row[1] = points[n].y;
    if (input_dim > 2) row[2] = points[n].t;
  }
  return out;
}

double mean_row_sq_distance(std::span<const double> a, std::span<const double> b, std::size_t rows) {
  if (a.size() != b.size()) throw std::invalid_argument("mean_row_sq_distance: size mismatch");
  if (rows == 0) return 0.0;
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / static_cast<double>(rows);
}

double loss_syn(const nn::MlpParams& theta, const nn::MlpArch& arch, const Dataset& d) {
  if (d.size() == 0) throw std::invalid_argument("loss_syn: empty dataset");
  const auto pred = nn::mlp_forward(theta, arch, network_inputs(d.points, arch.input_dim));
  return mean_row_sq_distance(pred, d.values, d.size());
}

double loss_phy(std::span<const double> lambda, const Dataset& d, const PhysicalModel& model) {
  if (d.size() == 0) throw std::invalid_argument("loss_phy: empty dataset");
  return mean_row_sq_distance(physical_predict(model, lambda, d.points), d.values, d.size());
}

double loss_int(const nn::MlpParams& theta, const nn::MlpArch& arch, std::span<const double> lambda,
                const GhostSet& ghosts, const PhysicalModel& model) {
  const auto syn = nn::mlp_forward(theta, arch, network_inputs(ghosts.points, arch.input_dim));
  return mean_row_sq_distance(syn, physical_predict(model, lambda, ghosts.points), ghosts.points.size());
}

std::vector<double> physical_grad_fd(std::span<const double> z, const LossClosure& loss, double rel_step,
                                     bool parallel, std::span<const std::string> names,
                                     std::span<const double> lower) {
  const long n = static_cast<long>(z.size());
  std::vector<double> vals(2 * n), steps(n), back(n);
  std::vector<std::string> errors(2 * n);
  for (long i = 0; i < n; ++i) {
    steps[i] = rel_step * (1.0 + std::abs(z[i]));
    back[i] = steps[i];
    if (i < static_cast<long>(lower.size())) back[i] = std::clamp(z[i] - lower[i], 0.0, steps[i]);
  }
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long q = 0; q < 2 * n; ++q) {
    const long i = q / 2;
    std::vector<double> zz(z.begin(), z.end());
    zz[i] += q % 2 == 0 ? steps[i] : -back[i];
    try {
      vals[q] = loss(zz);
      if (!std::isfinite(vals[q])) errors[q] = "non-finite loss";
    } catch (const std::exception& e) {
      errors[q] = e.what();
    }
  }
  for (long q = 0; q < 2 * n; ++q) {
    if (errors[q].empty()) continue;
    const long i = q / 2;
    const std::string name = i < static_cast<long>(names.size()) ? names[i] : "lambda[" + std::to_string(i) + "]";
    throw GradientFailure("finite-difference solve failed for parameter " + name + ": " + errors[q],
                          static_cast<int>(i));
  }
  std::vector<double> g(n);
  for (long i = 0; i < n; ++i) g[i] = (vals[2 * i] - vals[2 * i + 1]) / (steps[i] + back[i]);
  return g;
}

bool stopping_check(const std::vector<std::vector<double>>& history, int Z, double eps) {
  if (Z < 1 || history.size() < static_cast<std::size_t>(Z) + 1) return false;
  const std::size_t k = history.size() - 1;
  const std::size_t dim = history[k].size();
  double acc = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    double mean = 0;
    for (std::size_t j = k - Z; j < k; ++j) mean += history[j][i];
    mean /= Z;
    acc += (history[k][i] - mean) * (history[k][i] - mean);
  }
  return std::sqrt(acc) < eps;
}

void project_parameters(const Scenario& s, std::span<double> lambda) {
  switch (s.kind) {
    case ScenarioKind::helmholtz:
      // kappa = alpha1 * bump + 1 reaches 1 + alpha1 at the centre
      lambda[0] = std::max(lambda[0], -1.0 + kKappaFloor);
      break;
    case ScenarioKind::heat: {
      // two negative bumps can stack; keep 0.1 + alpha1 + alpha2 >= floor
      const double lo = -(0.1 - kKappaFloor) / 2;
      lambda[0] = std::max(lambda[0], lo);
      lambda[3] = std::max(lambda[3], lo);
      break;
    }
    case ScenarioKind::grayscott: {
      const SolverConfig& c = s.model.cfg;
      const double h = c.domain.hx(), dt = c.t_end / c.nt;
      const double d_max = 0.999 * 0.9 * h * h / (4 * dt);
      for (std::size_t i = 0; i < 2; ++i) lambda[i] = std::clamp(lambda[i], 1e-12, d_max);
      break;
    }
    case ScenarioKind::darcy: break;  // sign-indefinite kappa is part of the problem
  }
}

std::vector<double> scaled_lower_bounds(const Scenario& s) {
  std::vector<double> lo(s.truth.size(), -std::numeric_limits<double>::infinity());
  switch (s.kind) {
    case ScenarioKind::helmholtz: lo[0] = -1.0 + kKappaFloor; break;
    case ScenarioKind::heat: lo[0] = lo[3] = -(0.1 - kKappaFloor) / 2; break;
    case ScenarioKind::grayscott: lo[0] = lo[1] = 1e-12; break;
    case ScenarioKind::darcy: break;
  }
  for (std::size_t i = 0; i < lo.size(); ++i) lo[i] /= s.param_scale[i];
  return lo;
}

std::vector<double> HycoState::lambda(const Scenario& s) const { return lambda_from_scaled(s, z); }

Metrics physical_metrics(const Scenario& s, const Dataset& d, const ReferenceSolution* ref,
                         const PhysicalSolution& sol, std::span<const double> lambda) {
  Metrics m;
  if (d.size() > 0) m.e_d = mean_row_sq_distance(sol.predict(d.points), d.values, d.size());
  if (ref) m.e_s = ref->relative_l2(sol.predict(ref->points()));
  m.e_p = parameter_error(s.truth, lambda);
  return m;
}

Metrics synthetic_metrics(const nn::MlpParams& theta, const nn::MlpArch& arch, const Dataset& d,
                          const ReferenceSolution* ref) {
  Metrics m;
  if (d.size() > 0)
    m.e_d = mean_row_sq_distance(nn::mlp_forward(theta, arch, network_inputs(d.points, arch.input_dim)), d.values,
                                 d.size());
  if (ref) m.e_s = ref->relative_l2(nn::mlp_forward(theta, arch, network_inputs(ref->points(), arch.input_dim)));
  return m;
}

HycoState hyco_init(const HycoProblem& p) {
  const Scenario& s = p.scenario;
  s.validate();
  p.cfg.validate();
  if (p.cfg.arch.input_dim != (s.dynamic() ? 3 : 2) || p.cfg.arch.output_dim != solution_components(s.kind))
    throw std::invalid_argument("network shape does not match scenario " + s.name);
  HycoState st;
  std::vector<double> lam = s.init;
  project_parameters(s, lam);
  st.z = scaled_from_lambda(s, lam);
  st.theta = nn::mlp_init(p.cfg.arch, derive_seed(p.cfg.seed, 1));
  st.adam_theta = nn::AdamState(st.theta.values.size());
  st.adam_lambda = nn::AdamState(st.z.size());
  st.rng.seed(derive_seed(p.cfg.seed, 2));
  st.ghosts = sample_ghosts(s, p.cfg.H, st.rng(), p.cfg.ghost_mode);
  st.solution = std::make_shared<const PhysicalSolution>(s.model.solve(lam));
  return st;
}

double player1_loss(const HycoProblem& p, const nn::MlpParams& theta, std::span<const double> z,
                    const GhostSet& ghosts) {
  const auto lam = lambda_from_scaled(p.scenario, z);
  const PhysicalSolution sol = p.scenario.model.solve(lam);
  double v = 0;
  if (p.cfg.beta > 0 && p.data.size() > 0)
    v += p.cfg.beta * mean_row_sq_distance(sol.predict(p.data.points), p.data.values, p.data.size());
  if (p.cfg.int_weight > 0) {
    const auto syn = nn::mlp_forward(theta, p.cfg.arch, network_inputs(ghosts.points, p.cfg.arch.input_dim));
    v += p.cfg.int_weight * mean_row_sq_distance(syn, sol.predict(ghosts.points), ghosts.points.size());
  }
  return v;
}

double player2_loss(const HycoProblem& p, const nn::MlpParams& theta, std::span<const double> z,
                    const GhostSet& ghosts) {
  double v = 0;
  if (p.cfg.alpha > 0 && p.data.size() > 0) v += p.cfg.alpha * loss_syn(theta, p.cfg.arch, p.data);
  if (p.cfg.int_weight > 0)
    v += p.cfg.int_weight * loss_int(theta, p.cfg.arch, lambda_from_scaled(p.scenario, z), ghosts, p.scenario.model);
  return v;
}

EpochRecord hyco_epoch(const HycoProblem& p, HycoState& state, PhaseTimes* times) {
  const Scenario& s = p.scenario;
  const TrainConfig& cfg = p.cfg;
  const Dataset& data = p.data;
  const nn::MlpArch& arch = cfg.arch;
  PhaseTimes local;
  HycoState next = state;

  if (cfg.ghost_mode == GhostMode::per_epoch) next.ghosts = sample_ghosts(s, cfg.H, next.rng(), cfg.ghost_mode);
  const GhostSet& ghosts = next.ghosts;
  const std::size_t n_data = data.size(), n_ghost = ghosts.points.size();
  const auto in_data = network_inputs(data.points, arch.input_dim);
  const auto in_ghost = network_inputs(ghosts.points, arch.input_dim);

  // epoch-start losses
  const auto syn_data = nn::mlp_forward(next.theta, arch, in_data);
  const auto syn_ghost = nn::mlp_forward(next.theta, arch, in_ghost);
  const auto phy_data = next.solution->predict(data.points);
  const auto phy_ghost = next.solution->predict(ghosts.points);
  EpochRecord rec;
  rec.L_syn = mean_row_sq_distance(syn_data, data.values, n_data);
  rec.L_phy = mean_row_sq_distance(phy_data, data.values, n_data);
  rec.L_int = mean_row_sq_distance(syn_ghost, phy_ghost, n_ghost);
  require_finite(*rec.L_syn, "synthetic loss");
  require_finite(*rec.L_phy, "physical loss");
  require_finite(*rec.L_int, "interaction loss");
  rec.L_joint = cfg.alpha * *rec.L_syn + cfg.beta * *rec.L_phy + cfg.int_weight * *rec.L_int;

  const bool do_lambda = cfg.physical_player && (cfg.beta > 0 || cfg.int_weight > 0);
  const bool do_theta = cfg.synthetic_player && (cfg.alpha > 0 || cfg.int_weight > 0);
  const auto lower = scaled_lower_bounds(s);
  const auto names = parameter_names(s.kind);

  auto lambda_step = [&] {
    const auto t0 = Clock::now();
    const LossClosure L1 = [&](std::span<const double> zz) {
      const PhysicalSolution sol = s.model.solve(lambda_from_scaled(s, zz));
      double v = 0;
      if (cfg.beta > 0 && n_data > 0)
        v += cfg.beta * mean_row_sq_distance(sol.predict(data.points), data.values, n_data);
      if (cfg.int_weight > 0)
        v += cfg.int_weight * mean_row_sq_distance(sol.predict(ghosts.points), syn_ghost, n_ghost);
      return v;
    };
    const bool par = cfg.parallel && !(cfg.order == UpdateOrder::jacobi && do_theta);
    const auto g = physical_grad_fd(next.z, L1, cfg.fd_rel_step, par, names, lower);
    if (cfg.phys_optimizer == PhysOptimizer::adam) {
      nn::adam_step(next.z, g, next.adam_lambda, cfg.lr_phy);
    } else {
      for (double v : g)
        if (!std::isfinite(v)) throw std::domain_error("non-finite physical gradient");
      for (std::size_t i = 0; i < g.size(); ++i) next.z[i] -= cfg.lr_phy * g[i];
    }
    auto lam = lambda_from_scaled(s, next.z);
    project_parameters(s, lam);
    next.z = scaled_from_lambda(s, lam);
    local.lambda_step += seconds_since(t0);
  };

  auto theta_step = [&](std::span<const double> phy_ghost_target) {
    const auto t0 = Clock::now();
    const int in = arch.input_dim, out = arch.output_dim;
    std::vector<std::size_t> rows;
    if (cfg.alpha > 0) rows = data_batch(data, cfg.batch_size, next.rng);
    const std::size_t nb = rows.size();
    std::vector<double> inputs((nb + n_ghost) * in), upstream((nb + n_ghost) * out, 0.0);
    for (std::size_t r = 0; r < nb; ++r) {
      const std::size_t i = rows[r];
      std::copy_n(in_data.begin() + i * in, in, inputs.begin() + r * in);
      for (int c = 0; c < out; ++c)
        upstream[r * out + c] = cfg.alpha * 2.0 * (syn_data[i * out + c] - data.values[i * out + c]) / nb;
    }
    std::copy(in_ghost.begin(), in_ghost.end(), inputs.begin() + nb * in);
    if (cfg.int_weight > 0)
      for (std::size_t r = 0; r < n_ghost; ++r)
        for (int c = 0; c < out; ++c)
          upstream[(nb + r) * out + c] =
              cfg.int_weight * 2.0 * (syn_ghost[r * out + c] - phy_ghost_target[r * out + c]) / n_ghost;
    const auto g = nn::mlp_backward(next.theta, arch, inputs, upstream);
    nn::adam_step(next.theta.values, g, next.adam_theta, cfg.lr_syn);
    local.theta_step += seconds_since(t0);
  };

  std::shared_ptr<const PhysicalSolution> updated;
  auto solve_updated = [&] {
    const auto t0 = Clock::now();
    updated = std::make_shared<const PhysicalSolution>(s.model.solve(lambda_from_scaled(s, next.z)));
    local.solve += seconds_since(t0);
  };

  if (cfg.order == UpdateOrder::jacobi) {
    // both players read the epoch-start snapshot, so they may run side by side
    std::exception_ptr err[2];
#pragma omp parallel sections if (cfg.parallel)
    {
#pragma omp section
      {
        try {
          if (do_lambda) lambda_step();
        } catch (...) {
          err[0] = std::current_exception();
        }
      }
#pragma omp section
      {
        try {
          if (do_theta) theta_step(phy_ghost);
        } catch (...) {
          err[1] = std::current_exception();
        }
      }
    }
    for (auto& e : err)
      if (e) std::rethrow_exception(e);
    if (do_lambda) solve_updated();
  } else {
    if (do_lambda) {
      lambda_step();
      solve_updated();
    }
    if (do_theta) theta_step(updated ? updated->predict(ghosts.points) : phy_ghost);
  }
  if (updated) next.solution = updated;
  ++next.epoch;

  const auto t0 = Clock::now();
  rec.epoch = next.epoch;
  rec.lambda = lambda_from_scaled(s, next.z);
  const Metrics pm = physical_metrics(s, data, p.reference, *next.solution, rec.lambda);
  if (n_data > 0) rec.e_d = pm.e_d;
  if (p.reference) rec.e_s = pm.e_s;
  rec.e_p = pm.e_p;
  if (next.epoch % cfg.metrics_every == 0 || next.epoch == cfg.epochs) {
    const Metrics sm = synthetic_metrics(next.theta, arch, data, p.reference);
    if (n_data > 0) rec.e_d_syn = sm.e_d;
    if (p.reference) rec.e_s_syn = sm.e_s;
  }
  local.metrics += seconds_since(t0);

  state = std::move(next);
  if (times) {
    times->solve += local.solve;
    times->lambda_step += local.lambda_step;
    times->theta_step += local.theta_step;
    times->metrics += local.metrics;
  }
  return rec;
}

std::pair<double, double> nash_gap(const PairLoss& L1, const PairLoss& L2, std::span<const double> theta,
                                   std::span<const double> z, double probe_step, int n_probes,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double base1 = L1(theta, z), base2 = L2(theta, z);
  double gap1 = 0, gap2 = 0;
  std::vector<double> dz(z.size()), zz(z.size()), dt(theta.size()), tt(theta.size());
  for (int k = 0; k < n_probes; ++k) {
    for (std::size_t i = 0; i < z.size(); ++i) dz[i] = probe_step * (1.0 + std::abs(z[i])) * normal(rng);
    for (double sign : {1.0, -1.0}) {
      for (std::size_t i = 0; i < z.size(); ++i) zz[i] = z[i] + sign * dz[i];
      gap1 = std::max(gap1, base1 - L1(theta, zz));
    }
    for (std::size_t i = 0; i < theta.size(); ++i) dt[i] = probe_step * normal(rng);
    for (double sign : {1.0, -1.0}) {
      for (std::size_t i = 0; i < theta.size(); ++i) tt[i] = theta[i] + sign * dt[i];
      gap2 = std::max(gap2, base2 - L2(tt, z));
    }
  }
  return {gap1, gap2};
}

std::pair<double, double> nash_gap(const HycoProblem& p, const HycoState& state, double probe_step, int n_probes,
                                   std::uint64_t seed) {
  const PairLoss L1 = [&](std::span<const double> th, std::span<const double> z) {
    return player1_loss(p, nn::MlpParams{{th.begin(), th.end()}}, z, state.ghosts);
  };
  const PairLoss L2 = [&](std::span<const double> th, std::span<const double> z) {
    return player2_loss(p, nn::MlpParams{{th.begin(), th.end()}}, z, state.ghosts);
  };
  return nash_gap(L1, L2, state.theta.values, state.z, probe_step, n_probes, seed);
}

TrainResult train_hyco(const Scenario& s, const Dataset& d, const TrainConfig& cfg, const ReferenceSolution& ref,
                       const EpochCallback& on_epoch) {
  const auto start = Clock::now();
  TrainResult r;
  r.method = "hyco";
  r.arch = cfg.arch;
  const HycoProblem p{s, d, cfg, &ref};
  HycoState st = hyco_init(p);
  r.physical_init = physical_metrics(s, d, &ref, *st.solution, st.lambda(s));
  r.synthetic_init = synthetic_metrics(st.theta, cfg.arch, d, &ref);
  std::vector<std::vector<double>> z_hist{st.z};
  for (int e = 0; e < cfg.epochs; ++e) {
    EpochRecord rec;
    try {
      rec = hyco_epoch(p, st, &r.times);
    } catch (const std::exception& ex) {
      r.aborted = true;
      r.abort_reason = ex.what();
      break;
    }
    r.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    z_hist.push_back(st.z);
    if (cfg.stopping && stopping_check(z_hist, cfg.Z, cfg.eps_stop)) {
      r.stopped_early = st.epoch < cfg.epochs;
      break;
    }
  }
  r.stop_epoch = st.epoch;
  r.lambda = st.lambda(s);
  r.theta = st.theta;
  r.physical = physical_metrics(s, d, &ref, *st.solution, r.lambda);
  r.synthetic = synthetic_metrics(st.theta, cfg.arch, d, &ref);
  if (!r.history.empty()) {
    auto& last = r.history.back();
    if (!last.e_s_syn) {
      if (d.size() > 0) last.e_d_syn = r.synthetic->e_d;
      last.e_s_syn = r.synthetic->e_s;
    }
  }
  r.wall_time = seconds_since(start);
  return r;
}

void write_history_csv(std::ostream& os, const TrainResult& r, std::span<const std::string> names) {
  auto opt = [&os](const std::optional<double>& v) {
    os << ',';
    if (v) os << *v;
  };
  os.precision(17);
  os << "method,epoch,L_syn,L_phy,L_int";
  for (const auto& n : names) os << ",lambda_" << n;
  os << ",e_d,e_s,e_p,e_d_syn,e_s_syn,L_joint\n";
  for (const auto& rec : r.history) {
    os << r.method << ',' << rec.epoch;
    opt(rec.L_syn);
    opt(rec.L_phy);
    opt(rec.L_int);
    for (std::size_t i = 0; i < names.size(); ++i) {
      os << ',';
      if (i < rec.lambda.size()) os << rec.lambda[i];
    }
    opt(rec.e_d);
    opt(rec.e_s);
    opt(rec.e_p);
    opt(rec.e_d_syn);
    opt(rec.e_s_syn);
    os << ',' << rec.L_joint << '\n';
  }
}

}  // namespace hyco
