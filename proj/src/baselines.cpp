#include "hyco/baselines.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "hyco/coefficients.hpp"

namespace hyco {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double uniform(std::mt19937_64& rng, double a, double b) {
  return a + (b - a) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

bool periodic(const Scenario& s) { return s.kind == ScenarioKind::grayscott; }

int stencil_size(const Scenario& s) { return s.dynamic() ? 7 : 5; }

void finish_history(TrainResult& r, const Dataset& d) {
  if (r.history.empty()) return;
  auto& last = r.history.back();
  const Metrics& m = r.physical ? *r.physical : *r.synthetic;
  if (d.size() > 0) last.e_d = m.e_d;
  last.e_s = m.e_s;
}

}  // namespace

TrainResult fit_physics_only(const Scenario& s, const Dataset& d, const TrainConfig& cfg,
                             const ReferenceSolution* ref, const EpochCallback& on_epoch) {
  const auto start = Clock::now();
  s.validate();
  cfg.validate();
  if (d.size() == 0) throw std::invalid_argument("fit_physics_only: empty dataset");
  TrainResult r;
  r.method = "physics_only";
  std::vector<double> lam = s.init;
  project_parameters(s, lam);
  std::vector<double> z = scaled_from_lambda(s, lam);
  nn::AdamState adam(z.size());
  PhysicalSolution sol = s.model.solve(lam);
  r.physical_init = physical_metrics(s, d, ref, sol, lam);
  const auto names = parameter_names(s.kind);
  const auto lower = scaled_lower_bounds(s);
  std::vector<std::vector<double>> z_hist{z};
  int epoch = 0;
  for (; epoch < cfg.epochs;) {
    EpochRecord rec;
    try {
      rec.L_phy = mean_row_sq_distance(sol.predict(d.points), d.values, d.size());
      if (!std::isfinite(*rec.L_phy)) throw std::runtime_error("non-finite physical loss");
      rec.L_joint = *rec.L_phy;
      auto t0 = Clock::now();
      const LossClosure L = [&](std::span<const double> zz) {
        return mean_row_sq_distance(s.model.solve(lambda_from_scaled(s, zz)).predict(d.points), d.values, d.size());
      };
      const auto g = physical_grad_fd(z, L, cfg.fd_rel_step, cfg.parallel, names, lower);
      std::vector<double> zn = z;
      nn::AdamState an = adam;
      if (cfg.phys_optimizer == PhysOptimizer::adam) {
        nn::adam_step(zn, g, an, cfg.lr_phy);
      } else {
        for (double v : g)
          if (!std::isfinite(v)) throw std::domain_error("non-finite physical gradient");
        for (std::size_t i = 0; i < g.size(); ++i) zn[i] -= cfg.lr_phy * g[i];
      }
      lam = lambda_from_scaled(s, zn);
      project_parameters(s, lam);
      zn = scaled_from_lambda(s, lam);
      r.times.lambda_step += seconds_since(t0);
      t0 = Clock::now();
      PhysicalSolution next = s.model.solve(lam);
      r.times.solve += seconds_since(t0);
      z = std::move(zn);
      adam = std::move(an);
      sol = std::move(next);
    } catch (const std::exception& ex) {
      r.aborted = true;
      r.abort_reason = ex.what();
      break;
    }
    ++epoch;
    const auto t0 = Clock::now();
    rec.epoch = epoch;
    rec.lambda = lambda_from_scaled(s, z);
    const Metrics m = physical_metrics(s, d, ref, sol, rec.lambda);
    rec.e_d = m.e_d;
    if (ref) rec.e_s = m.e_s;
    rec.e_p = m.e_p;
    r.times.metrics += seconds_since(t0);
    r.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    z_hist.push_back(z);
    if (cfg.stopping && stopping_check(z_hist, cfg.Z, cfg.eps_stop)) {
      r.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  r.stop_epoch = epoch;
  r.lambda = lambda_from_scaled(s, z);
  r.physical = physical_metrics(s, d, ref, sol, r.lambda);
  r.wall_time = seconds_since(start);
  return r;
}

TrainResult train_nn_only(const Scenario& s, const Dataset& d, const TrainConfig& cfg, const ReferenceSolution* ref,
                          const EpochCallback& on_epoch) {
  const auto start = Clock::now();
  cfg.validate();
  if (d.size() == 0) throw std::invalid_argument("train_nn_only: empty dataset");
  const nn::MlpArch& arch = cfg.arch;
  if (arch.input_dim != (s.dynamic() ? 3 : 2) || arch.output_dim != solution_components(s.kind))
    throw std::invalid_argument("network shape does not match scenario " + s.name);
  TrainResult r;
  r.method = "nn_only";
  r.arch = arch;
  // same init stream as the synthetic player of a hybrid run
  nn::MlpParams theta = nn::mlp_init(arch, derive_seed(cfg.seed, 1));
  nn::AdamState adam(theta.values.size());
  std::mt19937_64 rng(derive_seed(cfg.seed, 2));
  r.synthetic_init = synthetic_metrics(theta, arch, d, ref);
  const auto inputs = network_inputs(d.points, arch.input_dim);
  const int in = arch.input_dim, out = arch.output_dim;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    const auto t0 = Clock::now();
    const auto pred = nn::mlp_forward(theta, arch, inputs);
    rec.L_syn = mean_row_sq_distance(pred, d.values, d.size());
    if (!std::isfinite(*rec.L_syn)) {
      r.aborted = true;
      r.abort_reason = "non-finite synthetic loss";
      break;
    }
    rec.L_joint = cfg.alpha * *rec.L_syn;
    std::vector<double> batch_in, upstream;
    std::size_t nb = d.size();
    if (cfg.batch_size > 0 && static_cast<std::size_t>(cfg.batch_size) < d.size()) nb = cfg.batch_size;
    std::vector<std::size_t> rows(d.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    for (std::size_t i = 0; i < nb && nb < d.size(); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform(rng, 0.0, 1.0) * (rows.size() - i));
      std::swap(rows[i], rows[std::min(j, rows.size() - 1)]);
    }
    batch_in.resize(nb * in);
    upstream.resize(nb * out);
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t i = rows[b];
      std::copy_n(inputs.begin() + i * in, in, batch_in.begin() + b * in);
      for (int c = 0; c < out; ++c)
        upstream[b * out + c] = cfg.alpha * 2.0 * (pred[i * out + c] - d.values[i * out + c]) / nb;
    }
    try {
      nn::adam_step(theta.values, nn::mlp_backward(theta, arch, batch_in, upstream), adam, cfg.lr_syn);
    } catch (const std::exception& ex) {
      r.aborted = true;
      r.abort_reason = ex.what();
      break;
    }
    r.times.theta_step += seconds_since(t0);
    rec.epoch = epoch;
    r.stop_epoch = epoch;
    if (epoch % cfg.metrics_every == 0 || epoch == cfg.epochs) {
      const auto t1 = Clock::now();
      const Metrics m = synthetic_metrics(theta, arch, d, ref);
      rec.e_d = m.e_d;
      if (ref) rec.e_s = m.e_s;
      r.times.metrics += seconds_since(t1);
    }
    r.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  r.theta = theta;
  r.synthetic = synthetic_metrics(theta, arch, d, ref);
  finish_history(r, d);
  r.wall_time = seconds_since(start);
  return r;
}

CollocationSet make_collocation(const Scenario& s, int n_interior, int n_boundary, double h_res_rel,
                                std::uint64_t seed) {
  if (n_interior < 1 || n_boundary < 1) throw std::invalid_argument("make_collocation: counts must be >= 1");
  const Domain2D& d = s.model.cfg.domain;
  const double width = std::min(d.x_max - d.x_min, d.y_max - d.y_min);
  CollocationSet c;
  c.h_res = h_res_rel * width;
  const double T = s.dynamic() ? s.model.cfg.t_end : 0.0;
  c.ht = h_res_rel * T;
  std::mt19937_64 rng(seed);
  c.interior.resize(n_interior);
  for (auto& p : c.interior) {
    p.x = uniform(rng, d.x_min + c.h_res, d.x_max - c.h_res);
    p.y = uniform(rng, d.y_min + c.h_res, d.y_max - c.h_res);
    if (s.dynamic()) p.t = uniform(rng, c.ht, T - c.ht);
  }
  c.boundary.resize(n_boundary);
  for (auto& p : c.boundary) {
    const int edge = periodic(s) ? static_cast<int>(rng() % 2) : static_cast<int>(rng() % 4);
    const double a = uniform(rng, 0.0, 1.0);
    switch (edge) {
      case 0: p = {d.x_min, d.y_min + a * (d.y_max - d.y_min), 0}; break;
      case 1: p = {d.x_min + a * (d.x_max - d.x_min), d.y_min, 0}; break;
      case 2: p = {d.x_max, d.y_min + a * (d.y_max - d.y_min), 0}; break;
      default: p = {d.x_min + a * (d.x_max - d.x_min), d.y_max, 0}; break;
    }
    if (s.dynamic()) p.t = uniform(rng, 0.0, T);
  }
  if (s.dynamic()) {
    c.initial.resize(n_boundary);
    for (auto& p : c.initial) p = {uniform(rng, d.x_min, d.x_max), uniform(rng, d.y_min, d.y_max), 0.0};
  }
  return c;
}

std::vector<Point> collocation_inputs(const CollocationSet& c, const Scenario& s) {
  const double h = c.h_res;
  std::vector<Point> pts;
  pts.reserve(c.interior.size() * stencil_size(s) + 2 * c.boundary.size() + c.initial.size());
  for (const auto& p : c.interior) {
    pts.push_back(p);
    pts.push_back({p.x + h, p.y, p.t});
    pts.push_back({p.x - h, p.y, p.t});
    pts.push_back({p.x, p.y + h, p.t});
    pts.push_back({p.x, p.y - h, p.t});
    if (s.dynamic()) {
      pts.push_back({p.x, p.y, p.t + c.ht});
      pts.push_back({p.x, p.y, p.t - c.ht});
    }
  }
  const Domain2D& d = s.model.cfg.domain;
  for (const auto& p : c.boundary) pts.push_back(p);
  if (periodic(s))
    for (const auto& p : c.boundary)
      pts.push_back(p.x == d.x_min ? Point{d.x_max, p.y, p.t} : Point{p.x, d.y_max, p.t});
  for (const auto& p : c.initial) pts.push_back(p);
  return pts;
}

ResidualValue pinn_residual_from_outputs(std::span<const double> outputs, std::span<const double> lambda,
                                         const CollocationSet& c, const Scenario& s, bool want_gradient) {
  const int k = solution_components(s.kind);
  const int S = stencil_size(s);
  const std::size_t n_int = c.interior.size(), n_b = c.boundary.size(), n_0 = c.initial.size();
  const std::size_t n_eval = n_int * S + n_b * (periodic(s) ? 2 : 1) + n_0;
  if (outputs.size() != n_eval * k) throw std::invalid_argument("pinn_residual: output size mismatch");
  ResidualValue res;
  if (want_gradient) res.d_outputs.assign(outputs.size(), 0.0);
  const double h = c.h_res, ih2 = 1.0 / (h * h);
  const double iht = c.ht > 0 ? 1.0 / (2 * c.ht) : 0.0;
  auto out = [&](std::size_t e, int comp) { return outputs[e * k + comp]; };
  auto grad = [&](std::size_t e, int comp, double v) {
    if (want_gradient) res.d_outputs[e * k + comp] += v;
  };

  // interior: r = sum_e w_e u_e (+ local nonlinear terms); stencil order c, e, w, n, s, t+, t-
  double acc = 0;
  const double w_int = 1.0 / static_cast<double>(n_int);
  for (std::size_t q = 0; q < n_int; ++q) {
    const Point& p = c.interior[q];
    const std::size_t e0 = q * S;
    if (s.kind == ScenarioKind::grayscott) {
      const GrayScottParams gp{lambda[0], lambda[1], s.model.F, s.model.k};
      const double D[2] = {gp.Du, gp.Dv};
      const double u = out(e0, 0), v = out(e0, 1);
      double r[2];
      double lap[2], ut[2];
      for (int cc = 0; cc < 2; ++cc) {
        lap[cc] = (out(e0 + 1, cc) + out(e0 + 2, cc) + out(e0 + 3, cc) + out(e0 + 4, cc) - 4 * out(e0, cc)) * ih2;
        ut[cc] = (out(e0 + 5, cc) - out(e0 + 6, cc)) * iht;
      }
      r[0] = ut[0] - D[0] * lap[0] + u * v * v - gp.F * (1 - u);
      r[1] = ut[1] - D[1] * lap[1] - u * v * v + (gp.F + gp.k) * v;
      acc += r[0] * r[0] + r[1] * r[1];
      if (want_gradient) {
        for (int cc = 0; cc < 2; ++cc) {
          const double g = 2 * r[cc] * w_int;
          for (int e = 1; e <= 4; ++e) grad(e0 + e, cc, -g * D[cc] * ih2);
          grad(e0, cc, g * 4 * D[cc] * ih2);
          grad(e0 + 5, cc, g * iht);
          grad(e0 + 6, cc, -g * iht);
        }
        const double g0 = 2 * r[0] * w_int, g1 = 2 * r[1] * w_int;
        grad(e0, 0, g0 * (v * v + gp.F) - g1 * v * v);
        grad(e0, 1, g0 * 2 * u * v + g1 * (-2 * u * v + gp.F + gp.k));
      }
      continue;
    }
    // variable-coefficient diffusion with face values of kappa
    double ke, kw, kn, ks, react = 0, source = 0;
    auto kappa = [&](double x, double y) {
      switch (s.kind) {
        case ScenarioKind::helmholtz: return helmholtz_coeffs(x, y, HelmholtzParams::from(lambda)).first;
        case ScenarioKind::heat: return heat_kappa(x, y, HeatParams::from(lambda));
        default: return darcy_kappa(x, y, DarcyParams::from(lambda));
      }
    };
    ke = kappa(p.x + h / 2, p.y);
    kw = kappa(p.x - h / 2, p.y);
    kn = kappa(p.x, p.y + h / 2);
    ks = kappa(p.x, p.y - h / 2);
    if (s.kind == ScenarioKind::helmholtz) {
      const double eta = helmholtz_coeffs(p.x, p.y, HelmholtzParams::from(lambda)).second;
      react = eta * eta;
      source = helmholtz_forcing(p.x, p.y);
    } else if (s.kind == ScenarioKind::darcy) {
      source = 1.0;
    }
    // -div(kappa grad u) coefficients on (c, e, w, n, s)
    const double w[5] = {(ke + kw + kn + ks) * ih2, -ke * ih2, -kw * ih2, -kn * ih2, -ks * ih2};
    double r = -source;
    for (int e = 0; e < 5; ++e) r += w[e] * out(e0 + e, 0);
    r += react * out(e0, 0);
    if (s.kind == ScenarioKind::heat) r += (out(e0 + 5, 0) - out(e0 + 6, 0)) * iht;
    acc += r * r;
    if (want_gradient) {
      const double g = 2 * r * w_int;
      for (int e = 0; e < 5; ++e) grad(e0 + e, 0, g * w[e]);
      grad(e0, 0, g * react);
      if (s.kind == ScenarioKind::heat) {
        grad(e0 + 5, 0, g * iht);
        grad(e0 + 6, 0, -g * iht);
      }
    }
  }
  res.value = acc * w_int;

  // boundary: zero Dirichlet, or periodic images for Gray-Scott
  std::size_t e = n_int * S;
  const double w_b = 1.0 / static_cast<double>(n_b);
  double bacc = 0;
  if (periodic(s)) {
    for (std::size_t q = 0; q < n_b; ++q)
      for (int cc = 0; cc < k; ++cc) {
        const double diff = out(e + q, cc) - out(e + n_b + q, cc);
        bacc += diff * diff;
        grad(e + q, cc, 2 * diff * w_b);
        grad(e + n_b + q, cc, -2 * diff * w_b);
      }
    e += 2 * n_b;
  } else {
    for (std::size_t q = 0; q < n_b; ++q)
      for (int cc = 0; cc < k; ++cc) {
        const double v = out(e + q, cc);
        bacc += v * v;
        grad(e + q, cc, 2 * v * w_b);
      }
    e += n_b;
  }
  res.value += bacc * w_b;

  if (n_0 > 0) {
    const double w_0 = 1.0 / static_cast<double>(n_0);
    double iacc = 0;
    for (std::size_t q = 0; q < n_0; ++q) {
      const Point& p = c.initial[q];
      double target[2];
      if (s.kind == ScenarioKind::grayscott) {
        const auto uv = grayscott_initial(p.x, p.y);
        target[0] = uv.first;
        target[1] = uv.second;
      } else {
        target[0] = heat_initial(p.x, p.y);
      }
      for (int cc = 0; cc < k; ++cc) {
        const double diff = out(e + q, cc) - target[cc];
        iacc += diff * diff;
        grad(e + q, cc, 2 * diff * w_0);
      }
    }
    res.value += iacc * w_0;
  }
  return res;
}

double pinn_residual(const nn::MlpParams& theta, const nn::MlpArch& arch, std::span<const double> lambda,
                     const CollocationSet& c, const Scenario& s) {
  const auto pts = collocation_inputs(c, s);
  const auto outputs = nn::mlp_forward(theta, arch, network_inputs(pts, arch.input_dim));
  return pinn_residual_from_outputs(outputs, lambda, c, s, false).value;
}

TrainResult train_pinn(const Scenario& s, const Dataset& d, const CollocationSet& c, const TrainConfig& cfg,
                       const ReferenceSolution* ref, const EpochCallback& on_epoch) {
  const auto start = Clock::now();
  s.validate();
  cfg.validate();
  const nn::MlpArch& arch = cfg.pinn_arch;
  if (arch.input_dim != (s.dynamic() ? 3 : 2) || arch.output_dim != solution_components(s.kind))
    throw std::invalid_argument("PINN network shape does not match scenario " + s.name);
  TrainResult r;
  r.method = "pinn";
  r.arch = arch;
  nn::MlpParams theta = nn::mlp_init(arch, derive_seed(cfg.seed, 1));
  nn::AdamState adam_theta(theta.values.size());
  std::vector<double> lam = s.init;
  project_parameters(s, lam);
  std::vector<double> z = scaled_from_lambda(s, lam);
  nn::AdamState adam_lambda(z.size());
  const auto names = parameter_names(s.kind);
  const auto lower = scaled_lower_bounds(s);

  const auto colloc_pts = collocation_inputs(c, s);
  const auto colloc_in = network_inputs(colloc_pts, arch.input_dim);
  const auto data_in = network_inputs(d.points, arch.input_dim);
  const int in = arch.input_dim, out = arch.output_dim;
  const std::size_t n_data = d.size(), n_col = colloc_pts.size();
  std::vector<double> inputs(data_in);
  inputs.insert(inputs.end(), colloc_in.begin(), colloc_in.end());

  auto metrics = [&](const nn::MlpParams& th, std::span<const double> l) {
    Metrics m = synthetic_metrics(th, arch, d, ref);
    m.e_p = parameter_error(s.truth, l);
    return m;
  };
  r.physical_init = metrics(theta, lam);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    try {
      const auto t0 = Clock::now();
      const auto pred = nn::mlp_forward(theta, arch, inputs);
      const std::span<const double> pred_data(pred.data(), n_data * out);
      const std::span<const double> pred_col(pred.data() + n_data * out, n_col * out);
      const ResidualValue R = pinn_residual_from_outputs(pred_col, lam, c, s, true);
      rec.L_syn = mean_row_sq_distance(pred_data, d.values, n_data);
      rec.L_joint = *rec.L_syn + cfg.gamma * R.value;
      if (!std::isfinite(rec.L_joint)) throw std::runtime_error("non-finite PINN loss");
      std::vector<double> upstream(inputs.size() / in * out);
      for (std::size_t i = 0; i < n_data * out; ++i)
        upstream[i] = 2.0 * (pred_data[i] - d.values[i]) / static_cast<double>(n_data);
      for (std::size_t i = 0; i < n_col * out; ++i) upstream[n_data * out + i] = cfg.gamma * R.d_outputs[i];
      const auto g_theta = nn::mlp_backward(theta, arch, inputs, upstream);
      const LossClosure RL = [&](std::span<const double> zz) {
        return cfg.gamma * pinn_residual_from_outputs(pred_col, lambda_from_scaled(s, zz), c, s, false).value;
      };
      const auto g_z = physical_grad_fd(z, RL, cfg.fd_rel_step, false, names, lower);
      nn::adam_step(theta.values, g_theta, adam_theta, cfg.lr_syn);
      nn::adam_step(z, g_z, adam_lambda, cfg.lr_phy);
      lam = lambda_from_scaled(s, z);
      project_parameters(s, lam);
      z = scaled_from_lambda(s, lam);
      r.times.theta_step += seconds_since(t0);
    } catch (const std::exception& ex) {
      r.aborted = true;
      r.abort_reason = ex.what();
      break;
    }
    rec.epoch = epoch;
    r.stop_epoch = epoch;
    rec.lambda = lam;
    rec.e_p = parameter_error(s.truth, lam);
    if (epoch % cfg.metrics_every == 0 || epoch == cfg.epochs) {
      const auto t1 = Clock::now();
      const Metrics m = synthetic_metrics(theta, arch, d, ref);
      rec.e_d = m.e_d;
      if (ref) rec.e_s = m.e_s;
      r.times.metrics += seconds_since(t1);
    }
    r.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  r.lambda = lam;
  r.theta = theta;
  r.physical = metrics(theta, lam);
  finish_history(r, d);
  r.wall_time = seconds_since(start);
  return r;
}

}  // namespace hyco
