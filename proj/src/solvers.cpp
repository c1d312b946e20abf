#include "hyco/solvers.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "hyco/kernels.hpp"

namespace hyco {

namespace {

double norm2(std::span<const double> a) { return std::sqrt(kernels::dot(a, a)); }

bool is_interior(const Domain2D& d, int i, int j) { return i > 0 && j > 0 && i < d.nx - 1 && j < d.ny - 1; }

bool operator_is_spd(const kernels::FaceCoefficients& f, std::span<const double> reaction) {
  const Domain2D& d = f.domain;
  for (int j = 1; j < d.ny - 1; ++j) {
    for (int i = 1; i < d.nx - 1; ++i) {
      const std::size_t p = d.index(i, j);
      if (!(f.east[p] > 0) || !(f.east[p - 1] > 0) || !(f.north[p] > 0) || !(f.north[p - d.nx] > 0))
        return false;
      if (reaction[p] < 0) return false;
    }
  }
  return true;
}

double relative_residual(const kernels::FaceCoefficients& f, std::span<const double> reaction,
                         std::span<const double> b, std::span<const double> x) {
  std::vector<double> r(b.size());
  kernels::apply_diffusion(f, reaction, x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  const double nb = norm2(b);
  return nb > 0 ? norm2(r) / nb : norm2(r);
}

LinearSolveStats conjugate_gradient(const kernels::FaceCoefficients& f, std::span<const double> reaction,
                                    std::span<const double> b, std::span<double> x, const SolverConfig& cfg) {
  const std::size_t n = b.size();
  const std::vector<double> diag = kernels::diffusion_diagonal(f, reaction);
  std::vector<double> r(b.begin(), b.end()), z(n), p(n), Ap(n);
  std::fill(x.begin(), x.end(), 0.0);
  const double nb = norm2(b);
  LinearSolveStats st;
  if (nb == 0.0) return st;
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = kernels::dot(r, z);
  double res = 1.0;
  for (int it = 1; it <= cfg.max_lin_iters; ++it) {
    kernels::apply_diffusion(f, reaction, p, Ap);
    const double pAp = kernels::dot(p, Ap);
    if (!(pAp > 0)) break;
    const double a = rz / pAp;
    kernels::axpy(a, p, x);
    kernels::axpy(-a, Ap, r);
    res = norm2(r) / nb;
    st.iterations = it;
    if (res <= cfg.linear_tol) break;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    const double rz_new = kernels::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  st.relative_residual = res;
  return st;
}

LinearSolveStats sparse_direct(const kernels::FaceCoefficients& f, std::span<const double> reaction,
                               std::span<const double> b, std::span<double> x) {
  const Domain2D& d = f.domain;
  const int mx = d.nx - 2, my = d.ny - 2;
  const double ihx2 = 1.0 / (d.hx() * d.hx()), ihy2 = 1.0 / (d.hy() * d.hy());
  auto unknown = [mx](int i, int j) { return (j - 1) * mx + (i - 1); };
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mx) * my * 5);
  Eigen::VectorXd rhs(mx * my);
  for (int j = 1; j < d.ny - 1; ++j) {
    for (int i = 1; i < d.nx - 1; ++i) {
      const std::size_t p = d.index(i, j);
      const int row = unknown(i, j);
      const double ke = f.east[p], kw = f.east[p - 1], kn = f.north[p], ks = f.north[p - d.nx];
      trips.emplace_back(row, row, (ke + kw) * ihx2 + (kn + ks) * ihy2 + reaction[p]);
      if (is_interior(d, i + 1, j)) trips.emplace_back(row, unknown(i + 1, j), -ke * ihx2);
      if (is_interior(d, i - 1, j)) trips.emplace_back(row, unknown(i - 1, j), -kw * ihx2);
      if (is_interior(d, i, j + 1)) trips.emplace_back(row, unknown(i, j + 1), -kn * ihy2);
      if (is_interior(d, i, j - 1)) trips.emplace_back(row, unknown(i, j - 1), -ks * ihy2);
      rhs[row] = b[p];
    }
  }
  Eigen::SparseMatrix<double> A(mx * my, mx * my);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw SolverFailure("sparse LU factorization failed (singular operator)", INFINITY);
  const Eigen::VectorXd sol = lu.solve(rhs);
  std::fill(x.begin(), x.end(), 0.0);
  for (int j = 1; j < d.ny - 1; ++j)
    for (int i = 1; i < d.nx - 1; ++i) x[d.index(i, j)] = sol[unknown(i, j)];
  LinearSolveStats st;
  st.direct = true;
  st.iterations = 1;
  return st;
}

void check_finite_bounded(std::span<const double> u, double t) {
  for (double v : u) {
    if (!std::isfinite(v) || std::abs(v) > kDivergenceThreshold) {
      std::ostringstream msg;
      msg << "time integration diverged at t = " << t;
      throw DivergenceError(msg.str());
    }
  }
}

void zero_dirichlet(const Domain2D& d, std::span<double> u) {
  for (int i = 0; i < d.nx; ++i) u[d.index(i, 0)] = u[d.index(i, d.ny - 1)] = 0.0;
  for (int j = 0; j < d.ny; ++j) u[d.index(0, j)] = u[d.index(d.nx - 1, j)] = 0.0;
}

void check_time_config(const SolverConfig& cfg) {
  if (cfg.nt < 1) throw std::invalid_argument("SolverConfig: nt must be >= 1 for dynamic problems");
  if (!(cfg.t_end > 0)) throw std::invalid_argument("SolverConfig: t_end must be positive");
  if (cfg.frame_stride < 1 || cfg.nt % cfg.frame_stride != 0)
    throw std::invalid_argument("SolverConfig: frame_stride must divide nt");
}

}  // namespace

GridField2D solve_static(const GridField2D& kappa, const GridField2D& reaction, const GridField2D& forcing,
                         const SolverConfig& cfg, LinearSolveStats* stats) {
  const Domain2D& d = kappa.domain();
  const auto faces = kernels::face_average(kappa);
  std::vector<double> b(forcing.values().begin(), forcing.values().end());
  zero_dirichlet(d, b);
  GridField2D u(d, 1);
  LinearSolveStats st;
  if (operator_is_spd(faces, reaction.values())) {
    st = conjugate_gradient(faces, reaction.values(), b, u.values(), cfg);
  } else {
    st = sparse_direct(faces, reaction.values(), b, u.values());
    st.relative_residual = relative_residual(faces, reaction.values(), b, u.values());
  }
  if (stats) *stats = st;
  if (!(st.relative_residual <= cfg.linear_tol) && !(st.direct && st.relative_residual <= 1e-8)) {
    std::ostringstream msg;
    msg << "linear solve did not converge: relative residual " << st.relative_residual << " after "
        << st.iterations << " iterations";
    throw SolverFailure(msg.str(), st.relative_residual);
  }
  return u;
}

GridField2D solve_helmholtz(const HelmholtzParams& p, const SolverConfig& cfg) {
  const Domain2D& d = cfg.domain;
  const auto kappa = tabulate(d, [&](double x, double y) { return helmholtz_coeffs(x, y, p).first; });
  const auto reaction = tabulate(d, [&](double x, double y) {
    const double eta = helmholtz_coeffs(x, y, p).second;
    return eta * eta;
  });
  const auto f = tabulate(d, helmholtz_forcing);
  return solve_static(kappa, reaction, f, cfg);
}

GridField2D solve_darcy(const DarcyParams& p, const SolverConfig& cfg) {
  const Domain2D& d = cfg.domain;
  const auto kappa = tabulate(d, [&](double x, double y) { return darcy_kappa(x, y, p); });
  const GridField2D reaction(d, 1);
  const auto f = tabulate(d, [](double, double) { return 1.0; });
  return solve_static(kappa, reaction, f, cfg);
}

SpaceTimeField simulate_diffusion(const GridField2D& kappa, const GridField2D& u0, const SolverConfig& cfg) {
  check_time_config(cfg);
  const Domain2D& d = kappa.domain();
  const auto faces = kernels::face_average(kappa);
  const std::span<const double> no_reaction;
  const std::vector<double> diag = kernels::diffusion_diagonal(faces, no_reaction);
  double rho = 0.0;
  for (int j = 1; j < d.ny - 1; ++j)
    for (int i = 1; i < d.nx - 1; ++i) rho = std::max(rho, 2.0 * std::abs(diag[d.index(i, j)]));

  const double dt = cfg.t_end / cfg.nt;
  constexpr double kRk4RealStability = 2.5;  // below the 2.785 edge of the RK4 region
  const int sub = std::max(1, static_cast<int>(std::ceil(dt * rho / kRk4RealStability)));
  const double h = dt / sub;

  const std::size_t n = d.nodes();
  std::vector<double> u(u0.values().begin(), u0.values().end());
  zero_dirichlet(d, u);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  auto rhs = [&](std::span<const double> in, std::span<double> out) {
    kernels::apply_diffusion(faces, no_reaction, in, out);
    for (std::size_t q = 0; q < n; ++q) out[q] = -out[q];
  };

  std::vector<GridField2D> frames;
  frames.reserve(cfg.nt / cfg.frame_stride + 1);
  frames.push_back(u0);
  for (int step = 1; step <= cfg.nt; ++step) {
    for (int s = 0; s < sub; ++s) {
      rhs(u, k1);
      for (std::size_t q = 0; q < n; ++q) tmp[q] = u[q] + 0.5 * h * k1[q];
      rhs(tmp, k2);
      for (std::size_t q = 0; q < n; ++q) tmp[q] = u[q] + 0.5 * h * k2[q];
      rhs(tmp, k3);
      for (std::size_t q = 0; q < n; ++q) tmp[q] = u[q] + h * k3[q];
      rhs(tmp, k4);
      for (std::size_t q = 0; q < n; ++q) u[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
      zero_dirichlet(d, u);
    }
    check_finite_bounded(u, step * dt);
    if (step % cfg.frame_stride == 0) frames.emplace_back(d, 1, u);
  }
  return SpaceTimeField(0.0, cfg.t_end, std::move(frames));
}

SpaceTimeField simulate_heat(const HeatParams& p, const SolverConfig& cfg) {
  const Domain2D& d = cfg.domain;
  const auto kappa = tabulate(d, [&](double x, double y) { return heat_kappa(x, y, p); });
  return simulate_diffusion(kappa, tabulate(d, heat_initial), cfg);
}

GridField2D grayscott_initial_field(const Domain2D& d) {
  GridField2D f(d, 2);
  for (int j = 0; j < d.ny; ++j) {
    for (int i = 0; i < d.nx; ++i) {
      const auto [u, v] = grayscott_initial(d.x(i), d.y(j));
      f.at(i, j, 0) = u;
      f.at(i, j, 1) = v;
    }
  }
  return f;
}

SpaceTimeField simulate_grayscott(const GrayScottParams& p, const GridField2D& initial, const SolverConfig& cfg) {
  check_time_config(cfg);
  if (initial.components() != 2) throw std::invalid_argument("simulate_grayscott: initial state needs 2 components");
  const Domain2D& d = initial.domain();
  const double dt = cfg.t_end / cfg.nt;
  const double h = std::min(d.hx(), d.hy());
  const double dmax = std::max(p.Du, p.Dv);
  if (p.Du < 0 || p.Dv < 0) throw DivergenceError("simulate_grayscott: negative diffusivity");
  if (dmax > 0 && dt > 0.9 * h * h / (4.0 * dmax)) {
    std::ostringstream msg;
    msg << "forward Euler step " << dt << " exceeds the diffusive stability bound " << 0.9 * h * h / (4.0 * dmax);
    throw DivergenceError(msg.str());
  }
  const std::size_t n = d.nodes();
  std::vector<double> u(n), v(n), du(n), dv(n);
  for (std::size_t q = 0; q < n; ++q) {
    u[q] = initial.values()[2 * q];
    v[q] = initial.values()[2 * q + 1];
  }
  const kernels::GrayScottRates rates{p.Du, p.Dv, p.F, p.k};
  std::vector<GridField2D> frames;
  frames.reserve(cfg.nt / cfg.frame_stride + 1);
  frames.push_back(initial);
  for (int step = 1; step <= cfg.nt; ++step) {
    kernels::grayscott_rhs(d, rates, u, v, du, dv);
    for (std::size_t q = 0; q < n; ++q) {
      u[q] += dt * du[q];
      v[q] += dt * dv[q];
    }
    if (step % cfg.frame_stride == 0) {
      check_finite_bounded(u, step * dt);
      check_finite_bounded(v, step * dt);
      GridField2D f(d, 2);
      auto vals = f.values();
      for (std::size_t q = 0; q < n; ++q) {
        vals[2 * q] = u[q];
        vals[2 * q + 1] = v[q];
      }
      frames.push_back(std::move(f));
    }
  }
  return SpaceTimeField(0.0, cfg.t_end, std::move(frames));
}

SpaceTimeField simulate_grayscott(const GrayScottParams& p, const SolverConfig& cfg) {
  return simulate_grayscott(p, grayscott_initial_field(cfg.domain), cfg);
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::helmholtz: return "helmholtz";
    case ScenarioKind::heat: return "heat";
    case ScenarioKind::grayscott: return "grayscott";
    case ScenarioKind::darcy: return "darcy";
  }
  return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "helmholtz") return ScenarioKind::helmholtz;
  if (s == "heat") return ScenarioKind::heat;
  if (s == "grayscott") return ScenarioKind::grayscott;
  if (s == "darcy") return ScenarioKind::darcy;
  throw std::invalid_argument("unknown scenario kind '" + s + "'");
}

bool is_dynamic(ScenarioKind k) { return k == ScenarioKind::heat || k == ScenarioKind::grayscott; }

int parameter_count(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::helmholtz:
    case ScenarioKind::heat: return 6;
    case ScenarioKind::grayscott: return 2;
    case ScenarioKind::darcy: return 10;
  }
  return 0;
}

int solution_components(ScenarioKind k) { return k == ScenarioKind::grayscott ? 2 : 1; }

int PhysicalSolution::components() const {
  return dynamic() ? series().components() : static_field().components();
}

void PhysicalSolution::sample_into(const Point& p, std::span<double> out) const {
  if (dynamic())
    series().sample_into(p.x, p.y, p.t, out);
  else
    static_field().sample_into(p.x, p.y, out);
}

std::vector<double> PhysicalSolution::sample(const Point& p) const {
  std::vector<double> out(components());
  sample_into(p, out);
  return out;
}

std::vector<double> PhysicalSolution::predict(std::span<const Point> points) const {
  const int k = components();
  std::vector<double> out(points.size() * k);
  for (std::size_t i = 0; i < points.size(); ++i)
    sample_into(points[i], std::span<double>(out).subspan(i * k, k));
  return out;
}

PhysicalSolution PhysicalModel::solve(std::span<const double> lambda) const {
  if (static_cast<int>(lambda.size()) != parameter_count(kind))
    throw std::invalid_argument("PhysicalModel: expected " + std::to_string(parameter_count(kind)) +
                                " parameters for " + to_string(kind));
  switch (kind) {
    case ScenarioKind::helmholtz: return PhysicalSolution(solve_helmholtz(HelmholtzParams::from(lambda), cfg));
    case ScenarioKind::darcy: return PhysicalSolution(solve_darcy(DarcyParams::from(lambda), cfg));
    case ScenarioKind::heat: return PhysicalSolution(simulate_heat(HeatParams::from(lambda), cfg));
    case ScenarioKind::grayscott:
      return PhysicalSolution(simulate_grayscott(GrayScottParams{lambda[0], lambda[1], F, k}, cfg));
  }
  throw std::logic_error("unreachable");
}

std::vector<double> physical_predict(const PhysicalModel& model, std::span<const double> lambda,
                                     std::span<const Point> points) {
  return model.solve(lambda).predict(points);
}

}  // namespace hyco
