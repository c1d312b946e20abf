#include <cmath>
#include <numeric>
#include <iomanip>
#include <random>

#include "doctest.h"
#include "hyco/solvers.hpp"
#include "oracles.hpp"

using namespace hyco;
using namespace hyco::oracles;

namespace {

// Series solution of -Lap u = 1 on [-pi,pi]^2 with zero boundary data.
double poisson_series(double x, double y) {
  const double L = 2 * M_PI;
  double s = 0;
  for (int m = 1; m < 400; m += 2)
    for (int n = 1; n < 400; n += 2) {
      const double lam = (m * M_PI / L) * (m * M_PI / L) + (n * M_PI / L) * (n * M_PI / L);
      s += 16.0 / (M_PI * M_PI * m * n) / lam * std::sin(m * M_PI * (x + M_PI) / L) * std::sin(n * M_PI * (y + M_PI) / L);
    }
  return s;
}

}  // namespace

TEST_CASE("constant-coefficient static solve converges at second order") {
  std::vector<double> errs;
  for (int n : {17, 33, 65}) {
    const auto cfg = square(n);
    const auto one = tabulate(cfg.domain, [](double, double) { return 1.0; });
    const GridField2D zero(cfg.domain, 1);
    const auto f = tabulate(cfg.domain, [](double x, double y) { return 2 * sinsin(x, y); });
    errs.push_back(max_abs_error(solve_static(one, zero, f, cfg), sinsin));
  }
  CHECK(errs[0] / errs[1] > 3.0);
  CHECK(errs[0] / errs[1] < 5.0);
  CHECK(errs[1] / errs[2] > 3.0);
  CHECK(errs[1] / errs[2] < 5.0);
}

TEST_CASE("zero forcing gives zero solution") {
  const auto cfg = square(18);
  const auto k = tabulate(cfg.domain, [](double x, double) { return 1.0 + x * x; });
  const GridField2D z(cfg.domain, 1);
  const auto u = solve_static(k, z, z, cfg);
  for (double v : u.values()) CHECK(v == 0.0);
}

TEST_CASE("ground-truth Helmholtz recovers the manufactured solution") {
  const auto cfg = square(64);
  LinearSolveStats st;
  const auto kappa = tabulate(cfg.domain, [](double x, double y) { return helmholtz_coeffs(x, y, kHelmholtzTruth).first; });
  const auto react = tabulate(cfg.domain, [](double x, double y) {
    const double e = helmholtz_coeffs(x, y, kHelmholtzTruth).second;
    return e * e;
  });
  const auto u = solve_static(kappa, react, tabulate(cfg.domain, helmholtz_forcing), cfg, &st);
  CHECK_FALSE(st.direct);
  CHECK(st.relative_residual <= 1e-10);
  const auto ref = tabulate(cfg.domain, sinsin);
  double num = 0, den = 0;
  for (std::size_t q = 0; q < u.values().size(); ++q) {
    num += std::pow(u.values()[q] - ref.values()[q], 2);
    den += std::pow(ref.values()[q], 2);
  }
  CHECK(std::sqrt(num / den) <= 0.02);
  const auto u2 = solve_helmholtz(kHelmholtzTruth, cfg);
  for (std::size_t q = 0; q < u.values().size(); ++q) CHECK(u2.values()[q] == u.values()[q]);
}

TEST_CASE("Helmholtz solver is second order at ground truth") {
  std::vector<double> errs;
  for (int n : {17, 33, 65}) errs.push_back(max_abs_error(solve_helmholtz(kHelmholtzTruth, square(n)), sinsin));
  CHECK(errs[0] / errs[1] > 3.0);
  CHECK(errs[0] / errs[1] < 5.0);
  CHECK(errs[1] / errs[2] > 3.0);
  CHECK(errs[1] / errs[2] < 5.0);
}

TEST_CASE("Darcy discretization is second order on a manufactured solution") {
  DarcyParams positive = kDarcyTruth;
  positive.C = 3.5;  // C^2 = 12.25 exceeds the sine sum everywhere
  std::vector<double> errs;
  for (int n : {17, 33, 65}) {
    const auto cfg = square(n);
    const auto k = tabulate(cfg.domain, [&](double x, double y) { return darcy_kappa(x, y, positive); });
    const auto f = tabulate(cfg.domain, [&](double x, double y) { return darcy_manufactured_forcing(x, y, positive); });
    errs.push_back(max_abs_error(solve_static(k, GridField2D(cfg.domain, 1), f, cfg), sinsin));
  }
  CHECK(errs[0] / errs[1] > 3.0);
  CHECK(errs[0] / errs[1] < 5.0);
  CHECK(errs[1] / errs[2] > 3.0);
  CHECK(errs[1] / errs[2] < 5.0);
}

TEST_CASE("Darcy with unit kappa matches the Poisson series solution") {
  const DarcyParams unit{1.0, {}};
  const auto u = solve_darcy(unit, square(129));
  const auto& d = u.domain();
  for (int j = 8; j < d.ny; j += 24)
    for (int i = 4; i < d.nx; i += 24) CHECK(std::abs(u.at(i, j) - poisson_series(d.x(i), d.y(j))) < 2e-3);
  for (int i = 0; i < d.nx; ++i) {
    CHECK(u.at(i, 0) == 0.0);
    CHECK(u.at(i, d.ny - 1) == 0.0);
    CHECK(u.at(0, i) == 0.0);
    CHECK(u.at(d.nx - 1, i) == 0.0);
  }
  const auto u2 = solve_darcy(DarcyParams{std::sqrt(2.0), {}}, square(129));
  for (std::size_t q = 0; q < u.values().size(); ++q)
    CHECK(u2.values()[q] == doctest::Approx(0.5 * u.values()[q]).epsilon(1e-8));
}

TEST_CASE("sign-indefinite Darcy kappa falls back to the direct solver") {
  const auto u = solve_darcy(kDarcyTruth, square(18));
  for (double v : u.values()) CHECK(std::isfinite(v));
  const auto& d = u.domain();
  for (int i = 0; i < d.nx; ++i) CHECK(u.at(i, 0) == 0.0);
}

TEST_CASE("CG non-convergence is reported with the residual") {
  auto cfg = square(33);
  cfg.max_lin_iters = 3;
  const auto one = tabulate(cfg.domain, [](double, double) { return 1.0; });
  const auto f = tabulate(cfg.domain, [](double x, double y) { return 2 * sinsin(x, y) + x; });
  try {
    solve_static(one, GridField2D(cfg.domain, 1), f, cfg);
    FAIL("expected SolverFailure");
  } catch (const SolverFailure& e) {
    CHECK(e.final_residual > cfg.linear_tol);
  }
}

TEST_CASE("heat solver matches single-mode decay on a 64x64 grid") {
  SolverConfig cfg;
  cfg.domain = Domain2D(0, M_PI, 0, M_PI, 64, 64);
  cfg.t_end = 1.0;
  cfg.nt = 2000;
  cfg.frame_stride = 100;
  const double kappa = 0.7;
  const auto k = tabulate(cfg.domain, [&](double, double) { return kappa; });
  const auto s = simulate_diffusion(k, tabulate(cfg.domain, sinsin), cfg);
  CHECK(s.nt() == 21);
  for (int n = 1; n < s.nt(); ++n) {
    const double t = s.time(n), amp = std::exp(-2 * kappa * t);
    double num = 0, den = 0;
    const auto& d = cfg.domain;
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        num += std::pow(s.frame(n).at(i, j) - amp * sinsin(d.x(i), d.y(j)), 2);
        den += std::pow(amp * sinsin(d.x(i), d.y(j)), 2);
      }
    CHECK(std::sqrt(num / den) < 1e-3);
  }
}

TEST_CASE("heat solver: zero data, maximum principle, temporal refinement") {
  const HeatParams truth{{3.0, -2.0, -2.0}, {2.5, 1.0, 1.0}};
  SolverConfig cfg = square(18);
  cfg.t_end = 1.0;
  cfg.nt = 1000;
  cfg.frame_stride = 10;
  const auto s = simulate_heat(truth, cfg);
  CHECK(s.nt() == 101);
  const auto& d = cfg.domain;
  CHECK(s.frame(0).at(5, 7) == heat_initial(d.x(5), d.y(7)));
  double prev = 1e300;
  for (int n = 1; n < s.nt(); ++n) {
    double m = 0;
    for (double v : s.frame(n).values()) m = std::max(m, std::abs(v));
    CHECK(m <= prev * (1 + 1e-12));
    prev = m;
    for (int i = 0; i < d.nx; ++i) CHECK(s.frame(n).at(i, 0) == 0.0);
  }
  const auto k = tabulate(d, [&](double x, double y) { return heat_kappa(x, y, truth); });
  const auto z = simulate_diffusion(k, GridField2D(d, 1), cfg);
  for (const auto& f : z.frames())
    for (double v : f.values()) CHECK(v == 0.0);

  SolverConfig fine = cfg;
  fine.nt = 2000;
  fine.frame_stride = 20;
  const auto s2 = simulate_heat(truth, fine);
  double num = 0, den = 0;
  for (std::size_t q = 0; q < d.nodes(); ++q) {
    num += std::pow(s2.frame(100).values()[q] - s.frame(100).values()[q], 2);
    den += std::pow(s.frame(100).values()[q], 2);
  }
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("Gray-Scott: pure reaction matches an independent ODE integration") {
  SolverConfig cfg;
  cfg.domain = Domain2D(0, 1, 0, 1, 9, 9);
  cfg.t_end = 5.0;
  cfg.nt = 50000;
  cfg.frame_stride = 50000;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u01(0, 1);
  GridField2D init(cfg.domain, 2);
  for (double& v : init.values()) v = u01(rng);
  // Periodic images must agree with their unique node.
  const auto& d = cfg.domain;
  for (int j = 0; j < d.ny; ++j)
    for (int c = 0; c < 2; ++c) init.at(d.nx - 1, j, c) = init.at(0, j, c);
  for (int i = 0; i < d.nx; ++i)
    for (int c = 0; c < 2; ++c) init.at(i, d.ny - 1, c) = init.at(i, 0, c);
  const GrayScottParams p{0.0, 0.0, 0.0, 0.0};
  const auto s = simulate_grayscott(p, init, cfg);
  const int nodes[5][2] = {{0, 0}, {3, 4}, {7, 1}, {5, 5}, {2, 6}};
  for (const auto& nd : nodes) {
    // RK4 on u' = -u v^2, v' = u v^2 with a fine step
    double u = init.at(nd[0], nd[1], 0), v = init.at(nd[0], nd[1], 1);
    const double h = 1e-3;
    auto fu = [](double a, double b) { return -a * b * b; };
    for (int n = 0; n < 5000; ++n) {
      const double k1u = fu(u, v), k1v = -k1u;
      const double k2u = fu(u + h / 2 * k1u, v + h / 2 * k1v), k2v = -k2u;
      const double k3u = fu(u + h / 2 * k2u, v + h / 2 * k2v), k3v = -k3u;
      const double k4u = fu(u + h * k3u, v + h * k3v), k4v = -k4u;
      u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
      v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    CHECK(s.frame(1).at(nd[0], nd[1], 0) == doctest::Approx(u).epsilon(1e-4));
    CHECK(s.frame(1).at(nd[0], nd[1], 1) == doctest::Approx(v).epsilon(1e-4));
  }
}

TEST_CASE("Gray-Scott: u=1, v=0 is a fixed point; mass conserved without feed") {
  SolverConfig cfg;
  cfg.domain = Domain2D(0, 1, 0, 1, 17, 17);
  cfg.t_end = 100.0;
  cfg.nt = 200;
  cfg.frame_stride = 1;
  GridField2D init(cfg.domain, 2);
  for (std::size_t q = 0; q < cfg.domain.nodes(); ++q) init.values()[2 * q] = 1.0;
  const auto s = simulate_grayscott(GrayScottParams{}, init, cfg);
  for (double v : s.frame(s.nt() - 1).values()) CHECK((v == 1.0 || v == 0.0));

  const GrayScottParams nofeed{2e-4, 1e-4, 0.0, 0.0};
  const auto m = simulate_grayscott(nofeed, cfg);
  const auto& d = cfg.domain;
  auto mass = [&](const GridField2D& f) {
    double total = 0;
    for (int j = 0; j < d.ny - 1; ++j)
      for (int i = 0; i < d.nx - 1; ++i) total += f.at(i, j, 0) + f.at(i, j, 1);
    return total;
  };
  const double m0 = mass(m.frame(0));
  for (int n = 1; n < m.nt(); ++n) CHECK(std::abs(mass(m.frame(n)) - m0) / m0 < 1e-10 * n);
}

TEST_CASE("Gray-Scott stability guard") {
  SolverConfig cfg;
  cfg.domain = Domain2D(0, 1, 0, 1, 33, 33);
  cfg.t_end = 100.0;
  cfg.nt = 10;
  CHECK_THROWS_AS(simulate_grayscott(GrayScottParams{1e-2, 1e-2, 0.018, 0.051}, cfg), DivergenceError);
}

TEST_CASE("Gray-Scott paper configuration regression checksum") {
  SolverConfig cfg;
  cfg.domain = Domain2D(0, 1, 0, 1, 65, 65);
  cfg.t_end = 2000.0;
  cfg.nt = 5000;
  cfg.frame_stride = 500;
  const auto s = simulate_grayscott(GrayScottParams{}, cfg);
  CHECK(s.nt() == 11);
  double su = 0, sv = 0;
  const auto& last = s.frame(s.nt() - 1);
  for (std::size_t q = 0; q < cfg.domain.nodes(); ++q) {
    su += last.values()[2 * q];
    sv += last.values()[2 * q + 1];
  }
  MESSAGE("checksum u=" << std::setprecision(17) << su << " v=" << sv);
  CHECK(su == doctest::Approx(GS_CHECKSUM_U).epsilon(1e-10));
  CHECK(sv == doctest::Approx(GS_CHECKSUM_V).epsilon(1e-10));
}

TEST_CASE("physical_predict composes solve and interpolation") {
  PhysicalModel m;
  m.kind = ScenarioKind::helmholtz;
  m.cfg = square(18);
  const auto lam = kHelmholtzTruth.to_array();
  const auto direct = solve_helmholtz(kHelmholtzTruth, m.cfg);
  const auto& d = m.cfg.domain;
  std::vector<Point> nodes{{d.x(3), d.y(4)}, {d.x(10), d.y(12)}};
  const auto at_nodes = physical_predict(m, lam, nodes);
  CHECK(at_nodes[0] == doctest::Approx(direct.at(3, 4)).epsilon(1e-14));
  CHECK(at_nodes[1] == doctest::Approx(direct.at(10, 12)).epsilon(1e-14));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  std::vector<Point> pts(20);
  for (auto& p : pts) p = {u(rng), u(rng)};
  const auto pred = physical_predict(m, lam, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(pred[i] == direct.sample(pts[i].x, pts[i].y)[0]);

  PhysicalModel heat;
  heat.kind = ScenarioKind::heat;
  heat.cfg = square(18);
  heat.cfg.nt = 100;
  heat.cfg.t_end = 1.0;
  const HeatParams hp{{3.0, -2.0, -2.0}, {2.5, 1.0, 1.0}};
  const auto t0 = physical_predict(heat, hp.to_array(), std::vector<Point>{{d.x(4), d.y(9), 0.0}});
  CHECK(t0[0] == heat_initial(d.x(4), d.y(9)));
  CHECK_THROWS_AS(physical_predict(heat, hp.to_array(), std::vector<Point>{{0.0, 0.0, 1.5}}), OutOfDomain);
}
