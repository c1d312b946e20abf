#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hyco/nn.hpp"
#include "hyco/solvers.hpp"

namespace hyco::oracles {

inline const HelmholtzParams kHelmholtzTruth{{4.0, -1.0, -1.0}, {1.0, 2.0, 1.0}};
inline const DarcyParams kDarcyTruth{0.5, {1, 2, 3, 4, -1, -2, -3, -4, 5}};

inline SolverConfig square(int n) {
  SolverConfig c;
  c.domain = Domain2D(-M_PI, M_PI, -M_PI, M_PI, n, n);
  return c;
}

inline double max_abs_error(const GridField2D& u, auto exact) {
  const auto& d = u.domain();
  double e = 0;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) e = std::max(e, std::abs(u.at(i, j) - exact(d.x(i), d.y(j))));
  return e;
}

inline double sinsin(double x, double y) { return std::sin(x) * std::sin(y); }

// Manufactured forcing for u = sin x sin y under a positive sine-sum kappa.
inline double darcy_manufactured_forcing(double x, double y, const DarcyParams& p) {
  const double q = M_PI / 4;
  double kx = 0, ky = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      kx += p.a(i, j) * q * (i + 2) * std::cos(q * (i + 2) * x) * std::sin(q * (j + 2) * y);
      ky += p.a(i, j) * q * (j + 2) * std::sin(q * (i + 2) * x) * std::cos(q * (j + 2) * y);
    }
  return 2 * darcy_kappa(x, y, p) * sinsin(x, y) - kx * std::cos(x) * std::sin(y) - ky * std::sin(x) * std::cos(y);
}

// Independent per-sample forward written directly from the layer formulas.
// Also reports the smallest |pre-activation| seen (for kink filtering).
inline std::vector<double> oracle_forward(const nn::MlpArch& arch, const std::vector<double>& v, std::vector<double> x,
                                   double* min_abs_pre = nullptr) {
  auto act = [&](double z) { return arch.activation == nn::Activation::relu ? std::max(z, 0.0) : std::tanh(z); };
  std::size_t off = 0;
  double mn = 1e300;
  for (int w : arch.hidden) {
    const int in = static_cast<int>(x.size());
    std::vector<double> a(w);
    for (int o = 0; o < w; ++o) {
      double z = v[off + static_cast<std::size_t>(w) * in + o];
      for (int i = 0; i < in; ++i) z += v[off + static_cast<std::size_t>(o) * in + i] * x[i];
      mn = std::min(mn, std::abs(z));
      a[o] = act(z);
    }
    off += static_cast<std::size_t>(w) * in + w;
    if (arch.residual) {
      std::vector<double> nx = x;
      for (int o = 0; o < in; ++o)
        for (int i = 0; i < w; ++i) nx[o] += v[off + static_cast<std::size_t>(o) * w + i] * a[i];
      off += static_cast<std::size_t>(in) * w;
      x = nx;
    } else {
      x = a;
    }
  }
  std::vector<double> out(arch.output_dim);
  if (arch.residual) {
    for (int c = 0; c < arch.output_dim; ++c) out[c] = x[c];
  } else {
    for (int c = 0; c < arch.output_dim; ++c)
      for (std::size_t i = 0; i < x.size(); ++i) out[c] += v[off + c * x.size() + i] * x[i];
  }
  if (min_abs_pre) *min_abs_pre = mn;
  return out;
}

inline double weighted_output(const nn::MlpParams& p, const nn::MlpArch& a, const std::vector<double>& X, const std::vector<double>& up) {
  const auto y = nn::mlp_forward(p, a, X);
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * up[i];
  return s;
}

// Max relative error over 100 random coordinates of the parameter gradient.
inline double gradient_check(const nn::MlpArch& arch, const nn::MlpParams& p, const std::vector<double>& X, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  const std::size_t rows = X.size() / arch.input_dim;
  std::vector<double> up(rows * arch.output_dim);
  for (auto& u : up) u = n01(rng);
  const auto g = nn::mlp_backward(p, arch, X, up);
  std::uniform_int_distribution<std::size_t> pick(0, p.values.size() - 1);
  double worst = 0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t i = pick(rng);
    nn::MlpParams pp = p, pm = p;
    const double h = 1e-5;
    pp.values[i] += h;
    pm.values[i] -= h;
    const double fd = (weighted_output(pp, arch, X, up) - weighted_output(pm, arch, X, up)) / (2 * h);
    const double scale = std::max({std::abs(fd), std::abs(g[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - g[i]) / scale);
  }
  return worst;
}

inline std::vector<double> random_inputs(int rows, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> X(static_cast<std::size_t>(rows) * dim);
  for (auto& x : X) x = u(rng);
  return X;
}


// Rows of a random pool whose pre-activations all stay >= 1e-3 from the relu kink.
inline std::vector<double> kink_filtered_inputs(const nn::MlpArch& a, const nn::MlpParams& p, int want,
                                                std::uint64_t seed) {
  std::vector<double> X;
  const int dim = a.input_dim;
  const auto pool = random_inputs(200, dim, seed);
  for (int n = 0; n < 200 && static_cast<int>(X.size()) < want * dim; ++n) {
    std::vector<double> x(pool.begin() + dim * n, pool.begin() + dim * (n + 1));
    double mn;
    oracle_forward(a, p.values, x, &mn);
    if (mn >= 1e-3) X.insert(X.end(), x.begin(), x.end());
  }
  return X;
}

}  // namespace hyco::oracles
