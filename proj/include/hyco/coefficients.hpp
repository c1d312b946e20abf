#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "hyco/grid.hpp"

namespace hyco {

/// Smallest admissible diffusion coefficient for the elliptic/parabolic solvers.
inline constexpr double kKappaFloor = 1e-4;

struct GaussianBumpParams {
  double amplitude = 0.0;
  double cx = 0.0, cy = 0.0;
};

// Parameter vectors are laid out as (alpha1, c1x, c1y, alpha2, c2x, c2y).
struct HelmholtzParams {
  GaussianBumpParams kappa, eta;

  std::array<double, 6> to_array() const;
  static HelmholtzParams from(std::span<const double> v);
};

struct HeatParams {
  GaussianBumpParams bump1, bump2;

  std::array<double, 6> to_array() const;
  static HeatParams from(std::span<const double> v);
};

/// Only the diffusivities are identified; F and k are known constants.
struct GrayScottParams {
  double Du = 2e-6, Dv = 0.8e-6;
  double F = 0.018, k = 0.051;
};

// Vector layout: (C, A11, A12, ..., A33).
struct DarcyParams {
  double C = 0.0;
  std::array<double, 9> A{};  // row-major

  double a(int i, int j) const { return A[static_cast<std::size_t>(i) * 3 + j]; }
  std::array<double, 10> to_array() const;
  static DarcyParams from(std::span<const double> v);
};

double gaussian_bump(double x, double y, const GaussianBumpParams& p);

/// Returns (kappa, eta) for the heterogeneous Helmholtz problem.
std::pair<double, double> helmholtz_coeffs(double x, double y, const HelmholtzParams& p);

/// Source term manufactured so that sin(x) sin(y) solves the ground-truth problem.
double helmholtz_forcing(double x, double y);

double heat_kappa(double x, double y, const HeatParams& p);
double darcy_kappa(double x, double y, const DarcyParams& p);

/// (u0, v0): indicator of the closed ball of radius 0.1 around (0.5, 0.5) and its complement.
std::pair<double, double> grayscott_initial(double x, double y);

double heat_initial(double x, double y);

/// Node-wise tabulation of a scalar function on a grid.
template <class F>
GridField2D tabulate(const Domain2D& d, F&& f) {
  GridField2D out(d, 1);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) out.at(i, j) = f(d.x(i), d.y(j));
  return out;
}

}  // namespace hyco
