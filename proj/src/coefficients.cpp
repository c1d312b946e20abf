#include "hyco/coefficients.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hyco {

namespace {

void require_size(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) throw std::invalid_argument(std::string(what) + ": wrong parameter count");
}

}  // namespace

std::array<double, 6> HelmholtzParams::to_array() const {
  return {kappa.amplitude, kappa.cx, kappa.cy, eta.amplitude, eta.cx, eta.cy};
}

HelmholtzParams HelmholtzParams::from(std::span<const double> v) {
  require_size(v, 6, "HelmholtzParams");
  return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

std::array<double, 6> HeatParams::to_array() const {
  return {bump1.amplitude, bump1.cx, bump1.cy, bump2.amplitude, bump2.cx, bump2.cy};
}

HeatParams HeatParams::from(std::span<const double> v) {
  require_size(v, 6, "HeatParams");
  return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

std::array<double, 10> DarcyParams::to_array() const {
  std::array<double, 10> out{};
  out[0] = C;
  for (int i = 0; i < 9; ++i) out[i + 1] = A[i];
  return out;
}

DarcyParams DarcyParams::from(std::span<const double> v) {
  require_size(v, 10, "DarcyParams");
  DarcyParams p;
  p.C = v[0];
  for (int i = 0; i < 9; ++i) p.A[i] = v[i + 1];
  return p;
}

double gaussian_bump(double x, double y, const GaussianBumpParams& p) {
  const double dx = x - p.cx, dy = y - p.cy;
  return p.amplitude * std::exp(-dx * dx - dy * dy);
}

std::pair<double, double> helmholtz_coeffs(double x, double y, const HelmholtzParams& p) {
  return {gaussian_bump(x, y, p.kappa) + 1.0, gaussian_bump(x, y, p.eta) + 1.0};
}

double helmholtz_forcing(double x, double y) {
  const double phi1 = gaussian_bump(x, y, {4.0, -1.0, -1.0});
  const double phi2 = gaussian_bump(x, y, {1.0, 2.0, 1.0});
  const double sx = std::sin(x), cx = std::cos(x);
  const double sy = std::sin(y), cy = std::cos(y);
  return 2.0 * (x + 1.0) * phi1 * cx * sy + 2.0 * (y + 1.0) * phi1 * sx * cy +
         ((phi2 + 1.0) * (phi2 + 1.0) + 2.0 * (phi1 + 1.0)) * sx * sy;
}

double heat_kappa(double x, double y, const HeatParams& p) {
  return gaussian_bump(x, y, p.bump1) + gaussian_bump(x, y, p.bump2) + 0.1;
}

double darcy_kappa(double x, double y, const DarcyParams& p) {
  constexpr double q = std::numbers::pi / 4.0;
  std::array<double, 3> sx{}, sy{};
  for (int i = 0; i < 3; ++i) {
    sx[i] = std::sin(q * (i + 2) * x);
    sy[i] = std::sin(q * (i + 2) * y);
  }
  double sum = p.C * p.C;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) sum += p.a(i, j) * sx[i] * sy[j];
  return sum;
}

std::pair<double, double> grayscott_initial(double x, double y) {
  const double dx = x - 0.5, dy = y - 0.5;
  const bool inside = dx * dx + dy * dy <= 0.1 * 0.1 + 1e-15;
  return inside ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0};
}

double heat_initial(double x, double y) {
  return std::exp(-(x - 1) * (x - 1) - (y - 1) * (y - 1)) -
         std::exp(-(x + 1) * (x + 1) - (y + 1) * (y + 1));
}

}  // namespace hyco
