#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hyco/coefficients.hpp"
#include "hyco/grid.hpp"

namespace hyco {

/// Linear solve did not reach the requested tolerance.
struct SolverFailure : std::runtime_error {
  SolverFailure(const std::string& what, double residual)
      : std::runtime_error(what), final_residual(residual) {}
  double final_residual;
};

/// Time stepper blew up (|u| > kDivergenceThreshold) or violated its stability guard.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kDivergenceThreshold = 1e6;

struct SolverConfig {
  Domain2D domain;
  int nt = 0;              // time steps (dynamic problems)
  double t_end = 1.0;
  int frame_stride = 1;    // store every frame_stride-th step
  double linear_tol = 1e-10;
  int max_lin_iters = 20000;
};

struct LinearSolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  bool direct = false;
};

/// Solves -div(kappa grad u) + reaction u = forcing with u = 0 on the boundary.
/// Preconditioned CG when the operator is SPD, sparse LU otherwise (sign-indefinite kappa).
GridField2D solve_static(const GridField2D& kappa, const GridField2D& reaction, const GridField2D& forcing,
                         const SolverConfig& cfg, LinearSolveStats* stats = nullptr);

GridField2D solve_helmholtz(const HelmholtzParams& p, const SolverConfig& cfg);
GridField2D solve_darcy(const DarcyParams& p, const SolverConfig& cfg);

/// u_t = div(kappa grad u), zero Dirichlet, classical RK4. Internal steps are
/// subdivided when the configured step exceeds the RK4 stability bound.
SpaceTimeField simulate_diffusion(const GridField2D& kappa, const GridField2D& u0, const SolverConfig& cfg);
SpaceTimeField simulate_heat(const HeatParams& p, const SolverConfig& cfg);

/// Periodic Gray-Scott by forward Euler from the given initial state (2 components).
SpaceTimeField simulate_grayscott(const GrayScottParams& p, const GridField2D& initial, const SolverConfig& cfg);
SpaceTimeField simulate_grayscott(const GrayScottParams& p, const SolverConfig& cfg);

/// Initial state tabulated on the grid (components u, v).
GridField2D grayscott_initial_field(const Domain2D& d);

enum class ScenarioKind { helmholtz, heat, grayscott, darcy };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);
bool is_dynamic(ScenarioKind k);
int parameter_count(ScenarioKind k);
int solution_components(ScenarioKind k);

/// Output of a forward solve, queryable at arbitrary (x, y[, t]).
class PhysicalSolution {
 public:
  explicit PhysicalSolution(GridField2D f) : data_(std::move(f)) {}
  explicit PhysicalSolution(SpaceTimeField f) : data_(std::move(f)) {}

  int components() const;
  void sample_into(const Point& p, std::span<double> out) const;
  std::vector<double> sample(const Point& p) const;
  /// Row-major (points x components) predictions.
  std::vector<double> predict(std::span<const Point> points) const;

  bool dynamic() const { return std::holds_alternative<SpaceTimeField>(data_); }
  const GridField2D& static_field() const { return std::get<GridField2D>(data_); }
  const SpaceTimeField& series() const { return std::get<SpaceTimeField>(data_); }

 private:
  std::variant<GridField2D, SpaceTimeField> data_;
};

/// A scenario's forward model with its known constants: Lambda (in physical units) -> solution.
struct PhysicalModel {
  ScenarioKind kind = ScenarioKind::helmholtz;
  SolverConfig cfg;
  double F = 0.018, k = 0.051;  // Gray-Scott known rates

  PhysicalSolution solve(std::span<const double> lambda) const;
};

/// Solve at lambda, then interpolate at the query points (row-major output).
std::vector<double> physical_predict(const PhysicalModel& model, std::span<const double> lambda,
                                     std::span<const Point> points);

}  // namespace hyco
