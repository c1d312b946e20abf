#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyco/grid.hpp"
#include "hyco/nn.hpp"
#include "hyco/solvers.hpp"

namespace hyco {

struct Region {
  std::string name = "omega";
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  bool inside(const Domain2D& d) const;
};

/// One benchmark problem: the coarse physical model used in training, the fine
/// model that produces ground truth, sensors and the unknown parameters.
struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::helmholtz;
  std::vector<double> truth, init;  // physical units
  /// Optimisers act on lambda / param_scale so every unknown is O(1).
  std::vector<double> param_scale;
  PhysicalModel model;      // solver used by the physical player and baselines
  PhysicalModel reference;  // ground-truth generator and metric grid
  Region region;
  int M = 25;   // sensors (per time slice when N > 0)
  int N = 0;    // time slices for mobile sampling; 0 = uniform space-time draws
  double noise = 0.0;
  int metric_frame_stride = 1;  // reference frames used by e_s (dynamic problems)

  void validate() const;
  bool dynamic() const { return is_dynamic(kind); }
};

struct Provenance {
  std::string scenario, region;
  std::uint64_t seed = 0;
  double gamma = 0.0;
};

/// Observation records (x, y[, t]) -> value vector, stored row-major.
struct Dataset {
  std::vector<Point> points;
  std::vector<double> values;
  int components = 1;
  bool dynamic = false;  // records carry a time coordinate
  Provenance provenance;

  std::size_t size() const { return points.size(); }
  std::span<const double> value(std::size_t i) const {
    return std::span<const double>(values).subspan(i * components, components);
  }
};

Dataset generate_dataset(const Scenario& s, std::uint64_t seed);
/// Same sampling as generate_dataset but against an already computed reference solution.
Dataset generate_dataset(const Scenario& s, const PhysicalSolution& reference, std::uint64_t seed);

/// Multiplies every value by (1 + e), e ~ U(0, gamma) i.i.d.
Dataset apply_noise(const Dataset& d, double gamma, std::uint64_t seed);

struct Metrics {
  double e_d = 0, e_s = 0;
  std::optional<double> e_p;  // absent for models without physical parameters
};

/// Ground-truth solution tabulated on the fine grid (all nodes, every
/// metric_frame_stride-th frame for dynamic problems).
class ReferenceSolution {
 public:
  explicit ReferenceSolution(const Scenario& s);
  ReferenceSolution(const Scenario& s, PhysicalSolution solution);

  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& values() const { return values_; }
  const PhysicalSolution& solution() const { return solution_; }
  /// ||u - u_m|| / ||u|| over the tabulated points.
  double relative_l2(std::span<const double> model_values) const;

 private:
  PhysicalSolution solution_;
  std::vector<Point> points_;
  std::vector<double> values_;
};

using Predictor = std::function<std::vector<double>(std::span<const Point>)>;

double mean_squared_error(std::span<const double> prediction, const Dataset& d);
double parameter_error(std::span<const double> truth, std::span<const double> estimate);

Metrics compute_metrics(const Predictor& model, std::optional<std::span<const double>> lambda_hat,
                        const Scenario& s, const Dataset& d, const ReferenceSolution& ref);

/// Hyperparameters shared by HYCO and the baselines.
enum class GhostMode { per_epoch, fixed };
enum class UpdateOrder { gauss_seidel, jacobi };
enum class PhysOptimizer { adam, gd };

struct TrainConfig {
  double alpha = 1.0, beta = 1.0, gamma = 100.0;
  double lr_phy = 5e-3, lr_syn = 1e-3;
  int epochs = 3000;
  int H = 200;
  int Z = 200;
  double eps_stop = 5e-3;
  bool stopping = true;
  double fd_rel_step = 1e-4;
  std::uint64_t seed = 0;
  GhostMode ghost_mode = GhostMode::per_epoch;
  UpdateOrder order = UpdateOrder::gauss_seidel;
  PhysOptimizer phys_optimizer = PhysOptimizer::adam;
  int batch_size = 0;       // 0 = full batch
  int metrics_every = 10;   // synthetic metrics are evaluated every n epochs (and at the end)
  bool parallel = false;    // parallel finite-difference solves
  // PINN collocation
  int colloc_interior = 400, colloc_boundary = 400;
  double h_res_rel = 1e-3;
  // Degenerate configurations used by the baselines.
  bool physical_player = true, synthetic_player = true;
  double int_weight = 1.0;
  nn::MlpArch arch;
  nn::MlpArch pinn_arch;

  void validate() const;
};

std::string to_string(GhostMode m);
std::string to_string(UpdateOrder o);
std::string to_string(PhysOptimizer o);
GhostMode ghost_mode_from_string(const std::string& s);
UpdateOrder update_order_from_string(const std::string& s);

/// Named presets: "<kind>_paper" holds the full experiment values, "<kind>_desk" a
/// reduced-cost variant; an optional region infix ("helmholtz_q2_desk")
/// selects the data region (omega, q1, q2).
struct Preset {
  Scenario scenario;
  TrainConfig config;
};

Preset preset(const std::string& name);
/// Names of the scenario's unknowns, in Lambda order.
std::vector<std::string> parameter_names(ScenarioKind kind);
std::vector<std::string> preset_names();
Region named_region(ScenarioKind kind, const std::string& name);

/// Input map sending the scenario's space(-time) box to [-1,1]^2 (x [0,1] in t).
void set_input_scaling(nn::MlpArch& arch, const Scenario& s);

void write_dataset_csv(std::ostream& os, const Dataset& d);
void write_dataset_sidecar(std::ostream& os, const Dataset& d);

}  // namespace hyco
