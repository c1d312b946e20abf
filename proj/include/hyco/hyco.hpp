#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hyco/experiments.hpp"
#include "hyco/nn.hpp"
#include "hyco/solvers.hpp"

namespace hyco {

struct GhostSet {
  std::vector<Point> points;
  std::uint64_t seed = 0;
  GhostMode mode = GhostMode::per_epoch;
};

/// H uniform points over the model domain (and [0, T] for dynamic scenarios).
GhostSet sample_ghosts(const Scenario& s, int H, std::uint64_t seed, GhostMode mode);

/// Rows x input_dim network inputs for the given points.
std::vector<double> network_inputs(std::span<const Point> points, int input_dim);

/// Mean over rows of the squared Euclidean distance between two row-major blocks.
double mean_row_sq_distance(std::span<const double> a, std::span<const double> b, std::size_t rows);

double loss_syn(const nn::MlpParams& theta, const nn::MlpArch& arch, const Dataset& d);
double loss_phy(std::span<const double> lambda, const Dataset& d, const PhysicalModel& model);
double loss_int(const nn::MlpParams& theta, const nn::MlpArch& arch, std::span<const double> lambda,
                const GhostSet& ghosts, const PhysicalModel& model);

/// A perturbed solve failed while differencing parameter `parameter`.
struct GradientFailure : std::runtime_error {
  GradientFailure(const std::string& what, int p) : std::runtime_error(what), parameter(p) {}
  int parameter;
};

using LossClosure = std::function<double(std::span<const double>)>;

/// Central differences with step rel_step * (1 + |z_i|). The 2 dim(z)
/// evaluations run concurrently when `parallel` is set; the result does not
/// depend on it. Backward probes are clamped to `lower` when given, so the
/// quotient turns one-sided at the edge of the feasible set.
std::vector<double> physical_grad_fd(std::span<const double> z, const LossClosure& loss, double rel_step,
                                     bool parallel = false, std::span<const std::string> names = {},
                                     std::span<const double> lower = {});

/// True iff ||z_k - mean(z_{k-Z} .. z_{k-1})|| < eps for the last entry z_k.
bool stopping_check(const std::vector<std::vector<double>>& history, int Z, double eps);

/// Optimiser coordinates z = Lambda / param_scale and back.
std::vector<double> lambda_from_scaled(const Scenario& s, std::span<const double> z);
std::vector<double> scaled_from_lambda(const Scenario& s, std::span<const double> lambda);

/// Clips Lambda (physical units) back into the region where the scenario's solver is well posed.
void project_parameters(const Scenario& s, std::span<double> lambda);

/// Lower edge of the projection in scaled units (-inf where unbounded).
std::vector<double> scaled_lower_bounds(const Scenario& s);

/// Mutable training state; copies share the (immutable) current solve.
struct HycoState {
  int epoch = 0;
  std::vector<double> z;  // Lambda / param_scale
  nn::MlpParams theta;
  nn::AdamState adam_theta, adam_lambda;
  GhostSet ghosts;
  std::mt19937_64 rng;
  std::shared_ptr<const PhysicalSolution> solution;  // physical model at z

  std::vector<double> lambda(const Scenario& s) const;
};

struct HycoProblem {
  const Scenario& scenario;
  const Dataset& data;
  const TrainConfig& cfg;
  const ReferenceSolution* reference = nullptr;  // enables e_s in the epoch records
};

/// e_d, e_s (when ref is given) and e_p of a physical solve at lambda.
Metrics physical_metrics(const Scenario& s, const Dataset& d, const ReferenceSolution* ref,
                         const PhysicalSolution& sol, std::span<const double> lambda);
/// e_d and e_s (when ref is given) of the network; e_p stays empty.
Metrics synthetic_metrics(const nn::MlpParams& theta, const nn::MlpArch& arch, const Dataset& d,
                          const ReferenceSolution* ref);

struct PhaseTimes {
  double solve = 0, lambda_step = 0, theta_step = 0, metrics = 0;
};

/// Losses are evaluated at the epoch-start state; metrics after the update.
struct EpochRecord {
  int epoch = 0;
  std::optional<double> L_syn, L_phy, L_int;
  std::vector<double> lambda;
  std::optional<double> e_d, e_s, e_p;     // physical model (synthetic for nn-only runs)
  std::optional<double> e_d_syn, e_s_syn;  // synthetic model of a hybrid run
  double L_joint = 0;
};

struct TrainResult {
  std::string method;
  std::vector<EpochRecord> history;
  std::vector<double> lambda;  // final Lambda, physical units (empty when the method has none)
  nn::MlpArch arch;
  std::optional<nn::MlpParams> theta;
  std::optional<Metrics> physical, synthetic;  // final metrics
  std::optional<Metrics> physical_init, synthetic_init;
  int stop_epoch = 0;  // epochs run
  bool stopped_early = false;
  bool aborted = false;
  std::string abort_reason;
  double wall_time = 0;
  PhaseTimes times;
};

HycoState hyco_init(const HycoProblem& p);

/// Ghost refresh, Lambda step on beta L_phy + L_int, Theta step on alpha L_syn + L_int.
/// Throws (leaving `state` untouched) on a failed solve or non-finite loss.
EpochRecord hyco_epoch(const HycoProblem& p, HycoState& state, PhaseTimes* times = nullptr);

/// Physical player's loss L1 = beta L_phy + w L_int and synthetic player's L2 = alpha L_syn + w L_int.
double player1_loss(const HycoProblem& p, const nn::MlpParams& theta, std::span<const double> z,
                    const GhostSet& ghosts);
double player2_loss(const HycoProblem& p, const nn::MlpParams& theta, std::span<const double> z,
                    const GhostSet& ghosts);

using PairLoss = std::function<double(std::span<const double> theta, std::span<const double> z)>;

/// Largest loss decrease found by n_probes random +-directions for each player
/// while the other is held fixed (positive part, so both are >= 0).
std::pair<double, double> nash_gap(const PairLoss& L1, const PairLoss& L2, std::span<const double> theta,
                                   std::span<const double> z, double probe_step, int n_probes,
                                   std::uint64_t seed);
std::pair<double, double> nash_gap(const HycoProblem& p, const HycoState& state, double probe_step, int n_probes,
                                   std::uint64_t seed);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Full HYCO run with the stopping rule. Solver failures end the run early
/// (aborted = true) keeping the last good state.
TrainResult train_hyco(const Scenario& s, const Dataset& d, const TrainConfig& cfg,
                       const ReferenceSolution& ref, const EpochCallback& on_epoch = {});

/// Derived seeds so that data, init and ghosts use independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

void write_history_csv(std::ostream& os, const TrainResult& r, std::span<const std::string> names);

}  // namespace hyco
