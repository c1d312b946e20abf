#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hyco/hyco.hpp"

namespace hyco {

/// Gradient descent on L_phy alone (the classical inverse-problem fit).
TrainResult fit_physics_only(const Scenario& s, const Dataset& d, const TrainConfig& cfg,
                             const ReferenceSolution* ref, const EpochCallback& on_epoch = {});

/// Adam on alpha L_syn alone, using cfg.arch.
TrainResult train_nn_only(const Scenario& s, const Dataset& d, const TrainConfig& cfg, const ReferenceSolution* ref,
                          const EpochCallback& on_epoch = {});

/// Residual collocation for the PINN. Interior points keep h_res (and ht in
/// time) away from the boundary so the difference stencils stay inside.
/// For the periodic problem `boundary` holds points on the x_min / y_min
/// edges, compared against their periodic images.
struct CollocationSet {
  std::vector<Point> interior, boundary, initial;
  double h_res = 1e-3;  // spatial stencil offset
  double ht = 0;        // temporal stencil offset (dynamic problems)
};

CollocationSet make_collocation(const Scenario& s, int n_interior, int n_boundary, double h_res_rel,
                                std::uint64_t seed);

/// Network evaluation points for a collocation set: interior stencils first,
/// then boundary (and periodic images), then initial points.
std::vector<Point> collocation_inputs(const CollocationSet& c, const Scenario& s);

struct ResidualValue {
  double value = 0;
  std::vector<double> d_outputs;  // dR / d(network output), same layout as the evaluations
};

/// Residual from precomputed network outputs at collocation_inputs(c, s).
ResidualValue pinn_residual_from_outputs(std::span<const double> outputs, std::span<const double> lambda,
                                         const CollocationSet& c, const Scenario& s, bool want_gradient);

/// Mean squared PDE residual (differenced network) plus boundary/initial mismatch.
double pinn_residual(const nn::MlpParams& theta, const nn::MlpArch& arch, std::span<const double> lambda,
                     const CollocationSet& c, const Scenario& s);

/// Joint Adam on (Theta, Lambda) over data MSE + gamma R; Lambda gradients by
/// central differences of R at fixed network outputs, Lambda learning rate lr_phy.
TrainResult train_pinn(const Scenario& s, const Dataset& d, const CollocationSet& c, const TrainConfig& cfg,
                       const ReferenceSolution* ref, const EpochCallback& on_epoch = {});

}  // namespace hyco
