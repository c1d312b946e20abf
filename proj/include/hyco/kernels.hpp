#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version used by the
// library and a `_reference` serial version kept for tests and benchmarks.
// None of the parallel kernels reduce across nodes, so results are bit-identical
// to the serial versions regardless of thread count.

#include <span>
#include <vector>

#include "hyco/grid.hpp"

namespace hyco::kernels {

/// Face diffusivities of a node-centred coefficient: arithmetic mean of the
/// two adjacent nodes. east[idx(i,j)] lives between (i,j) and (i+1,j),
/// north[idx(i,j)] between (i,j) and (i,j+1).
struct FaceCoefficients {
  Domain2D domain;
  std::vector<double> east, north;
};

FaceCoefficients face_average(const GridField2D& kappa);

/// out = -div(kappa grad u) + reaction * u on interior nodes, 0 on boundary nodes.
void apply_diffusion(const FaceCoefficients& faces, std::span<const double> reaction,
                     std::span<const double> u, std::span<double> out);
void apply_diffusion_reference(const FaceCoefficients& faces, std::span<const double> reaction,
                               std::span<const double> u, std::span<double> out);

/// Diagonal of the operator above (1 on boundary nodes).
std::vector<double> diffusion_diagonal(const FaceCoefficients& faces, std::span<const double> reaction);

struct GrayScottRates {
  double Du, Dv, F, k;
};

/// Right-hand side of the periodic Gray-Scott system on the unique nodes of a
/// grid whose last row/column duplicates the first. u, v, du, dv are full node
/// arrays; the duplicated nodes of du, dv are filled from their periodic image.
void grayscott_rhs(const Domain2D& d, const GrayScottRates& r, std::span<const double> u,
                   std::span<const double> v, std::span<double> du, std::span<double> dv);
void grayscott_rhs_reference(const Domain2D& d, const GrayScottRates& r, std::span<const double> u,
                             std::span<const double> v, std::span<double> du, std::span<double> dv);

/// Batched affine map: Y[n, :] = W X[n, :] + b (b may be empty). W is out x in row-major.
void affine_batch(std::span<const double> X, int rows, int in, std::span<const double> W,
                  std::span<const double> b, int out, std::span<double> Y);
void affine_batch_reference(std::span<const double> X, int rows, int in, std::span<const double> W,
                            std::span<const double> b, int out, std::span<double> Y);

/// Backward of affine_batch: dX = dY W, and (accumulated) dW += dY^T X, db += colsum(dY).
/// dW/db accumulate in a fixed row order, independent of thread count.
void affine_batch_backward(std::span<const double> X, int rows, int in, std::span<const double> W,
                           int out, std::span<const double> dY, std::span<double> dX,
                           std::span<double> dW, std::span<double> db);
void affine_batch_backward_reference(std::span<const double> X, int rows, int in,
                                     std::span<const double> W, int out, std::span<const double> dY,
                                     std::span<double> dX, std::span<double> dW, std::span<double> db);

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Number of threads the parallel kernels may use (wraps omp_set_num_threads).
void set_threads(int n);
int max_threads();

}  // namespace hyco::kernels
