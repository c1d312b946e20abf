#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hyco::nn {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Architecture of the synthetic model.
///
/// Plain nets compose h_k = act(A_k h_{k-1} + b_k) over the hidden widths and
/// finish with a bias-free linear map W_out h_L.
///
/// Residual nets keep a state of width input_dim and apply blocks
/// h_k = W_k act(A_k h_{k-1} + b_k) + h_{k-1}; the output is the leading
/// output_dim components of the final state.
///
/// Inputs are mapped as (x - input_shift) * input_scale before the first layer
/// when the shift/scale vectors are non-empty.
struct MlpArch {
  int input_dim = 2;
  int output_dim = 1;
  std::vector<int> hidden;
  Activation activation = Activation::relu;
  bool residual = false;
  std::vector<double> input_shift, input_scale;

  void validate() const;
  std::size_t parameter_count() const;
  bool operator==(const MlpArch&) const = default;
};

/// Flat parameter vector; layer blocks are laid out in forward order
/// (A_k, b_k[, W_k]) ... [, W_out].
struct MlpParams {
  std::vector<double> values;
};

struct LayerView {
  std::size_t A, b, W;  // offsets into MlpParams::values
  int width;            // hidden width of this layer
  int in;               // input width of A
  int out;              // output width of W (residual) or 0
};

std::vector<LayerView> layer_layout(const MlpArch& arch);
/// Offset and shape of the plain net's output matrix (out x last hidden width).
std::size_t output_offset(const MlpArch& arch);

MlpParams mlp_init(const MlpArch& arch, std::uint64_t seed);

/// inputs: rows x input_dim (row-major); returns rows x output_dim.
std::vector<double> mlp_forward(const MlpParams& theta, const MlpArch& arch, std::span<const double> inputs);

/// Reverse-mode gradient of sum_n <upstream[n], f(inputs[n])> with respect to theta.
std::vector<double> mlp_backward(const MlpParams& theta, const MlpArch& arch, std::span<const double> inputs,
                                 std::span<const double> upstream);

struct AdamState {
  std::vector<double> m, v;
  std::int64_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update in place. A non-finite gradient rejects the
/// update and leaves both theta and state untouched.
void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state, double lr);

void save_checkpoint(std::ostream& os, const MlpArch& arch, const MlpParams& theta);
void load_checkpoint(std::istream& is, MlpArch& arch, MlpParams& theta);

}  // namespace hyco::nn
