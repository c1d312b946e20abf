#include "hyco/nn.hpp"

#include <cmath>
#include <istream>
#include "json.hpp"
#include <ostream>
#include <random>
#include <stdexcept>

#include "hyco/kernels.hpp"

namespace hyco::nn {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

void MlpArch::validate() const {
  if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("MlpArch: dimensions must be >= 1");
  for (int w : hidden)
    if (w < 1) throw std::invalid_argument("MlpArch: hidden widths must be >= 1");
  if (residual && output_dim > input_dim)
    throw std::invalid_argument("MlpArch: residual nets read the output from the input-width state");
  if (!residual && hidden.empty()) throw std::invalid_argument("MlpArch: plain nets need a hidden layer");
  if (!input_shift.empty() && static_cast<int>(input_shift.size()) != input_dim)
    throw std::invalid_argument("MlpArch: input_shift size mismatch");
  if (input_scale.size() != input_shift.size()) throw std::invalid_argument("MlpArch: input_scale size mismatch");
}

std::vector<LayerView> layer_layout(const MlpArch& arch) {
  std::vector<LayerView> layers;
  std::size_t off = 0;
  int prev = arch.input_dim;
  for (int w : arch.hidden) {
    LayerView l{};
    l.width = w;
    l.in = arch.residual ? arch.input_dim : prev;
    l.A = off;
    off += static_cast<std::size_t>(w) * l.in;
    l.b = off;
    off += w;
    if (arch.residual) {
      l.out = arch.input_dim;
      l.W = off;
      off += static_cast<std::size_t>(arch.input_dim) * w;
    }
    layers.push_back(l);
    prev = w;
  }
  return layers;
}

std::size_t output_offset(const MlpArch& arch) {
  const auto layers = layer_layout(arch);
  if (layers.empty()) return 0;
  const auto& l = layers.back();
  return arch.residual ? l.W + static_cast<std::size_t>(l.out) * l.width : l.b + l.width;
}

std::size_t MlpArch::parameter_count() const {
  const std::size_t off = output_offset(*this);
  if (residual) return off;
  return off + static_cast<std::size_t>(output_dim) * hidden.back();
}

MlpParams mlp_init(const MlpArch& arch, std::uint64_t seed) {
  arch.validate();
  MlpParams p{std::vector<double>(arch.parameter_count(), 0.0)};
  std::mt19937_64 rng(seed);
  const double gain = arch.activation == Activation::relu ? 2.0 : 1.0;
  auto fill = [&](std::size_t off, std::size_t count, int fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(gain / fan_in));
    for (std::size_t i = 0; i < count; ++i) p.values[off + i] = dist(rng);
  };
  for (const auto& l : layer_layout(arch)) {
    fill(l.A, static_cast<std::size_t>(l.width) * l.in, l.in);
    if (arch.residual) fill(l.W, static_cast<std::size_t>(l.out) * l.width, l.width);
  }
  if (!arch.residual) fill(output_offset(arch), static_cast<std::size_t>(arch.output_dim) * arch.hidden.back(), arch.hidden.back());
  return p;
}

namespace {

struct Trace {
  std::vector<std::vector<double>> states;  // inputs of each layer (plain) or residual states
  std::vector<std::vector<double>> pre;     // pre-activations
  std::vector<std::vector<double>> act;     // activations
};

std::vector<double> scaled_inputs(const MlpArch& arch, std::span<const double> inputs) {
  std::vector<double> x(inputs.begin(), inputs.end());
  if (arch.input_shift.empty()) return x;
  const int d = arch.input_dim;
  for (std::size_t q = 0; q < x.size(); ++q) x[q] = (x[q] - arch.input_shift[q % d]) * arch.input_scale[q % d];
  return x;
}

void activate(Activation a, std::span<const double> z, std::span<double> out) {
  if (a == Activation::relu)
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] > 0 ? z[i] : 0.0;
  else
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::tanh(z[i]);
}

// Multiplies g by act'(z) in place (using the stored activation for tanh).
void activation_backward(Activation a, std::span<const double> z, std::span<const double> y, std::span<double> g) {
  if (a == Activation::relu)
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = z[i] > 0 ? g[i] : 0.0;
  else
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
}

std::vector<double> forward_trace(const MlpParams& theta, const MlpArch& arch, std::span<const double> inputs,
                                  int rows, Trace* trace) {
  const auto& v = theta.values;
  const auto layers = layer_layout(arch);
  std::vector<double> h = scaled_inputs(arch, inputs);
  for (const auto& l : layers) {
    std::vector<double> z(static_cast<std::size_t>(rows) * l.width), a(z.size());
    kernels::affine_batch(h, rows, l.in, std::span(v).subspan(l.A, static_cast<std::size_t>(l.width) * l.in),
                          std::span(v).subspan(l.b, l.width), l.width, z);
    activate(arch.activation, z, a);
    std::vector<double> next;
    if (arch.residual) {
      next.resize(static_cast<std::size_t>(rows) * l.out);
      kernels::affine_batch(a, rows, l.width, std::span(v).subspan(l.W, static_cast<std::size_t>(l.out) * l.width), {},
                            l.out, next);
      for (std::size_t q = 0; q < next.size(); ++q) next[q] += h[q];
    }
    if (trace) {
      trace->states.push_back(std::move(h));
      trace->pre.push_back(std::move(z));
      if (arch.residual) {
        trace->act.push_back(std::move(a));
        h = std::move(next);
      } else {
        trace->act.push_back(a);
        h = std::move(a);
      }
    } else {
      h = arch.residual ? std::move(next) : std::move(a);
    }
  }
  std::vector<double> out(static_cast<std::size_t>(rows) * arch.output_dim);
  if (arch.residual) {
    const int d = arch.input_dim;
    for (int n = 0; n < rows; ++n)
      for (int c = 0; c < arch.output_dim; ++c) out[static_cast<std::size_t>(n) * arch.output_dim + c] = h[static_cast<std::size_t>(n) * d + c];
  } else {
    const int last = arch.hidden.back();
    kernels::affine_batch(h, rows, last, std::span(v).subspan(output_offset(arch), static_cast<std::size_t>(arch.output_dim) * last), {},
                          arch.output_dim, out);
  }
  if (trace) trace->states.push_back(std::move(h));
  return out;
}

int row_count(const MlpArch& arch, std::span<const double> inputs) {
  if (inputs.size() % arch.input_dim != 0) throw std::invalid_argument("mlp: input size is not a multiple of input_dim");
  return static_cast<int>(inputs.size() / arch.input_dim);
}

}  // namespace

std::vector<double> mlp_forward(const MlpParams& theta, const MlpArch& arch, std::span<const double> inputs) {
  if (theta.values.size() != arch.parameter_count()) throw std::invalid_argument("mlp_forward: parameter shape mismatch");
  return forward_trace(theta, arch, inputs, row_count(arch, inputs), nullptr);
}

std::vector<double> mlp_backward(const MlpParams& theta, const MlpArch& arch, std::span<const double> inputs,
                                 std::span<const double> upstream) {
  if (theta.values.size() != arch.parameter_count()) throw std::invalid_argument("mlp_backward: parameter shape mismatch");
  const int rows = row_count(arch, inputs);
  if (upstream.size() != static_cast<std::size_t>(rows) * arch.output_dim)
    throw std::invalid_argument("mlp_backward: upstream gradient shape mismatch");
  Trace tr;
  forward_trace(theta, arch, inputs, rows, &tr);
  const auto& v = theta.values;
  std::vector<double> grad(v.size(), 0.0);
  const auto layers = layer_layout(arch);
  const auto L = static_cast<int>(layers.size());

  std::vector<double> g;  // gradient w.r.t. the current state / layer output
  if (arch.residual) {
    const int d = arch.input_dim;
    g.assign(static_cast<std::size_t>(rows) * d, 0.0);
    for (int n = 0; n < rows; ++n)
      for (int c = 0; c < arch.output_dim; ++c) g[static_cast<std::size_t>(n) * d + c] = upstream[static_cast<std::size_t>(n) * arch.output_dim + c];
  } else {
    const int last = arch.hidden.back();
    const std::size_t off = output_offset(arch);
    g.assign(static_cast<std::size_t>(rows) * last, 0.0);
    kernels::affine_batch_backward(tr.states[L], rows, last, std::span(v).subspan(off, static_cast<std::size_t>(arch.output_dim) * last),
                                   arch.output_dim, upstream, g,
                                   std::span(grad).subspan(off, static_cast<std::size_t>(arch.output_dim) * last), {});
  }

  for (int k = L - 1; k >= 0; --k) {
    const auto& l = layers[k];
    std::vector<double> gz;
    if (arch.residual) {
      // h_k = W act(z) + h_{k-1}: skip path carries g unchanged.
      std::vector<double> ga(static_cast<std::size_t>(rows) * l.width);
      kernels::affine_batch_backward(tr.act[k], rows, l.width, std::span(v).subspan(l.W, static_cast<std::size_t>(l.out) * l.width), l.out,
                                     g, ga, std::span(grad).subspan(l.W, static_cast<std::size_t>(l.out) * l.width), {});
      gz = std::move(ga);
    } else {
      gz = g;
    }
    activation_backward(arch.activation, tr.pre[k], tr.act[k], gz);
    std::vector<double> gin(k > 0 || arch.residual ? static_cast<std::size_t>(rows) * l.in : 0);
    kernels::affine_batch_backward(tr.states[k], rows, l.in, std::span(v).subspan(l.A, static_cast<std::size_t>(l.width) * l.in), l.width,
                                   gz, gin, std::span(grad).subspan(l.A, static_cast<std::size_t>(l.width) * l.in),
                                   std::span(grad).subspan(l.b, l.width));
    if (arch.residual)
      for (std::size_t q = 0; q < g.size(); ++q) g[q] += gin[q];
    else
      g = std::move(gin);
  }
  return grad;
}

void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& s, double lr) {
  if (theta.size() != grad.size() || s.m.size() != theta.size() || s.v.size() != theta.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  for (double gi : grad)
    if (!std::isfinite(gi)) throw std::domain_error("adam_step: non-finite gradient, update rejected");
  ++s.step;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1 - s.beta1) * grad[i];
    s.v[i] = s.beta2 * s.v[i] + (1 - s.beta2) * grad[i] * grad[i];
    const double mhat = s.m[i] / bc1, vhat = s.v[i] / bc2;
    theta[i] -= lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

void save_checkpoint(std::ostream& os, const MlpArch& arch, const MlpParams& theta) {
  nlohmann::json j;
  j["input_dim"] = arch.input_dim;
  j["output_dim"] = arch.output_dim;
  j["hidden"] = arch.hidden;
  j["activation"] = to_string(arch.activation);
  j["residual"] = arch.residual;
  j["input_shift"] = arch.input_shift;
  j["input_scale"] = arch.input_scale;
  j["params"] = theta.values;
  os << j.dump();
}

void load_checkpoint(std::istream& is, MlpArch& arch, MlpParams& theta) {
  const auto j = nlohmann::json::parse(is);
  MlpArch a;
  a.input_dim = j.at("input_dim");
  a.output_dim = j.at("output_dim");
  a.hidden = j.at("hidden").get<std::vector<int>>();
  a.activation = activation_from_string(j.at("activation"));
  a.residual = j.at("residual");
  a.input_shift = j.at("input_shift").get<std::vector<double>>();
  a.input_scale = j.at("input_scale").get<std::vector<double>>();
  a.validate();
  MlpParams p{j.at("params").get<std::vector<double>>()};
  if (p.values.size() != a.parameter_count()) throw std::invalid_argument("checkpoint: parameter count mismatch");
  arch = std::move(a);
  theta = std::move(p);
}

}  // namespace hyco::nn
