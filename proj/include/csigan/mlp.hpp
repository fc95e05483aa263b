#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csigan/rng.hpp"

namespace csigan {

// Dense feed-forward networks evaluated on batches: every matrix holds one
// sample per column.

enum class Activation : std::uint8_t { relu = 0, linear = 1 };

struct DenseLayer {
  Eigen::MatrixXd weight; ///< out x in
  Eigen::VectorXd bias;   ///< out
  Activation activation{Activation::relu};

  [[nodiscard]] Eigen::Index in() const { return weight.cols(); }
  [[nodiscard]] Eigen::Index out() const { return weight.rows(); }
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  [[nodiscard]] Eigen::Index in_width() const { return layers.empty() ? 0 : layers.front().in(); }
  [[nodiscard]] Eigen::Index out_width() const { return layers.empty() ? 0 : layers.back().out(); }

  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto &l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  void validate() const {
    if (layers.empty()) throw std::invalid_argument("MlpParams: no layers");
    for (std::size_t k = 0; k < layers.size(); ++k) {
      if (layers[k].bias.size() != layers[k].out()) throw std::invalid_argument("MlpParams: bias width mismatch");
      if (k > 0 && layers[k].in() != layers[k - 1].out())
        throw std::invalid_argument("MlpParams: layer " + std::to_string(k) + " does not chain");
    }
  }

  /// Same shapes, all zeros; used for gradients and optimizer moments.
  [[nodiscard]] MlpParams zeros_like() const {
    MlpParams z;
    for (const auto &l : layers)
      z.layers.push_back({Eigen::MatrixXd::Zero(l.out(), l.in()), Eigen::VectorXd::Zero(l.out()), l.activation});
    return z;
  }

  MlpParams &operator+=(const MlpParams &o) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
      layers[k].weight += o.layers[k].weight;
      layers[k].bias += o.layers[k].bias;
    }
    return *this;
  }

  friend bool operator==(const MlpParams &a, const MlpParams &b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t k = 0; k < a.layers.size(); ++k) {
      const auto &x = a.layers[k];
      const auto &y = b.layers[k];
      if (x.activation != y.activation || x.weight.rows() != y.weight.rows() || x.weight.cols() != y.weight.cols() ||
          x.weight != y.weight || x.bias != y.bias)
        return false;
    }
    return true;
  }
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
/// `widths` lists the input width followed by every layer's output width.
inline MlpParams init_mlp(const std::vector<Eigen::Index> &widths, const std::vector<Activation> &activations, Rng &rng) {
  if (widths.size() < 2 || activations.size() != widths.size() - 1)
    throw std::invalid_argument("init_mlp: need one activation per layer");
  MlpParams p;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const Eigen::Index in = widths[k], out = widths[k + 1];
    if (in < 1 || out < 1) throw std::invalid_argument("init_mlp: widths must be >= 1");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out), activations[k]};
    for (Eigen::Index c = 0; c < in; ++c)
      for (Eigen::Index r = 0; r < out; ++r) layer.weight(r, c) = u(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

/// Everything the backward and tangent passes need from a forward pass.
struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs; ///< input of layer k
  std::vector<Eigen::MatrixXd> pre;    ///< pre-activation of layer k

  [[nodiscard]] bool empty() const { return inputs.empty(); }
  [[nodiscard]] Eigen::Index batch() const { return inputs.empty() ? 0 : inputs.front().cols(); }
};

struct MlpForward {
  Eigen::MatrixXd output;
  MlpCache cache;
};

namespace detail {

inline void apply_activation(Eigen::MatrixXd &z, Activation a) {
  if (a == Activation::relu) z = z.cwiseMax(0.0);
}

/// d act / d pre with the ReLU derivative at exactly 0 taken as 0.
inline void mask_by_activation(Eigen::MatrixXd &adj, const Eigen::MatrixXd &pre, Activation a) {
  if (a == Activation::relu) adj = (pre.array() > 0.0).select(adj, 0.0);
}

inline void check_cache(const MlpParams &p, const MlpCache &cache) {
  if (cache.empty() || cache.inputs.size() != p.layers.size() || cache.pre.size() != p.layers.size())
    throw std::logic_error("mlp: missing or mismatched forward cache");
}

} // namespace detail

inline MlpForward mlp_forward(const MlpParams &p, const Eigen::MatrixXd &input) {
  if (p.layers.empty()) throw std::invalid_argument("mlp_forward: no layers");
  if (input.rows() != p.in_width())
    throw std::invalid_argument("mlp_forward: input width " + std::to_string(input.rows()) + " != " +
                                std::to_string(p.in_width()));
  MlpForward f;
  f.cache.inputs.reserve(p.layers.size());
  f.cache.pre.reserve(p.layers.size());
  Eigen::MatrixXd a = input;
  for (const auto &layer : p.layers) {
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    f.cache.inputs.push_back(std::move(a));
    f.cache.pre.push_back(z);
    detail::apply_activation(z, layer.activation);
    a = std::move(z);
  }
  f.output = std::move(a);
  return f;
}

struct MlpBackward {
  Eigen::MatrixXd input_adjoint;
  std::vector<Eigen::MatrixXd> deltas; ///< adjoint of layer k's pre-activation
};

/// Reverse pass for an output adjoint of shape out_width x batch.
inline MlpBackward mlp_backward(const MlpParams &p, const MlpCache &cache, const Eigen::MatrixXd &output_adjoint) {
  detail::check_cache(p, cache);
  if (output_adjoint.rows() != p.out_width() || output_adjoint.cols() != cache.batch())
    throw std::invalid_argument("mlp_backward: adjoint shape mismatch");
  MlpBackward b;
  b.deltas.resize(p.layers.size());
  Eigen::MatrixXd adj = output_adjoint;
  for (std::size_t k = p.layers.size(); k-- > 0;) {
    detail::mask_by_activation(adj, cache.pre[k], p.layers[k].activation);
    Eigen::MatrixXd next = p.layers[k].weight.transpose() * adj;
    b.deltas[k] = std::move(adj);
    adj = std::move(next);
  }
  b.input_adjoint = std::move(adj);
  return b;
}

/// grads += (sum over the batch) delta_k * input_k^T, and bias grads += row sums.
inline void accumulate_param_grads(MlpParams &grads, const std::vector<Eigen::MatrixXd> &deltas,
                                   const std::vector<Eigen::MatrixXd> &layer_inputs, bool with_bias = true) {
  for (std::size_t k = 0; k < grads.layers.size(); ++k) {
    grads.layers[k].weight.noalias() += deltas[k] * layer_inputs[k].transpose();
    if (with_bias) grads.layers[k].bias += deltas[k].rowwise().sum();
  }
}

/// Parameter gradient of sum(output_adjoint .* output).
inline MlpParams grad_params(const MlpParams &p, const MlpCache &cache, const Eigen::MatrixXd &output_adjoint) {
  const auto b = mlp_backward(p, cache, output_adjoint);
  auto g = p.zeros_like();
  accumulate_param_grads(g, b.deltas, cache.inputs);
  return g;
}

/// Input gradient of sum(output_adjoint .* output).
inline Eigen::MatrixXd grad_input(const MlpParams &p, const MlpCache &cache, const Eigen::MatrixXd &output_adjoint) {
  return mlp_backward(p, cache, output_adjoint).input_adjoint;
}

struct MlpTangent {
  Eigen::MatrixXd output;
  std::vector<Eigen::MatrixXd> inputs; ///< tangent of layer k's input
};

/// Directional derivative of the network along `direction` with every ReLU
/// pattern frozen at the cached forward pass. Biases drop out.
inline MlpTangent mlp_tangent(const MlpParams &p, const MlpCache &cache, const Eigen::MatrixXd &direction) {
  detail::check_cache(p, cache);
  if (direction.rows() != p.in_width() || direction.cols() != cache.batch())
    throw std::invalid_argument("mlp_tangent: direction shape mismatch");
  MlpTangent t;
  t.inputs.reserve(p.layers.size());
  Eigen::MatrixXd a = direction;
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    Eigen::MatrixXd z = p.layers[k].weight * a;
    detail::mask_by_activation(z, cache.pre[k], p.layers[k].activation);
    t.inputs.push_back(std::move(a));
    a = std::move(z);
  }
  t.output = std::move(a);
  return t;
}

} // namespace csigan
