#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csigan/csi_core.hpp"
#include "csigan/dataset_io.hpp"
#include "csigan/errors.hpp"
#include "csigan/metrics.hpp"
#include "csigan/mlp.hpp"
#include "csigan/rng.hpp"

namespace csigan {

// Conditional WGAN-GP over complete CSI tensors.
//
// Generator: [scaled position (2); noise (K)] -> dense stack -> flattened CSI.
// Critic:    flattened CSI -> trunk; [trunk output; scaled per-antenna delay
//            spreads; scaled position] -> fusion head -> score.
//
// Flattened CSI interleaves (re, im) per entry in tensor order, so its width is
// 2 * B * M_r * M_c * N_tap. The CSI itself is not normalized.

struct TrainingConfig {
  double gp_lambda{10.0};
  std::size_t n_critic{5};
  std::size_t batch_size{64};
  double learning_rate{1e-4};
  double beta1{0.0};
  double beta2{0.9};
  double adam_epsilon{1e-8};
  std::uint64_t generator_steps{0}; ///< total; must be set
  std::uint64_t seed{0};
  std::uint64_t checkpoint_every{0}; ///< 0: final checkpoint only
  std::size_t noise_dim{128};
  std::vector<Eigen::Index> generator_hidden{512, 512, 1024, 2048};
  std::vector<Eigen::Index> critic_trunk{160, 100, 50};
  std::vector<Eigen::Index> critic_fusion{20, 10}; ///< followed by the 1-wide linear output
  /// Multiplies every hidden width (rounded, at least 1). 1 reproduces the
  /// reference architecture; smaller values trade capacity for speed.
  double hidden_scale{1.0};
  /// Let the gradient penalty differentiate through the delay-spread side input.
  bool gp_through_delay_spread{true};

  void validate() const {
    if (!(gp_lambda >= 0.0)) throw std::invalid_argument("TrainingConfig: gp_lambda must be >= 0");
    if (n_critic == 0) throw std::invalid_argument("TrainingConfig: n_critic must be >= 1");
    if (batch_size == 0) throw std::invalid_argument("TrainingConfig: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainingConfig: learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
      throw std::invalid_argument("TrainingConfig: Adam betas must lie in [0, 1)");
    if (!(adam_epsilon > 0.0)) throw std::invalid_argument("TrainingConfig: adam_epsilon must be > 0");
    if (generator_steps == 0) throw std::invalid_argument("TrainingConfig: generator_steps must be set");
    if (noise_dim == 0) throw std::invalid_argument("TrainingConfig: noise_dim must be >= 1");
    if (!(hidden_scale > 0.0)) throw std::invalid_argument("TrainingConfig: hidden_scale must be > 0");
    if (critic_trunk.empty()) throw std::invalid_argument("TrainingConfig: critic trunk needs at least one layer");
    for (const auto *ws : {&generator_hidden, &critic_trunk, &critic_fusion})
      for (auto w : *ws)
        if (w < 1) throw std::invalid_argument("TrainingConfig: widths must be >= 1");
  }

  [[nodiscard]] std::vector<Eigen::Index> scaled(const std::vector<Eigen::Index> &widths) const {
    std::vector<Eigen::Index> out;
    for (auto w : widths)
      out.push_back(std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::lround(static_cast<double>(w) * hidden_scale))));
    return out;
  }

  friend bool operator==(const TrainingConfig &, const TrainingConfig &) = default;
};

// ---------------------------------------------------------------------------
// CSI <-> flat real vectors
// ---------------------------------------------------------------------------

inline Eigen::Index flat_width(const ArrayGeometry &g) { return static_cast<Eigen::Index>(2 * g.num_entries()); }

inline Eigen::VectorXd flatten_csi(const CsiTensor &csi) {
  const auto v = csi.values();
  Eigen::VectorXd out(static_cast<Eigen::Index>(2 * v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(2 * i)) = v[i].real();
    out(static_cast<Eigen::Index>(2 * i + 1)) = v[i].imag();
  }
  return out;
}

inline CsiTensor unflatten_csi(const Eigen::Ref<const Eigen::VectorXd> &flat, const ArrayGeometry &g) {
  if (flat.size() != flat_width(g)) throw std::invalid_argument("unflatten_csi: width does not match geometry");
  CsiTensor t(g);
  auto v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = {flat(static_cast<Eigen::Index>(2 * i)), flat(static_cast<Eigen::Index>(2 * i + 1))};
  return t;
}

// ---------------------------------------------------------------------------
// Delay-spread side input: per antenna RMS delay spread in seconds, mapped to
// [-1, 1] with a range fitted on the training set. Differentiable in the CSI.
// ---------------------------------------------------------------------------

class DelaySpreadFeature {
public:
  DelaySpreadFeature() = default;
  DelaySpreadFeature(std::size_t antennas, std::size_t taps, double tap_duration, RangeScaler scaler)
      : antennas_(antennas), taps_(taps), tap_duration_(tap_duration), scaler_(scaler) {}
  DelaySpreadFeature(const ArrayGeometry &g, RangeScaler scaler)
      : DelaySpreadFeature(g.num_antennas(), g.num_taps, g.tap_duration(), scaler) {}

  [[nodiscard]] Eigen::Index width() const { return static_cast<Eigen::Index>(antennas_); }
  [[nodiscard]] Eigen::Index input_width() const { return static_cast<Eigen::Index>(2 * antennas_ * taps_); }
  [[nodiscard]] const RangeScaler &scaler() const { return scaler_; }

  /// Unscaled delay spreads in seconds, antennas x batch.
  [[nodiscard]] Eigen::MatrixXd seconds(const Eigen::MatrixXd &x) const {
    check(x);
    Eigen::MatrixXd out(width(), x.cols());
    for (Eigen::Index n = 0; n < x.cols(); ++n)
      for (std::size_t a = 0; a < antennas_; ++a) out(static_cast<Eigen::Index>(a), n) = moments(x, n, a).spread * tap_duration_;
    return out;
  }

  [[nodiscard]] Eigen::MatrixXd value(const Eigen::MatrixXd &x) const {
    Eigen::MatrixXd s = seconds(x);
    return s.unaryExpr([this](double v) { return scaler_.scale(v); });
  }

  /// Jacobian-vector product along v (same shape as x).
  [[nodiscard]] Eigen::MatrixXd jvp(const Eigen::MatrixXd &x, const Eigen::MatrixXd &v) const {
    check(x);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(width(), x.cols());
    const double k = scaler_.slope() * tap_duration_;
    for (Eigen::Index n = 0; n < x.cols(); ++n) {
      for (std::size_t a = 0; a < antennas_; ++a) {
        const auto m = moments(x, n, a);
        if (m.spread <= 0.0) continue;
        double acc = 0.0;
        for (std::size_t t = 0; t < taps_; ++t) {
          const auto i = row(a, t);
          const double dp = 2.0 * (x(i, n) * v(i, n) + x(i + 1, n) * v(i + 1, n));
          acc += dspread_dpower(m, t) * dp;
        }
        out(static_cast<Eigen::Index>(a), n) = k * acc;
      }
    }
    return out;
  }

  /// Vector-Jacobian product: adjoint (antennas x batch) -> input adjoint.
  [[nodiscard]] Eigen::MatrixXd vjp(const Eigen::MatrixXd &x, const Eigen::MatrixXd &adjoint) const {
    check(x);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    const double k = scaler_.slope() * tap_duration_;
    for (Eigen::Index n = 0; n < x.cols(); ++n) {
      for (std::size_t a = 0; a < antennas_; ++a) {
        const double g = adjoint(static_cast<Eigen::Index>(a), n) * k;
        if (g == 0.0) continue;
        const auto m = moments(x, n, a);
        if (m.spread <= 0.0) continue;
        for (std::size_t t = 0; t < taps_; ++t) {
          const auto i = row(a, t);
          const double d = g * dspread_dpower(m, t) * 2.0;
          out(i, n) += d * x(i, n);
          out(i + 1, n) += d * x(i + 1, n);
        }
      }
    }
    return out;
  }

private:
  struct Moments {
    double power{0.0};
    double mean{0.0};
    double var{0.0};
    double spread{0.0};
  };

  [[nodiscard]] Eigen::Index row(std::size_t a, std::size_t t) const {
    return static_cast<Eigen::Index>(2 * (a * taps_ + t));
  }

  void check(const Eigen::MatrixXd &x) const {
    if (x.rows() != input_width()) throw std::invalid_argument("DelaySpreadFeature: input width mismatch");
  }

  [[nodiscard]] Moments moments(const Eigen::MatrixXd &x, Eigen::Index n, std::size_t a) const {
    Moments m;
    double weighted = 0.0;
    for (std::size_t t = 0; t < taps_; ++t) {
      const auto i = row(a, t);
      const double p = x(i, n) * x(i, n) + x(i + 1, n) * x(i + 1, n);
      m.power += p;
      weighted += static_cast<double>(t + 1) * p;
    }
    if (!(m.power > 0.0)) return m;
    m.mean = weighted / m.power;
    for (std::size_t t = 0; t < taps_; ++t) {
      const auto i = row(a, t);
      const double p = x(i, n) * x(i, n) + x(i + 1, n) * x(i + 1, n);
      const double d = static_cast<double>(t + 1) - m.mean;
      m.var += d * d * p;
    }
    m.var /= m.power;
    m.spread = std::sqrt(m.var);
    return m;
  }

  // d spread / d |h_t|^2 = ((t - mean)^2 - var) / (2 * spread * power)
  [[nodiscard]] static double dspread_dpower(const Moments &m, std::size_t t) {
    const double d = static_cast<double>(t + 1) - m.mean;
    return (d * d - m.var) / (2.0 * m.spread * m.power);
  }

  std::size_t antennas_{0};
  std::size_t taps_{0};
  double tap_duration_{1.0};
  RangeScaler scaler_{};
};

// ---------------------------------------------------------------------------
// Critic
// ---------------------------------------------------------------------------

struct CriticParams {
  MlpParams trunk;
  MlpParams head;

  [[nodiscard]] CriticParams zeros_like() const { return {trunk.zeros_like(), head.zeros_like()}; }
  CriticParams &operator+=(const CriticParams &o) {
    trunk += o.trunk;
    head += o.head;
    return *this;
  }
  friend bool operator==(const CriticParams &, const CriticParams &) = default;
};

struct CriticEval {
  Eigen::MatrixXd scores; ///< 1 x batch
  Eigen::MatrixXd ds;     ///< scaled delay spreads, antennas x batch
  MlpForward trunk;
  MlpForward head;
};

inline CriticEval critic_forward(const CriticParams &critic, const DelaySpreadFeature &ds, const Eigen::MatrixXd &csi,
                                 const Eigen::MatrixXd &positions) {
  if (positions.rows() != 2 || positions.cols() != csi.cols())
    throw std::invalid_argument("critic_forward: positions must be 2 x batch");
  CriticEval e;
  e.trunk = mlp_forward(critic.trunk, csi);
  e.ds = ds.value(csi);
  const Eigen::Index t = e.trunk.output.rows(), a = e.ds.rows();
  Eigen::MatrixXd fused(t + a + 2, csi.cols());
  fused.topRows(t) = e.trunk.output;
  fused.middleRows(t, a) = e.ds;
  fused.bottomRows(2) = positions;
  e.head = mlp_forward(critic.head, fused);
  e.scores = e.head.output;
  return e;
}

struct CriticBackward {
  Eigen::MatrixXd csi_adjoint; ///< includes the delay-spread path when requested
  MlpBackward trunk;
  MlpBackward head;
};

inline CriticBackward critic_backward(const CriticParams &critic, const DelaySpreadFeature &ds, const CriticEval &e,
                                      const Eigen::MatrixXd &csi, const Eigen::MatrixXd &score_adjoint,
                                      bool through_delay_spread) {
  CriticBackward b;
  b.head = mlp_backward(critic.head, e.head.cache, score_adjoint);
  const Eigen::Index t = e.trunk.output.rows(), a = e.ds.rows();
  b.trunk = mlp_backward(critic.trunk, e.trunk.cache, b.head.input_adjoint.topRows(t));
  b.csi_adjoint = b.trunk.input_adjoint;
  if (through_delay_spread) b.csi_adjoint += ds.vjp(csi, b.head.input_adjoint.middleRows(t, a));
  return b;
}

inline void accumulate_critic_grads(CriticParams &grads, const CriticEval &e, const CriticBackward &b) {
  accumulate_param_grads(grads.trunk, b.trunk.deltas, e.trunk.cache.inputs);
  accumulate_param_grads(grads.head, b.head.deltas, e.head.cache.inputs);
}

// ---------------------------------------------------------------------------
// Gradient penalty
// ---------------------------------------------------------------------------

struct PenaltyResult {
  Eigen::VectorXd penalties;  ///< (||grad_x C|| - 1)^2 per sample
  Eigen::VectorXd grad_norms; ///< ||grad_x C|| per sample
  CriticParams grads;         ///< d(weight * sum_n penalty_n) / d params
};

/// Penalty at x = eps * real + (1 - eps) * fake, per column. Real and fake
/// share the condition, so only the CSI is interpolated; the delay-spread side
/// input is recomputed from the interpolated CSI.
///
/// Parameter gradients use double backpropagation with ReLU patterns frozen at
/// the forward pass: for a piecewise-linear critic, v . grad_x C equals the
/// directional derivative of C along v, a bias-free linear network in the
/// parameters whose reverse pass reuses the ordinary backward deltas.
inline PenaltyResult gradient_penalty(const CriticParams &critic, const DelaySpreadFeature &ds,
                                      const Eigen::MatrixXd &real, const Eigen::MatrixXd &fake,
                                      const Eigen::MatrixXd &positions, const Eigen::VectorXd &eps, double weight,
                                      bool through_delay_spread) {
  if (real.rows() != fake.rows() || real.cols() != fake.cols() || eps.size() != real.cols())
    throw std::invalid_argument("gradient_penalty: real, fake and eps must agree in shape");
  for (Eigen::Index n = 0; n < eps.size(); ++n)
    if (!(eps(n) >= 0.0 && eps(n) <= 1.0)) throw std::invalid_argument("gradient_penalty: eps must lie in [0, 1]");
  const Eigen::Index batch = real.cols();
  const Eigen::MatrixXd mixed = real * eps.asDiagonal() + fake * (Eigen::VectorXd::Ones(batch) - eps).asDiagonal();

  const auto e = critic_forward(critic, ds, mixed, positions);
  const auto b = critic_backward(critic, ds, e, mixed, Eigen::MatrixXd::Ones(1, batch), through_delay_spread);
  const Eigen::MatrixXd &g = b.csi_adjoint;

  PenaltyResult out;
  out.grad_norms = g.colwise().norm().transpose();
  out.penalties = (out.grad_norms.array() - 1.0).square().matrix();

  // v_n = weight * d penalty_n / d g_n
  Eigen::MatrixXd v(g.rows(), batch);
  for (Eigen::Index n = 0; n < batch; ++n) {
    const double norm = out.grad_norms(n);
    v.col(n) = norm > 0.0 ? Eigen::VectorXd(g.col(n) * (weight * 2.0 * (norm - 1.0) / norm))
                          : Eigen::VectorXd::Zero(g.rows());
  }

  const auto trunk_t = mlp_tangent(critic.trunk, e.trunk.cache, v);
  const Eigen::Index t = e.trunk.output.rows(), a = e.ds.rows();
  Eigen::MatrixXd fused_t = Eigen::MatrixXd::Zero(t + a + 2, batch);
  fused_t.topRows(t) = trunk_t.output;
  if (through_delay_spread) fused_t.middleRows(t, a) = ds.jvp(mixed, v);
  const auto head_t = mlp_tangent(critic.head, e.head.cache, fused_t);

  out.grads = critic.zeros_like();
  accumulate_param_grads(out.grads.trunk, b.trunk.deltas, trunk_t.inputs, false);
  accumulate_param_grads(out.grads.head, b.head.deltas, head_t.inputs, false);
  return out;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct CriticLoss {
  double loss{0.0};
  double real_score{0.0};
  double fake_score{0.0};
  double penalty{0.0};
  CriticParams grads;
};

/// mean C(fake) - mean C(real) + lambda * mean penalty, gradients w.r.t. the
/// critic only. `conditions` are scaled positions (2 x batch) shared by the
/// real samples and the generator input.
inline CriticLoss critic_loss(const CriticParams &critic, const MlpParams &generator, const DelaySpreadFeature &ds,
                              const Eigen::MatrixXd &real, const Eigen::MatrixXd &conditions,
                              const Eigen::MatrixXd &noise, const Eigen::VectorXd &eps, double lambda,
                              bool gp_through_delay_spread) {
  const Eigen::Index batch = real.cols();
  if (batch == 0) throw std::invalid_argument("critic_loss: empty batch");
  if (conditions.cols() != batch || noise.cols() != batch)
    throw std::invalid_argument("critic_loss: batch sizes disagree");
  Eigen::MatrixXd gen_in(conditions.rows() + noise.rows(), batch);
  gen_in << conditions, noise;
  const Eigen::MatrixXd fake = mlp_forward(generator, gen_in).output;

  const double inv = 1.0 / static_cast<double>(batch);
  CriticLoss out;
  out.grads = critic.zeros_like();

  const auto er = critic_forward(critic, ds, real, conditions);
  const auto br = critic_backward(critic, ds, er, real, Eigen::MatrixXd::Constant(1, batch, -inv), false);
  accumulate_critic_grads(out.grads, er, br);
  out.real_score = er.scores.mean();

  const auto ef = critic_forward(critic, ds, fake, conditions);
  const auto bf = critic_backward(critic, ds, ef, fake, Eigen::MatrixXd::Constant(1, batch, inv), false);
  accumulate_critic_grads(out.grads, ef, bf);
  out.fake_score = ef.scores.mean();

  out.loss = out.fake_score - out.real_score;
  if (lambda > 0.0) {
    auto gp = gradient_penalty(critic, ds, real, fake, conditions, eps, lambda * inv, gp_through_delay_spread);
    out.penalty = gp.penalties.mean();
    out.loss += lambda * out.penalty;
    out.grads += gp.grads;
  }
  return out;
}

struct GeneratorLoss {
  double loss{0.0};
  double fake_score{0.0};
  MlpParams grads;
};

/// -mean C(G(condition, noise)); gradients w.r.t. the generator, including the
/// path through the delay-spread side input.
inline GeneratorLoss generator_loss(const CriticParams &critic, const MlpParams &generator, const DelaySpreadFeature &ds,
                                    const Eigen::MatrixXd &conditions, const Eigen::MatrixXd &noise) {
  const Eigen::Index batch = conditions.cols();
  if (batch == 0) throw std::invalid_argument("generator_loss: empty batch");
  if (noise.cols() != batch) throw std::invalid_argument("generator_loss: batch sizes disagree");
  Eigen::MatrixXd gen_in(conditions.rows() + noise.rows(), batch);
  gen_in << conditions, noise;
  const auto gf = mlp_forward(generator, gen_in);
  const auto e = critic_forward(critic, ds, gf.output, conditions);
  const double inv = 1.0 / static_cast<double>(batch);
  const auto b = critic_backward(critic, ds, e, gf.output, Eigen::MatrixXd::Constant(1, batch, -inv), true);
  GeneratorLoss out;
  out.fake_score = e.scores.mean();
  out.loss = -out.fake_score;
  out.grads = grad_params(generator, gf.cache, b.csi_adjoint);
  return out;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  std::vector<MlpParams> m;
  std::vector<MlpParams> v;
  std::uint64_t t{0};

  static AdamState for_params(const std::vector<const MlpParams *> &params) {
    AdamState s;
    for (const auto *p : params) {
      s.m.push_back(p->zeros_like());
      s.v.push_back(p->zeros_like());
    }
    return s;
  }

  friend bool operator==(const AdamState &, const AdamState &) = default;
};

inline void adam_step(const std::vector<MlpParams *> &params, const std::vector<const MlpParams *> &grads,
                      AdamState &state, double lr, double beta1, double beta2, double eps) {
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  auto update = [&](auto &theta, const auto &g, auto &m, auto &v) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i]->layers.size(); ++k) {
      auto &layer = params[i]->layers[k];
      const auto &gl = grads[i]->layers[k];
      update(layer.weight, gl.weight, state.m[i].layers[k].weight, state.v[i].layers[k].weight);
      update(layer.bias, gl.bias, state.m[i].layers[k].bias, state.v[i].layers[k].bias);
    }
  }
}

// ---------------------------------------------------------------------------
// Models and training state
// ---------------------------------------------------------------------------

inline MlpParams make_generator(const ArrayGeometry &g, const TrainingConfig &cfg, Rng &rng) {
  std::vector<Eigen::Index> widths{static_cast<Eigen::Index>(2 + cfg.noise_dim)};
  for (auto w : cfg.scaled(cfg.generator_hidden)) widths.push_back(w);
  widths.push_back(flat_width(g));
  std::vector<Activation> acts(widths.size() - 1, Activation::relu);
  acts.back() = Activation::linear;
  return init_mlp(widths, acts, rng);
}

inline CriticParams make_critic(const ArrayGeometry &g, const TrainingConfig &cfg, Rng &rng) {
  std::vector<Eigen::Index> trunk{flat_width(g)};
  for (auto w : cfg.scaled(cfg.critic_trunk)) trunk.push_back(w);
  std::vector<Eigen::Index> head{trunk.back() + static_cast<Eigen::Index>(g.num_antennas()) + 2};
  for (auto w : cfg.scaled(cfg.critic_fusion)) head.push_back(w);
  head.push_back(1);
  std::vector<Activation> head_acts(head.size() - 1, Activation::relu);
  head_acts.back() = Activation::linear;
  auto t = init_mlp(trunk, std::vector<Activation>(trunk.size() - 1, Activation::relu), rng);
  auto h = init_mlp(head, head_acts, rng);
  return {std::move(t), std::move(h)};
}

/// What sampling needs from a trained model.
struct ConditionalGenerator {
  MlpParams network;
  ConditionScaler condition_scaler;
  ArrayGeometry geometry;
  std::size_t noise_dim{0};
};

struct Checkpoint {
  TrainingConfig config;
  ArrayGeometry geometry;
  ConditionScaler condition_scaler;
  RangeScaler delay_spread_scaler; ///< seconds -> [-1, 1]
  MlpParams generator;
  CriticParams critic;
  AdamState generator_opt;
  AdamState critic_opt;
  std::uint64_t step{0};
  std::string rng_state;

  [[nodiscard]] ConditionalGenerator conditional_generator() const {
    return {generator, condition_scaler, geometry, config.noise_dim};
  }
  [[nodiscard]] DelaySpreadFeature delay_spread_feature() const { return {geometry, delay_spread_scaler}; }

  friend bool operator==(const Checkpoint &, const Checkpoint &) = default;
};

struct TrainLogRow {
  std::uint64_t step{0};
  double critic_loss{0.0};
  double gen_loss{0.0};
  double real_score{0.0};
  double fake_score{0.0};
};

struct TrainCallbacks {
  std::function<void(const TrainLogRow &)> on_log;
  std::function<void(const Checkpoint &)> on_checkpoint;
};

/// Thrown when a loss turns non-finite; carries the state at the failing step.
class TrainingAbort : public NumericalAbort {
public:
  TrainingAbort(const std::string &what, Checkpoint diagnostic)
      : NumericalAbort(what), diagnostic_(std::move(diagnostic)) {}
  [[nodiscard]] const Checkpoint &diagnostic() const { return diagnostic_; }

private:
  Checkpoint diagnostic_;
};

/// Per-antenna delay spreads (seconds) of every training datapoint.
inline std::vector<double> training_delay_spreads(const CsiDataset &train) {
  std::vector<double> out;
  for (const auto &p : train.points) {
    const auto m = rms_delay_spread(p.csi, train.geometry);
    out.insert(out.end(), m.per_antenna.begin(), m.per_antenna.end());
  }
  return out;
}

/// Fits both scalers on the training set and draws initial weights.
inline Checkpoint init_training(const CsiDataset &train, const TrainingConfig &config) {
  config.validate();
  train.validate();
  if (train.empty()) throw std::invalid_argument("train: empty training set");
  Checkpoint c;
  c.config = config;
  c.geometry = train.geometry;
  c.condition_scaler = fit_condition_scaler(train);
  const auto spreads = training_delay_spreads(train);
  try {
    c.delay_spread_scaler = fit_range_scaler(spreads);
  } catch (const std::invalid_argument &) {
    throw std::invalid_argument("train: training delay spreads have zero range");
  }
  Rng rng(mix64(config.seed));
  c.generator = make_generator(c.geometry, config, rng);
  c.critic = make_critic(c.geometry, config, rng);
  c.generator_opt = AdamState::for_params({&c.generator});
  c.critic_opt = AdamState::for_params({&c.critic.trunk, &c.critic.head});
  c.rng_state = save_rng_state(rng);
  return c;
}

/// Runs generator steps until state.step == until_step. The result depends
/// only on the dataset, the state and until_step.
inline void train_steps(Checkpoint &state, const CsiDataset &train, std::uint64_t until_step,
                        const TrainCallbacks &callbacks = {}) {
  const auto &cfg = state.config;
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("train: empty training set");
  if (!train.geometry.same_shape(state.geometry)) throw std::invalid_argument("train: dataset geometry differs from model");

  const auto L = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd real_all(flat_width(state.geometry), L);
  Eigen::MatrixXd cond_all(2, L);
  for (Eigen::Index l = 0; l < L; ++l) {
    const auto &p = train.points[static_cast<std::size_t>(l)];
    real_all.col(l) = flatten_csi(p.csi);
    const Vec2 s = state.condition_scaler.scale(p.position);
    cond_all(0, l) = s.x;
    cond_all(1, l) = s.y;
  }
  const auto ds = state.delay_spread_feature();
  const auto batch = static_cast<Eigen::Index>(cfg.batch_size);
  const auto K = static_cast<Eigen::Index>(cfg.noise_dim);

  Rng rng = load_rng_state(state.rng_state);
  std::uniform_int_distribution<Eigen::Index> pick(0, L - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto draw_noise = [&](Eigen::MatrixXd &noise) {
    std::normal_distribution<double> normal(0.0, 1.0);
    noise.resize(K, batch);
    for (Eigen::Index n = 0; n < batch; ++n)
      for (Eigen::Index k = 0; k < K; ++k) noise(k, n) = normal(rng);
  };

  Eigen::MatrixXd real(real_all.rows(), batch), cond(2, batch), noise;
  Eigen::VectorXd eps(batch);
  while (state.step < until_step) {
    CriticLoss closs;
    for (std::size_t c = 0; c < cfg.n_critic; ++c) {
      for (Eigen::Index n = 0; n < batch; ++n) {
        const auto l = pick(rng);
        real.col(n) = real_all.col(l);
        cond.col(n) = cond_all.col(l);
      }
      draw_noise(noise);
      for (Eigen::Index n = 0; n < batch; ++n) eps(n) = unit(rng);
      closs = critic_loss(state.critic, state.generator, ds, real, cond, noise, eps, cfg.gp_lambda,
                          cfg.gp_through_delay_spread);
      if (!std::isfinite(closs.loss)) {
        state.rng_state = save_rng_state(rng);
        throw TrainingAbort("train: non-finite critic loss at step " + std::to_string(state.step + 1), state);
      }
      adam_step({&state.critic.trunk, &state.critic.head}, {&closs.grads.trunk, &closs.grads.head}, state.critic_opt,
                cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon);
    }

    for (Eigen::Index n = 0; n < batch; ++n) cond.col(n) = cond_all.col(pick(rng));
    draw_noise(noise);
    const auto gloss = generator_loss(state.critic, state.generator, ds, cond, noise);
    if (!std::isfinite(gloss.loss)) {
      state.rng_state = save_rng_state(rng);
      throw TrainingAbort("train: non-finite generator loss at step " + std::to_string(state.step + 1), state);
    }
    adam_step({&state.generator}, {&gloss.grads}, state.generator_opt, cfg.learning_rate, cfg.beta1, cfg.beta2,
              cfg.adam_epsilon);
    ++state.step;

    if (callbacks.on_log) callbacks.on_log({state.step, closs.loss, gloss.loss, closs.real_score, closs.fake_score});
    if (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0 && callbacks.on_checkpoint) {
      state.rng_state = save_rng_state(rng);
      callbacks.on_checkpoint(state);
    }
  }
  state.rng_state = save_rng_state(rng);
}

inline Checkpoint train(const CsiDataset &train_set, const TrainingConfig &config, const TrainCallbacks &callbacks = {}) {
  auto state = init_training(train_set, config);
  train_steps(state, train_set, config.generator_steps, callbacks);
  return state;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace detail {

inline CsiDataset run_generator(const ConditionalGenerator &gen, const std::vector<Vec2> &positions,
                                const std::function<void(std::size_t, Eigen::Ref<Eigen::VectorXd>)> &fill_noise) {
  gen.network.validate();
  const auto K = static_cast<Eigen::Index>(gen.noise_dim);
  if (gen.network.in_width() != 2 + K || gen.network.out_width() != flat_width(gen.geometry))
    throw std::invalid_argument("sample: generator shape does not match geometry and noise dimension");
  CsiDataset out;
  out.geometry = gen.geometry;
  out.points.reserve(positions.size());
  constexpr std::size_t chunk = 256;
  for (std::size_t start = 0; start < positions.size(); start += chunk) {
    const std::size_t n = std::min(chunk, positions.size() - start);
    Eigen::MatrixXd in(2 + K, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const Vec2 s = gen.condition_scaler.scale(positions[start + i]);
      in(0, col) = s.x;
      in(1, col) = s.y;
      Eigen::VectorXd noise(K);
      fill_noise(start + i, noise);
      in.block(2, col, K, 1) = noise;
    }
    const Eigen::MatrixXd y = mlp_forward(gen.network, in).output;
    for (std::size_t i = 0; i < n; ++i)
      out.points.push_back({unflatten_csi(y.col(static_cast<Eigen::Index>(i)), gen.geometry), positions[start + i]});
  }
  return out;
}

} // namespace detail

/// One noise vector shared by every condition.
inline CsiDataset sample_fixed(const ConditionalGenerator &gen, const std::vector<Vec2> &positions, std::uint64_t seed) {
  Rng rng(mix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd shared(static_cast<Eigen::Index>(gen.noise_dim));
  for (Eigen::Index k = 0; k < shared.size(); ++k) shared(k) = normal(rng);
  return detail::run_generator(gen, positions, [&](std::size_t, Eigen::Ref<Eigen::VectorXd> n) { n = shared; });
}

/// Independent noise per condition, drawn from stream (seed, index).
inline CsiDataset sample_variable(const ConditionalGenerator &gen, const std::vector<Vec2> &positions,
                                  std::uint64_t seed) {
  return detail::run_generator(gen, positions, [&](std::size_t l, Eigen::Ref<Eigen::VectorXd> n) {
    auto rng = stream_rng(seed, l);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index k = 0; k < n.size(); ++k) n(k) = normal(rng);
  });
}

inline std::vector<Vec2> positions_of(const CsiDataset &ds) {
  std::vector<Vec2> out;
  out.reserve(ds.size());
  for (const auto &p : ds.points) out.push_back(p.position);
  return out;
}

} // namespace csigan
