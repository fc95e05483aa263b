#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "csigan/config.hpp"
#include "csigan/detail/binary.hpp"
#include "csigan/errors.hpp"
#include "csigan/wgan.hpp"

namespace csigan {

// WGCK checkpoint, little-endian:
//   "WGCK" u16 version
//   str   training config (key = value text)
//   u32 B, M_r, M_c, N_tap; f64 carrier, bandwidth
//   f64 x.lo, x.hi, y.lo, y.hi          condition scaler
//   f64 lo, hi                          delay-spread scaler (seconds)
//   u64 step
//   net generator, net critic trunk, net critic head
//   net m, net v, u64 t                 Adam, generator
//   net m, net v, net m, net v, u64 t   Adam, critic (trunk then head)
//   str rng state
// where net = u32 layer count, then per layer
//   u32 out, u32 in, u8 activation, f64 weight[out*in] row-major, f64 bias[out]
// and str = u32 length + bytes. Nothing may follow the rng state.

inline constexpr std::string_view wgck_magic = "WGCK";
inline constexpr std::uint16_t wgck_version = 1;

namespace detail {

inline void write_mlp(ByteWriter &w, const MlpParams &p) {
  w.u32(static_cast<std::uint32_t>(p.layers.size()));
  for (const auto &l : p.layers) {
    w.u32(static_cast<std::uint32_t>(l.out()));
    w.u32(static_cast<std::uint32_t>(l.in()));
    w.u8(static_cast<std::uint8_t>(l.activation));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.f64(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f64(l.bias(r));
  }
}

inline MlpParams read_mlp(ByteReader &r) {
  MlpParams p;
  const auto n = r.u32();
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint64_t out = r.u32();
    const std::uint64_t in = r.u32();
    const auto act = r.u8();
    if (act > static_cast<std::uint8_t>(Activation::linear))
      throw FormatError(FormatErrc::malformed, "unknown activation code " + std::to_string(act));
    if (out == 0 || in == 0) throw FormatError(FormatErrc::malformed, "zero-width layer");
    r.need(static_cast<std::size_t>((out * in + out) * 8));
    DenseLayer l{Eigen::MatrixXd(out, in), Eigen::VectorXd(out), static_cast<Activation>(act)};
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = r.f64();
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = r.f64();
    p.layers.push_back(std::move(l));
  }
  try {
    p.validate();
  } catch (const std::invalid_argument &e) {
    throw FormatError(FormatErrc::malformed, e.what());
  }
  return p;
}

inline void require_same_shape(const MlpParams &a, const MlpParams &b, const char *what) {
  bool ok = a.layers.size() == b.layers.size();
  for (std::size_t k = 0; ok && k < a.layers.size(); ++k)
    ok = a.layers[k].out() == b.layers[k].out() && a.layers[k].in() == b.layers[k].in();
  if (!ok) throw FormatError(FormatErrc::malformed, std::string(what) + " does not match the network shape");
}

} // namespace detail

inline std::vector<char> serialize_checkpoint(const Checkpoint &c) {
  detail::ByteWriter w;
  w.bytes(wgck_magic);
  w.u16(wgck_version);
  w.str(training_config_text(c.config));
  const auto &g = c.geometry;
  w.u32(static_cast<std::uint32_t>(g.num_arrays));
  w.u32(static_cast<std::uint32_t>(g.rows));
  w.u32(static_cast<std::uint32_t>(g.cols));
  w.u32(static_cast<std::uint32_t>(g.num_taps));
  w.f64(g.carrier_frequency);
  w.f64(g.bandwidth);
  w.f64(c.condition_scaler.x.lo);
  w.f64(c.condition_scaler.x.hi);
  w.f64(c.condition_scaler.y.lo);
  w.f64(c.condition_scaler.y.hi);
  w.f64(c.delay_spread_scaler.lo);
  w.f64(c.delay_spread_scaler.hi);
  w.u64(c.step);
  detail::write_mlp(w, c.generator);
  detail::write_mlp(w, c.critic.trunk);
  detail::write_mlp(w, c.critic.head);
  for (const auto *opt : {&c.generator_opt, &c.critic_opt}) {
    for (std::size_t i = 0; i < opt->m.size(); ++i) {
      detail::write_mlp(w, opt->m[i]);
      detail::write_mlp(w, opt->v[i]);
    }
    w.u64(opt->t);
  }
  w.str(c.rng_state);
  return w.buffer();
}

inline void save_checkpoint(const Checkpoint &c, const std::string &path) {
  detail::ByteWriter w;
  const auto bytes = serialize_checkpoint(c);
  w.bytes({bytes.data(), bytes.size()});
  w.write_file(path);
}

inline Checkpoint deserialize_checkpoint(std::vector<char> data, const std::string &origin = "checkpoint") {
  detail::ByteReader r(std::move(data));
  if (r.remaining() < 4 || r.bytes(4) != wgck_magic)
    throw FormatError(FormatErrc::bad_magic, "'" + origin + "' is not a WGCK checkpoint");
  const auto version = r.u16();
  if (version != wgck_version)
    throw FormatError(FormatErrc::version_mismatch, "'" + origin + "' has checkpoint version " +
                                                        std::to_string(version) + ", expected " +
                                                        std::to_string(wgck_version));
  Checkpoint c;
  try {
    c.config = parse_training_config(r.str());
  } catch (const ConfigError &e) {
    throw FormatError(FormatErrc::malformed, "'" + origin + "' config: " + e.what());
  }
  auto &g = c.geometry;
  g.num_arrays = r.u32();
  g.rows = r.u32();
  g.cols = r.u32();
  g.num_taps = r.u32();
  g.carrier_frequency = r.f64();
  g.bandwidth = r.f64();
  c.condition_scaler.x.lo = r.f64();
  c.condition_scaler.x.hi = r.f64();
  c.condition_scaler.y.lo = r.f64();
  c.condition_scaler.y.hi = r.f64();
  c.delay_spread_scaler.lo = r.f64();
  c.delay_spread_scaler.hi = r.f64();
  c.step = r.u64();
  try {
    g.validate();
    c.condition_scaler.x.validate();
    c.condition_scaler.y.validate();
    c.delay_spread_scaler.validate();
  } catch (const std::invalid_argument &e) {
    throw FormatError(FormatErrc::malformed, "'" + origin + "': " + e.what());
  }
  c.generator = detail::read_mlp(r);
  c.critic.trunk = detail::read_mlp(r);
  c.critic.head = detail::read_mlp(r);
  if (c.generator.out_width() != flat_width(g) ||
      c.generator.in_width() != static_cast<Eigen::Index>(2 + c.config.noise_dim) ||
      c.critic.trunk.in_width() != flat_width(g) ||
      c.critic.head.in_width() != c.critic.trunk.out_width() + static_cast<Eigen::Index>(g.num_antennas()) + 2 ||
      c.critic.head.out_width() != 1)
    throw FormatError(FormatErrc::malformed, "'" + origin + "': network shapes do not match geometry and config");

  const std::vector<const MlpParams *> gen_params{&c.generator};
  const std::vector<const MlpParams *> critic_params{&c.critic.trunk, &c.critic.head};
  for (auto [opt, params] : {std::pair{&c.generator_opt, &gen_params}, std::pair{&c.critic_opt, &critic_params}}) {
    for (const auto *p : *params) {
      opt->m.push_back(detail::read_mlp(r));
      opt->v.push_back(detail::read_mlp(r));
      detail::require_same_shape(opt->m.back(), *p, "optimizer state");
      detail::require_same_shape(opt->v.back(), *p, "optimizer state");
    }
    opt->t = r.u64();
  }
  c.rng_state = r.str();
  try {
    (void)load_rng_state(c.rng_state);
  } catch (const std::invalid_argument &e) {
    throw FormatError(FormatErrc::malformed, "'" + origin + "': " + e.what());
  }
  if (r.remaining() != 0)
    throw FormatError(FormatErrc::length_mismatch,
                      "'" + origin + "' has " + std::to_string(r.remaining()) + " trailing bytes");
  return c;
}

inline Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::open_failed, "cannot open '" + path + "'");
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(std::move(data), path);
}

} // namespace csigan
