#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "csigan/csi_core.hpp"
#include "csigan/rng.hpp"

namespace csigan {

// Deterministic geometric multipath generator. Not a raytracer: line of sight
// plus one specular bounce per point scatterer, optional straight-segment
// blockers that cut any path leg crossing them, and additive complex Gaussian
// noise.

struct PathSpec {
  double azimuth{0.0};   ///< rad, relative to array broadside
  double elevation{0.0}; ///< rad
  double delay{0.0};     ///< s
  cplx gain{1.0, 0.0};
};

struct ArrayPlacement {
  Vec2 position;
  double orientation{0.0}; ///< broadside direction, rad from the +x axis
};

struct Reflector {
  Vec2 position;
  cplx gain{1.0, 0.0};
};

struct Blocker {
  Vec2 a;
  Vec2 b;
};

struct Region {
  Vec2 min{-1e9, -1e9};
  Vec2 max{1e9, 1e9};

  [[nodiscard]] bool contains(Vec2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
};

struct Scenario {
  ArrayGeometry geometry;
  std::vector<ArrayPlacement> arrays; ///< one per geometry.num_arrays
  std::vector<Reflector> reflectors;
  std::vector<Blocker> blockers;
  bool line_of_sight{true};
  double noise_power{0.0};  ///< linear, per complex entry
  double delay_offset{0.0}; ///< s, added to every path delay
  Region region;
  std::uint64_t seed{0};

  void validate() const {
    geometry.validate();
    if (arrays.size() != geometry.num_arrays)
      throw std::invalid_argument("Scenario: need exactly one placement per array");
    if (!(noise_power >= 0.0)) throw std::invalid_argument("Scenario: noise power must be >= 0");
    if (!(delay_offset >= 0.0)) throw std::invalid_argument("Scenario: delay offset must be >= 0");
  }
};

namespace detail {

constexpr double speed_of_light = 299'792'458.0;
constexpr double sinc_half_width = 8.0;

inline bool segments_cross(Vec2 p1, Vec2 p2, Blocker s) {
  const double d1 = cross(p2 - p1, s.a - p1);
  const double d2 = cross(p2 - p1, s.b - p1);
  const double d3 = cross(s.b - s.a, p1 - s.a);
  const double d4 = cross(s.b - s.a, p2 - s.a);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

inline bool leg_clear(Vec2 from, Vec2 to, const std::vector<Blocker> &blockers) {
  for (const auto &s : blockers)
    if (segments_cross(from, to, s)) return false;
  return true;
}

} // namespace detail

/// Hann-windowed sinc, half-width 8 taps; x is measured in taps.
inline double windowed_sinc(double x) {
  if (std::abs(x) >= detail::sinc_half_width) return 0.0;
  const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * x / detail::sinc_half_width));
  if (x == 0.0) return window;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px * window;
}

/// Propagation paths seen by each array for a UE at `ue`, in array order.
inline std::vector<std::vector<PathSpec>> synth_paths(const Scenario &scenario, Vec2 ue) {
  scenario.validate();
  if (!ue.finite() || !scenario.region.contains(ue))
    throw std::domain_error("synth_paths: UE position outside the scenario region");
  const auto &g = scenario.geometry;
  const double lambda = g.wavelength();
  const double max_delay = static_cast<double>(g.num_taps - 1) / g.bandwidth;

  std::vector<std::vector<PathSpec>> paths(g.num_arrays);
  for (std::size_t b = 0; b < g.num_arrays; ++b) {
    const auto &arr = scenario.arrays[b];
    if ((ue - arr.position).norm() < 1e-9)
      throw std::domain_error("synth_paths: UE coincides with array " + std::to_string(b));
    const Vec2 broadside{std::cos(arr.orientation), std::sin(arr.orientation)};
    const Vec2 axis{-broadside.y, broadside.x};

    // source: last scatter point before the array; length: total path length
    auto add = [&](Vec2 source, double length, cplx extra_gain) {
      const Vec2 d = source - arr.position;
      const double front = dot(d, broadside);
      if (front <= 0.0) return; // behind the array
      const double delay = length / detail::speed_of_light + scenario.delay_offset;
      if (delay >= max_delay) return;
      PathSpec p;
      p.azimuth = std::atan2(dot(d, axis), front);
      p.elevation = 0.0;
      p.delay = delay;
      p.gain = extra_gain * std::polar(1.0 / length, -2.0 * std::numbers::pi * length / lambda);
      paths[b].push_back(p);
    };

    if (scenario.line_of_sight && detail::leg_clear(ue, arr.position, scenario.blockers))
      add(ue, (ue - arr.position).norm(), 1.0);
    for (const auto &r : scenario.reflectors) {
      const double d1 = (r.position - ue).norm();
      const double d2 = (arr.position - r.position).norm();
      if (d1 < 1e-9 || d2 < 1e-9) continue;
      if (!detail::leg_clear(ue, r.position, scenario.blockers) ||
          !detail::leg_clear(r.position, arr.position, scenario.blockers))
        continue;
      add(r.position, d1 + d2, r.gain);
    }
  }
  return paths;
}

/// Deposits paths into array b of `csi` using the half-wavelength UPA steering
/// model (column phase pi*sin(az)*c, row phase pi*sin(el)*r) and a windowed
/// sinc for fractional delays.
inline void render_paths(CsiTensor &csi, std::size_t b, const std::vector<PathSpec> &paths, double bandwidth) {
  const std::size_t taps = csi.taps();
  for (const auto &p : paths) {
    const double center = p.delay * bandwidth;
    const auto first = static_cast<long>(std::max(0.0, std::ceil(center - detail::sinc_half_width)));
    const auto last = std::min(static_cast<long>(taps) - 1, static_cast<long>(std::floor(center + detail::sinc_half_width)));
    for (std::size_t r = 0; r < csi.rows(); ++r) {
      for (std::size_t c = 0; c < csi.cols(); ++c) {
        const double phase = std::numbers::pi * (std::sin(p.azimuth) * static_cast<double>(c) +
                                                 std::sin(p.elevation) * static_cast<double>(r));
        const cplx element_gain = p.gain * std::polar(1.0, phase);
        for (long t = first; t <= last; ++t)
          csi(b, r, c, static_cast<std::size_t>(t)) += element_gain * windowed_sinc(static_cast<double>(t) - center);
      }
    }
  }
}

/// CSI for one UE position. Noise is drawn from the stream (scenario.seed,
/// stream_index), so positions can be generated independently.
inline CsiTensor synth_csi(const Scenario &scenario, Vec2 ue, std::uint64_t stream_index = 0) {
  const auto paths = synth_paths(scenario, ue);
  const auto &g = scenario.geometry;
  CsiTensor csi(g);
  for (std::size_t b = 0; b < g.num_arrays; ++b) render_paths(csi, b, paths[b], g.bandwidth);
  if (scenario.noise_power > 0.0) {
    auto rng = stream_rng(scenario.seed, stream_index);
    std::normal_distribution<double> normal(0.0, std::sqrt(scenario.noise_power / 2.0));
    for (auto &v : csi.values()) {
      const double re = normal(rng);
      const double im = normal(rng);
      v += cplx{re, im};
    }
  }
  return csi;
}

inline CsiDataset synth_dataset(const Scenario &scenario, const std::vector<Vec2> &positions) {
  scenario.validate();
  CsiDataset ds;
  ds.geometry = scenario.geometry;
  ds.points.reserve(positions.size());
  for (std::size_t l = 0; l < positions.size(); ++l) ds.points.push_back({synth_csi(scenario, positions[l], l), positions[l]});
  return ds;
}

/// Row-major grid of nx * ny positions spanning [min, max]; consecutive rows
/// alternate direction so index order traces a continuous trajectory.
inline std::vector<Vec2> grid_positions(Vec2 min, Vec2 max, std::size_t nx, std::size_t ny) {
  if (nx == 0 || ny == 0) return {};
  std::vector<Vec2> out;
  out.reserve(nx * ny);
  auto coord = [](double lo, double hi, std::size_t i, std::size_t n) {
    return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t k = 0; k < nx; ++k) {
      const std::size_t i = (j % 2 == 0) ? k : nx - 1 - k;
      out.push_back({coord(min.x, max.x, i, nx), coord(min.y, max.y, j, ny)});
    }
  }
  return out;
}

} // namespace csigan
