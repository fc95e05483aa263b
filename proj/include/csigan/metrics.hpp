#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csigan/csi_core.hpp"
#include "csigan/errors.hpp"

namespace csigan {

// ---------------------------------------------------------------------------
// RMS delay spread
// ---------------------------------------------------------------------------

struct TapDelaySpread {
  double spread{0.0}; ///< taps
  double mean{0.0};   ///< taps, 1-based index
  double power{0.0};  ///< sum_t |h_t|^2
  [[nodiscard]] bool zero_power() const { return !(power > 0.0); }
};

/// Power-weighted standard deviation of the tap index t = 1..N. An all-zero
/// antenna yields spread 0 with power 0.
inline TapDelaySpread rms_delay_spread_taps(std::span<const cplx> taps) {
  TapDelaySpread out;
  double weighted = 0.0;
  for (std::size_t t = 0; t < taps.size(); ++t) {
    const double p = std::norm(taps[t]);
    out.power += p;
    weighted += static_cast<double>(t + 1) * p;
  }
  if (out.zero_power()) return out;
  out.mean = weighted / out.power;
  double var = 0.0;
  for (std::size_t t = 0; t < taps.size(); ++t) {
    const double d = static_cast<double>(t + 1) - out.mean;
    var += d * d * std::norm(taps[t]);
  }
  out.spread = std::sqrt(var / out.power);
  return out;
}

struct DelaySpreadMap {
  std::size_t arrays{0};
  std::size_t rows{0};
  std::size_t cols{0};
  std::vector<double> per_antenna;    ///< s, [array][row][col]
  std::vector<bool> zero_power;       ///< flags antennas with no energy (spread reported as 0)
  std::vector<double> per_array_mean; ///< s

  [[nodiscard]] double at(std::size_t b, std::size_t r, std::size_t c) const {
    return per_antenna[(b * rows + r) * cols + c];
  }
};

inline DelaySpreadMap rms_delay_spread(const CsiTensor &csi, const ArrayGeometry &geometry) {
  if (!csi.matches(geometry)) throw std::invalid_argument("rms_delay_spread: tensor shape differs from geometry");
  DelaySpreadMap out{csi.arrays(), csi.rows(), csi.cols(), {}, {}, {}};
  const double tap = geometry.tap_duration();
  const std::size_t per_array = csi.rows() * csi.cols();
  out.per_antenna.reserve(csi.arrays() * per_array);
  out.zero_power.reserve(csi.arrays() * per_array);
  for (std::size_t b = 0; b < csi.arrays(); ++b) {
    double sum = 0.0;
    for (std::size_t r = 0; r < csi.rows(); ++r) {
      for (std::size_t c = 0; c < csi.cols(); ++c) {
        const auto ds = rms_delay_spread_taps(csi.antenna(b, r, c));
        out.per_antenna.push_back(ds.spread * tap);
        out.zero_power.push_back(ds.zero_power());
        sum += ds.spread * tap;
      }
    }
    out.per_array_mean.push_back(sum / static_cast<double>(per_array));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Array correlation and root-MUSIC
// ---------------------------------------------------------------------------

struct CorrelationMatrix {
  Eigen::MatrixXcd entries;
  std::size_t array{0};
};

/// R(c1, c2) = sum over rows and taps of H(b, r, c1, t) * conj(H(b, r, c2, t)).
inline CorrelationMatrix array_correlation(const CsiTensor &csi, std::size_t b) {
  if (b >= csi.arrays()) throw std::out_of_range("array_correlation: array index out of range");
  const auto cols = static_cast<Eigen::Index>(csi.cols());
  // one column per (row, tap) snapshot
  Eigen::MatrixXcd snapshots(cols, static_cast<Eigen::Index>(csi.rows() * csi.taps()));
  for (std::size_t r = 0; r < csi.rows(); ++r)
    for (std::size_t c = 0; c < csi.cols(); ++c)
      for (std::size_t t = 0; t < csi.taps(); ++t)
        snapshots(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r * csi.taps() + t)) = csi(b, r, c, t);
  CorrelationMatrix out;
  out.entries = snapshots * snapshots.adjoint();
  out.array = b;
  return out;
}

namespace detail {

inline std::vector<cplx> polynomial_roots(std::vector<cplx> coeffs /* ascending powers */) {
  const double scale = std::abs(*std::max_element(coeffs.begin(), coeffs.end(),
                                                   [](cplx a, cplx b) { return std::abs(a) < std::abs(b); }));
  const double tiny = scale * 1e-14;
  while (!coeffs.empty() && std::abs(coeffs.back()) <= tiny) coeffs.pop_back();
  std::size_t zeros = 0;
  while (zeros < coeffs.size() && std::abs(coeffs[zeros]) <= tiny) ++zeros;
  std::vector<cplx> roots(zeros, cplx{0.0, 0.0});
  coeffs.erase(coeffs.begin(), coeffs.begin() + static_cast<long>(zeros));
  if (coeffs.size() < 2) return roots;

  const auto n = static_cast<Eigen::Index>(coeffs.size() - 1);
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) companion(i, n - 1) = -coeffs[static_cast<std::size_t>(i)] / coeffs.back();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  for (Eigen::Index i = 0; i < n; ++i) roots.push_back(solver.eigenvalues()(i));
  return roots;
}

inline cplx polyval(const std::vector<cplx> &coeffs, cplx z) {
  cplx acc{0.0, 0.0};
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
  return acc;
}

} // namespace detail

/// Single-source root-MUSIC azimuth estimate in radians, 0 = broadside, under
/// the half-wavelength steering model a_c = exp(j*pi*c*sin(az)).
inline double root_music_azimuth(const CorrelationMatrix &corr) {
  const auto &r_in = corr.entries;
  const Eigen::Index m = r_in.rows();
  if (m < 2 || r_in.cols() != m) throw std::invalid_argument("root_music_azimuth: need a square matrix with M_c >= 2");
  const double trace = r_in.diagonal().real().sum();
  if (!std::isfinite(trace) || trace <= std::numeric_limits<double>::min())
    throw NoSignalError("root_music_azimuth: correlation matrix carries no energy");

  // Power-of-two rescale is exact, so c*R and R see the same arithmetic.
  int exponent = 0;
  std::frexp(trace, &exponent);
  const Eigen::MatrixXcd r = r_in * std::ldexp(1.0, -exponent);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(r);
  if (eig.info() != Eigen::Success) throw NoSignalError("root_music_azimuth: eigen-decomposition failed");
  const Eigen::VectorXcd u = eig.eigenvectors().col(m - 1); // largest eigenvalue
  const Eigen::MatrixXcd noise_proj = Eigen::MatrixXcd::Identity(m, m) - u * u.adjoint();

  // a(z)^H P a(z) = sum_k c_k z^k, c_k = sum of the k-th diagonal of P;
  // multiplied by z^(M-1) to get an ordinary polynomial of degree 2(M-1)
  std::vector<cplx> coeffs(static_cast<std::size_t>(2 * m - 1), cplx{0.0, 0.0});
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) coeffs[static_cast<std::size_t>(j - i + m - 1)] += noise_proj(i, j);

  auto roots = detail::polynomial_roots(coeffs);
  if (roots.empty()) throw NoSignalError("root_music_azimuth: degenerate root-MUSIC polynomial");

  // Roots near the unit circle come in (z, 1/conj(z)) pairs. Polish the chosen
  // one with Newton steps; a near-double root is polished on the derivative,
  // where it is a simple root.
  auto derivative = [](const std::vector<cplx> &c) {
    std::vector<cplx> d(c.size() > 1 ? c.size() - 1 : 0);
    for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
    return d;
  };
  const auto deriv = derivative(coeffs);
  const auto deriv2 = derivative(deriv);

  std::vector<cplx> inside;
  for (auto z : roots)
    if (std::abs(z) < 1.0) inside.push_back(z);
  if (inside.empty()) inside = roots;
  const auto best = std::min_element(inside.begin(), inside.end(), [](cplx a, cplx b) {
    const double da = std::abs(1.0 - std::abs(a));
    const double db = std::abs(1.0 - std::abs(b));
    if (da != db) return da < db;
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    return std::abs(std::arg(a)) < std::abs(std::arg(b));
  });
  cplx z = *best;

  // partner root distance decides whether the pair is numerically merged
  double gap = std::numeric_limits<double>::infinity();
  for (auto w : roots)
    if (w != z) gap = std::min(gap, std::abs(w - z));
  const bool merged = gap < 1e-5;
  const auto &f = merged ? deriv : coeffs;
  const auto &df = merged ? deriv2 : deriv;
  for (int it = 0; it < 8; ++it) {
    const cplx slope = detail::polyval(df, z);
    if (std::abs(slope) == 0.0) break;
    const cplx step = detail::polyval(f, z) / slope;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag()) || std::abs(step) > 1e-3) break;
    z -= step;
    if (std::abs(step) < 1e-16) break;
  }

  const double s = std::arg(z) / std::numbers::pi;
  if (!(std::abs(s) <= 1.0)) throw AmbiguousAngleError("root_music_azimuth: |arg(root)/pi| exceeds 1");
  return std::asin(s);
}

// ---------------------------------------------------------------------------
// Densities and distances
// ---------------------------------------------------------------------------

struct Density {
  std::vector<double> edges;         ///< n_bins + 1, strictly increasing
  std::vector<double> probabilities; ///< n_bins, sums to 1

  [[nodiscard]] std::size_t bins() const { return probabilities.size(); }
};

/// Uniform edges over the pooled [min, max] of every value set.
inline std::vector<double> pooled_edges(std::span<const std::vector<double>> sets, std::size_t bins) {
  if (bins < 1) throw std::invalid_argument("pooled_edges: need at least one bin");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto &s : sets) {
    for (double v : s) {
      if (!std::isfinite(v)) throw std::invalid_argument("pooled_edges: non-finite value");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) throw std::invalid_argument("pooled_edges: no values");
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  edges.back() = hi;
  return edges;
}

/// Relative bin counts. Values below the first edge land in bin 0, values at or
/// beyond the last edge in the final bin.
inline Density histogram_density(std::span<const double> values, std::span<const double> edges) {
  if (values.empty()) throw std::invalid_argument("histogram_density: empty value list");
  if (edges.size() < 2) throw std::invalid_argument("histogram_density: need at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("histogram_density: edges must strictly increase");
  const std::size_t bins = edges.size() - 1;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("histogram_density: non-finite value");
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t bin = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
    bin = std::min(bin, bins - 1);
    ++counts[bin];
  }
  Density d;
  d.edges.assign(edges.begin(), edges.end());
  d.probabilities.resize(bins);
  const auto total = static_cast<double>(values.size());
  for (std::size_t i = 0; i < bins; ++i) d.probabilities[i] = static_cast<double>(counts[i]) / total;
  return d;
}

namespace detail {
inline void require_same_edges(const Density &p, const Density &q, const char *who) {
  if (p.edges != q.edges) throw std::invalid_argument(std::string(who) + ": densities use different bin edges");
}
} // namespace detail

/// sum_x P(x) ln(P(x)/Q(x)) in nats. 0*ln(0/q) = 0; P > 0 where Q = 0 gives +inf.
inline double kl_divergence(const Density &p, const Density &q) {
  detail::require_same_edges(p, q, "kl_divergence");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.bins(); ++i) {
    const double pi = p.probabilities[i];
    if (pi == 0.0) continue;
    const double qi = q.probabilities[i];
    if (qi == 0.0) return std::numeric_limits<double>::infinity();
    acc += pi * std::log(pi / qi);
  }
  return acc;
}

/// Jensen-Shannon distance, natural log; range [0, sqrt(ln 2)].
inline double js_distance(const Density &p, const Density &q) {
  detail::require_same_edges(p, q, "js_distance");
  Density m{p.edges, std::vector<double>(p.bins())};
  for (std::size_t i = 0; i < p.bins(); ++i) m.probabilities[i] = 0.5 * (p.probabilities[i] + q.probabilities[i]);
  const double div = 0.5 * (kl_divergence(p, m) + kl_divergence(q, m));
  return std::sqrt(std::max(0.0, div));
}

struct NamedValues {
  std::string label;
  std::vector<double> values;
};

struct JsdMatrix {
  std::vector<std::string> labels;
  std::vector<double> edges;
  std::vector<Density> densities;
  std::vector<std::vector<double>> distance;
};

inline JsdMatrix jsd_matrix(const std::vector<NamedValues> &sets, std::size_t bins = 150) {
  if (sets.size() < 2) throw std::invalid_argument("jsd_matrix: need at least two value sets");
  std::vector<std::vector<double>> raw;
  raw.reserve(sets.size());
  for (const auto &s : sets) {
    if (s.values.empty()) throw std::invalid_argument("jsd_matrix: value set '" + s.label + "' is empty");
    raw.push_back(s.values);
  }
  JsdMatrix out;
  out.edges = pooled_edges(raw, bins);
  for (const auto &s : sets) {
    out.labels.push_back(s.label);
    out.densities.push_back(histogram_density(s.values, out.edges));
  }
  const std::size_t n = sets.size();
  out.distance.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      out.distance[i][j] = out.distance[j][i] = js_distance(out.densities[i], out.densities[j]);
  return out;
}

/// n draws from N(mean, sd) with the input's sample mean and unbiased sample
/// standard deviation. Negative draws are kept.
inline std::vector<double> gaussian_fit_samples(std::span<const double> values, std::size_t n, std::uint64_t seed) {
  if (values.size() < 2) throw std::invalid_argument("gaussian_fit_samples: need at least two values");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  if (!(sd > 0.0)) throw std::invalid_argument("gaussian_fit_samples: input has zero variance");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(mean, sd);
  std::vector<double> out(n);
  for (auto &v : out) v = normal(rng);
  return out;
}

/// min over phi of ||est - e^{j phi} ref||^2 / ||ref||^2.
inline double phase_aligned_nmse(const CsiTensor &estimate, const CsiTensor &reference) {
  if (!estimate.same_shape(reference)) throw std::invalid_argument("phase_aligned_nmse: shape mismatch");
  double pe = 0.0, pr = 0.0;
  cplx inner{0.0, 0.0};
  const auto e = estimate.values();
  const auto r = reference.values();
  for (std::size_t i = 0; i < e.size(); ++i) {
    pe += std::norm(e[i]);
    pr += std::norm(r[i]);
    inner += e[i] * std::conj(r[i]);
  }
  if (!(pr > 0.0)) throw std::invalid_argument("phase_aligned_nmse: reference has zero power");
  return std::max(0.0, pe + pr - 2.0 * std::abs(inner)) / pr;
}

} // namespace csigan
