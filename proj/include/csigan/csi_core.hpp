#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace csigan {

using cplx = std::complex<double>;

struct Vec2 {
  double x{0.0};
  double y{0.0};

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;

  [[nodiscard]] double norm() const { return std::hypot(x, y); }
  [[nodiscard]] bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Distributed massive-MIMO receiver: B uniform planar arrays of M_r x M_c
/// half-wavelength spaced antennas, observed through N_tap delay taps.
struct ArrayGeometry {
  std::size_t num_arrays{1};
  std::size_t rows{1};
  std::size_t cols{1};
  std::size_t num_taps{1};
  double carrier_frequency{1.272e9};
  double bandwidth{50e6};

  static constexpr double element_spacing = 0.5; // wavelengths

  [[nodiscard]] std::size_t antennas_per_array() const { return rows * cols; }
  [[nodiscard]] std::size_t num_antennas() const { return num_arrays * rows * cols; }
  [[nodiscard]] std::size_t num_entries() const { return num_antennas() * num_taps; }
  [[nodiscard]] double tap_duration() const { return 1.0 / bandwidth; }
  [[nodiscard]] double wavelength() const { return 299'792'458.0 / carrier_frequency; }

  void validate() const {
    if (num_arrays == 0 || rows == 0 || cols == 0 || num_taps == 0)
      throw std::invalid_argument("ArrayGeometry: all dimensions must be >= 1");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw std::invalid_argument("ArrayGeometry: bandwidth must be positive");
    if (!(carrier_frequency > 0.0) || !std::isfinite(carrier_frequency))
      throw std::invalid_argument("ArrayGeometry: carrier frequency must be positive");
  }

  [[nodiscard]] bool same_shape(const ArrayGeometry &o) const {
    return num_arrays == o.num_arrays && rows == o.rows && cols == o.cols && num_taps == o.num_taps;
  }

  friend bool operator==(const ArrayGeometry &, const ArrayGeometry &) = default;
};

/// Time-domain CSI of one UE position, laid out [array][row][col][tap] with the
/// tap index fastest.
class CsiTensor {
public:
  CsiTensor() = default;

  CsiTensor(std::size_t arrays, std::size_t rows, std::size_t cols, std::size_t taps)
      : arrays_(arrays), rows_(rows), cols_(cols), taps_(taps), values_(arrays * rows * cols * taps) {}

  explicit CsiTensor(const ArrayGeometry &g) : CsiTensor(g.num_arrays, g.rows, g.cols, g.num_taps) {}

  CsiTensor(const ArrayGeometry &g, std::vector<cplx> values)
      : arrays_(g.num_arrays), rows_(g.rows), cols_(g.cols), taps_(g.num_taps), values_(std::move(values)) {
    if (values_.size() != g.num_entries())
      throw std::invalid_argument("CsiTensor: value count does not match geometry");
  }

  [[nodiscard]] std::size_t arrays() const { return arrays_; }
  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t taps() const { return taps_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }

  [[nodiscard]] std::size_t index(std::size_t b, std::size_t r, std::size_t c, std::size_t t) const {
    return ((b * rows_ + r) * cols_ + c) * taps_ + t;
  }

  cplx &operator()(std::size_t b, std::size_t r, std::size_t c, std::size_t t) { return values_[index(b, r, c, t)]; }
  const cplx &operator()(std::size_t b, std::size_t r, std::size_t c, std::size_t t) const {
    return values_[index(b, r, c, t)];
  }

  /// Taps of a single antenna.
  [[nodiscard]] std::span<const cplx> antenna(std::size_t b, std::size_t r, std::size_t c) const {
    return {values_.data() + index(b, r, c, 0), taps_};
  }

  [[nodiscard]] std::span<const cplx> values() const { return values_; }
  [[nodiscard]] std::span<cplx> values() { return values_; }

  [[nodiscard]] bool matches(const ArrayGeometry &g) const {
    return arrays_ == g.num_arrays && rows_ == g.rows && cols_ == g.cols && taps_ == g.num_taps;
  }

  [[nodiscard]] bool same_shape(const CsiTensor &o) const {
    return arrays_ == o.arrays_ && rows_ == o.rows_ && cols_ == o.cols_ && taps_ == o.taps_;
  }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](const cplx &v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
  }

  CsiTensor &operator*=(cplx s) {
    for (auto &v : values_) v *= s;
    return *this;
  }

  friend bool operator==(const CsiTensor &, const CsiTensor &) = default;

private:
  std::size_t arrays_{0};
  std::size_t rows_{0};
  std::size_t cols_{0};
  std::size_t taps_{0};
  std::vector<cplx> values_;
};

inline CsiTensor operator*(cplx s, CsiTensor t) {
  t *= s;
  return t;
}

struct Datapoint {
  CsiTensor csi;
  Vec2 position;
};

struct CsiDataset {
  ArrayGeometry geometry;
  std::vector<Datapoint> points;
  /// Linear power mapped to 0 dB; unset until normalize_dataset_power runs.
  std::optional<double> power_reference;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] bool empty() const { return points.empty(); }

  void validate() const {
    geometry.validate();
    for (const auto &p : points) {
      if (!p.csi.matches(geometry)) throw std::invalid_argument("CsiDataset: datapoint shape differs from geometry");
      if (!p.position.finite()) throw std::invalid_argument("CsiDataset: non-finite position");
    }
  }
};

/// Frequency-domain CSI as measured: [array][row][col][subcarrier].
struct FrequencyCsi {
  std::size_t arrays{0};
  std::size_t rows{0};
  std::size_t cols{0};
  std::size_t subcarriers{0};
  std::vector<cplx> values;
};

/// Per antenna, the inverse DFT over subcarriers (scaled by 1/N_sub) truncated
/// to the first n_tap taps. No cyclic shift is applied; the input is assumed to
/// be time-aligned already.
inline CsiTensor freq_to_time(const FrequencyCsi &freq, std::size_t n_tap) {
  const std::size_t n_sub = freq.subcarriers;
  if (n_sub == 0) throw std::invalid_argument("freq_to_time: need at least one subcarrier");
  if (freq.values.size() != freq.arrays * freq.rows * freq.cols * n_sub)
    throw std::invalid_argument("freq_to_time: value count does not match shape");
  if (n_tap == 0 || n_tap > n_sub) throw std::invalid_argument("freq_to_time: n_tap must be in [1, N_sub]");

  // twiddle[k] = exp(+j 2 pi k / N); index (k*t) mod N picks the right power
  std::vector<cplx> twiddle(n_sub);
  for (std::size_t k = 0; k < n_sub; ++k)
    twiddle[k] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_sub));

  CsiTensor out(freq.arrays, freq.rows, freq.cols, n_tap);
  const double scale = 1.0 / static_cast<double>(n_sub);
  const std::size_t antennas = freq.arrays * freq.rows * freq.cols;
  auto dst = out.values();
  for (std::size_t a = 0; a < antennas; ++a) {
    const cplx *src = freq.values.data() + a * n_sub;
    for (std::size_t t = 0; t < n_tap; ++t) {
      cplx acc{0.0, 0.0};
      std::size_t idx = 0;
      for (std::size_t k = 0; k < n_sub; ++k) {
        acc += src[k] * twiddle[idx];
        idx += t;
        if (idx >= n_sub) idx %= n_sub;
      }
      dst[a * n_tap + t] = acc * scale;
    }
  }
  return out;
}

/// ||H_b||_F^2 for array b (zero-based).
inline double total_rx_power(const CsiTensor &csi, std::size_t b) {
  if (b >= csi.arrays()) throw std::out_of_range("total_rx_power: array index out of range");
  const std::size_t n = csi.rows() * csi.cols() * csi.taps();
  const auto vals = csi.values().subspan(b * n, n);
  double acc = 0.0;
  for (const auto &v : vals) acc += std::norm(v);
  return acc;
}

/// ||H||_F^2 over the whole tensor.
inline double tensor_power(const CsiTensor &csi) {
  double acc = 0.0;
  for (const auto &v : csi.values()) acc += std::norm(v);
  return acc;
}

enum class PowerBasis {
  whole_tensor, ///< reference = max_l ||H^(l)||_F^2
  per_array,    ///< reference = max_{l,b} ||H_b^(l)||_F^2
};

inline double power_in_basis(const CsiTensor &csi, PowerBasis basis) {
  if (basis == PowerBasis::whole_tensor) return tensor_power(csi);
  double best = 0.0;
  for (std::size_t b = 0; b < csi.arrays(); ++b) best = std::max(best, total_rx_power(csi, b));
  return best;
}

/// Returns a copy whose power_reference is the maximum power over all
/// datapoints in the chosen basis. CSI values are left untouched; dB values are
/// taken relative to the reference via power_db.
inline CsiDataset normalize_dataset_power(CsiDataset dataset, PowerBasis basis = PowerBasis::whole_tensor) {
  if (dataset.empty()) throw std::invalid_argument("normalize_dataset_power: empty dataset");
  double ref = 0.0;
  for (const auto &p : dataset.points) ref = std::max(ref, power_in_basis(p.csi, basis));
  if (!(ref > 0.0)) throw std::invalid_argument("normalize_dataset_power: all datapoints have zero power");
  dataset.power_reference = ref;
  return dataset;
}

inline double power_db(double power, double reference) { return 10.0 * std::log10(power / reference); }

} // namespace csigan
