#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <utility>

#include <json.hpp>

#include "csigan/csi_core.hpp"
#include "csigan/detail/binary.hpp"
#include "csigan/errors.hpp"

namespace csigan {

// ---------------------------------------------------------------------------
// CSIT binary format
//
//   "CSIT" | u16 version | u32 B, M_r, M_c, N_tap, L | f64 carrier_hz, bandwidth_hz
//   L x ( f32 x, f32 y | B*M_r*M_c*N_tap x (f32 re, f32 im) )
//
// All little-endian, CSI payload tap-fastest, then column, row, array.
// ---------------------------------------------------------------------------

inline constexpr std::string_view csit_magic = "CSIT";
inline constexpr std::uint16_t csit_version = 1;
inline constexpr std::size_t csit_header_bytes = 4 + 2 + 5 * 4 + 2 * 8;

using Provenance = std::map<std::string, std::string>;

inline std::string sidecar_path(const std::string &path) { return path + ".meta.json"; }

inline void save_dataset(const CsiDataset &dataset, const std::string &path, const Provenance &provenance = {}) {
  dataset.validate();
  const auto &g = dataset.geometry;
  detail::ByteWriter w;
  w.bytes(csit_magic);
  w.u16(csit_version);
  for (auto v : {g.num_arrays, g.rows, g.cols, g.num_taps, dataset.size()}) {
    if (v > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("save_dataset: dimension exceeds u32");
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.f64(g.carrier_frequency);
  w.f64(g.bandwidth);
  for (const auto &p : dataset.points) {
    w.f32(static_cast<float>(p.position.x));
    w.f32(static_cast<float>(p.position.y));
    for (const auto &v : p.csi.values()) {
      w.f32(static_cast<float>(v.real()));
      w.f32(static_cast<float>(v.imag()));
    }
  }
  w.write_file(path);

  nlohmann::json meta;
  meta["format"] = "CSIT";
  meta["version"] = csit_version;
  if (dataset.power_reference) meta["power_reference"] = *dataset.power_reference;
  meta["provenance"] = provenance;
  std::ofstream side(sidecar_path(path));
  if (!side) throw FormatError(FormatErrc::open_failed, "cannot write sidecar for '" + path + "'");
  side << meta.dump(2) << '\n';
}

/// Reads the free-form provenance strings; empty when the sidecar is absent.
inline Provenance load_provenance(const std::string &path) {
  std::ifstream in(sidecar_path(path));
  if (!in) return {};
  try {
    const auto meta = nlohmann::json::parse(in);
    if (meta.contains("provenance")) return meta.at("provenance").get<Provenance>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(FormatErrc::malformed, "sidecar of '" + path + "': " + e.what());
  }
  return {};
}

inline CsiDataset load_dataset(const std::string &path) {
  auto r = detail::ByteReader::from_file(path);
  if (r.remaining() < 4 || r.bytes(4) != csit_magic)
    throw FormatError(FormatErrc::bad_magic, "'" + path + "' is not a CSIT file");
  const auto version = r.u16();
  if (version != csit_version)
    throw FormatError(FormatErrc::version_mismatch,
                      "'" + path + "' has format version " + std::to_string(version) + ", expected " +
                          std::to_string(csit_version));

  CsiDataset ds;
  auto &g = ds.geometry;
  g.num_arrays = r.u32();
  g.rows = r.u32();
  g.cols = r.u32();
  g.num_taps = r.u32();
  const std::size_t count = r.u32();
  g.carrier_frequency = r.f64();
  g.bandwidth = r.f64();
  try {
    g.validate();
  } catch (const std::invalid_argument &e) {
    throw FormatError(FormatErrc::malformed, "'" + path + "': " + e.what());
  }

  const std::uint64_t have = r.remaining();
  // Four u32 factors can overflow 64 bits; anything larger than the file is
  // truncated regardless of the exact value.
  const unsigned __int128 wide_record =
      8 + static_cast<unsigned __int128>(8) * g.num_arrays * g.rows * g.cols * g.num_taps;
  if (static_cast<unsigned __int128>(count) * wide_record > have)
    throw FormatError(FormatErrc::truncated, "'" + path + "' header announces " + std::to_string(count) +
                                                 " records but the payload is only " + std::to_string(have) +
                                                 " bytes");
  const std::uint64_t record = static_cast<std::uint64_t>(wide_record);
  if (have != record * count)
    throw FormatError(FormatErrc::length_mismatch, "'" + path + "' carries " + std::to_string(have) +
                                                       " payload bytes, header implies " +
                                                       std::to_string(record * count));

  ds.points.reserve(count);
  for (std::size_t l = 0; l < count; ++l) {
    Datapoint p;
    p.position.x = r.f32();
    p.position.y = r.f32();
    p.csi = CsiTensor(g);
    for (auto &v : p.csi.values()) {
      const double re = r.f32();
      const double im = r.f32();
      v = {re, im};
    }
    ds.points.push_back(std::move(p));
  }

  std::ifstream side(sidecar_path(path));
  if (side) {
    try {
      const auto meta = nlohmann::json::parse(side);
      if (meta.contains("power_reference")) ds.power_reference = meta.at("power_reference").get<double>();
    } catch (const nlohmann::json::exception &e) {
      throw FormatError(FormatErrc::malformed, "sidecar of '" + path + "': " + e.what());
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Train / test split
// ---------------------------------------------------------------------------

struct SplitSpec {
  std::size_t stride{4};
  std::size_t test_offset{0};
  std::size_t train_offset{2};
  Vec2 hole_center{};
  double hole_diameter{4.0};

  void validate() const {
    if (stride == 0) throw std::invalid_argument("SplitSpec: stride must be >= 1");
    if (test_offset >= stride || train_offset >= stride)
      throw std::invalid_argument("SplitSpec: offsets must be smaller than the stride");
    if (test_offset == train_offset)
      throw std::invalid_argument("SplitSpec: train and test offsets must differ");
    if (!(hole_diameter >= 0.0)) throw std::invalid_argument("SplitSpec: hole diameter must be >= 0");
    if (!hole_center.finite()) throw std::invalid_argument("SplitSpec: hole center must be finite");
  }
};

struct TrainTestSplit {
  CsiDataset train;
  CsiDataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Index order is the measurement trajectory order. Test keeps every stride-th
/// point from test_offset; train keeps every stride-th point from train_offset
/// that lies strictly outside the hole disc.
inline TrainTestSplit split_train_test(const CsiDataset &dataset, const SplitSpec &spec) {
  spec.validate();
  if (spec.stride > dataset.size())
    throw EmptySplitError("split_train_test: stride " + std::to_string(spec.stride) + " exceeds dataset size " +
                          std::to_string(dataset.size()));
  TrainTestSplit out;
  out.train.geometry = out.test.geometry = dataset.geometry;
  out.train.power_reference = out.test.power_reference = dataset.power_reference;
  const double radius = spec.hole_diameter / 2.0;
  for (std::size_t l = 0; l < dataset.size(); ++l) {
    const auto &p = dataset.points[l];
    const std::size_t residue = l % spec.stride;
    if (residue == spec.test_offset) {
      out.test.points.push_back(p);
      out.test_indices.push_back(l);
    } else if (residue == spec.train_offset && (p.position - spec.hole_center).norm() > radius) {
      out.train.points.push_back(p);
      out.train_indices.push_back(l);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Condition normalization
// ---------------------------------------------------------------------------

/// Affine map of one scalar from [lo, hi] onto [-1, 1]. Values outside the
/// fitted range map outside [-1, 1]; nothing is clamped.
struct RangeScaler {
  double lo{-1.0};
  double hi{1.0};

  [[nodiscard]] double scale(double v) const { return 2.0 * (v - lo) / (hi - lo) - 1.0; }
  [[nodiscard]] double unscale(double s) const { return lo + (s + 1.0) * 0.5 * (hi - lo); }
  /// d scale / d v
  [[nodiscard]] double slope() const { return 2.0 / (hi - lo); }

  void validate() const {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw std::invalid_argument("RangeScaler: degenerate extent");
  }

  friend bool operator==(const RangeScaler &, const RangeScaler &) = default;
};

struct ConditionScaler {
  RangeScaler x;
  RangeScaler y;

  [[nodiscard]] Vec2 scale(Vec2 p) const { return {x.scale(p.x), y.scale(p.y)}; }
  [[nodiscard]] Vec2 unscale(Vec2 s) const { return {x.unscale(s.x), y.unscale(s.y)}; }

  friend bool operator==(const ConditionScaler &, const ConditionScaler &) = default;
};

inline RangeScaler fit_range_scaler(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("fit_range_scaler: no values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  RangeScaler s{*lo, *hi};
  s.validate();
  return s;
}

inline ConditionScaler fit_condition_scaler(const CsiDataset &train) {
  if (train.empty()) throw std::invalid_argument("fit_condition_scaler: empty training set");
  std::vector<double> xs, ys;
  xs.reserve(train.size());
  ys.reserve(train.size());
  for (const auto &p : train.points) {
    xs.push_back(p.position.x);
    ys.push_back(p.position.y);
  }
  try {
    return {fit_range_scaler(xs), fit_range_scaler(ys)};
  } catch (const std::invalid_argument &) {
    throw std::invalid_argument("fit_condition_scaler: training positions have zero extent in one dimension");
  }
}

inline Vec2 scale_position(const ConditionScaler &s, Vec2 p) { return s.scale(p); }
inline Vec2 unscale_position(const ConditionScaler &s, Vec2 p) { return s.unscale(p); }

} // namespace csigan
