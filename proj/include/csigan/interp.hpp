#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "csigan/csi_core.hpp"
#include "csigan/delaunay.hpp"
#include "csigan/errors.hpp"

namespace csigan {

struct BarycentricCoords {
  std::array<double, 3> s{};

  [[nodiscard]] double min() const { return std::min({s[0], s[1], s[2]}); }
};

inline BarycentricCoords barycentric(Vec2 v0, Vec2 v1, Vec2 v2, Vec2 x) {
  const double area2 = orient2d(v0, v1, v2);
  const double scale = std::max({(v1 - v0).norm(), (v2 - v0).norm(), (v2 - v1).norm()});
  if (!(std::abs(area2) > 1e-15 * scale * scale)) throw std::invalid_argument("barycentric: degenerate triangle");
  const double s1 = orient2d(v0, x, v2) / area2;
  const double s2 = orient2d(v0, v1, x) / area2;
  return {{1.0 - s1 - s2, s1, s2}};
}

// ---------------------------------------------------------------------------
// Phase-aligned blend: coordinate descent on
//   sum_i s_i || H_i - e^{j phi_i} H ||^2
// ---------------------------------------------------------------------------

struct BlendOptions {
  double tolerance{1e-10}; ///< stop when the relative objective decrease drops below this
  std::size_t max_iterations{100};
};

struct BlendResult {
  CsiTensor csi;
  std::array<double, 3> phases{};
  double objective{0.0};
  std::size_t iterations{0};
  /// Objective after initialization and after each full iteration.
  std::vector<double> objective_history;
  /// All three vertex tensors are zero; the result is the zero tensor.
  bool degenerate{false};
};

namespace detail {

inline cplx inner(const CsiTensor &a, const CsiTensor &b) {
  cplx acc{0.0, 0.0};
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * std::conj(bv[i]);
  return acc;
}

} // namespace detail

inline BlendResult phase_aligned_blend(const CsiTensor &h1, const CsiTensor &h2, const CsiTensor &h3,
                                       const BarycentricCoords &coords, const BlendOptions &opt = {}) {
  if (!h1.same_shape(h2) || !h1.same_shape(h3)) throw std::invalid_argument("phase_aligned_blend: shape mismatch");
  const std::array<const CsiTensor *, 3> h{&h1, &h2, &h3};
  const auto &s = coords.s;

  std::array<double, 3> norms{};
  for (int i = 0; i < 3; ++i) norms[i] = tensor_power(*h[i]);

  BlendResult out;
  out.csi = CsiTensor(h1.arrays(), h1.rows(), h1.cols(), h1.taps());
  if (norms[0] == 0.0 && norms[1] == 0.0 && norms[2] == 0.0) {
    out.degenerate = true;
    out.objective_history.push_back(0.0);
    return out;
  }

  auto combine = [&](const std::array<double, 3> &phi) {
    auto dst = out.csi.values();
    std::fill(dst.begin(), dst.end(), cplx{0.0, 0.0});
    for (int i = 0; i < 3; ++i) {
      if (s[i] == 0.0) continue;
      const cplx w = s[i] * std::polar(1.0, -phi[i]);
      const auto src = h[i]->values();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += w * src[k];
    }
  };

  std::array<double, 3> phi{0.0, 0.0, 0.0};
  combine(phi);
  if (tensor_power(out.csi) == 0.0) {
    // the weighted vertices cancel exactly; start from the dominant vertex
    int k = static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
    if (norms[k] == 0.0) k = static_cast<int>(std::max_element(norms.begin(), norms.end()) - norms.begin());
    out.csi = *h[k];
  }

  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    // phase step: phi_i = arg <H_i, H>
    const double nh = tensor_power(out.csi);
    double objective = 0.0;
    for (int i = 0; i < 3; ++i) {
      const cplx ip = detail::inner(*h[i], out.csi);
      phi[i] = std::arg(ip);
      objective += s[i] * (norms[i] + nh - 2.0 * std::abs(ip));
    }
    objective = std::max(0.0, objective);
    if (it == 0) out.objective_history.push_back(objective);
    // tensor step: H = sum_i s_i e^{-j phi_i} H_i
    combine(phi);
    double after = 0.0;
    {
      const double nh2 = tensor_power(out.csi);
      for (int i = 0; i < 3; ++i)
        after += s[i] * (norms[i] + nh2 - 2.0 * std::real(std::polar(1.0, -phi[i]) * detail::inner(*h[i], out.csi)));
      after = std::max(0.0, after);
    }
    out.objective_history.push_back(after);
    out.iterations = it + 1;
    out.objective = after;
    const double decrease = (it == 0 ? objective : previous) - after;
    previous = after;
    if (after == 0.0 || decrease < opt.tolerance * std::max(after, std::numeric_limits<double>::min())) break;
  }
  out.phases = phi;
  return out;
}

// ---------------------------------------------------------------------------
// Interpolant
// ---------------------------------------------------------------------------

enum class FallbackPolicy { error, nearest_neighbor };

class Interpolant {
public:
  Interpolant(std::shared_ptr<const CsiDataset> train, FallbackPolicy fallback) : train_(std::move(train)), fallback_(fallback) {
    if (!train_) throw std::invalid_argument("build_interpolant: null training set");
    std::vector<Vec2> unique;
    std::set<std::pair<double, double>> seen;
    for (std::size_t l = 0; l < train_->size(); ++l) {
      const Vec2 p = train_->points[l].position;
      if (!seen.insert({p.x, p.y}).second) continue;
      unique.push_back(p);
      vertex_source_.push_back(l);
    }
    tri_ = delaunay_triangulate(unique);
    build_grid();
  }

  [[nodiscard]] const Triangulation &triangulation() const { return tri_; }
  [[nodiscard]] const CsiDataset &training_set() const { return *train_; }
  [[nodiscard]] FallbackPolicy fallback() const { return fallback_; }
  /// Index into the training set for triangulation vertex v.
  [[nodiscard]] std::size_t source_index(std::size_t v) const { return vertex_source_[v]; }

  struct Location {
    std::size_t triangle;
    BarycentricCoords coords;
  };

  /// Triangle containing x, with edges and vertices counted as inside up to a
  /// barycentric tolerance of 1e-9.
  [[nodiscard]] std::optional<Location> locate(Vec2 x) const {
    if (!(x.x >= lo_.x && x.x <= hi_.x && x.y >= lo_.y && x.y <= hi_.y)) return std::nullopt;
    const auto cx = std::min(grid_n_ - 1, cell_of(x.x, lo_.x, cell_w_));
    const auto cy = std::min(grid_n_ - 1, cell_of(x.y, lo_.y, cell_h_));
    std::optional<Location> best;
    for (std::size_t t : grid_[cy * grid_n_ + cx]) {
      const auto &v = tri_.triangles[t];
      const auto bc = barycentric(tri_.points[v[0]], tri_.points[v[1]], tri_.points[v[2]], x);
      if (bc.min() >= -1e-9 && (!best || bc.min() > best->coords.min())) best = Location{t, bc};
    }
    return best;
  }

  [[nodiscard]] std::size_t nearest_training_index(Vec2 x) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < train_->size(); ++l) {
      const double d = (train_->points[l].position - x).norm();
      if (d < best_d) {
        best_d = d;
        best = l;
      }
    }
    return best;
  }

private:
  static std::size_t cell_of(double v, double lo, double w) { return static_cast<std::size_t>((v - lo) / w); }

  void build_grid() {
    lo_ = hi_ = tri_.points.front();
    for (const auto &p : tri_.points) {
      lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
      hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y)};
    }
    grid_n_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(tri_.triangles.size()))));
    // a hair wider than the extent so hi_ maps into the last cell
    cell_w_ = std::max((hi_.x - lo_.x) * (1.0 + 1e-12), 1e-300) / static_cast<double>(grid_n_);
    cell_h_ = std::max((hi_.y - lo_.y) * (1.0 + 1e-12), 1e-300) / static_cast<double>(grid_n_);
    grid_.assign(grid_n_ * grid_n_, {});
    for (std::size_t t = 0; t < tri_.triangles.size(); ++t) {
      const auto &v = tri_.triangles[t];
      Vec2 a = tri_.points[v[0]], b = a;
      for (int i = 1; i < 3; ++i) {
        const auto &p = tri_.points[v[i]];
        a = {std::min(a.x, p.x), std::min(a.y, p.y)};
        b = {std::max(b.x, p.x), std::max(b.y, p.y)};
      }
      const auto x0 = std::min(grid_n_ - 1, cell_of(a.x, lo_.x, cell_w_));
      const auto x1 = std::min(grid_n_ - 1, cell_of(b.x, lo_.x, cell_w_));
      const auto y0 = std::min(grid_n_ - 1, cell_of(a.y, lo_.y, cell_h_));
      const auto y1 = std::min(grid_n_ - 1, cell_of(b.y, lo_.y, cell_h_));
      for (auto y = y0; y <= y1; ++y)
        for (auto x = x0; x <= x1; ++x) grid_[y * grid_n_ + x].push_back(t);
    }
  }

  std::shared_ptr<const CsiDataset> train_;
  FallbackPolicy fallback_;
  Triangulation tri_;
  std::vector<std::size_t> vertex_source_;
  Vec2 lo_, hi_;
  std::size_t grid_n_{1};
  double cell_w_{1.0}, cell_h_{1.0};
  std::vector<std::vector<std::size_t>> grid_;
};

/// Duplicate positions keep their first occurrence. Throws for fewer than three
/// distinct positions or collinear input.
inline Interpolant build_interpolant(std::shared_ptr<const CsiDataset> train,
                                     FallbackPolicy fallback = FallbackPolicy::nearest_neighbor) {
  return Interpolant(std::move(train), fallback);
}

inline Interpolant build_interpolant(const CsiDataset &train, FallbackPolicy fallback = FallbackPolicy::nearest_neighbor) {
  return Interpolant(std::make_shared<const CsiDataset>(train), fallback);
}

struct InterpolationResult {
  CsiTensor csi;
  bool outside_hull{false}; ///< nearest-neighbor fallback was used
  bool degenerate{false};
};

inline InterpolationResult interpolate_at(const Interpolant &interp, Vec2 x, const BlendOptions &opt = {}) {
  const auto &train = interp.training_set();
  if (const auto loc = interp.locate(x)) {
    const auto &v = interp.triangulation().triangles[loc->triangle];
    const auto &h1 = train.points[interp.source_index(v[0])].csi;
    const auto &h2 = train.points[interp.source_index(v[1])].csi;
    const auto &h3 = train.points[interp.source_index(v[2])].csi;
    auto blend = phase_aligned_blend(h1, h2, h3, loc->coords, opt);
    return {std::move(blend.csi), false, blend.degenerate};
  }
  if (interp.fallback() == FallbackPolicy::error)
    throw OutsideHullError("interpolate_at: query lies outside the convex hull of the training positions");
  return {train.points[interp.nearest_training_index(x)].csi, true, false};
}

} // namespace csigan
