#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csigan/csi_core.hpp"

namespace csigan {

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
inline double orient2d(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

struct Circumcircle {
  Vec2 center;
  double radius{0.0};
};

inline std::optional<Circumcircle> circumcircle(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 ab = b - a;
  const Vec2 ac = c - a;
  const double d = 2.0 * cross(ab, ac);
  if (d == 0.0) return std::nullopt;
  const double ab2 = dot(ab, ab);
  const double ac2 = dot(ac, ac);
  const Vec2 off{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
  return Circumcircle{a + off, off.norm()};
}

/// True when d lies strictly inside the circumcircle of (a, b, c) by more than
/// rel_tol times the radius.
inline bool in_circumcircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d, double rel_tol) {
  const auto cc = circumcircle(a, b, c);
  if (!cc) return false;
  return (d - cc->center).norm() < cc->radius * (1.0 - rel_tol);
}

struct Triangulation {
  std::vector<Vec2> points;
  /// Vertex indices into `points`, counter-clockwise.
  std::vector<std::array<std::size_t, 3>> triangles;

  [[nodiscard]] double area(std::size_t t) const {
    const auto &v = triangles[t];
    return 0.5 * orient2d(points[v[0]], points[v[1]], points[v[2]]);
  }
};

namespace detail {

using EdgeKey = std::pair<std::size_t, std::size_t>;
inline EdgeKey edge_key(std::size_t a, std::size_t b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

class EdgeTable {
public:
  void add(std::size_t a, std::size_t b, long tri) {
    auto &slot = map_.try_emplace(edge_key(a, b), std::array<long, 2>{-1, -1}).first->second;
    if (slot[0] < 0) slot[0] = tri;
    else slot[1] = tri;
  }

  void replace(std::size_t a, std::size_t b, long old_tri, long new_tri) {
    auto &slot = map_.at(edge_key(a, b));
    if (slot[0] == old_tri) slot[0] = new_tri;
    else if (slot[1] == old_tri) slot[1] = new_tri;
  }

  void erase(std::size_t a, std::size_t b) { map_.erase(edge_key(a, b)); }

  [[nodiscard]] const std::array<long, 2> *find(std::size_t a, std::size_t b) const {
    const auto it = map_.find(edge_key(a, b));
    return it == map_.end() ? nullptr : &it->second;
  }

  [[nodiscard]] const auto &all() const { return map_; }

private:
  std::map<EdgeKey, std::array<long, 2>> map_;
};

} // namespace detail

/// Delaunay triangulation of distinct points. A sweep over points sorted by
/// (x, y) produces a triangulation of the convex hull; Lawson edge flips then
/// restore the empty-circumcircle property.
///
/// Throws std::invalid_argument for fewer than three points, duplicate points,
/// or when all points are collinear.
inline Triangulation delaunay_triangulate(std::span<const Vec2> input) {
  if (input.size() < 3) throw std::invalid_argument("delaunay_triangulate: need at least three points");
  Triangulation tri;
  tri.points.assign(input.begin(), input.end());
  const auto &pts = tri.points;
  for (const auto &p : pts)
    if (!p.finite()) throw std::invalid_argument("delaunay_triangulate: non-finite point");

  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x != pts[b].x ? pts[a].x < pts[b].x : pts[a].y < pts[b].y;
  });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (pts[order[i]] == pts[order[i - 1]]) throw std::invalid_argument("delaunay_triangulate: duplicate points");

  std::size_t k = 2;
  while (k < order.size() && orient2d(pts[order[0]], pts[order[1]], pts[order[k]]) == 0.0) ++k;
  if (k == order.size()) throw std::invalid_argument("delaunay_triangulate: all points are collinear");

  auto push = [&](std::size_t a, std::size_t b, std::size_t c) {
    if (orient2d(pts[a], pts[b], pts[c]) < 0.0) std::swap(b, c);
    tri.triangles.push_back({a, b, c});
  };

  // fan from the first off-line point over the collinear prefix
  const std::size_t apex = order[k];
  for (std::size_t i = 0; i + 1 < k; ++i) push(order[i], order[i + 1], apex);

  std::vector<std::size_t> hull;
  if (orient2d(pts[order[0]], pts[order[k - 1]], pts[apex]) > 0.0) {
    for (std::size_t i = 0; i < k; ++i) hull.push_back(order[i]);
  } else {
    for (std::size_t i = k; i-- > 0;) hull.push_back(order[i]);
  }
  hull.push_back(apex);

  std::vector<char> visible;
  for (std::size_t i = k + 1; i < order.size(); ++i) {
    const std::size_t q = order[i];
    const std::size_t h = hull.size();
    visible.assign(h, 0);
    bool any = false;
    for (std::size_t e = 0; e < h; ++e) {
      visible[e] = orient2d(pts[hull[e]], pts[hull[(e + 1) % h]], pts[q]) < 0.0;
      any = any || visible[e];
    }
    if (!any) throw std::logic_error("delaunay_triangulate: sweep point not visible from hull");

    std::size_t start = 0;
    while (!(visible[start] && !visible[(start + h - 1) % h])) ++start;
    std::size_t count = 0;
    while (visible[(start + count) % h]) {
      const std::size_t e = (start + count) % h;
      push(hull[(e + 1) % h], hull[e], q);
      ++count;
    }
    // keep hull[start] .. visible chain end, drop the interior of the chain
    std::vector<std::size_t> next;
    next.reserve(h + 1);
    next.push_back(hull[start]);
    next.push_back(q);
    for (std::size_t j = start + count; j < start + h; ++j) next.push_back(hull[j % h]);
    hull = std::move(next);
  }

  // Lawson flips
  detail::EdgeTable edges;
  for (std::size_t t = 0; t < tri.triangles.size(); ++t) {
    const auto &v = tri.triangles[t];
    for (int e = 0; e < 3; ++e) edges.add(v[e], v[(e + 1) % 3], static_cast<long>(t));
  }
  std::vector<detail::EdgeKey> stack;
  for (const auto &[key, owners] : edges.all())
    if (owners[1] >= 0) stack.push_back(key);

  constexpr double flip_tol = 1e-12;
  while (!stack.empty()) {
    const auto [ea, eb] = stack.back();
    stack.pop_back();
    const auto *owners = edges.find(ea, eb);
    if (owners == nullptr || (*owners)[1] < 0) continue;
    const long t1 = (*owners)[0];
    const long t2 = (*owners)[1];
    auto &v1 = tri.triangles[static_cast<std::size_t>(t1)];
    auto &v2 = tri.triangles[static_cast<std::size_t>(t2)];

    // orient so that t1 = (a, b, c) and t2 = (b, a, d), both counter-clockwise
    std::size_t a = 0, b = 0, c = 0;
    for (int e = 0; e < 3; ++e) {
      const std::size_t x = v1[e], y = v1[(e + 1) % 3];
      if (detail::edge_key(x, y) == detail::edge_key(ea, eb)) {
        a = x;
        b = y;
        c = v1[(e + 2) % 3];
      }
    }
    std::size_t d = 0;
    for (int e = 0; e < 3; ++e)
      if (v2[e] != a && v2[e] != b) d = v2[e];

    if (!in_circumcircle(pts[a], pts[b], pts[c], pts[d], flip_tol)) continue;
    // the quad (a, d, b, c) must be strictly convex for the flip to be valid
    if (orient2d(pts[a], pts[d], pts[c]) <= 0.0 || orient2d(pts[d], pts[b], pts[c]) <= 0.0) continue;

    v1 = {a, d, c};
    v2 = {d, b, c};
    edges.erase(a, b);
    edges.add(c, d, t1);
    edges.add(c, d, t2);
    edges.replace(a, d, t2, t1);
    edges.replace(b, c, t1, t2);
    for (auto [x, y] : {std::pair{a, d}, std::pair{d, b}, std::pair{b, c}, std::pair{c, a}})
      stack.push_back(detail::edge_key(x, y));
  }
  return tri;
}

/// Counts (triangle, vertex) pairs where the vertex lies inside the
/// triangle's circumcircle by more than rel_tol of the radius. Brute force,
/// intended for verification.
inline std::size_t count_delaunay_violations(const Triangulation &tri, double rel_tol = 1e-9) {
  std::size_t violations = 0;
  for (const auto &v : tri.triangles) {
    const auto cc = circumcircle(tri.points[v[0]], tri.points[v[1]], tri.points[v[2]]);
    if (!cc) {
      ++violations;
      continue;
    }
    for (std::size_t p = 0; p < tri.points.size(); ++p) {
      if (p == v[0] || p == v[1] || p == v[2]) continue;
      if ((tri.points[p] - cc->center).norm() < cc->radius * (1.0 - rel_tol)) ++violations;
    }
  }
  return violations;
}

} // namespace csigan
