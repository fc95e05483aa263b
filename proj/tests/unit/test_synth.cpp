#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "csigan/metrics.hpp"
#include "csigan/synth.hpp"
#include "helpers.hpp"

using namespace csigan;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double deg = std::numbers::pi / 180.0;

Vec2 at_angle(double az, double dist) { return {dist * std::cos(az), dist * std::sin(az)}; }

} // namespace

TEST_CASE("broadside LoS gives zero azimuth", "[synth]") {
  const auto sc = testing::los_scenario({1, 2, 4, 16});
  const auto h = synth_csi(sc, {40.0, 0.0});
  CHECK_THAT(root_music_azimuth(array_correlation(h, 0)), WithinAbs(0.0, 1e-3));
}

TEST_CASE("integer delay peaks at that tap with negligible spread", "[synth]") {
  const ArrayGeometry g{1, 1, 2, 32};
  for (int k : {0, 3, 10, 25}) {
    CsiTensor h(g);
    render_paths(h, 0, {{0.2, 0.0, static_cast<double>(k) / g.bandwidth, {0.7, -0.1}}}, g.bandwidth);
    const auto a = h.antenna(0, 0, 1);
    const auto peak = std::max_element(a.begin(), a.end(), [](cplx x, cplx y) { return std::abs(x) < std::abs(y); });
    CHECK(peak - a.begin() == k);
    CHECK(rms_delay_spread_taps(a).spread < 0.05);
  }
}

TEST_CASE("two equal paths at taps 1 and 3 spread by one tap", "[synth]") {
  const ArrayGeometry g{1, 1, 1, 16};
  CsiTensor h(g);
  render_paths(h, 0, {{0.0, 0.0, 1.0 / g.bandwidth, {1.0, 0.0}}, {0.0, 0.0, 3.0 / g.bandwidth, {0.0, 1.0}}}, g.bandwidth);
  const auto m = rms_delay_spread(h, g);
  CHECK_THAT(m.per_antenna[0], WithinRel(g.tap_duration(), 0.02));
}

TEST_CASE("synth_dataset is deterministic and handles empty input", "[synth]") {
  auto sc = testing::los_scenario({2, 2, 2, 12});
  sc.reflectors.push_back({{20.0, 15.0}, {0.5, 0.2}});
  sc.noise_power = 1e-4;
  sc.seed = 42;
  const auto pos = grid_positions({5, -10}, {30, 10}, 6, 5);
  const auto a = synth_dataset(sc, pos);
  const auto b = synth_dataset(sc, pos);
  REQUIRE(a.size() == 30);
  for (std::size_t l = 0; l < a.size(); ++l) CHECK(a.points[l].csi == b.points[l].csi);

  // noise streams are per index, so one position regenerates alone
  CHECK(synth_csi(sc, pos[7], 7) == a.points[7].csi);
  sc.seed = 43;
  CHECK_FALSE(synth_dataset(sc, pos).points[0].csi == a.points[0].csi);
  CHECK(synth_dataset(sc, {}).empty());
}

TEST_CASE("LoS power falls off with distance", "[synth]") {
  const ArrayGeometry g{1, 2, 2, 32, 1.272e9, 50e6};
  auto sc = testing::los_scenario(g);
  const auto pos = grid_positions({3, -12}, {60, 12}, 10, 10);
  const auto ds = synth_dataset(sc, pos);
  std::vector<std::pair<double, double>> dp;
  for (const auto &p : ds.points) dp.emplace_back(p.position.norm(), total_rx_power(p.csi, 0));
  std::sort(dp.begin(), dp.end());
  // the windowed sinc loses a few percent of energy at fractional delays
  for (std::size_t i = 1; i < dp.size(); ++i) CHECK(dp[i].second <= dp[i - 1].second * 1.05);
  // exact: 4 elements at gain 1/d, each carrying the sampled energy of a
  // Hann-windowed sinc centred on the fractional delay
  auto kernel_energy = [&](double center) {
    double e = 0.0;
    for (std::size_t t = 0; t < g.num_taps; ++t) {
      const double x = static_cast<double>(t) - center;
      if (std::abs(x) >= 8.0) continue;
      const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * x / 8.0));
      const double s = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      e += w * w * s * s;
    }
    return e;
  };
  for (const auto &[d, p] : dp) {
    const double center = d / 299'792'458.0 * g.bandwidth;
    CHECK_THAT(p * d * d, WithinRel(4.0 * kernel_energy(center), 1e-9));
  }
}

TEST_CASE("single-path CSI is rank one per array", "[synth]") {
  const auto sc = testing::los_scenario({1, 2, 4, 16});
  for (double az : {-50.0, -10.0, 0.0, 35.0}) {
    const auto r = array_correlation(synth_csi(sc, at_angle(az * deg, 25.0)), 0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(r.entries);
    CHECK(eig.eigenvalues().maxCoeff() > 0.999 * r.entries.trace().real());
  }
}

TEST_CASE("ground-truth azimuth is recovered within half a degree", "[synth]") {
  const auto sc = testing::los_scenario({1, 2, 4, 16});
  for (int a = -60; a <= 60; a += 5) {
    const auto h = synth_csi(sc, at_angle(a * deg, 30.0));
    CHECK_THAT(root_music_azimuth(array_correlation(h, 0)) / deg, WithinAbs(a, 0.5));
  }
}

TEST_CASE("doubling every path gain quadruples power", "[synth]") {
  const ArrayGeometry g{1, 2, 2, 16};
  const std::vector<PathSpec> paths{{0.3, 0.0, 2.4e-8, {0.4, 0.1}}, {-0.5, 0.1, 9.1e-8, {-0.2, 0.3}}};
  auto doubled = paths;
  for (auto &p : doubled) p.gain *= 2.0;
  CsiTensor a(g), b(g);
  render_paths(a, 0, paths, g.bandwidth);
  render_paths(b, 0, doubled, g.bandwidth);
  CHECK_THAT(total_rx_power(b, 0), WithinRel(4.0 * total_rx_power(a, 0), 1e-9));
}

TEST_CASE("path enumeration respects geometry", "[synth]") {
  ArrayGeometry g{1, 1, 4, 16};
  auto sc = testing::los_scenario(g);
  sc.reflectors.push_back({{10.0, 10.0}, {0.5, 0.0}});
  sc.reflectors.push_back({{-10.0, 0.0}, {0.5, 0.0}}); // behind the array
  const Vec2 ue{20.0, 0.0};
  auto p = synth_paths(sc, ue)[0];
  REQUIRE(p.size() == 2);
  CHECK_THAT(p[0].azimuth, WithinAbs(0.0, 1e-15));
  CHECK_THAT(p[0].delay, WithinRel(20.0 / 299'792'458.0, 1e-12));
  CHECK_THAT(p[1].azimuth, WithinAbs(std::numbers::pi / 4, 1e-12));
  const double len = std::hypot(10.0, 10.0) * 2.0;
  CHECK_THAT(std::abs(p[1].gain), WithinRel(0.5 / len, 1e-12));

  // a wall between UE and array removes the LoS leg only
  sc.blockers.push_back({{15.0, -1.0}, {15.0, 1.0}});
  p = synth_paths(sc, ue)[0];
  REQUIRE(p.size() == 1);
  CHECK(p[0].azimuth > 0.5);

  // paths at or beyond the last tap are dropped
  sc.blockers.clear();
  sc.delay_offset = 15.0 / g.bandwidth;
  CHECK(synth_paths(sc, ue)[0].empty());
}

TEST_CASE("synth errors", "[synth]") {
  auto sc = testing::los_scenario({1, 1, 2, 8});
  CHECK_THROWS_AS(synth_csi(sc, {0.0, 0.0}), std::domain_error);
  sc.region = {{1, -5}, {10, 5}};
  CHECK_THROWS_AS(synth_csi(sc, {20.0, 0.0}), std::domain_error);
  sc.arrays.clear();
  CHECK_THROWS_AS(synth_csi(sc, {5.0, 0.0}), std::invalid_argument);
}

TEST_CASE("windowed sinc and grid helpers", "[synth]") {
  CHECK(windowed_sinc(0.0) == 1.0);
  for (int k = 1; k < 8; ++k) CHECK(std::abs(windowed_sinc(k)) < 1e-15);
  CHECK(windowed_sinc(8.0) == 0.0);
  CHECK(windowed_sinc(-9.5) == 0.0);
  CHECK_THAT(windowed_sinc(0.3), WithinAbs(windowed_sinc(-0.3), 0.0));

  const auto g = grid_positions({0, 0}, {2, 1}, 3, 2);
  REQUIRE(g.size() == 6);
  CHECK(g[0] == Vec2{0, 0});
  CHECK(g[2] == Vec2{2, 0});
  CHECK(g[3] == Vec2{2, 1}); // serpentine: second row runs backwards
  CHECK(g[5] == Vec2{0, 1});
  CHECK(grid_positions({0, 0}, {1, 1}, 0, 4).empty());
}
