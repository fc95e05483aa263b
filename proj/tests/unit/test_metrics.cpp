#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "csigan/metrics.hpp"
#include "helpers.hpp"

using namespace csigan;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double deg = std::numbers::pi / 180.0;

// Brute-force power-weighted moments, written out independently.
double brute_spread(const std::vector<double> &power) {
  double p = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t t = 0; t < power.size(); ++t) {
    p += power[t];
    m1 += static_cast<double>(t + 1) * power[t];
    m2 += static_cast<double>((t + 1) * (t + 1)) * power[t];
  }
  return std::sqrt(m2 / p - (m1 / p) * (m1 / p));
}

/// Single plane wave on an M_r x M_c array, optional noise at the given SNR.
CsiTensor plane_wave(double az, std::size_t rows, std::size_t cols, std::size_t taps, double snr_db, Rng *rng) {
  CsiTensor h(1, rows, cols, taps);
  std::normal_distribution<double> tapgain(0.0, 1.0);
  Rng local(5);
  Rng &r = rng ? *rng : local;
  std::vector<cplx> s(taps);
  for (auto &v : s) {
    const double re = tapgain(r);
    const double im = tapgain(r);
    v = {re, im};
  }
  double sig = 0.0;
  for (std::size_t m = 0; m < rows; ++m)
    for (std::size_t c = 0; c < cols; ++c)
      for (std::size_t t = 0; t < taps; ++t) {
        h(0, m, c, t) = s[t] * std::polar(1.0, std::numbers::pi * static_cast<double>(c) * std::sin(az));
        sig += std::norm(h(0, m, c, t));
      }
  if (rng && std::isfinite(snr_db)) {
    const double np = sig / static_cast<double>(h.size()) / std::pow(10.0, snr_db / 10.0);
    std::normal_distribution<double> n(0.0, std::sqrt(np / 2.0));
    for (auto &v : h.values()) {
      const double re = n(*rng);
      const double im = n(*rng);
      v += cplx{re, im};
    }
  }
  return h;
}

Density density(std::vector<double> p) {
  Density d;
  d.probabilities = std::move(p);
  for (std::size_t i = 0; i <= d.probabilities.size(); ++i) d.edges.push_back(static_cast<double>(i));
  return d;
}

} // namespace

TEST_CASE("delay spread closed forms", "[metrics]") {
  const ArrayGeometry g{1, 1, 1, 48, 1.272e9, 50e6};
  CsiTensor single(g);
  single(0, 0, 0, 17) = {0.3, -2.0};
  CHECK(rms_delay_spread(single, g).per_antenna[0] == 0.0);

  CsiTensor two(g);
  two(0, 0, 0, 0) = {1.0, 0.0};
  two(0, 0, 0, 2) = {0.0, -1.0};
  const auto t = rms_delay_spread_taps(two.antenna(0, 0, 0));
  CHECK_THAT(t.mean, WithinAbs(2.0, 1e-12));
  CHECK_THAT(t.spread, WithinAbs(1.0, 1e-12));
  CHECK_THAT(rms_delay_spread(two, g).per_antenna[0], WithinRel(20e-9, 1e-12));

  CsiTensor uniform(g);
  for (auto &v : uniform.values()) v = std::polar(1.0, 0.1);
  const double expected = std::sqrt((48.0 * 48.0 - 1.0) / 12.0);
  CHECK_THAT(expected, WithinAbs(13.8534, 1e-4));
  CHECK_THAT(rms_delay_spread_taps(uniform.antenna(0, 0, 0)).spread, WithinAbs(expected, 1e-9));
  CHECK_THAT(rms_delay_spread_taps(uniform.antenna(0, 0, 0)).spread,
             WithinAbs(brute_spread(std::vector<double>(48, 1.0)), 1e-9));
}

TEST_CASE("delay spread matches brute force and map invariants", "[metrics]") {
  const ArrayGeometry g{2, 2, 3, 16};
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto h = testing::random_tensor(g, rng);
    const auto m = rms_delay_spread(h, g);
    for (std::size_t b = 0; b < 2; ++b) {
      double sum = 0.0;
      for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
          std::vector<double> p;
          for (auto v : h.antenna(b, r, c)) p.push_back(std::norm(v));
          CHECK_THAT(m.at(b, r, c), WithinRel(brute_spread(p) * g.tap_duration(), 1e-9));
          CHECK(m.at(b, r, c) >= 0.0);
          CHECK(m.at(b, r, c) <= 16 * g.tap_duration());
          sum += m.at(b, r, c);
        }
      CHECK_THAT(m.per_array_mean[b], WithinRel(sum / 6.0, 1e-12));
    }
    // invariant under global phase and uniform scaling
    auto s = h;
    s *= cplx{0.0, -3.7};
    const auto ms = rms_delay_spread(s, g);
    for (std::size_t i = 0; i < m.per_antenna.size(); ++i) CHECK_THAT(ms.per_antenna[i], WithinRel(m.per_antenna[i], 1e-12));
  }
}

TEST_CASE("zero-power antenna is flagged, not a crash", "[metrics]") {
  const ArrayGeometry g{1, 1, 2, 4};
  CsiTensor h(g);
  h(0, 0, 1, 2) = 1.0;
  const auto m = rms_delay_spread(h, g);
  CHECK(m.per_antenna[0] == 0.0);
  CHECK(m.zero_power[0]);
  CHECK_FALSE(m.zero_power[1]);
}

TEST_CASE("array correlation examples", "[metrics]") {
  const ArrayGeometry g{2, 2, 4, 8};
  CHECK(array_correlation(CsiTensor(g), 1).entries.isZero(0.0));
  CHECK_THROWS_AS(array_correlation(CsiTensor(g), 2), std::out_of_range);

  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = testing::random_tensor(g, rng);
    const auto r = array_correlation(h, 1).entries;
    const double scale = r.norm();
    CHECK((r - r.adjoint()).norm() <= 1e-12 * scale);
    for (Eigen::Index i = 0; i < 4; ++i) {
      CHECK(r(i, i).imag() == 0.0);
      CHECK(r(i, i).real() >= 0.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(r);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9 * r.trace().real());
    // entry (0, 1) against the defining double sum
    cplx acc{0.0, 0.0};
    for (std::size_t m = 0; m < 2; ++m)
      for (std::size_t t = 0; t < 8; ++t) acc += h(1, m, 0, t) * std::conj(h(1, m, 1, t));
    CHECK(std::abs(acc - r(0, 1)) <= 1e-12 * scale);
  }

  const auto one = plane_wave(0.4, 2, 4, 8, INFINITY, nullptr);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(array_correlation(one, 0).entries);
  const auto ev = eig.eigenvalues();
  CHECK(ev(3) > 0.0);
  CHECK(ev(2) <= 1e-12 * ev(3));
}

TEST_CASE("root-MUSIC examples", "[metrics]") {
  // broadside: all-ones steering
  CHECK_THAT(root_music_azimuth(array_correlation(plane_wave(0.0, 1, 4, 4, INFINITY, nullptr), 0)), WithinAbs(0.0, 1e-9));

  // +30 deg from the outer product of the steering vector
  Eigen::VectorXcd a(4);
  for (int c = 0; c < 4; ++c) a(c) = std::polar(1.0, std::numbers::pi * c * std::sin(30 * deg));
  CorrelationMatrix r{a * a.adjoint(), 0};
  CHECK_THAT(root_music_azimuth(r) / deg, WithinAbs(30.0, 0.1));

  // -45 deg at 20 dB SNR, averaged over seeded noise draws
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = plane_wave(-45 * deg, 2, 4, 48, 20.0, &rng);
    CHECK_THAT(root_music_azimuth(array_correlation(h, 0)) / deg, WithinAbs(-45.0, 1.0));
  }
}

TEST_CASE("root-MUSIC sweep and scaling invariance", "[metrics]") {
  for (int a = -60; a <= 60; a += 10) {
    const auto h = plane_wave(a * deg, 2, 4, 16, INFINITY, nullptr);
    auto r = array_correlation(h, 0);
    const double est = root_music_azimuth(r);
    CHECK(std::abs(est / deg - a) < 0.5);
    for (double c : {1e-6, 1.0, 1e6}) {
      CorrelationMatrix scaled{r.entries * c, 0};
      CHECK(std::abs(root_music_azimuth(scaled) - est) <= 1e-9);
    }
  }
}

TEST_CASE("root-MUSIC errors", "[metrics]") {
  CHECK_THROWS_AS(root_music_azimuth(CorrelationMatrix{Eigen::MatrixXcd::Zero(4, 4), 0}), NoSignalError);
  CHECK_THROWS_AS(root_music_azimuth(CorrelationMatrix{Eigen::MatrixXcd::Identity(1, 1), 0}), std::invalid_argument);
}

TEST_CASE("histogram examples", "[metrics]") {
  const std::vector<double> edges{0.0, 1.0, 2.0, 3.0};
  const auto one_bin = histogram_density(std::vector<double>{1.2, 1.5, 1.9}, edges);
  CHECK(one_bin.probabilities == std::vector<double>{0.0, 1.0, 0.0});
  const auto single = histogram_density(std::vector<double>{0.1}, edges);
  CHECK(single.probabilities == std::vector<double>{1.0, 0.0, 0.0});
  // clipping into the end bins
  const auto clipped = histogram_density(std::vector<double>{-5.0, 3.0, 99.0, 2.5}, edges);
  CHECK(clipped.probabilities == std::vector<double>{0.25, 0.0, 0.75});
  CHECK_THROWS_AS(histogram_density(std::vector<double>{}, edges), std::invalid_argument);
  CHECK_THROWS_AS(histogram_density(std::vector<double>{1.0}, std::vector<double>{0.0, 0.0, 1.0}), std::invalid_argument);

  // law of large numbers on 10 uniform bins
  Rng rng(77);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<double> v(1'000'000);
  for (auto &x : v) x = u(rng);
  std::vector<double> e10;
  for (int i = 0; i <= 10; ++i) e10.push_back(i);
  const auto d = histogram_density(v, e10);
  double total = 0.0;
  for (double p : d.probabilities) {
    CHECK_THAT(p, WithinAbs(0.1, 0.005));
    total += p;
  }
  CHECK_THAT(total, WithinAbs(1.0, 1e-12));
}

TEST_CASE("pooled edges span every set", "[metrics]") {
  const std::vector<std::vector<double>> sets{{1.0, 2.0}, {-3.0, 0.5}, {7.0}};
  const auto e = pooled_edges(sets, 150);
  REQUIRE(e.size() == 151);
  CHECK(e.front() == -3.0);
  CHECK(e.back() == 7.0);
  for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i] > e[i - 1]);
  const std::vector<std::vector<double>> same{{2.0, 2.0}};
  const auto w = pooled_edges(same, 4);
  CHECK(w.front() == 1.5);
  CHECK(w.back() == 2.5);
}

TEST_CASE("KL divergence examples", "[metrics]") {
  const auto p = density({1.0, 0.0});
  CHECK(kl_divergence(p, p) == 0.0);
  CHECK_THAT(kl_divergence(p, density({0.5, 0.5})), WithinAbs(std::log(2.0), 1e-15));
  CHECK(std::isinf(kl_divergence(p, density({0.0, 1.0}))));
  auto other = density({0.5, 0.5});
  other.edges = {0.0, 1.0, 3.0};
  CHECK_THROWS_AS(kl_divergence(p, other), std::invalid_argument);
}

TEST_CASE("JS distance identities", "[metrics]") {
  const auto p = density({0.2, 0.3, 0.5});
  CHECK(js_distance(p, p) == 0.0);
  CHECK_THAT(js_distance(density({1.0, 0.0}), density({0.0, 1.0})), WithinAbs(std::sqrt(std::log(2.0)), 1e-12));
  CHECK_THAT(js_distance(density({0.5, 0.5, 0.0, 0.0}), density({0.0, 0.0, 0.3, 0.7})),
             WithinAbs(std::sqrt(std::log(2.0)), 1e-12));

  Rng rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> a(12), b(12);
    double sa = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < 12; ++k) {
      a[k] = u(rng) < 0.2 ? 0.0 : u(rng);
      b[k] = u(rng) < 0.2 ? 0.0 : u(rng);
      sa += a[k];
      sb += b[k];
    }
    if (sa == 0.0 || sb == 0.0) continue;
    for (auto &x : a) x /= sa;
    for (auto &x : b) x /= sb;
    const double pq = js_distance(density(a), density(b));
    const double qp = js_distance(density(b), density(a));
    CHECK_THAT(pq, WithinAbs(qp, 1e-12));
    CHECK(pq >= 0.0);
    CHECK(pq <= std::sqrt(std::log(2.0)) + 1e-12);
  }
}

TEST_CASE("JSD matrix examples", "[metrics]") {
  const std::vector<double> base{1.0, 2.0, 2.5, 3.0, 4.0};
  auto m = jsd_matrix({{"a", base}, {"b", base}}, 10);
  CHECK(m.distance == std::vector<std::vector<double>>{{0.0, 0.0}, {0.0, 0.0}});

  std::vector<double> shifted;
  for (double v : base) shifted.push_back(v + 100.0);
  m = jsd_matrix({{"train", base}, {"copy", base}, {"far", shifted}}, 150);
  CHECK(m.labels == std::vector<std::string>{"train", "copy", "far"});
  CHECK(m.distance[0][1] == 0.0);
  CHECK_THAT(m.distance[0][2], WithinAbs(std::sqrt(std::log(2.0)), 1e-12));
  CHECK_THAT(m.distance[1][2], WithinAbs(std::sqrt(std::log(2.0)), 1e-12));

  Rng rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<NamedValues> sets;
  for (int s = 0; s < 5; ++s) {
    NamedValues nv{"s" + std::to_string(s), {}};
    for (int i = 0; i < 200; ++i) nv.values.push_back(n(rng) * (1.0 + s * 0.3) + s * 0.2);
    sets.push_back(nv);
  }
  m = jsd_matrix(sets, 150);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(m.distance[i][i] == 0.0);
    for (std::size_t j = 0; j < 5; ++j) CHECK(m.distance[i][j] == m.distance[j][i]);
  }
  CHECK_THROWS_AS(jsd_matrix({{"only", base}}), std::invalid_argument);
  CHECK_THROWS_AS(jsd_matrix({{"a", base}, {"empty", {}}}), std::invalid_argument);
}

TEST_CASE("Gaussian fit baseline", "[metrics]") {
  const std::vector<double> v{1, 1, 1, 3, 3, 3};
  const auto s = gaussian_fit_samples(v, 200'000, 5);
  double mean = 0.0;
  for (double x : s) mean += x;
  mean /= static_cast<double>(s.size());
  double ss = 0.0;
  for (double x : s) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(s.size() - 1));
  CHECK_THAT(mean, WithinAbs(2.0, 0.02));
  CHECK_THAT(sd, WithinRel(std::sqrt(1.2), 0.02));
  CHECK(gaussian_fit_samples(v, 100, 5) == gaussian_fit_samples(v, 100, 5));
  CHECK(gaussian_fit_samples(v, 0, 5).empty());
  CHECK_THROWS_AS(gaussian_fit_samples(std::vector<double>{2, 2, 2}, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_fit_samples(std::vector<double>{2}, 10, 1), std::invalid_argument);
}

TEST_CASE("phase-aligned NMSE", "[metrics]") {
  const ArrayGeometry g{1, 2, 2, 4};
  Rng rng(12);
  const auto h = testing::random_tensor(g, rng);
  auto rotated = h;
  rotated *= std::polar(1.0, 2.1);
  CHECK(phase_aligned_nmse(rotated, h) < 1e-15);
  CHECK_THAT(phase_aligned_nmse(CsiTensor(g), h), WithinAbs(1.0, 1e-15));
  auto scaled = h;
  scaled *= cplx{0.0, 0.5};
  CHECK_THAT(phase_aligned_nmse(scaled, h), WithinAbs(0.25, 1e-12));
  CHECK_THROWS_AS(phase_aligned_nmse(h, CsiTensor(g)), std::invalid_argument);
}
