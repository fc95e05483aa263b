#pragma once

#include <atomic>
#include <complex>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "csigan/csi_core.hpp"
#include "csigan/rng.hpp"
#include "csigan/synth.hpp"

namespace testing {

using csigan::cplx;

inline csigan::CsiTensor random_tensor(const csigan::ArrayGeometry &g, csigan::Rng &rng, double scale = 1.0) {
  csigan::CsiTensor t(g);
  std::normal_distribution<double> n(0.0, scale);
  for (auto &v : t.values()) {
    const double re = n(rng);
    const double im = n(rng);
    v = {re, im};
  }
  return t;
}

inline csigan::CsiDataset random_dataset(const csigan::ArrayGeometry &g, std::size_t count, std::uint64_t seed) {
  csigan::Rng rng(seed);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  csigan::CsiDataset ds;
  ds.geometry = g;
  for (std::size_t l = 0; l < count; ++l) {
    const double x = u(rng);
    const double y = u(rng);
    ds.points.push_back({random_tensor(g, rng), {x, y}});
  }
  return ds;
}

/// Fresh directory under the system temp dir, unique within the process run.
inline std::filesystem::path temp_dir(const std::string &name) {
  static std::atomic<int> counter{0};
  auto p = std::filesystem::temp_directory_path() /
           ("csigan_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// One array at the origin facing +x, no reflectors, zero noise.
inline csigan::Scenario los_scenario(csigan::ArrayGeometry g) {
  csigan::Scenario s;
  s.geometry = g;
  for (std::size_t b = 0; b < g.num_arrays; ++b) s.arrays.push_back({{0.0, 3.0 * static_cast<double>(b)}, 0.0});
  return s;
}

} // namespace testing
