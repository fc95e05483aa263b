#include <catch_amalgamated.hpp>

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>

#include "csigan/dataset_io.hpp"
#include "csigan/synth.hpp"
#include "helpers.hpp"

using namespace csigan;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<char> read_bytes(const std::string &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string &p, const std::vector<char> &b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

FormatErrc load_error(const std::string &path) {
  try {
    (void)load_dataset(path);
  } catch (const FormatError &e) {
    return e.code();
  }
  FAIL("expected a FormatError");
  return FormatErrc::malformed;
}

CsiDataset line_dataset(std::size_t n) {
  ArrayGeometry g{1, 1, 1, 1};
  CsiDataset ds;
  ds.geometry = g;
  for (std::size_t i = 0; i < n; ++i) ds.points.push_back({CsiTensor(g), {static_cast<double>(i), 0.0}});
  return ds;
}

} // namespace

TEST_CASE("CSIT round trip is exact at f32 precision", "[dataset_io]") {
  const auto dir = testing::temp_dir("csit");
  ArrayGeometry g{2, 2, 3, 5, 3.5e9, 100e6};
  auto ds = testing::random_dataset(g, 10, 99);
  ds.power_reference = 0.125;
  const auto path = (dir / "a.csit").string();
  save_dataset(ds, path, {{"origin", "unit test"}});
  const auto back = load_dataset(path);
  REQUIRE(back.size() == 10);
  CHECK(back.geometry == g);
  REQUIRE(back.power_reference.has_value());
  CHECK(*back.power_reference == 0.125);
  for (std::size_t l = 0; l < 10; ++l) {
    CHECK(back.points[l].position.x == static_cast<double>(static_cast<float>(ds.points[l].position.x)));
    CHECK(back.points[l].position.y == static_cast<double>(static_cast<float>(ds.points[l].position.y)));
    const auto a = ds.points[l].csi.values();
    const auto b = back.points[l].csi.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(b[i].real() == static_cast<double>(static_cast<float>(a[i].real())));
      CHECK(b[i].imag() == static_cast<double>(static_cast<float>(a[i].imag())));
    }
  }
  CHECK(load_provenance(path).at("origin") == "unit test");

  // saving the loaded copy reproduces the file byte for byte
  const auto again = (dir / "b.csit").string();
  save_dataset(back, again, {{"origin", "unit test"}});
  CHECK(read_bytes(path) == read_bytes(again));
}

TEST_CASE("CSIT layout matches the documented byte format", "[dataset_io]") {
  const auto dir = testing::temp_dir("layout");
  ArrayGeometry g{1, 1, 2, 1};
  CsiDataset ds{g, {{CsiTensor(g, {{1.0, 2.0}, {3.0, -4.0}}), {0.5, -1.5}}}, std::nullopt};
  const auto path = (dir / "l.csit").string();
  save_dataset(ds, path);
  const auto b = read_bytes(path);
  REQUIRE(b.size() == csit_header_bytes + 8 + 16);
  CHECK(std::string(b.begin(), b.begin() + 4) == "CSIT");
  CHECK(b[4] == 1);
  CHECK(b[5] == 0);
  auto u32_at = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + i])) << (8 * i);
    return v;
  };
  CHECK(u32_at(6) == 1);
  CHECK(u32_at(10) == 1);
  CHECK(u32_at(14) == 2);
  CHECK(u32_at(18) == 1);
  CHECK(u32_at(22) == 1);
  auto f32_at = [&](std::size_t off) { return std::bit_cast<float>(u32_at(off)); };
  const std::size_t rec = csit_header_bytes;
  CHECK(f32_at(rec) == 0.5f);
  CHECK(f32_at(rec + 4) == -1.5f);
  CHECK(f32_at(rec + 8) == 1.0f);
  CHECK(f32_at(rec + 12) == 2.0f);
  CHECK(f32_at(rec + 16) == 3.0f);
  CHECK(f32_at(rec + 20) == -4.0f);
}

TEST_CASE("CSIT corruption yields distinct error codes", "[dataset_io]") {
  const auto dir = testing::temp_dir("corrupt");
  ArrayGeometry g{1, 2, 2, 3};
  const auto ds = testing::random_dataset(g, 5, 1);
  const auto path = (dir / "good.csit").string();
  save_dataset(ds, path);
  const auto good = read_bytes(path);
  const std::size_t record = 8 + 8 * g.num_entries();

  auto variant = [&](const std::string &name, std::vector<char> bytes) {
    const auto p = (dir / name).string();
    write_bytes(p, bytes);
    return p;
  };

  auto bad_magic = good;
  bad_magic[0] = bad_magic[1] = bad_magic[2] = bad_magic[3] = 'X';
  CHECK(load_error(variant("magic.csit", bad_magic)) == FormatErrc::bad_magic);

  auto bad_version = good;
  bad_version[4] = 2;
  CHECK(load_error(variant("version.csit", bad_version)) == FormatErrc::version_mismatch);

  // header says 5 records, only 4 present
  std::vector<char> truncated(good.begin(), good.end() - static_cast<long>(record));
  CHECK(load_error(variant("trunc.csit", truncated)) == FormatErrc::truncated);

  std::vector<char> short_header(good.begin(), good.begin() + 10);
  CHECK(load_error(variant("short.csit", short_header)) == FormatErrc::truncated);

  auto extra = good;
  extra.push_back(0);
  CHECK(load_error(variant("extra.csit", extra)) == FormatErrc::length_mismatch);

  auto zero_dim = good;
  zero_dim[6] = zero_dim[7] = zero_dim[8] = zero_dim[9] = 0;
  CHECK(load_error(variant("zero.csit", zero_dim)) == FormatErrc::malformed);

  CHECK(load_error((dir / "missing.csit").string()) == FormatErrc::open_failed);
}

TEST_CASE("split on 12 points along a line", "[dataset_io]") {
  const auto ds = line_dataset(12);
  SplitSpec s;
  s.hole_diameter = 0.0;
  s.hole_center = {100.0, 0.0};
  auto r = split_train_test(ds, s);
  CHECK(r.test_indices == std::vector<std::size_t>{0, 4, 8});
  CHECK(r.train_indices == std::vector<std::size_t>{2, 6, 10});

  s.hole_diameter = 2.0;
  s.hole_center = {6.0, 0.0};
  r = split_train_test(ds, s);
  CHECK(r.train_indices == std::vector<std::size_t>{2, 10});
  CHECK(r.test_indices == std::vector<std::size_t>{0, 4, 8});
}

TEST_CASE("split invariants on a synthetic 2000-point set", "[dataset_io]") {
  ArrayGeometry g{1, 1, 1, 1};
  CsiDataset ds;
  ds.geometry = g;
  for (const auto &p : grid_positions({0, 0}, {49, 39}, 50, 40)) ds.points.push_back({CsiTensor(g), p});
  SplitSpec s;
  s.hole_center = {25.0, 20.0};
  const auto r = split_train_test(ds, s);
  const double ratio = static_cast<double>(r.train.size()) / static_cast<double>(r.test.size());
  CHECK(ratio >= 0.7);
  CHECK(ratio <= 1.0);
  for (auto i : r.test_indices) CHECK(i % 4 == 0);
  for (auto i : r.train_indices) {
    CHECK(i % 4 == 2);
    CHECK((ds.points[i].position - s.hole_center).norm() > 2.0);
  }
  std::vector<std::size_t> both;
  std::set_intersection(r.train_indices.begin(), r.train_indices.end(), r.test_indices.begin(), r.test_indices.end(),
                        std::back_inserter(both));
  CHECK(both.empty());
}

TEST_CASE("split errors", "[dataset_io]") {
  const auto ds = line_dataset(3);
  CHECK_THROWS_AS(split_train_test(ds, SplitSpec{}), EmptySplitError);
  SplitSpec bad;
  bad.test_offset = 4;
  CHECK_THROWS_AS(split_train_test(line_dataset(12), bad), std::invalid_argument);
  bad = SplitSpec{};
  bad.train_offset = bad.test_offset;
  CHECK_THROWS_AS(split_train_test(line_dataset(12), bad), std::invalid_argument);
}

TEST_CASE("condition scaler examples", "[dataset_io]") {
  ArrayGeometry g{1, 1, 1, 1};
  CsiDataset ds{g, {{CsiTensor(g), {0, 0}}, {CsiTensor(g), {10, 20}}}, std::nullopt};
  const auto s = fit_condition_scaler(ds);
  CHECK(scale_position(s, {5, 10}) == Vec2{0, 0});
  CHECK(scale_position(s, {0, 0}) == Vec2{-1, -1});
  CHECK(scale_position(s, {10, 20}) == Vec2{1, 1});
  // no clamping outside the fitted box
  CHECK_THAT(scale_position(s, {20, -20}).x, WithinAbs(3.0, 1e-15));
  CHECK_THAT(scale_position(s, {20, -20}).y, WithinAbs(-3.0, 1e-15));

  Rng rng(4);
  std::uniform_real_distribution<double> ux(0, 10), uy(0, 20);
  for (int i = 0; i < 100; ++i) {
    const Vec2 x{ux(rng), uy(rng)};
    const auto sc = scale_position(s, x);
    CHECK(std::abs(sc.x) <= 1.0);
    CHECK(std::abs(sc.y) <= 1.0);
    const auto back = unscale_position(s, sc);
    CHECK_THAT(back.x, WithinAbs(x.x, 1e-9));
    CHECK_THAT(back.y, WithinAbs(x.y, 1e-9));
  }

  CsiDataset flat{g, {{CsiTensor(g), {0, 1}}, {CsiTensor(g), {10, 1}}}, std::nullopt};
  CHECK_THROWS_AS(fit_condition_scaler(flat), std::invalid_argument);
  CHECK_THROWS_AS(fit_condition_scaler(CsiDataset{g, {}, std::nullopt}), std::invalid_argument);
}
