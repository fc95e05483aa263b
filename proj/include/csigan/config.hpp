#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "csigan/csi_core.hpp"
#include "csigan/dataset_io.hpp"
#include "csigan/errors.hpp"
#include "csigan/synth.hpp"
#include "csigan/wgan.hpp"

namespace csigan {

// Run configuration as `key = value` lines. `#` starts a comment. Keys are
// grouped by prefix (geometry., scenario., train., split., metrics., output.).
// scenario.array, scenario.reflector and scenario.blocker may repeat; any other
// key may appear once. Unknown keys are rejected.

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line{0};
};

struct RunConfig {
  ArrayGeometry geometry;
  Scenario scenario; ///< scenario.geometry mirrors `geometry`
  TrainingConfig training;
  SplitSpec split;
  std::size_t bins{150};
  std::string output_dir;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_commas(const std::string &key, std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = v.find(',', start);
    const auto item = trim(v.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (item.empty()) throw ConfigError(key, "config key '" + key + "': empty list item");
    out.emplace_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double to_double(const std::string &key, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(key, "config key '" + key + "': expected a number, got '" + std::string(v) + "'");
  return out;
}

inline std::uint64_t to_u64(const std::string &key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(key, "config key '" + key + "': expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

inline bool to_bool(const std::string &key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key, "config key '" + key + "': expected true or false, got '" + std::string(v) + "'");
}

inline std::vector<double> to_doubles(const std::string &key, std::string_view v, std::size_t expected) {
  const auto items = split_commas(key, v);
  if (expected != 0 && items.size() != expected)
    throw ConfigError(key, "config key '" + key + "': expected " + std::to_string(expected) + " comma-separated values");
  std::vector<double> out;
  for (const auto &i : items) out.push_back(to_double(key, i));
  return out;
}

inline std::vector<Eigen::Index> to_widths(const std::string &key, std::string_view v) {
  std::vector<Eigen::Index> out;
  if (trim(v) == "none") return out;
  for (const auto &i : split_commas(key, v)) {
    const auto w = to_u64(key, i);
    if (w == 0) throw ConfigError(key, "config key '" + key + "': widths must be >= 1");
    out.push_back(static_cast<Eigen::Index>(w));
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

inline std::string fmt(Vec2 v) { return fmt(v.x) + "," + fmt(v.y); }

inline std::string fmt_widths(const std::vector<Eigen::Index> &w) {
  if (w.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

} // namespace detail

inline std::vector<ConfigEntry> parse_config_text(const std::string &text) {
  std::vector<ConfigEntry> out;
  std::istringstream is(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("", "config line " + std::to_string(line) + ": expected 'key = value'");
    const auto key = detail::trim(s.substr(0, eq));
    const auto value = detail::trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("", "config line " + std::to_string(line) + ": missing key");
    out.push_back({std::string(key), std::string(value), line});
  }
  return out;
}

namespace detail {

using Setter = std::function<void(RunConfig &, const std::string &key, const std::string &value)>;

inline const std::map<std::string, Setter> &run_config_setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto size_key = [](std::size_t ArrayGeometry::*m) {
      return [m](RunConfig &c, const std::string &k, const std::string &v) { c.geometry.*m = to_u64(k, v); };
    };
    t["geometry.arrays"] = size_key(&ArrayGeometry::num_arrays);
    t["geometry.rows"] = size_key(&ArrayGeometry::rows);
    t["geometry.cols"] = size_key(&ArrayGeometry::cols);
    t["geometry.taps"] = size_key(&ArrayGeometry::num_taps);
    t["geometry.carrier_frequency"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      c.geometry.carrier_frequency = to_double(k, v);
    };
    t["geometry.bandwidth"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      c.geometry.bandwidth = to_double(k, v);
    };

    t["scenario.array"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      const auto d = to_doubles(k, v, 3);
      c.scenario.arrays.push_back({{d[0], d[1]}, d[2]});
    };
    t["scenario.reflector"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      const auto d = to_doubles(k, v, 4);
      c.scenario.reflectors.push_back({{d[0], d[1]}, {d[2], d[3]}});
    };
    t["scenario.blocker"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      const auto d = to_doubles(k, v, 4);
      c.scenario.blockers.push_back({{d[0], d[1]}, {d[2], d[3]}});
    };
    t["scenario.line_of_sight"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      c.scenario.line_of_sight = to_bool(k, v);
    };
    t["scenario.noise_power"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      c.scenario.noise_power = to_double(k, v);
    };
    t["scenario.delay_offset"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      c.scenario.delay_offset = to_double(k, v);
    };
    t["scenario.region"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      const auto d = to_doubles(k, v, 4);
      c.scenario.region = {{d[0], d[1]}, {d[2], d[3]}};
    };
    t["scenario.seed"] = [](RunConfig &c, const std::string &k, const std::string &v) { c.scenario.seed = to_u64(k, v); };

    auto tdouble = [](double TrainingConfig::*m) {
      return [m](RunConfig &c, const std::string &k, const std::string &v) { c.training.*m = to_double(k, v); };
    };
    auto tsize = [](std::size_t TrainingConfig::*m) {
      return [m](RunConfig &c, const std::string &k, const std::string &v) { c.training.*m = to_u64(k, v); };
    };
    auto tu64 = [](std::uint64_t TrainingConfig::*m) {
      return [m](RunConfig &c, const std::string &k, const std::string &v) { c.training.*m = to_u64(k, v); };
    };
    auto twidths = [](std::vector<Eigen::Index> TrainingConfig::*m) {
      return [m](RunConfig &c, const std::string &k, const std::string &v) { c.training.*m = to_widths(k, v); };
    };
    t["train.gp_lambda"] = tdouble(&TrainingConfig::gp_lambda);
    t["train.n_critic"] = tsize(&TrainingConfig::n_critic);
    t["train.batch_size"] = tsize(&TrainingConfig::batch_size);
    t["train.learning_rate"] = tdouble(&TrainingConfig::learning_rate);
    t["train.beta1"] = tdouble(&TrainingConfig::beta1);
    t["train.beta2"] = tdouble(&TrainingConfig::beta2);
    t["train.adam_epsilon"] = tdouble(&TrainingConfig::adam_epsilon);
    t["train.generator_steps"] = tu64(&TrainingConfig::generator_steps);
    t["train.seed"] = tu64(&TrainingConfig::seed);
    t["train.checkpoint_every"] = tu64(&TrainingConfig::checkpoint_every);
    t["train.noise_dim"] = tsize(&TrainingConfig::noise_dim);
    t["train.generator_hidden"] = twidths(&TrainingConfig::generator_hidden);
    t["train.critic_trunk"] = twidths(&TrainingConfig::critic_trunk);
    t["train.critic_fusion"] = twidths(&TrainingConfig::critic_fusion);
    t["train.hidden_scale"] = tdouble(&TrainingConfig::hidden_scale);
    t["train.gp_through_delay_spread"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      c.training.gp_through_delay_spread = to_bool(k, v);
    };

    t["split.stride"] = [](RunConfig &c, const std::string &k, const std::string &v) { c.split.stride = to_u64(k, v); };
    t["split.test_offset"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      c.split.test_offset = to_u64(k, v);
    };
    t["split.train_offset"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      c.split.train_offset = to_u64(k, v);
    };
    t["split.hole_center"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      const auto d = to_doubles(k, v, 2);
      c.split.hole_center = {d[0], d[1]};
    };
    t["split.hole_diameter"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      c.split.hole_diameter = to_double(k, v);
    };

    t["metrics.bins"] = [](RunConfig &c, const std::string &k, const std::string &v) { c.bins = to_u64(k, v); };
    t["output.dir"] = [](RunConfig &c, const std::string &, const std::string &v) { c.output_dir = v; };
    return t;
  }();
  return table;
}

inline bool repeatable(const std::string &key) {
  return key == "scenario.array" || key == "scenario.reflector" || key == "scenario.blocker";
}

} // namespace detail

/// Applies entries on top of `base`. Throws ConfigError naming the offending key.
inline RunConfig apply_config(RunConfig base, const std::vector<ConfigEntry> &entries) {
  const auto &setters = detail::run_config_setters();
  std::set<std::string> seen;
  bool cleared_arrays = false, cleared_reflectors = false, cleared_blockers = false;
  for (const auto &e : entries) {
    const auto it = setters.find(e.key);
    if (it == setters.end())
      throw ConfigError(e.key, "config line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    if (!detail::repeatable(e.key) && !seen.insert(e.key).second)
      throw ConfigError(e.key, "config line " + std::to_string(e.line) + ": duplicate key '" + e.key + "'");
    // repeated keys replace, not extend, the lists in `base`
    if (e.key == "scenario.array" && !std::exchange(cleared_arrays, true)) base.scenario.arrays.clear();
    if (e.key == "scenario.reflector" && !std::exchange(cleared_reflectors, true)) base.scenario.reflectors.clear();
    if (e.key == "scenario.blocker" && !std::exchange(cleared_blockers, true)) base.scenario.blockers.clear();
    it->second(base, e.key, e.value);
  }
  base.scenario.geometry = base.geometry;
  return base;
}

inline RunConfig parse_run_config(const std::string &text, RunConfig base = {}) {
  return apply_config(std::move(base), parse_config_text(text));
}

inline std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_run_config(const std::string &path, RunConfig base = {}) {
  try {
    return parse_run_config(read_text_file(path), std::move(base));
  } catch (const ConfigError &e) {
    throw ConfigError(e.key(), path + ": " + e.what());
  }
}

inline std::string training_config_text(const TrainingConfig &t) {
  using detail::fmt;
  std::ostringstream o;
  o << "train.gp_lambda = " << fmt(t.gp_lambda) << "\n"
    << "train.n_critic = " << t.n_critic << "\n"
    << "train.batch_size = " << t.batch_size << "\n"
    << "train.learning_rate = " << fmt(t.learning_rate) << "\n"
    << "train.beta1 = " << fmt(t.beta1) << "\n"
    << "train.beta2 = " << fmt(t.beta2) << "\n"
    << "train.adam_epsilon = " << fmt(t.adam_epsilon) << "\n"
    << "train.generator_steps = " << t.generator_steps << "\n"
    << "train.seed = " << t.seed << "\n"
    << "train.checkpoint_every = " << t.checkpoint_every << "\n"
    << "train.noise_dim = " << t.noise_dim << "\n"
    << "train.generator_hidden = " << detail::fmt_widths(t.generator_hidden) << "\n"
    << "train.critic_trunk = " << detail::fmt_widths(t.critic_trunk) << "\n"
    << "train.critic_fusion = " << detail::fmt_widths(t.critic_fusion) << "\n"
    << "train.hidden_scale = " << fmt(t.hidden_scale) << "\n"
    << "train.gp_through_delay_spread = " << (t.gp_through_delay_spread ? "true" : "false") << "\n";
  return o.str();
}

/// Parses text holding only train.* keys.
inline TrainingConfig parse_training_config(const std::string &text) {
  const auto entries = parse_config_text(text);
  for (const auto &e : entries)
    if (e.key.rfind("train.", 0) != 0) throw ConfigError(e.key, "unexpected key '" + e.key + "' in training config");
  return apply_config({}, entries).training;
}

/// Every key with its resolved value; parse_run_config() of the result
/// reproduces the configuration exactly.
inline std::string run_config_text(const RunConfig &c) {
  using detail::fmt;
  std::ostringstream o;
  o << "# resolved configuration\n"
    << "geometry.arrays = " << c.geometry.num_arrays << "\n"
    << "geometry.rows = " << c.geometry.rows << "\n"
    << "geometry.cols = " << c.geometry.cols << "\n"
    << "geometry.taps = " << c.geometry.num_taps << "\n"
    << "geometry.carrier_frequency = " << fmt(c.geometry.carrier_frequency) << "\n"
    << "geometry.bandwidth = " << fmt(c.geometry.bandwidth) << "\n";
  for (const auto &a : c.scenario.arrays) o << "scenario.array = " << fmt(a.position) << "," << fmt(a.orientation) << "\n";
  for (const auto &r : c.scenario.reflectors)
    o << "scenario.reflector = " << fmt(r.position) << "," << fmt(r.gain.real()) << "," << fmt(r.gain.imag()) << "\n";
  for (const auto &b : c.scenario.blockers) o << "scenario.blocker = " << fmt(b.a) << "," << fmt(b.b) << "\n";
  o << "scenario.line_of_sight = " << (c.scenario.line_of_sight ? "true" : "false") << "\n"
    << "scenario.noise_power = " << fmt(c.scenario.noise_power) << "\n"
    << "scenario.delay_offset = " << fmt(c.scenario.delay_offset) << "\n"
    << "scenario.region = " << fmt(c.scenario.region.min) << "," << fmt(c.scenario.region.max) << "\n"
    << "scenario.seed = " << c.scenario.seed << "\n"
    << training_config_text(c.training)
    << "split.stride = " << c.split.stride << "\n"
    << "split.test_offset = " << c.split.test_offset << "\n"
    << "split.train_offset = " << c.split.train_offset << "\n"
    << "split.hole_center = " << fmt(c.split.hole_center) << "\n"
    << "split.hole_diameter = " << fmt(c.split.hole_diameter) << "\n"
    << "metrics.bins = " << c.bins << "\n";
  if (!c.output_dir.empty()) o << "output.dir = " << c.output_dir << "\n";
  return o.str();
}

} // namespace csigan
