#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csigan/checkpoint.hpp"
#include "csigan/config.hpp"
#include "csigan/csi_core.hpp"
#include "csigan/dataset_io.hpp"
#include "csigan/errors.hpp"
#include "csigan/interp.hpp"
#include "csigan/metrics.hpp"
#include "csigan/synth.hpp"
#include "csigan/wgan.hpp"

namespace csigan::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  exit_ok = 0,
  exit_parse_error = 2, ///< bad flags or config
  exit_data_error = 3,  ///< unreadable or inconsistent inputs
  exit_numerical = 4,   ///< training aborted on a non-finite loss
  exit_empty_split = 5, ///< split produced an empty side (files are still written when possible)
};

// ---------------------------------------------------------------------------
// Positions
// ---------------------------------------------------------------------------

/// Position sources:
///   grid:NX,NY[,XMIN,YMIN,XMAX,YMAX]    serpentine grid (bounds default to the region)
///   random:N[,XMIN,YMIN,XMAX,YMAX]      uniform draws from `seed`
///   file:PATH                           CSV with header x,y
///   dataset:PATH                        positions of a CSIT dataset
inline std::vector<Vec2> resolve_positions(const std::string &spec, const std::optional<Region> &region,
                                           std::uint64_t seed) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("positions", "positions: expected KIND:ARGS, got '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string args = spec.substr(colon + 1);
  auto bounds = [&](const std::vector<double> &v, std::size_t at) -> Region {
    if (v.size() == at + 4) return {{v[at], v[at + 1]}, {v[at + 2], v[at + 3]}};
    if (v.size() != at) throw ConfigError("positions", "positions: wrong number of values in '" + spec + "'");
    if (!region) throw ConfigError("positions", "positions: '" + spec + "' needs explicit bounds");
    if (std::abs(region->min.x) >= 1e9 || std::abs(region->max.x) >= 1e9)
      throw ConfigError("positions", "positions: scenario.region is unbounded; give explicit bounds");
    return *region;
  };
  auto count = [&](double v) {
    if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError("positions", "positions: counts must be whole numbers");
    return static_cast<std::size_t>(v);
  };
  if (kind == "grid") {
    const auto v = detail::to_doubles("positions", args, 0);
    if (v.size() < 2) throw ConfigError("positions", "positions: grid needs NX,NY");
    const auto r = bounds(v, 2);
    return grid_positions(r.min, r.max, count(v[0]), count(v[1]));
  }
  if (kind == "random") {
    const auto v = detail::to_doubles("positions", args, 0);
    if (v.empty()) throw ConfigError("positions", "positions: random needs N");
    const auto r = bounds(v, 1);
    Rng rng(mix64(seed));
    std::uniform_real_distribution<double> ux(r.min.x, r.max.x), uy(r.min.y, r.max.y);
    std::vector<Vec2> out(count(v[0]));
    for (auto &p : out) {
      p.x = ux(rng);
      p.y = uy(rng);
    }
    return out;
  }
  if (kind == "file") {
    std::ifstream in(args);
    if (!in) throw FormatError(FormatErrc::open_failed, "cannot open positions file '" + args + "'");
    std::string line;
    std::getline(in, line);
    if (detail::trim(line) != "x,y") throw FormatError(FormatErrc::malformed, "'" + args + "': expected header x,y");
    std::vector<Vec2> out;
    std::size_t n = 1;
    while (std::getline(in, line)) {
      ++n;
      if (detail::trim(line).empty()) continue;
      try {
        const auto v = detail::to_doubles("positions", line, 2);
        out.push_back({v[0], v[1]});
      } catch (const ConfigError &) {
        throw FormatError(FormatErrc::malformed, "'" + args + "' line " + std::to_string(n) + ": expected x,y");
      }
    }
    return out;
  }
  if (kind == "dataset") return positions_of(load_dataset(args));
  throw ConfigError("positions", "positions: unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Small output helpers
// ---------------------------------------------------------------------------

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return detail::fmt(v);
}

inline void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::open_failed, "cannot write '" + path.string() + "'");
  out << text;
}

inline void ensure_parent(const fs::path &path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

inline std::string command_header(const std::vector<std::string> &args) {
  std::string s = "# command:";
  for (const auto &a : args) s += " " + a;
  return s + "\n";
}

// ---------------------------------------------------------------------------
// Commands. Each takes already-parsed options and returns an exit code.
// ---------------------------------------------------------------------------

struct SynthOptions {
  std::string scenario;
  std::string positions;
  std::string out;
};

inline int cmd_synth(const SynthOptions &o, const std::vector<std::string> &args, std::ostream &out) {
  const auto cfg = load_run_config(o.scenario);
  const auto positions = resolve_positions(o.positions, cfg.scenario.region, cfg.scenario.seed);
  const auto ds = synth_dataset(cfg.scenario, positions);
  ensure_parent(o.out);
  save_dataset(ds, o.out, {{"command", "synth"}, {"positions", o.positions}});
  write_text(o.out + ".run.cfg", command_header(args) + run_config_text(cfg));
  out << "wrote " << ds.size() << " datapoints to " << o.out << "\n";
  return exit_ok;
}

struct SplitOptions {
  std::string dataset;
  std::string config;
  std::optional<std::size_t> stride, test_offset, train_offset;
  std::optional<std::string> hole_center;
  std::optional<double> hole_diameter;
  std::string out_train;
  std::string out_test;
};

inline int cmd_split(const SplitOptions &o, const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  auto &s = cfg.split;
  if (o.stride) s.stride = *o.stride;
  if (o.test_offset) s.test_offset = *o.test_offset;
  if (o.train_offset) s.train_offset = *o.train_offset;
  if (o.hole_center) {
    const auto v = detail::to_doubles("hole-center", *o.hole_center, 2);
    s.hole_center = {v[0], v[1]};
  }
  if (o.hole_diameter) s.hole_diameter = *o.hole_diameter;
  try {
    s.validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError("split", e.what());
  }
  const auto ds = load_dataset(o.dataset);
  const auto split = split_train_test(ds, s);
  ensure_parent(o.out_train);
  ensure_parent(o.out_test);
  save_dataset(split.train, o.out_train, {{"command", "split"}, {"role", "train"}, {"source", o.dataset}});
  save_dataset(split.test, o.out_test, {{"command", "split"}, {"role", "test"}, {"source", o.dataset}});
  write_text(o.out_train + ".run.cfg", command_header(args) + run_config_text(cfg));
  out << "train: " << split.train.size() << "\n"
      << "test: " << split.test.size() << "\n";
  if (split.train.empty() || split.test.empty()) {
    err << "warning: " << (split.train.empty() ? "training" : "test") << " split is empty\n";
    return exit_empty_split;
  }
  return exit_ok;
}

struct TrainOptions {
  std::string train;
  std::string config;
  std::string out;
  std::string resume;
  std::optional<std::uint64_t> steps;
  std::optional<std::uint64_t> seed;
};

inline std::string log_row(const TrainLogRow &r) {
  return std::to_string(r.step) + "," + num(r.critic_loss) + "," + num(r.gen_loss) + "," + num(r.real_score) + "," +
         num(r.fake_score) + "\n";
}

inline constexpr const char *train_log_header = "step,critic_loss,gen_loss,real_score,fake_score\n";

inline int cmd_train(const TrainOptions &o, const std::vector<std::string> &args, std::ostream &out,
                     std::ostream &err) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.steps) cfg.training.generator_steps = *o.steps;
  if (o.seed) cfg.training.seed = *o.seed;
  const std::string dir = !o.out.empty() ? o.out : cfg.output_dir;
  if (dir.empty()) throw ConfigError("out", "train: no output directory (--out or output.dir)");
  const auto train_set = load_dataset(o.train);

  Checkpoint state;
  if (!o.resume.empty()) {
    state = load_checkpoint(o.resume);
    // a resumed run keeps the checkpoint's hyperparameters; only the target moves
    if (o.steps) state.config.generator_steps = *o.steps;
    else if (!o.config.empty()) state.config.generator_steps = cfg.training.generator_steps;
    cfg.training = state.config;
  } else {
    try {
      cfg.training.validate();
    } catch (const std::invalid_argument &e) {
      throw ConfigError("train", e.what());
    }
    state = init_training(train_set, cfg.training);
  }
  if (state.step > state.config.generator_steps)
    throw ConfigError("train.generator_steps", "train: checkpoint is already past the requested step count");

  fs::create_directories(dir);
  const fs::path root(dir);
  write_text(root / "run.cfg", command_header(args) + run_config_text(cfg));
  const fs::path log_path = root / "train_log.csv";
  const bool append = !o.resume.empty() && fs::exists(log_path);
  std::ofstream log(log_path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!log) throw FormatError(FormatErrc::open_failed, "cannot write '" + log_path.string() + "'");
  if (!append) log << train_log_header;

  TrainCallbacks cb;
  cb.on_log = [&](const TrainLogRow &r) { log << log_row(r); };
  cb.on_checkpoint = [&](const Checkpoint &c) {
    log.flush();
    save_checkpoint(c, (root / ("step_" + std::to_string(c.step) + ".wgck")).string());
  };
  try {
    train_steps(state, train_set, state.config.generator_steps, cb);
  } catch (const TrainingAbort &e) {
    log.flush();
    const auto path = root / ("abort_step_" + std::to_string(e.diagnostic().step) + ".wgck");
    save_checkpoint(e.diagnostic(), path.string());
    err << "error: " << e.what() << "; diagnostic checkpoint " << path.string() << "\n";
    return exit_numerical;
  }
  log.flush();
  save_checkpoint(state, (root / "final.wgck").string());
  out << "trained to step " << state.step << "; checkpoint " << (root / "final.wgck").string() << "\n";
  return exit_ok;
}

struct GenerateOptions {
  std::string checkpoint;
  std::string positions;
  std::string mode{"variable"};
  std::uint64_t seed{0};
  std::string out;
};

inline int cmd_generate(const GenerateOptions &o, const std::vector<std::string> &args, std::ostream &out) {
  if (o.mode != "fixed" && o.mode != "variable") throw ConfigError("mode", "generate: mode must be fixed or variable");
  const auto ck = load_checkpoint(o.checkpoint);
  const auto positions = resolve_positions(o.positions, std::nullopt, o.seed);
  const auto gen = ck.conditional_generator();
  const auto ds = o.mode == "fixed" ? sample_fixed(gen, positions, o.seed) : sample_variable(gen, positions, o.seed);
  ensure_parent(o.out);
  save_dataset(ds, o.out, {{"command", "generate"}, {"mode", o.mode}, {"seed", std::to_string(o.seed)},
                           {"checkpoint", o.checkpoint}});
  write_text(o.out + ".run.cfg", command_header(args) + training_config_text(ck.config));
  out << "generated " << ds.size() << " datapoints (" << o.mode << " noise) to " << o.out << "\n";
  return exit_ok;
}

struct InterpolateOptions {
  std::string train;
  std::string positions;
  std::string out;
  std::string fallback{"nn"};
};

inline int cmd_interpolate(const InterpolateOptions &o, const std::vector<std::string> &args, std::ostream &out) {
  FallbackPolicy policy;
  if (o.fallback == "nn") policy = FallbackPolicy::nearest_neighbor;
  else if (o.fallback == "error") policy = FallbackPolicy::error;
  else throw ConfigError("fallback", "interpolate: fallback must be nn or error");
  auto train = std::make_shared<const CsiDataset>(load_dataset(o.train));
  const auto interp = build_interpolant(train, policy);
  const auto positions = resolve_positions(o.positions, std::nullopt, 0);
  CsiDataset result;
  result.geometry = train->geometry;
  result.power_reference = train->power_reference;
  std::size_t outside = 0;
  for (const auto &p : positions) {
    auto r = interpolate_at(interp, p);
    outside += r.outside_hull ? 1 : 0;
    result.points.push_back({std::move(r.csi), p});
  }
  ensure_parent(o.out);
  save_dataset(result, o.out, {{"command", "interpolate"}, {"train", o.train}, {"fallback", o.fallback}});
  write_text(o.out + ".run.cfg", command_header(args));
  out << "interpolated " << result.size() << " datapoints to " << o.out;
  if (outside > 0) out << " (" << outside << " outside the hull, nearest neighbor used)";
  out << "\n";
  return exit_ok;
}

struct EvaluateOptions {
  std::string reference;
  std::vector<std::string> candidates;
  std::vector<std::string> labels;
  bool gaussian_baseline{false};
  std::size_t bins{150};
  std::uint64_t seed{0};
  std::string out;
};

/// Per-datapoint statistics of one dataset.
struct DatapointStats {
  std::vector<double> power;   ///< per array, linear
  std::vector<double> ds_mean; ///< per array, seconds
  std::vector<double> aoa;     ///< per array, rad; NaN when undefined
};

inline DatapointStats datapoint_stats(const CsiTensor &csi, const ArrayGeometry &g) {
  DatapointStats s;
  const auto ds = rms_delay_spread(csi, g);
  for (std::size_t b = 0; b < g.num_arrays; ++b) {
    s.power.push_back(total_rx_power(csi, b));
    s.ds_mean.push_back(ds.per_array_mean[b]);
    double aoa = std::numeric_limits<double>::quiet_NaN();
    if (g.cols >= 2) {
      try {
        aoa = root_music_azimuth(array_correlation(csi, b));
      } catch (const NoSignalError &) {
      } catch (const AmbiguousAngleError &) {
      }
    }
    s.aoa.push_back(aoa);
  }
  return s;
}

inline std::string file_label(const std::string &path) { return fs::path(path).stem().string(); }

inline int cmd_evaluate(const EvaluateOptions &o, const std::vector<std::string> &args, std::ostream &out) {
  if (o.candidates.empty()) throw ConfigError("candidates", "evaluate: at least one candidate dataset is required");
  if (o.bins < 2) throw ConfigError("bins", "evaluate: bin count must be >= 2");
  std::vector<std::string> paths{o.reference};
  paths.insert(paths.end(), o.candidates.begin(), o.candidates.end());
  std::vector<std::string> labels = o.labels;
  if (labels.empty())
    for (const auto &p : paths) labels.push_back(file_label(p));
  if (labels.size() != paths.size())
    throw ConfigError("labels", "evaluate: need one label per dataset (reference first)");
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (labels[i] == labels[j]) labels[i] += "_" + std::to_string(i);

  std::vector<CsiDataset> sets;
  for (const auto &p : paths) {
    sets.push_back(load_dataset(p));
    if (!sets.back().geometry.same_shape(sets.front().geometry))
      throw std::invalid_argument("evaluate: '" + p + "' has a different geometry than the reference");
    if (sets.back().empty()) throw std::invalid_argument("evaluate: '" + p + "' is empty");
  }
  const auto &g = sets.front().geometry;

  std::vector<std::vector<DatapointStats>> stats(sets.size());
  std::vector<NamedValues> spreads;
  double max_power = 0.0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    NamedValues nv{labels[k], {}};
    for (const auto &p : sets[k].points) {
      stats[k].push_back(datapoint_stats(p.csi, g));
      for (double v : stats[k].back().power) max_power = std::max(max_power, v);
      const auto m = rms_delay_spread(p.csi, g);
      nv.values.insert(nv.values.end(), m.per_antenna.begin(), m.per_antenna.end());
    }
    spreads.push_back(std::move(nv));
  }
  if (o.gaussian_baseline)
    spreads.push_back({"gauss", gaussian_fit_samples(spreads.front().values, spreads.front().values.size(), o.seed)});
  const auto jsd = jsd_matrix(spreads, o.bins);

  fs::create_directories(o.out);
  const fs::path root(o.out);
  {
    std::ostringstream csv;
    csv << "dataset,index,x,y";
    for (const char *col : {"power_db", "ds_mean_ns", "aoa_rad"})
      for (std::size_t b = 0; b < g.num_arrays; ++b) csv << "," << col << "_b" << b;
    csv << "\n";
    const double ref = max_power > 0.0 ? max_power : 1.0;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      for (std::size_t l = 0; l < sets[k].size(); ++l) {
        const auto &s = stats[k][l];
        const auto pos = sets[k].points[l].position;
        csv << labels[k] << "," << l << "," << num(pos.x) << "," << num(pos.y);
        for (double p : s.power) csv << "," << num(p > 0.0 ? power_db(p, ref) : -std::numeric_limits<double>::infinity());
        for (double d : s.ds_mean) csv << "," << num(d * 1e9);
        for (double a : s.aoa) csv << "," << num(a);
        csv << "\n";
      }
    }
    write_text(root / "per_datapoint.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "bin,lo_s,hi_s";
    for (const auto &l : jsd.labels) csv << "," << l;
    csv << "\n";
    for (std::size_t i = 0; i + 1 < jsd.edges.size(); ++i) {
      csv << i << "," << num(jsd.edges[i]) << "," << num(jsd.edges[i + 1]);
      for (const auto &d : jsd.densities) csv << "," << num(d.probabilities[i]);
      csv << "\n";
    }
    write_text(root / "histograms.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "label";
    for (const auto &l : jsd.labels) csv << "," << l;
    csv << "\n";
    for (std::size_t i = 0; i < jsd.labels.size(); ++i) {
      csv << jsd.labels[i];
      for (double v : jsd.distance[i]) csv << "," << num(v);
      csv << "\n";
    }
    write_text(root / "jsd_matrix.csv", csv.str());
  }
  {
    std::ostringstream cfg;
    cfg << command_header(args) << "metrics.bins = " << o.bins << "\n";
    write_text(root / "run.cfg", cfg.str());
  }

  // console summary: JSD matrix and mean azimuth in degrees
  out << "delay-spread JSD (" << o.bins << " bins)\n" << std::setw(12) << "";
  for (const auto &l : jsd.labels) out << std::setw(12) << l.substr(0, 11);
  out << "\n" << std::fixed << std::setprecision(3);
  for (std::size_t i = 0; i < jsd.labels.size(); ++i) {
    out << std::setw(12) << jsd.labels[i].substr(0, 11);
    for (double v : jsd.distance[i]) out << std::setw(12) << v;
    out << "\n";
  }
  for (std::size_t k = 0; k < sets.size(); ++k) {
    out << labels[k] << ": mean azimuth (deg)";
    for (std::size_t b = 0; b < g.num_arrays; ++b) {
      double acc = 0.0;
      std::size_t n = 0;
      for (const auto &s : stats[k])
        if (!std::isnan(s.aoa[b])) {
          acc += s.aoa[b];
          ++n;
        }
      out << " " << (n ? acc / static_cast<double>(n) * 180.0 / std::numbers::pi : std::nan(""));
    }
    out << "\n";
  }
  out << std::defaultfloat;
  return exit_ok;
}

// ---------------------------------------------------------------------------
// Argument parsing and error mapping
// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string> &args, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
  CLI::App app{"Position-conditioned CSI generation, interpolation and evaluation"};
  app.name(args.empty() ? "csigan" : args.front());
  app.require_subcommand(1);

  SynthOptions synth;
  auto *s = app.add_subcommand("synth", "Synthesize a CSIT dataset from a geometric scenario");
  s->add_option("--scenario", synth.scenario, "Scenario config file")->required();
  s->add_option("--positions", synth.positions, "grid:NX,NY | random:N | file:PATH | dataset:PATH")->required();
  s->add_option("--out", synth.out, "Output CSIT path")->required();

  SplitOptions split;
  auto *sp = app.add_subcommand("split", "Split a dataset into train and test sets");
  sp->add_option("--dataset", split.dataset)->required();
  sp->add_option("--config", split.config, "Config file with split.* keys");
  sp->add_option("--stride", split.stride);
  sp->add_option("--test-offset", split.test_offset);
  sp->add_option("--train-offset", split.train_offset);
  sp->add_option("--hole-center", split.hole_center, "x,y");
  sp->add_option("--hole-diameter", split.hole_diameter);
  sp->add_option("--out-train", split.out_train)->required();
  sp->add_option("--out-test", split.out_test)->required();

  TrainOptions train;
  auto *t = app.add_subcommand("train", "Train the conditional WGAN-GP");
  t->add_option("--train", train.train, "Training CSIT dataset")->required();
  t->add_option("--config", train.config, "Config file with train.* keys");
  t->add_option("--out", train.out, "Checkpoint directory");
  t->add_option("--resume", train.resume, "Continue from this checkpoint");
  t->add_option("--steps", train.steps, "Total generator steps (overrides config)");
  t->add_option("--seed", train.seed, "Seed (overrides config)");

  GenerateOptions gen;
  auto *g = app.add_subcommand("generate", "Sample CSI from a trained generator");
  g->add_option("--checkpoint", gen.checkpoint)->required();
  g->add_option("--positions", gen.positions, "grid:NX,NY,XMIN,YMIN,XMAX,YMAX | file:PATH | dataset:PATH")->required();
  g->add_option("--mode", gen.mode, "fixed | variable");
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out)->required();

  InterpolateOptions interp;
  auto *ip = app.add_subcommand("interpolate", "Phase-aligned barycentric interpolation baseline");
  ip->add_option("--train", interp.train)->required();
  ip->add_option("--positions", interp.positions)->required();
  ip->add_option("--out", interp.out)->required();
  ip->add_option("--fallback", interp.fallback, "nn | error");

  EvaluateOptions eval;
  auto *e = app.add_subcommand("evaluate", "Per-datapoint metrics, delay-spread histograms and JSD matrix");
  e->add_option("--reference", eval.reference)->required();
  e->add_option("--candidates", eval.candidates)->required();
  e->add_option("--labels", eval.labels, "One label per dataset, reference first");
  e->add_flag("--gaussian-baseline", eval.gaussian_baseline, "Add a Gaussian fit of the reference");
  e->add_option("--bins", eval.bins);
  e->add_option("--seed", eval.seed, "Seed for the Gaussian baseline");
  e->add_option("--out", eval.out)->required();

  try {
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("csigan");
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError &ex) {
    err << "error: " << ex.what() << "\n";
    return exit_parse_error;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, args, out);
    if (sp->parsed()) return cmd_split(split, args, out, err);
    if (t->parsed()) return cmd_train(train, args, out, err);
    if (g->parsed()) return cmd_generate(gen, args, out);
    if (ip->parsed()) return cmd_interpolate(interp, args, out);
    if (e->parsed()) return cmd_evaluate(eval, args, out);
  } catch (const ConfigError &ex) {
    err << "error: " << ex.what() << "\n";
    return exit_parse_error;
  } catch (const EmptySplitError &ex) {
    err << "warning: " << ex.what() << "\n";
    return exit_empty_split;
  } catch (const NumericalAbort &ex) {
    err << "error: " << ex.what() << "\n";
    return exit_numerical;
  } catch (const std::exception &ex) {
    err << "error: " << ex.what() << "\n";
    return exit_data_error;
  }
  return exit_parse_error;
}

} // namespace csigan::cli
