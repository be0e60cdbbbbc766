#pragma once
// Experiment configuration and the end-to-end runs:
//   simulate -> [trace -> extend -> outer DN] -> D-bar sweep over R
// for the corrected (recovered trace) and uncorrected (best constant trace)
// modes, plus the r2 propagation sweep.  Every run owns its output directory
// through a lock file and finishes with a manifest of SHA-256 hashes.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "eitbc/boundary_basis.hpp"
#include "eitbc/dbar.hpp"
#include "eitbc/error.hpp"
#include "eitbc/extension.hpp"
#include "eitbc/fem_forward.hpp"
#include "eitbc/io.hpp"
#include "eitbc/mesh.hpp"
#include "eitbc/outer_dn.hpp"
#include "eitbc/phantoms.hpp"
#include "eitbc/render.hpp"
#include "eitbc/trace_recon.hpp"

namespace eitbc {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char *experiment_format = "eitbc-experiment/1";

struct ExperimentConfig {
  Phantom phantom = eitbc::phantom("example1");
  int N = 16;
  int N_data = 64;
  double noise = 1e-5;
  std::optional<std::uint64_t> seed;
  double r1 = 1.0;
  double r2 = 1.2;
  double re_fraction = 7.0 / 8.0;
  CutoffParams trace;
  std::vector<double> R_list = default_R_list();
  int k_grid = 256;
  int raster = 128;
  int mesh_level = 3;     // disc of radius r1
  int annulus_level = 3;  // annulus r1 < rho < r2 and the direct check disc
  bool corrected = true;
  bool uncorrected = true;
  bool direct_check = false; // also compute the outer DN matrix directly on the extended disc
  bool save_reconstructions = true;
  DbarOptions dbar{1e-6, 200, 40, true, true};

  static std::vector<double> default_R_list() {
    std::vector<double> v;
    for (int i = 0; i <= 15; ++i)
      v.push_back((30 + 2 * i) / 10.0);
    return v;
  }
  double R_max() const { return *std::max_element(R_list.begin(), R_list.end()); }
  std::vector<std::string> modes() const {
    std::vector<std::string> m;
    if (corrected)
      m.push_back("corrected");
    if (uncorrected)
      m.push_back("uncorrected");
    return m;
  }

  void validate() const {
    auto fail = [](const std::string &w) { throw InvalidArgument("config: " + w); };
    if (N < 1 || N_data < N)
      fail("need 1 <= N <= N_data");
    if (!(noise >= 0.0))
      fail("noise must be non-negative");
    if (noise > 0.0 && !seed)
      fail("a seed is mandatory when noise > 0");
    if (!(r1 > 0.0 && r2 > r1))
      fail("need 0 < r1 < r2");
    if (!(re_fraction > 0.0 && re_fraction < 1.0))
      fail("re_fraction must lie in (0, 1)");
    if (R_list.empty())
      fail("R_list is empty");
    for (double R : R_list)
      if (!(R > 0.0))
        fail("every R must be positive");
    if (k_grid < 4 || k_grid % 2)
      fail("k_grid must be an even number >= 4");
    if (raster < 2)
      fail("raster must be >= 2");
    if (mesh_level < 0 || annulus_level < 0)
      fail("mesh levels must be non-negative");
    if (!corrected && !uncorrected)
      fail("no reconstruction mode selected");
  }
};

inline void to_json(json &j, const ExperimentConfig &c) {
  j = json{{"phantom", c.phantom},
           {"N", c.N},
           {"N_data", c.N_data},
           {"noise", c.noise},
           {"seed", c.seed ? json(*c.seed) : json(nullptr)},
           {"r1", c.r1},
           {"r2", c.r2},
           {"re_fraction", c.re_fraction},
           {"trace",
            {{"M", c.trace.M},
             {"kappa", c.trace.kappa},
             {"alpha", c.trace.alpha},
             {"n_angles", c.trace.n_angles},
             {"band_energy_tail", c.trace.band_energy_tail},
             {"smooth_modes", c.trace.smooth_modes}}},
           {"R_list", c.R_list},
           {"k_grid", c.k_grid},
           {"raster", c.raster},
           {"mesh_level", c.mesh_level},
           {"annulus_level", c.annulus_level},
           {"corrected", c.corrected},
           {"uncorrected", c.uncorrected},
           {"direct_check", c.direct_check},
           {"save_reconstructions", c.save_reconstructions},
           {"dbar",
            {{"tol", c.dbar.tol},
             {"max_iter", c.dbar.max_iter},
             {"restart", c.dbar.restart},
             {"warm_start", c.dbar.warm_start},
             {"keep_nonconverged", c.dbar.keep_nonconverged}}}};
}

//! Reads a config; absent keys keep their defaults, unknown keys are errors.
//! "phantom" is a built-in name or a full phantom object; "R_range"
//! {start, stop, step} may replace "R_list".
inline void from_json(const json &j, ExperimentConfig &c) {
  static const std::vector<std::string> known{
      "phantom",    "N",          "N_data",        "noise",        "seed",         "r1",
      "r2",         "re_fraction", "trace",        "R_list",       "R_range",      "k_grid",
      "raster",     "mesh_level", "annulus_level", "corrected",    "uncorrected",  "direct_check",
      "save_reconstructions", "dbar"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw InvalidArgument("config: unknown key '" + it.key() + "'");
  if (j.contains("phantom")) {
    const json &p = j.at("phantom");
    c.phantom = p.is_string() ? phantom(p.get<std::string>()) : p.get<Phantom>();
  }
  c.N = j.value("N", c.N);
  c.N_data = j.value("N_data", c.N_data);
  c.noise = j.value("noise", c.noise);
  if (j.contains("seed") && !j.at("seed").is_null())
    c.seed = j.at("seed").get<std::uint64_t>();
  c.r1 = j.value("r1", c.r1);
  c.r2 = j.value("r2", c.r2);
  c.re_fraction = j.value("re_fraction", c.re_fraction);
  if (j.contains("trace")) {
    const json &t = j.at("trace");
    c.trace.M = t.value("M", c.trace.M);
    c.trace.kappa = t.value("kappa", c.trace.kappa);
    c.trace.alpha = t.value("alpha", c.trace.alpha);
    c.trace.n_angles = t.value("n_angles", c.trace.n_angles);
    c.trace.band_energy_tail = t.value("band_energy_tail", c.trace.band_energy_tail);
    c.trace.smooth_modes = t.value("smooth_modes", c.trace.smooth_modes);
  }
  if (j.contains("R_list") && j.contains("R_range"))
    throw InvalidArgument("config: give R_list or R_range, not both");
  if (j.contains("R_list"))
    c.R_list = j.at("R_list").get<std::vector<double>>();
  if (j.contains("R_range")) {
    const json &r = j.at("R_range");
    const double a = r.at("start").get<double>(), b = r.at("stop").get<double>(), s = r.at("step").get<double>();
    if (!(s > 0.0) || b < a)
      throw InvalidArgument("config: R_range needs step > 0 and stop >= start");
    c.R_list.clear();
    for (int i = 0; a + i * s <= b + 1e-9 * s; ++i)
      c.R_list.push_back(std::round((a + i * s) * 1e9) / 1e9);
  }
  c.k_grid = j.value("k_grid", c.k_grid);
  c.raster = j.value("raster", c.raster);
  c.mesh_level = j.value("mesh_level", c.mesh_level);
  c.annulus_level = j.value("annulus_level", c.annulus_level);
  c.corrected = j.value("corrected", c.corrected);
  c.uncorrected = j.value("uncorrected", c.uncorrected);
  c.direct_check = j.value("direct_check", c.direct_check);
  c.save_reconstructions = j.value("save_reconstructions", c.save_reconstructions);
  if (j.contains("dbar")) {
    const json &d = j.at("dbar");
    c.dbar.tol = d.value("tol", c.dbar.tol);
    c.dbar.max_iter = d.value("max_iter", c.dbar.max_iter);
    c.dbar.restart = d.value("restart", c.dbar.restart);
    c.dbar.warm_start = d.value("warm_start", c.dbar.warm_start);
    c.dbar.keep_nonconverged = d.value("keep_nonconverged", c.dbar.keep_nonconverged);
  }
}

inline ExperimentConfig load_config(const fs::path &p) {
  ExperimentConfig c = io::read_json(p).get<ExperimentConfig>();
  c.validate();
  return c;
}

using Logger = std::function<void(std::string_view)>;

inline Logger stderr_logger() {
  return [](std::string_view s) {
    std::fprintf(stderr, "%.*s\n", int(s.size()), s.data());
    std::fflush(stderr);
  };
}

// ---------------------------------------------------------------------------
// Stages

struct SimulatedData {
  Mesh mesh;
  BoundaryOperatorMatrix nd_clean;
  BoundaryOperatorMatrix nd_noisy;
};

inline SimulatedData simulate(const ExperimentConfig &c) {
  SimulatedData d;
  d.mesh = mesh_disc(c.r1, c.mesh_level);
  NeumannProblem np(d.mesh, c.phantom.field(c.r1));
  d.nd_clean = nd_matrix(np, c.N_data);
  d.nd_noisy = c.noise > 0.0 ? add_noise(d.nd_clean, c.noise, *c.seed) : d.nd_clean;
  return d;
}

//! Extension spec of one mode: the recovered (smoothed) trace, or the
//! constant closest to it in L2 (the mean of the recovered samples).
inline ExtensionSpec mode_extension(const TraceResult &tr, const std::string &mode, const ExperimentConfig &c) {
  if (mode == "corrected")
    return make_extension_spec(tr.smoothed, c.r1, c.r2, c.re_fraction);
  if (mode == "uncorrected")
    return make_extension_spec(constant_trace(tr.mean(), c.r1), c.r1, c.r2, c.re_fraction);
  throw InvalidArgument("unknown mode '" + mode + "'");
}

inline Mesh extension_annulus_mesh(const ExperimentConfig &c) { return mesh_annulus(c.r1, c.r2, c.annulus_level); }

inline Mesh extension_disc_mesh(const ExperimentConfig &c) {
  return mesh_disc(c.r2, c.annulus_level, {13, c.r1, 0});
}

struct ErrorRow {
  std::string mode;
  double R = 0.0;
  double l2_error_pct = 0.0;
  double gamma_min = 0.0, gamma_max = 0.0;
  double imag_residual_l2 = 0.0;
  double total_variation = 0.0;
  int iterations = 0;
  int nonconverged = 0;
};

struct ModeResult {
  std::string mode;
  double outer_condition = 0.0;
  std::optional<double> schur_vs_direct;
  double max_abs_t = 0.0;
  std::vector<ErrorRow> rows;

  const ErrorRow &best() const {
    return *std::min_element(rows.begin(), rows.end(),
                             [](const ErrorRow &a, const ErrorRow &b) { return a.l2_error_pct < b.l2_error_pct; });
  }
};

//! D-bar reconstructions for every R of the config from one scattering grid.
inline std::vector<std::pair<ErrorRow, ReconstructionGrid>>
dbar_sweep(const ScatteringGrid &G, const ExperimentConfig &c, const std::string &mode, const Logger &log = {}) {
  std::vector<std::pair<ErrorRow, ReconstructionGrid>> out;
  const ConductivityField truth = c.phantom.field(c.r1);
  for (double R : c.R_list) {
    const ScatteringGrid T = truncate_grid(G, R);
    ReconstructionGrid rec = reconstruct(T, c.raster, truth, c.dbar, c.r1);
    ErrorRow row;
    row.mode = mode;
    row.R = R;
    row.l2_error_pct = *rec.l2_error_pct;
    const ValueRange vr = value_range(rec.gamma_rec, &rec.inside);
    row.gamma_min = vr.lo;
    row.gamma_max = vr.hi;
    row.imag_residual_l2 = rec.imag_residual_l2;
    row.total_variation = total_variation(rec);
    row.iterations = rec.total_iterations;
    row.nonconverged = rec.nonconverged;
    if (log) {
      char b[160];
      std::snprintf(b, sizeof b, "  %s R=%.2f error %.2f%% (%d GMRES iterations%s)", mode.c_str(), R,
                    row.l2_error_pct, row.iterations, row.nonconverged ? ", some points stalled" : "");
      log(b);
    }
    out.emplace_back(row, std::move(rec));
  }
  return out;
}

inline io::CsvWriter error_table(const std::vector<ModeResult> &modes) {
  io::CsvWriter csv({"mode", "R", "l2_error_pct", "gamma_min", "gamma_max", "imag_residual_l2", "total_variation",
                     "gmres_iterations", "nonconverged_points"});
  for (const auto &m : modes)
    for (const auto &r : m.rows)
      csv.row({r.mode, io::fmt(r.R, "%.4f"), io::fmt(r.l2_error_pct, "%.6f"), io::fmt(r.gamma_min, "%.6f"),
               io::fmt(r.gamma_max, "%.6f"), io::fmt(r.imag_residual_l2, "%.6e"), io::fmt(r.total_variation, "%.6f"), std::to_string(r.iterations),
               std::to_string(r.nonconverged)});
  return csv;
}

// ---------------------------------------------------------------------------
// Run bookkeeping

//! Exclusive ownership of an experiment directory.
class DirectoryLock {
public:
  explicit DirectoryLock(const fs::path &dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    std::FILE *f = std::fopen(path_.c_str(), "wx");
    if (!f)
      throw Error("experiment directory " + dir.string() + " is locked by another run (remove " + path_.string() +
                  " if that run died)");
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock &) = delete;
  DirectoryLock &operator=(const DirectoryLock &) = delete;

private:
  fs::path path_;
};

struct StageRecord {
  std::string name;
  bool ok = true;
  std::string message;
};

//! Output files and stage outcomes of one run, written as manifest.json.
class RunRecorder {
public:
  explicit RunRecorder(fs::path dir) : dir_(std::move(dir)) {}

  fs::path path(const std::string &rel) const { return dir_ / rel; }
  void add(const std::string &rel) { files_.insert(rel); }
  //! Registers a header written by io::save_* and its data file, if any.
  void add_with_data(const std::string &rel) {
    add(rel);
    const json j = io::read_json(dir_ / rel);
    if (j.contains("data_file"))
      add((fs::path(rel).parent_path() / j.at("data_file").get<std::string>()).generic_string());
  }

  //! Runs `f` as stage `name`; library errors are recorded instead of thrown.
  bool stage(const std::string &name, const std::function<void()> &f) {
    try {
      f();
      stages_.push_back({name, true, ""});
      return true;
    } catch (const Error &e) {
      stages_.push_back({name, false, e.what()});
      return false;
    }
  }
  void skip(const std::string &name, const std::string &why) { stages_.push_back({name, false, "skipped: " + why}); }

  bool ok() const {
    return std::all_of(stages_.begin(), stages_.end(), [](const StageRecord &s) { return s.ok; });
  }
  const std::vector<StageRecord> &stages() const { return stages_; }

  json manifest(const json &extra) const {
    json files = json::array();
    for (const auto &f : files_)
      files.push_back(
          {{"path", f}, {"bytes", fs::file_size(dir_ / f)}, {"sha256", io::sha256_file(dir_ / f)}});
    json st = json::array();
    for (const auto &s : stages_) {
      json e = {{"stage", s.name}, {"status", s.ok ? "ok" : "failed"}};
      if (!s.ok)
        e["message"] = s.message;
      st.push_back(e);
    }
    json m = {{"format", experiment_format}, {"stages", st}, {"files", files}};
    for (auto it = extra.begin(); it != extra.end(); ++it)
      m[it.key()] = it.value();
    return m;
  }
  void write_manifest(const json &extra) const { io::write_json(dir_ / "manifest.json", manifest(extra)); }

private:
  fs::path dir_;
  std::set<std::string> files_;
  std::vector<StageRecord> stages_;
};

struct FullRunResult {
  fs::path dir;
  std::vector<StageRecord> stages;
  std::optional<TraceResult> trace;
  std::vector<ModeResult> modes;
  bool ok() const {
    return std::all_of(stages.begin(), stages.end(), [](const StageRecord &s) { return s.ok; });
  }
  const ModeResult *mode(const std::string &name) const {
    for (const auto &m : modes)
      if (m.mode == name)
        return &m;
    return nullptr;
  }
};

//! The full experiment.  Layout of `dir`:
//!   config.json, phantom.json, manifest.json
//!   data/nd_clean.json, data/nd_noisy.json          (+ .bin)
//!   trace.csv, trace.json
//!   <mode>/outer_dn.json, <mode>/scattering.json    (+ .bin, .png)
//!   <mode>/recon_R<R>.json/.bin/.png                (save_reconstructions)
//!   truth.png, errors.csv, summary.csv
inline FullRunResult run_full(const ExperimentConfig &c, const fs::path &dir, const Logger &log = {}) {
  c.validate();
  DirectoryLock lock(dir);
  RunRecorder rec(dir);
  FullRunResult res;
  res.dir = dir;
  auto say = [&](const std::string &s) {
    if (log)
      log(s);
  };

  io::write_json(dir / "config.json", c);
  rec.add("config.json");
  io::write_json(dir / "phantom.json", c.phantom);
  rec.add("phantom.json");

  std::optional<SimulatedData> data;
  std::optional<BoundaryOperatorMatrix> L_data, L_sigma;
  say("simulate: " + c.phantom.name + ", mesh level " + std::to_string(c.mesh_level));
  rec.stage("simulate", [&] {
    data = simulate(c);
    fs::create_directories(dir / "data");
    io::save_matrix(dir / "data/nd_clean.json", data->nd_clean);
    rec.add_with_data("data/nd_clean.json");
    io::save_matrix(dir / "data/nd_noisy.json", data->nd_noisy);
    rec.add_with_data("data/nd_noisy.json");
    L_data = nd_to_dn(data->nd_noisy);
    L_sigma = nd_to_dn(truncate_modes(data->nd_noisy, c.N));
  });

  if (L_data) {
    say("trace");
    rec.stage("trace", [&] {
      res.trace = recover_trace(*L_data, c.trace);
      io::CsvWriter csv({"beta", "g_recovered", "imag_residual", "g_smoothed", "g_true"});
      for (std::size_t i = 0; i < res.trace->betas.size(); ++i) {
        const double b = res.trace->betas[i];
        csv.row({io::fmt(b, "%.9f"), io::fmt(res.trace->values[i], "%.9f"),
                 io::fmt(res.trace->imag_residual[i], "%.3e"), io::fmt((*res.trace)(b), "%.9f"),
                 io::fmt(c.phantom.trace(b, c.r1), "%.9f")});
      }
      csv.save(dir / "trace.csv");
      rec.add("trace.csv");
      io::write_json(dir / "trace.json", {{"smoothed", io::to_json(res.trace->smoothed)}, {"mean", res.trace->mean()}});
      rec.add("trace.json");
    });
  } else {
    rec.skip("trace", "no data");
  }

  std::optional<Mesh> annulus, disc2;
  const BoundaryOperatorMatrix L1 = dn_unit(c.r2, c.N);
  std::optional<ValueRange> truth_range;
  for (const std::string &mode : c.modes()) {
    if (!res.trace || !L_sigma) {
      rec.skip(mode, "trace unavailable");
      continue;
    }
    ModeResult mr;
    mr.mode = mode;
    fs::create_directories(dir / mode);
    std::optional<BoundaryOperatorMatrix> Lg;
    say(mode + ": extension and outer DN matrix");
    const bool ok_outer = rec.stage(mode + "/outer_dn", [&] {
      const ExtensionSpec spec = mode_extension(*res.trace, mode, c);
      if (!annulus)
        annulus = extension_annulus_mesh(c);
      const AnnulusBlocks blocks = dn_quadruple(*annulus, extend(spec), c.N);
      auto [L, rep] = schur_outer(*L_sigma, blocks);
      mr.outer_condition = rep.condition_estimate;
      if (c.direct_check) {
        if (!disc2)
          disc2 = extension_disc_mesh(c);
        mr.schur_vs_direct = relative_error(L, dn_direct(*disc2, extend(spec, c.phantom.field(c.r1)), c.N));
      }
      io::save_matrix(dir / mode / "outer_dn.json", L);
      rec.add_with_data(mode + "/outer_dn.json");
      Lg = std::move(L);
    });
    if (!ok_outer) {
      rec.skip(mode + "/dbar", "outer DN matrix unavailable");
      res.modes.push_back(std::move(mr));
      continue;
    }
    say(mode + ": scattering transform on a " + std::to_string(c.k_grid) + "^2 grid");
    rec.stage(mode + "/dbar", [&] {
      const ScatteringGrid G = build_scattering_grid(*Lg, L1, c.R_max(), c.k_grid);
      mr.max_abs_t = G.max_abs();
      io::save_scattering_grid(dir / mode / "scattering.json", G);
      rec.add_with_data(mode + "/scattering.json");
      render_scattering(G, std::max(1, 256 / c.k_grid)).save(dir / mode / "scattering.png");
      rec.add(mode + "/scattering.png");
      for (auto &[row, R] : dbar_sweep(G, c, mode, log)) {
        if (!truth_range) {
          truth_range = value_range(R.truth, &R.inside);
          render_truth(R, truth_range, std::max(1, 256 / c.raster)).save(dir / "truth.png");
          rec.add("truth.png");
        }
        if (c.save_reconstructions) {
          char tag[32];
          std::snprintf(tag, sizeof tag, "recon_R%.2f", row.R);
          const std::string base = mode + "/" + tag;
          io::save_reconstruction(dir / (base + ".json"), R);
          rec.add_with_data(base + ".json");
          render_reconstruction(R, truth_range, std::max(1, 256 / c.raster)).save(dir / (base + ".png"));
          rec.add(base + ".png");
        }
        mr.rows.push_back(row);
      }
    });
    res.modes.push_back(std::move(mr));
  }

  error_table(res.modes).save(dir / "errors.csv");
  rec.add("errors.csv");
  io::CsvWriter summary({"mode", "best_R", "min_l2_error_pct", "l2_error_pct_at_R_max", "outer_dn_condition",
                         "schur_vs_direct", "max_abs_t"});
  for (const auto &m : res.modes) {
    if (m.rows.empty())
      continue;
    const ErrorRow &b = m.best();
    const ErrorRow &last = *std::max_element(m.rows.begin(), m.rows.end(),
                                             [](const ErrorRow &a, const ErrorRow &b) { return a.R < b.R; });
    summary.row({m.mode, io::fmt(b.R, "%.4f"), io::fmt(b.l2_error_pct, "%.6f"), io::fmt(last.l2_error_pct, "%.6f"),
                 io::fmt(m.outer_condition, "%.6f"), m.schur_vs_direct ? io::fmt(*m.schur_vs_direct, "%.6e") : "",
                 io::fmt(m.max_abs_t, "%.6e")});
  }
  summary.save(dir / "summary.csv");
  rec.add("summary.csv");
  res.stages = rec.stages();
  rec.write_manifest({{"run", "full"}, {"config", c}});
  return res;
}

// ---------------------------------------------------------------------------
// r2 sweep

struct SweepR2Result {
  std::vector<SweepRow> rows;
  bool decreasing_trend = false;
  std::vector<StageRecord> stages;
};

inline std::vector<double> default_r2_list() {
  std::vector<double> v;
  for (int i = 0; i <= 9; ++i)
    v.push_back((105 + 5 * i) / 100.0);
  return v;
}

//! Propagation of unit-conductivity ND data (clean and noisy) to circles of
//! radius r2, compared with directly computed DN matrices.  Writes
//! sweep_r2.csv and manifest.json.
inline SweepR2Result run_sweep_r2(const ExperimentConfig &c, const std::vector<double> &r2_list, const fs::path &dir,
                                  const Logger &log = {}) {
  c.validate();
  DirectoryLock lock(dir);
  RunRecorder rec(dir);
  SweepR2Result res;
  ExperimentConfig cu = c;
  cu.phantom = phantom("unit");
  cu.N_data = c.N;
  io::write_json(dir / "config.json", cu);
  rec.add("config.json");
  rec.stage("sweep_r2", [&] {
    if (log)
      log("sweep-r2: simulating unit-conductivity data");
    const SimulatedData d = simulate(cu);
    const BoundaryOperatorMatrix Lc = nd_to_dn(d.nd_clean), Ln = nd_to_dn(d.nd_noisy);
    SweepOptions opt;
    opt.mesh_level = c.annulus_level;
    opt.N = c.N;
    for (double r2 : r2_list) {
      if (log)
        log("  r2 = " + io::fmt(r2, "%.3f"));
      const auto rows = sweep_r2(Lc, Ln, {r2}, opt);
      res.rows.push_back(rows.front());
    }
    std::vector<double> e;
    for (const auto &r : res.rows)
      e.push_back(r.err_noise);
    res.decreasing_trend = mostly_decreasing(e, 1);
    io::CsvWriter csv({"r2", "err_vs_direct", "err_noise", "condition", "default_choice"});
    for (const auto &r : res.rows)
      csv.row({io::fmt(r.r2, "%.4f"), io::fmt(r.err_vs_direct, "%.6e"), io::fmt(r.err_noise, "%.6e"),
               io::fmt(r.condition, "%.6f"), std::abs(r.r2 - c.r2) < 1e-9 ? "1" : "0"});
    csv.save(dir / "sweep_r2.csv");
    rec.add("sweep_r2.csv");
  });
  res.stages = rec.stages();
  rec.write_manifest({{"run", "sweep-r2"}, {"config", cu}, {"r2_list", r2_list},
                      {"noise_error_decreasing_trend", res.decreasing_trend}});
  return res;
}

} // namespace eitbc
