// eitbc: command-line front end.
//
//   eitbc simulate  -d DIR [-c config.json] [overrides]
//   eitbc trace     -d DIR
//   eitbc extend    -d DIR [--mode corrected|uncorrected|both]
//   eitbc outerdn   -d DIR [--mode ...]
//   eitbc dbar      -d DIR [--mode ...]
//   eitbc full      -d DIR [-c config.json] [overrides]
//   eitbc sweep-r2  -d DIR [--r2 1.05,1.1,...]
//   eitbc render    INPUT.json -o OUT.png [--scale S] [--truth]
//   eitbc verify    [--criteria 1,2,...] [--full-scale] [--workdir DIR]
//
// The stage commands share one experiment directory.  `simulate` writes
// config.json there; later stages read it back unless -c is given, and flag
// overrides apply on top in every case.  Each command rewrites manifest.json
// to cover every file in the directory.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "acceptance/criteria.hpp"
#include "eitbc/pipeline.hpp"

namespace {

using namespace eitbc;
namespace fs = std::filesystem;

struct Overrides {
  std::string config;
  std::optional<std::string> phantom;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise, r2;
  std::optional<int> N, N_data, k_grid, raster, mesh_level, annulus_level, M;
  std::vector<double> R;
  std::string mode;
  bool direct_check = false;
  bool no_images = false;

  void add(CLI::App *app, bool with_mode) {
    app->add_option("-c,--config", config, "experiment config (JSON)")->check(CLI::ExistingFile);
    app->add_option("--phantom", phantom, "built-in phantom name or phantom JSON file");
    app->add_option("--seed", seed, "noise seed");
    app->add_option("--noise", noise, "noise amplitude c");
    app->add_option("--N", N, "D-bar basis half order");
    app->add_option("--N-data", N_data, "simulation basis half order");
    app->add_option("--r2", r2, "outer radius of the extension annulus");
    app->add_option("--k-grid", k_grid, "k-grid cells per side");
    app->add_option("--raster", raster, "reconstruction raster size");
    app->add_option("--mesh-level", mesh_level, "refinement level of the data mesh");
    app->add_option("--annulus-level", annulus_level, "refinement level of the annulus mesh");
    app->add_option("--M", M, "oscillation frequency of the trace probes");
    app->add_option("--R", R, "truncation radii")->delimiter(',');
    app->add_flag("--direct-check", direct_check, "also compute the outer DN matrix directly");
    app->add_flag("--no-images", no_images, "skip per-R reconstruction files");
    if (with_mode)
      app->add_option("--mode", mode, "corrected, uncorrected or both")
          ->check(CLI::IsMember({"corrected", "uncorrected", "both"}));
  }

  ExperimentConfig resolve(const fs::path &dir) const {
    ExperimentConfig c;
    if (!config.empty())
      c = io::read_json(config).get<ExperimentConfig>();
    else if (fs::exists(dir / "config.json"))
      c = io::read_json(dir / "config.json").get<ExperimentConfig>();
    if (phantom) {
      if (fs::exists(*phantom))
        c.phantom = io::read_json(*phantom).get<Phantom>();
      else
        c.phantom = eitbc::phantom(*phantom);
    }
    if (seed) c.seed = *seed;
    if (noise) c.noise = *noise;
    if (N) c.N = *N;
    if (N_data) c.N_data = *N_data;
    if (r2) c.r2 = *r2;
    if (k_grid) c.k_grid = *k_grid;
    if (raster) c.raster = *raster;
    if (mesh_level) c.mesh_level = *mesh_level;
    if (annulus_level) c.annulus_level = *annulus_level;
    if (M) c.trace.M = *M;
    if (!R.empty()) c.R_list = R;
    if (direct_check) c.direct_check = true;
    if (no_images) c.save_reconstructions = false;
    if (mode == "corrected" || mode == "uncorrected") {
      c.corrected = mode == "corrected";
      c.uncorrected = mode == "uncorrected";
    } else if (mode == "both") {
      c.corrected = c.uncorrected = true;
    }
    c.validate();
    return c;
  }
};

// Stage commands: every file under dir goes into the manifest, and stage
// records of earlier commands are kept unless this command reran them.
void write_stage_manifest(const fs::path &dir, const RunRecorder &rec, const std::string &command) {
  RunRecorder all(dir);
  for (const auto &e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file())
      continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel != "manifest.json" && rel != ".lock")
      all.add(rel);
  }
  json m = all.manifest({{"run", "stages"}, {"last_command", command}});
  json stages = json::array();
  if (fs::exists(dir / "manifest.json")) {
    const json old = io::read_json(dir / "manifest.json");
    for (const auto &s : old.value("stages", json::array())) {
      const std::string name = s.at("stage");
      bool rerun = false;
      for (const auto &r : rec.stages())
        rerun = rerun || r.name == name;
      if (!rerun)
        stages.push_back(s);
    }
  }
  for (const auto &s : rec.stages()) {
    json e = {{"stage", s.name}, {"status", s.ok ? "ok" : "failed"}};
    if (!s.ok)
      e["message"] = s.message;
    stages.push_back(e);
  }
  m["stages"] = stages;
  io::write_json(dir / "manifest.json", m);
}

int report(const RunRecorder &rec) {
  for (const auto &s : rec.stages())
    if (!s.ok)
      std::fprintf(stderr, "stage %s failed: %s\n", s.name.c_str(), s.message.c_str());
  return rec.ok() ? 0 : 1;
}

void require(const fs::path &p, const char *producer) {
  if (!fs::exists(p))
    throw Error("missing " + p.string() + " (run `eitbc " + producer + "` first)");
}

ExtensionSpec stage_extension(const fs::path &dir, const ExperimentConfig &c, const std::string &mode) {
  require(dir / "trace.json", "trace");
  const json t = io::read_json(dir / "trace.json");
  if (mode == "corrected")
    return make_extension_spec(io::fourier_from_json(t.at("smoothed")), c.r1, c.r2, c.re_fraction);
  return make_extension_spec(constant_trace(t.at("mean").get<double>(), c.r1), c.r1, c.r2, c.re_fraction);
}

int cmd_simulate(const fs::path &dir, const ExperimentConfig &c, const Logger &log) {
  DirectoryLock lock(dir);
  RunRecorder rec(dir);
  io::write_json(dir / "config.json", c);
  io::write_json(dir / "phantom.json", c.phantom);
  log("simulate: " + c.phantom.name + ", mesh level " + std::to_string(c.mesh_level));
  rec.stage("simulate", [&] {
    const SimulatedData d = simulate(c);
    fs::create_directories(dir / "data");
    io::save_matrix(dir / "data/nd_clean.json", d.nd_clean);
    io::save_matrix(dir / "data/nd_noisy.json", d.nd_noisy);
  });
  write_stage_manifest(dir, rec, "simulate");
  return report(rec);
}

int cmd_trace(const fs::path &dir, const ExperimentConfig &c, const Logger &log) {
  DirectoryLock lock(dir);
  RunRecorder rec(dir);
  log("trace: M=" + std::to_string(c.trace.M) + ", " + std::to_string(c.trace.n_angles) + " angles");
  rec.stage("trace", [&] {
    require(dir / "data/nd_noisy.json", "simulate");
    const auto tr = recover_trace(nd_to_dn(io::load_matrix(dir / "data/nd_noisy.json")), c.trace);
    io::CsvWriter csv({"beta", "g_recovered", "imag_residual", "g_smoothed", "g_true"});
    for (std::size_t i = 0; i < tr.betas.size(); ++i) {
      const double b = tr.betas[i];
      csv.row({io::fmt(b, "%.9f"), io::fmt(tr.values[i], "%.9f"), io::fmt(tr.imag_residual[i], "%.3e"),
               io::fmt(tr(b), "%.9f"), io::fmt(c.phantom.trace(b, c.r1), "%.9f")});
    }
    csv.save(dir / "trace.csv");
    io::write_json(dir / "trace.json", {{"smoothed", io::to_json(tr.smoothed)}, {"mean", tr.mean()}});
  });
  write_stage_manifest(dir, rec, "trace");
  return report(rec);
}

int cmd_extend(const fs::path &dir, const ExperimentConfig &c, const Logger &log) {
  DirectoryLock lock(dir);
  RunRecorder rec(dir);
  for (const std::string &mode : c.modes()) {
    log("extend: " + mode);
    rec.stage(mode + "/extend", [&] {
      const ExtensionSpec spec = stage_extension(dir, c, mode);
      const ConductivityField gamma = extend(spec, c.phantom.field(c.r1));
      fs::create_directories(dir / mode);
      io::write_json(dir / mode / "extension.json", {{"r1", spec.r1},
                                                     {"re", spec.re},
                                                     {"r2", spec.r2},
                                                     {"bridge", "1 - 3 s^2 + 2 s^3, s = (rho - r1) / (re - r1)"},
                                                     {"trace", io::to_json(spec.g)}});
      // the extended conductivity on the disc of radius r2
      ReconstructionGrid R = make_raster(c.raster, c.r2);
      for (int j = 0; j < R.n; ++j)
        for (int i = 0; i < R.n; ++i)
          if (R.inside[R.index(i, j)])
            R.gamma_rec[R.index(i, j)] = gamma(R.x_at(i), R.x_at(j));
      render_reconstruction(R, {}, std::max(1, 256 / c.raster)).save(dir / mode / "extension.png");
    });
  }
  write_stage_manifest(dir, rec, "extend");
  return report(rec);
}

int cmd_outerdn(const fs::path &dir, const ExperimentConfig &c, const Logger &log) {
  DirectoryLock lock(dir);
  RunRecorder rec(dir);
  std::optional<BoundaryOperatorMatrix> L_sigma;
  std::optional<Mesh> annulus;
  for (const std::string &mode : c.modes()) {
    log("outerdn: " + mode);
    rec.stage(mode + "/outer_dn", [&] {
      if (!L_sigma) {
        require(dir / "data/nd_noisy.json", "simulate");
        L_sigma = nd_to_dn(truncate_modes(io::load_matrix(dir / "data/nd_noisy.json"), c.N));
      }
      if (!annulus)
        annulus = extension_annulus_mesh(c);
      const ExtensionSpec spec = stage_extension(dir, c, mode);
      auto [L, rep] = schur_outer(*L_sigma, dn_quadruple(*annulus, extend(spec), c.N));
      json info = {{"condition_estimate", rep.condition_estimate},
                   {"solve_residual", rep.solve_residual},
                   {"symmetry_defect", rep.symmetry_defect}};
      if (c.direct_check) {
        const Mesh disc2 = extension_disc_mesh(c);
        info["schur_vs_direct"] = relative_error(L, dn_direct(disc2, extend(spec, c.phantom.field(c.r1)), c.N));
      }
      fs::create_directories(dir / mode);
      io::save_matrix(dir / mode / "outer_dn.json", L);
      io::write_json(dir / mode / "outer_dn_report.json", info);
      log("  condition " + io::fmt(rep.condition_estimate, "%.3f"));
    });
  }
  write_stage_manifest(dir, rec, "outerdn");
  return report(rec);
}

int cmd_dbar(const fs::path &dir, const ExperimentConfig &c, const Logger &log) {
  DirectoryLock lock(dir);
  RunRecorder rec(dir);
  const BoundaryOperatorMatrix L1 = dn_unit(c.r2, c.N);
  for (const std::string &mode : c.modes()) {
    log("dbar: " + mode + ", " + std::to_string(c.k_grid) + "^2 k-grid");
    rec.stage(mode + "/dbar", [&] {
      require(dir / mode / "outer_dn.json", "outerdn");
      const BoundaryOperatorMatrix Lg = io::load_matrix(dir / mode / "outer_dn.json");
      const ScatteringGrid G = build_scattering_grid(Lg, L1, c.R_max(), c.k_grid);
      io::save_scattering_grid(dir / mode / "scattering.json", G);
      render_scattering(G, std::max(1, 256 / c.k_grid)).save(dir / mode / "scattering.png");
      ModeResult mr;
      mr.mode = mode;
      for (auto &[row, R] : dbar_sweep(G, c, mode, log)) {
        if (c.save_reconstructions) {
          char tag[32];
          std::snprintf(tag, sizeof tag, "recon_R%.2f", row.R);
          io::save_reconstruction(dir / mode / (std::string(tag) + ".json"), R);
          const ValueRange vr = value_range(R.truth, &R.inside);
          render_reconstruction(R, vr, std::max(1, 256 / c.raster)).save(dir / mode / (std::string(tag) + ".png"));
        }
        mr.rows.push_back(row);
      }
      error_table({mr}).save(dir / mode / "errors.csv");
    });
  }
  write_stage_manifest(dir, rec, "dbar");
  return report(rec);
}

int cmd_full(const fs::path &dir, const ExperimentConfig &c, const Logger &log) {
  const FullRunResult res = run_full(c, dir, log);
  for (const auto &m : res.modes)
    if (!m.rows.empty())
      std::printf("%-12s best R %.2f  error %.2f%%\n", m.mode.c_str(), m.best().R, m.best().l2_error_pct);
  for (const auto &s : res.stages)
    if (!s.ok)
      std::fprintf(stderr, "stage %s failed: %s\n", s.name.c_str(), s.message.c_str());
  return res.ok() ? 0 : 1;
}

int cmd_sweep_r2(const fs::path &dir, const ExperimentConfig &c, std::vector<double> r2s, const Logger &log) {
  if (r2s.empty())
    r2s = default_r2_list();
  const SweepR2Result res = run_sweep_r2(c, r2s, dir, log);
  for (const auto &r : res.rows)
    std::printf("r2 %.3f  vs direct %.3e  noise %.3e  condition %.2f\n", r.r2, r.err_vs_direct, r.err_noise,
                r.condition);
  std::printf("noise error decreasing: %s\n", res.decreasing_trend ? "yes" : "no");
  for (const auto &s : res.stages)
    if (!s.ok)
      std::fprintf(stderr, "stage %s failed: %s\n", s.name.c_str(), s.message.c_str());
  return std::all_of(res.stages.begin(), res.stages.end(), [](const StageRecord &s) { return s.ok; }) ? 0 : 1;
}

// Scattering grid, reconstruction grid or phantom JSON to PNG.
int cmd_render(const fs::path &in, const fs::path &out, int scale, bool truth, int raster) {
  const json j = io::read_json(in);
  const std::string type = j.value("type", "");
  if (type == "scattering_grid") {
    render_scattering(io::load_scattering_grid(in), scale).save(out);
  } else if (type == "reconstruction_grid") {
    const ReconstructionGrid R = io::load_reconstruction(in);
    const std::optional<ValueRange> vr =
        R.truth.empty() ? std::nullopt : std::optional<ValueRange>(value_range(R.truth, &R.inside));
    (truth ? render_truth(R, vr, scale) : render_reconstruction(R, vr, scale)).save(out);
  } else if (j.contains("terms")) {
    const Phantom p = j.get<Phantom>();
    ReconstructionGrid R = make_raster(raster);
    for (int jj = 0; jj < R.n; ++jj)
      for (int i = 0; i < R.n; ++i)
        if (R.inside[R.index(i, jj)])
          R.gamma_rec[R.index(i, jj)] = p(R.x_at(i), R.x_at(jj));
    render_reconstruction(R, {}, scale).save(out);
  } else {
    throw InvalidArgument("render: " + in.string() + " is not a grid or phantom file");
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Boundary-corrected D-bar reconstruction for 2-D EIT"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "no progress messages");

  std::string dir;
  Overrides ov;
  std::vector<double> r2s;
  auto stage = [&](const char *name, const char *help, bool with_mode) {
    CLI::App *s = app.add_subcommand(name, help);
    s->add_option("-d,--dir", dir, "experiment directory")->required();
    ov.add(s, with_mode);
    return s;
  };
  CLI::App *sim = stage("simulate", "simulate noisy ND data for the phantom", false);
  CLI::App *tr = stage("trace", "recover the conductivity trace from the data", false);
  CLI::App *ext = stage("extend", "build and render the extended conductivity", true);
  CLI::App *odn = stage("outerdn", "outer DN matrix on the circle of radius r2", true);
  CLI::App *dbr = stage("dbar", "scattering transform and D-bar sweep over R", true);
  CLI::App *full = stage("full", "every stage in one run", true);
  CLI::App *swp = stage("sweep-r2", "propagated unit-conductivity error against r2", false);
  swp->add_option("--r2-list", r2s, "r2 values")->delimiter(',');

  CLI::App *ren = app.add_subcommand("render", "render a grid or phantom file to PNG");
  std::string in, out;
  int scale = 1, raster = 128;
  bool truth = false;
  ren->add_option("input", in, "scattering grid, reconstruction grid or phantom JSON")
      ->required()
      ->check(CLI::ExistingFile);
  ren->add_option("-o,--output", out, "PNG file")->required();
  ren->add_option("--scale", scale, "pixels per cell")->check(CLI::PositiveNumber);
  ren->add_option("--raster", raster, "raster size for phantom files")->check(CLI::Range(2, 4096));
  ren->add_flag("--truth", truth, "render the stored ground truth instead");

  CLI::App *ver = app.add_subcommand("verify", "run the acceptance criteria at desk scale");
  std::vector<int> ids;
  acceptance::Options aopt;
  std::string workdir = aopt.workdir.string();
  ver->add_option("--criteria", ids, "criterion numbers (default: all)")->delimiter(',');
  ver->add_flag("--full-scale", aopt.full_scale, "also run the full-scale mesh checks");
  ver->add_option("--workdir", workdir, "scratch directory");
  ver->add_option("--seed", aopt.seed, "noise seed");

  CLI11_PARSE(app, argc, argv);
  const Logger log = quiet ? Logger([](std::string_view) {}) : stderr_logger();

  try {
    if (*ren)
      return cmd_render(in, out, scale, truth, raster);
    if (*ver) {
      aopt.workdir = workdir;
      if (quiet)
        aopt.log = {};
      return acceptance::run(std::set<int>(ids.begin(), ids.end()), aopt) == 0 ? 0 : 1;
    }
    const fs::path d(dir);
    const ExperimentConfig c = ov.resolve(d);
    if (*sim) return cmd_simulate(d, c, log);
    if (*tr) return cmd_trace(d, c, log);
    if (*ext) return cmd_extend(d, c, log);
    if (*odn) return cmd_outerdn(d, c, log);
    if (*dbr) return cmd_dbar(d, c, log);
    if (*full) return cmd_full(d, c, log);
    if (*swp) return cmd_sweep_r2(d, c, r2s, log);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "eitbc: %s\n", e.what());
    return 2;
  }
  return 0;
}
