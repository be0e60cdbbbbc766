#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "eitbc/pipeline.hpp"

using namespace eitbc;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string &tag) {
  std::random_device rd;
  const fs::path p = fs::temp_directory_path() / ("eitbc_pipe_" + tag + "_" + std::to_string(rd()));
  fs::remove_all(p);
  return p;
}

ExperimentConfig tiny_config(const std::string &ph) {
  ExperimentConfig c;
  c.phantom = phantom(ph);
  c.N = 8;
  c.seed = 7;
  c.k_grid = 16;
  c.raster = 8;
  c.R_list = {2.0, 3.0};
  c.annulus_level = 1;
  return c;
}

} // namespace

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = tiny_config("example2");
  c.trace.M = 24;
  c.dbar.restart = 17;
  const ExperimentConfig d = nlohmann::json(c).get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(d), nlohmann::json(c));
  EXPECT_EQ(d.trace.M, 24);
  EXPECT_EQ(*d.seed, 7u);
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(nlohmann::json({{"N", 8}, {"nosie", 1e-5}}).get<ExperimentConfig>(), InvalidArgument);
}

TEST(Config, SeedMandatoryForNoise) {
  ExperimentConfig c;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.noise = 0.0;
  EXPECT_NO_THROW(c.validate());
  c.noise = 1e-5;
  c.seed = 1;
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RRange) {
  const auto c = nlohmann::json({{"R_range", {{"start", 3.0}, {"stop", 6.0}, {"step", 0.2}}}}).get<ExperimentConfig>();
  ASSERT_EQ(c.R_list.size(), 16u);
  EXPECT_DOUBLE_EQ(c.R_list.back(), 6.0);
  EXPECT_EQ(c.R_list, ExperimentConfig::default_R_list());
  EXPECT_THROW(nlohmann::json({{"R_list", {3.0}}, {"R_range", {{"start", 3.0}, {"stop", 4.0}, {"step", 1.0}}}})
                   .get<ExperimentConfig>(),
               InvalidArgument);
}

TEST(Config, PhantomByNameOrObject) {
  const auto a = nlohmann::json({{"phantom", "example3"}}).get<ExperimentConfig>();
  EXPECT_EQ(a.phantom.name, "example3");
  const auto b = nlohmann::json({{"phantom", phantom("example4")}}).get<ExperimentConfig>();
  EXPECT_EQ(b.phantom.terms.size(), 3u);
}

TEST(Config, Validation) {
  ExperimentConfig c = tiny_config("unit");
  c.k_grid = 15;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = tiny_config("unit");
  c.r2 = 0.9;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = tiny_config("unit");
  c.corrected = c.uncorrected = false;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(DirectoryLock, Exclusive) {
  const fs::path d = fresh_dir("lock");
  {
    DirectoryLock a(d);
    EXPECT_THROW(DirectoryLock b(d), Error);
  }
  EXPECT_NO_THROW(DirectoryLock c(d));
  fs::remove_all(d);
}

TEST(RunFull, UnitConductivityTinyRun) {
  const fs::path d = fresh_dir("unit");
  const FullRunResult r = run_full(tiny_config("unit"), d);
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.modes.size(), 2u);
  for (const auto &m : r.modes) {
    ASSERT_EQ(m.rows.size(), 2u);
    for (const auto &row : m.rows)
      EXPECT_LT(row.l2_error_pct, 5.0) << m.mode << " R=" << row.R;
  }
  for (const char *f : {"config.json", "phantom.json", "manifest.json", "trace.csv", "errors.csv", "summary.csv",
                        "truth.png", "corrected/outer_dn.json", "uncorrected/scattering.json",
                        "corrected/recon_R3.00.json", "corrected/recon_R3.00.png"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
  EXPECT_FALSE(fs::exists(d / ".lock"));
  const auto man = io::read_json(d / "manifest.json");
  EXPECT_EQ(man.at("format"), experiment_format);
  for (const auto &f : man.at("files"))
    EXPECT_EQ(f.at("sha256"), io::sha256_file(d / f.at("path").get<std::string>()));
  fs::remove_all(d);
}

TEST(RunFull, StageFailureIsRecorded) {
  ExperimentConfig c = tiny_config("unit");
  c.N_data = 16; // too few modes for trace recovery
  c.mesh_level = 1;
  const fs::path d = fresh_dir("fail");
  const FullRunResult r = run_full(c, d);
  EXPECT_FALSE(r.ok());
  const auto man = io::read_json(d / "manifest.json");
  bool saw_failed_trace = false;
  for (const auto &s : man.at("stages"))
    if (s.at("stage") == "trace") {
      saw_failed_trace = s.at("status") == "failed";
      EXPECT_FALSE(s.at("message").get<std::string>().empty());
    }
  EXPECT_TRUE(saw_failed_trace);
  EXPECT_TRUE(r.modes.empty());
  fs::remove_all(d);
}

TEST(RunFull, DeterministicForAFixedSeed) {
  ExperimentConfig c = tiny_config("example2");
  c.uncorrected = false;
  c.R_list = {2.0};
  const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
  run_full(c, a);
  run_full(c, b);
  EXPECT_EQ(io::detail::read_file(a / "manifest.json"), io::detail::read_file(b / "manifest.json"));
  c.seed = 8;
  const fs::path e = fresh_dir("det_c");
  run_full(c, e);
  EXPECT_NE(io::sha256_file(a / "data/nd_noisy.bin"), io::sha256_file(e / "data/nd_noisy.bin"));
  EXPECT_EQ(io::sha256_file(a / "data/nd_clean.bin"), io::sha256_file(e / "data/nd_clean.bin"));
  for (const auto &p : {a, b, e})
    fs::remove_all(p);
}

TEST(SweepR2, MarksTheDefaultChoice) {
  ExperimentConfig c = tiny_config("unit");
  c.mesh_level = 1;
  const fs::path d = fresh_dir("sweep");
  const SweepR2Result r = run_sweep_r2(c, {1.1, 1.2, 1.3}, d);
  ASSERT_EQ(r.rows.size(), 3u);
  const std::string csv = io::detail::read_file(d / "sweep_r2.csv");
  EXPECT_NE(csv.find("\n1.2000,"), std::string::npos);
  std::istringstream in(csv);
  std::string line;
  int marked = 0;
  while (std::getline(in, line))
    if (line.back() == '1') {
      ++marked;
      EXPECT_EQ(line.rfind("1.2000,", 0), 0u);
    }
  EXPECT_EQ(marked, 1);
  EXPECT_EQ(default_r2_list().size(), 10u);
  EXPECT_DOUBLE_EQ(default_r2_list().front(), 1.05);
  fs::remove_all(d);
}
