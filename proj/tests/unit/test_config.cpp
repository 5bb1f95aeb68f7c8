#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flowjump/config.hpp"
#include "flowjump/experiments.hpp"
#include "flowjump/manifest.hpp"

namespace fj = flowjump;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("flowjump_test_" + name);
  fs::remove_all(dir);
  return dir;
}

const char* kDecomposition = R"(
[experiment]
kind = det_decomposition
seed = 11

[field]
dim = 2
drift = smooth
diffusion = smooth
jump = smooth
s0 = 0.5
eps = 0.1
jump_amplitude = 0.1
alpha = 0.1

[levy]
rate = 2.0
marks = symmetric
mark = 0.6 -0.4

[numerics]
dt = 0.002
paths = 8
grid = 8
p = 1.5
)";

}  // namespace

TEST(Config, ParsesAllSections) {
  const auto cfg = fj::ExperimentConfig::parse(kDecomposition);
  EXPECT_EQ(cfg.kind, fj::ExperimentKind::DetDecomposition);
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_EQ(cfg.field.drift, "smooth");
  EXPECT_DOUBLE_EQ(cfg.field.alpha, 0.1);
  EXPECT_DOUBLE_EQ(cfg.field.param("jump_amplitude", 0.0), 0.1);
  EXPECT_DOUBLE_EQ(cfg.levy.rate, 2.0);
  EXPECT_EQ(cfg.levy.mark, (std::vector<double>{0.6, -0.4}));
  EXPECT_DOUBLE_EQ(cfg.dt, 0.002);
  EXPECT_EQ(cfg.paths, 8u);
  EXPECT_EQ(cfg.source_text, kDecomposition);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ListsAndDefaults) {
  const auto cfg = fj::ExperimentConfig::parse("[numerics]\nlevels = 4 8 16\ndeltas = 0.5 0.25\n");
  EXPECT_EQ(cfg.levels, (std::vector<int>{4, 8, 16}));
  EXPECT_EQ(cfg.deltas, (std::vector<double>{0.5, 0.25}));
  EXPECT_EQ(cfg.kind, fj::ExperimentKind::DetCalculus);
}

TEST(Config, RejectsUnknownKeysSectionsAndValues) {
  EXPECT_THROW(fj::ExperimentConfig::parse("[experiment]\ncolour = blue\n"), fj::InvalidInput);
  EXPECT_THROW(fj::ExperimentConfig::parse("[extras]\nx = 1\n"), fj::InvalidInput);
  EXPECT_THROW(fj::ExperimentConfig::parse("[experiment]\nkind = nonsense\n"), fj::InvalidInput);
  EXPECT_THROW(fj::ExperimentConfig::parse("[numerics]\ndt = fast\n"), fj::InvalidInput);
  EXPECT_THROW(fj::ExperimentConfig::parse("[numerics]\ndt = 2\n"), fj::InvalidInput);
  EXPECT_THROW(fj::ExperimentConfig::parse("[field]\ndim = 9\n"), fj::InvalidInput);
  EXPECT_THROW(fj::ExperimentConfig::parse("[field\n"), fj::InvalidInput);
}

TEST(Config, KindNamesRoundTrip) {
  for (auto kind : {fj::ExperimentKind::DetCalculus, fj::ExperimentKind::NoiseIdentity,
                    fj::ExperimentKind::MollifyConvergence, fj::ExperimentKind::FlowOracle,
                    fj::ExperimentKind::DetDecomposition, fj::ExperimentKind::RoughCauchy,
                    fj::ExperimentKind::PideReference, fj::ExperimentKind::UniquenessCoupling,
                    fj::ExperimentKind::AcceptanceAll})
    EXPECT_EQ(fj::parse_kind(fj::to_string(kind)), kind);
}

TEST(Config, ValidationGates) {
  auto rough = fj::ExperimentConfig::parse(
      "[experiment]\nkind = rough_cauchy\n[field]\ndrift = unit_radial\nalpha = 0.25\nq = 1.5\n");
  EXPECT_THROW(rough.validate(), fj::GateViolation);
  rough.field.alpha = 0.05;
  EXPECT_NO_THROW(rough.validate());
  auto moments = fj::ExperimentConfig::parse(kDecomposition);
  moments.p = 10.0;
  EXPECT_THROW(moments.validate(), fj::GateViolation);
  auto certify = fj::ExperimentConfig::parse(kDecomposition);
  certify.levy.certify = {};
  EXPECT_NO_THROW(certify.validate());
}

TEST(Config, ShippedExamplesParseAndValidate) {
  const fs::path dir = fs::path(FLOWJUMP_SOURCE_DIR) / "configs";
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".ini") continue;
    ++seen;
    const auto cfg = fj::ExperimentConfig::load(entry.path().string());
    if (entry.path().stem() == "gate_violation")
      EXPECT_THROW(cfg.validate(), fj::GateViolation);
    else
      EXPECT_NO_THROW(cfg.validate()) << entry.path();
  }
  EXPECT_GE(seen, 9u);
}

TEST(Sha256, KnownDigests) {
  EXPECT_EQ(fj::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(fj::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Manifest, FormatAndStatus) {
  fj::CheckResult c{"7", "trend", 0.5, 1.0, true, 1.25, 600.0, "fine"};
  EXPECT_EQ(fj::format_check(c), "[PASS]   7 trend: measured=0.5 tolerance=1 runtime=1.25s/600s (fine)");
  fj::RunManifest m;
  m.kind = "det_calculus";
  m.checks = {c};
  EXPECT_TRUE(m.all_pass());
  m.checks.push_back({"8", "other", 2.0, 1.0, false});
  EXPECT_FALSE(m.all_pass());
  std::ostringstream out;
  m.write(out);
  EXPECT_NE(out.str().find("status = fail"), std::string::npos);
  EXPECT_EQ(std::string(fj::version()), "0.3.0");
}

TEST(Experiments, OutputsAreByteIdenticalAcrossRuns) {
  const auto cfg = fj::ExperimentConfig::parse(kDecomposition);
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto ma = fj::run_experiment(cfg, a);
  const auto mb = fj::run_experiment(cfg, b);
  EXPECT_TRUE(ma.all_pass());
  ASSERT_EQ(ma.artifacts, mb.artifacts);
  ASSERT_FALSE(ma.artifacts.empty());
  for (const auto& name : ma.artifacts) EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  EXPECT_EQ(slurp(a / "config.ini"), kDecomposition);
  EXPECT_EQ(ma.config_sha256, fj::sha256_hex(kDecomposition));
  const std::string manifest = slurp(a / "manifest.txt");
  EXPECT_NE(manifest.find("config_sha256 = " + fj::sha256_hex(kDecomposition)), std::string::npos);
  EXPECT_NE(manifest.find("seed = 11"), std::string::npos);
}

TEST(Experiments, SeedChangesOutputs) {
  auto cfg = fj::ExperimentConfig::parse(kDecomposition);
  const auto a = scratch("seed_a"), b = scratch("seed_b");
  fj::run_experiment(cfg, a);
  cfg.seed = 12;
  fj::run_experiment(cfg, b);
  EXPECT_NE(slurp(a / "det_decomposition.csv"), slurp(b / "det_decomposition.csv"));
}

TEST(Experiments, GateViolationWritesManifestOnly) {
  const auto cfg = fj::ExperimentConfig::load((fs::path(FLOWJUMP_SOURCE_DIR) / "configs" / "gate_violation.ini").string());
  const auto dir = scratch("gate");
  const auto m = fj::run_experiment(cfg, dir);
  EXPECT_FALSE(m.all_pass());
  ASSERT_EQ(m.checks.size(), 1u);
  EXPECT_EQ(m.checks[0].id, "validation");
  EXPECT_TRUE(m.artifacts.empty());
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
  EXPECT_TRUE(fs::exists(dir / "config.ini"));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 2u);
}

TEST(Experiments, DetCalculusTablesAndChecks) {
  const auto cfg = fj::ExperimentConfig::parse("[experiment]\nkind = det_calculus\nseed = 3\n");
  const auto dir = scratch("calc");
  const auto m = fj::run_experiment(cfg, dir);
  EXPECT_TRUE(m.all_pass());
  EXPECT_EQ(m.checks.size(), 2u);
  const std::string csv = slurp(dir / "beta_alpha.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "d,alpha,remainder_bound,beta_alpha,rule_of_thumb_ok");
  EXPECT_GT(std::count(csv.begin(), csv.end(), '\n'), 10);
}
