#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowjump/corpus.hpp"
#include "flowjump/noise.hpp"

namespace flowjump {

enum class ExperimentKind {
  DetCalculus,
  NoiseIdentity,
  MollifyConvergence,
  FlowOracle,
  DetDecomposition,
  RoughCauchy,
  PideReference,
  UniquenessCoupling,
  AcceptanceAll,
};

std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& text);

/// Jump intensity section: rate lambda (constant) and the mark law.
struct LevyConfig {
  double rate = 0.0;
  std::string marks = "fixed";  // fixed | symmetric | radial_shell
  std::vector<double> mark;     // atom for fixed / symmetric
  double r_min = 0.1;
  double r_max = 1.0;
  double kappa = 1.0;
  std::vector<double> certify = {1.0, 2.0, 4.0};

  LevyMeasureSpec build(int dim) const;
};

/// Everything a run depends on. Parsed from an INI-style file:
///
///   [experiment]  kind, seed, output, smoke
///   [field]       dim, drift, diffusion, jump, alpha, q, table, and any
///                 numeric corpus parameter (sigma, a, c, s0, eps, ...)
///   [levy]        rate, marks, mark, r_min, r_max, kappa, certify
///   [numerics]    dt, paths, particles, levels, deltas, R, p, grid
///
/// Lists are whitespace separated. Unknown keys are rejected.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::DetCalculus;
  std::uint64_t seed = 1;
  std::string output = "flowjump_out";
  bool smoke = false;

  FieldSpec field;
  LevyConfig levy;

  double dt = 0.01;
  std::size_t paths = 1000;
  std::size_t particles = 100000;
  std::vector<int> levels = {8, 16, 32, 64};
  std::vector<double> deltas = {0.1, 0.01, 0.001};
  double R = 10.0;
  double p = 1.5;
  int grid = 32;

  std::string source_text;  // the file as read, echoed into the output directory

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  /// Gate validation that must pass before any simulation: beta_alpha vs q
  /// for rough fields, p vs beta_alpha, and jump moment certificates.
  void validate() const;
};

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(const std::string& bytes);

}  // namespace flowjump
