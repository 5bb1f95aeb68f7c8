#include "flowjump/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "flowjump/determinant.hpp"
#include "flowjump/rough_flow.hpp"

namespace flowjump {

namespace {

constexpr std::array<std::pair<ExperimentKind, const char*>, 9> kKinds{{
    {ExperimentKind::DetCalculus, "det_calculus"},
    {ExperimentKind::NoiseIdentity, "noise_identity"},
    {ExperimentKind::MollifyConvergence, "mollify_convergence"},
    {ExperimentKind::FlowOracle, "flow_oracle"},
    {ExperimentKind::DetDecomposition, "det_decomposition"},
    {ExperimentKind::RoughCauchy, "rough_cauchy"},
    {ExperimentKind::PideReference, "pide_reference"},
    {ExperimentKind::UniquenessCoupling, "uniqueness_coupling"},
    {ExperimentKind::AcceptanceAll, "acceptance_all"},
}};

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  std::vector<T> out;
  T v;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw InvalidInput(fmt::format("config: cannot parse list '{}' for {}", text, key));
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || text.find_first_not_of(" \t", used) != std::string::npos)
    throw InvalidInput(fmt::format("config: {} = '{}' is not a number", key, text));
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15)
    throw InvalidInput(fmt::format("config: {} = '{}' must be a nonnegative integer", key, text));
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InvalidInput(fmt::format("config: {} = '{}' is not a boolean", key, text));
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKinds)
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind parse_kind(const std::string& text) {
  for (const auto& [k, name] : kKinds)
    if (text == name) return k;
  throw InvalidInput(fmt::format("config: unknown experiment kind '{}'", text));
}

LevyMeasureSpec LevyConfig::build(int dim) const {
  if (rate < 0.0) throw InvalidInput("config: levy rate must be nonnegative");
  if (rate == 0.0) return LevyMeasureSpec::none(dim);
  auto atom = [&] {
    if (static_cast<int>(mark.size()) != dim)
      throw InvalidInput(fmt::format("config: levy mark needs {} components", dim));
    Vec y(dim);
    for (int a = 0; a < dim; ++a) y[a] = mark[a];
    return y;
  };
  MarkLaw law = marks == "fixed"       ? MarkLaw::fixed(atom())
                : marks == "symmetric" ? MarkLaw::symmetric(atom())
                : marks == "radial_shell"
                    ? MarkLaw::radial_shell(dim, r_min, r_max, kappa)
                    : throw InvalidInput(fmt::format("config: unknown mark law '{}'", marks));
  LevyMeasureSpec spec = LevyMeasureSpec::compound(RatePath::constant(rate), std::move(law));
  spec.certify(certify);
  return spec;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidInput(std::string("config: ") + e.message() + fmt::format(" (line {})", e.line()));
  }

  ExperimentConfig cfg;
  cfg.source_text = text;
  static const std::set<std::string> kSections{"experiment", "field", "levy", "numerics"};
  static const std::set<std::string> kFieldNames{"dim", "drift", "diffusion", "jump", "alpha", "q", "table"};
  for (const auto& [section, body] : tree) {
    if (!kSections.count(section)) throw InvalidInput(fmt::format("config: unknown section [{}]", section));
    for (const auto& [key, node] : body) {
      const std::string value = node.get_value<std::string>();
      const std::string where = section + "." + key;
      if (section == "experiment") {
        if (key == "kind") cfg.kind = parse_kind(value);
        else if (key == "seed") cfg.seed = parse_count(where, value);
        else if (key == "output") cfg.output = value;
        else if (key == "smoke") cfg.smoke = parse_bool(where, value);
        else throw InvalidInput("config: unknown key " + where);
      } else if (section == "field") {
        if (key == "dim") cfg.field.dim = static_cast<int>(parse_count(where, value));
        else if (key == "drift") cfg.field.drift = value;
        else if (key == "diffusion") cfg.field.diffusion = value;
        else if (key == "jump") cfg.field.jump = value;
        else if (key == "alpha") cfg.field.alpha = parse_double(where, value);
        else if (key == "q") cfg.field.sobolev_q = parse_double(where, value);
        else if (key == "table") cfg.field.table = value;
        else cfg.field.params[key] = parse_double(where, value);
      } else if (section == "levy") {
        if (key == "rate") cfg.levy.rate = parse_double(where, value);
        else if (key == "marks") cfg.levy.marks = value;
        else if (key == "mark") cfg.levy.mark = parse_list<double>(where, value);
        else if (key == "r_min") cfg.levy.r_min = parse_double(where, value);
        else if (key == "r_max") cfg.levy.r_max = parse_double(where, value);
        else if (key == "kappa") cfg.levy.kappa = parse_double(where, value);
        else if (key == "certify") cfg.levy.certify = parse_list<double>(where, value);
        else throw InvalidInput("config: unknown key " + where);
      } else {
        if (key == "dt") cfg.dt = parse_double(where, value);
        else if (key == "paths") cfg.paths = parse_count(where, value);
        else if (key == "particles") cfg.particles = parse_count(where, value);
        else if (key == "levels") cfg.levels = parse_list<int>(where, value);
        else if (key == "deltas") cfg.deltas = parse_list<double>(where, value);
        else if (key == "R") cfg.R = parse_double(where, value);
        else if (key == "p") cfg.p = parse_double(where, value);
        else if (key == "grid") cfg.grid = static_cast<int>(parse_count(where, value));
        else throw InvalidInput("config: unknown key " + where);
      }
    }
  }
  if (!(cfg.dt > 0.0 && cfg.dt <= 1.0)) throw InvalidInput("config: dt must lie in (0, 1]");
  if (cfg.paths == 0 || cfg.particles == 0) throw InvalidInput("config: paths and particles must be positive");
  if (cfg.field.dim < 1 || cfg.field.dim > kMaxDim) throw InvalidInput("config: field.dim out of range");
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::validate() const {
  if (kind == ExperimentKind::AcceptanceAll || kind == ExperimentKind::DetCalculus) return;
  const CoefficientField f = make_field(field);
  const LevyMeasureSpec spec = levy.build(field.dim);  // certifies the declared moments
  if (!f.regularity().drift_lipschitz || kind == ExperimentKind::RoughCauchy) check_rough_gate(f);
  const bool jumps = !spec.rate.is_zero() && field.jump != "zero";
  if (jumps && field.dim >= 2 && kind == ExperimentKind::DetDecomposition) {
    const double beta = beta_alpha(field.dim, field.alpha);
    if (!(p < beta)) throw GateViolation(fmt::format("moment order p = {} must be below beta_alpha = {:.6g}", p, beta), p, beta);
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw ConsistencyError("sha256_hex: digest failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

}  // namespace flowjump
