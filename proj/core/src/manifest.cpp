#include "flowjump/manifest.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

namespace flowjump {

const char* version() noexcept {
  return FLOWJUMP_VERSION;
}

bool RunManifest::all_pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string format_check(const CheckResult& c) {
  std::string line = fmt::format("[{}] {:>3} {}: measured={:.6g} tolerance={:.6g}", c.pass ? "PASS" : "FAIL", c.id,
                                 c.name, c.measured, c.tolerance);
  if (c.limit_s > 0.0) line += fmt::format(" runtime={:.2f}s/{:.0f}s", c.runtime_s, c.limit_s);
  if (!c.detail.empty()) line += " (" + c.detail + ")";
  return line;
}

void RunManifest::write(std::ostream& out) const {
  out << "flowjump run manifest\n";
  out << "kind = " << kind << '\n';
  out << "version = " << version << '\n';
  out << "config_sha256 = " << config_sha256 << '\n';
  out << "seed = " << seed << '\n';
  out << fmt::format("wall_time_s = {:.3f}\n", wall_time_s);
  out << "status = " << (all_pass() ? "pass" : "fail") << '\n';
  out << "\n[checks]\n";
  out << "id,name,measured,tolerance,pass,runtime_s,limit_s,detail\n";
  for (const auto& c : checks)
    out << fmt::format("{},{},{:.17g},{:.17g},{},{:.3f},{:.0f},\"{}\"\n", c.id, c.name, c.measured, c.tolerance,
                       c.pass ? "pass" : "fail", c.runtime_s, c.limit_s, c.detail);
  if (!notes.empty()) {
    out << "\n[notes]\n";
    for (const auto& [k, v] : notes) out << k << " = " << v << '\n';
  }
  if (!artifacts.empty()) {
    out << "\n[artifacts]\n";
    for (const auto& a : artifacts) out << a << '\n';
  }
}

}  // namespace flowjump
