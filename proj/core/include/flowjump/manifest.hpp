#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace flowjump {

/// Library version string.
const char* version() noexcept;

/// One pass/fail decision with the numbers it was made from.
struct CheckResult {
  std::string id;
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double runtime_s = 0.0;
  double limit_s = 0.0;  // 0 when the check has no runtime budget
  std::string detail;
};

/// Record of one run. Pass/fail is decided only from `checks`.
struct RunManifest {
  std::string kind;
  std::string config_sha256;
  std::string version;
  unsigned long long seed = 0;
  double wall_time_s = 0.0;
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, std::string>> notes;  // exclusion counts, gate reports
  std::vector<std::string> artifacts;

  bool all_pass() const;
  void write(std::ostream& out) const;
};

/// "[PASS] id name: measured=... tolerance=... runtime=...s/limit s (detail)".
std::string format_check(const CheckResult& check);

}  // namespace flowjump
