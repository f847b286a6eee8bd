#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace zoflow::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kConfig = 3,
  kDivergence = 4,
  kAssumption = 5,
  kContract = 6,
  kInternal = 70,
};

struct SelftestOptions {
  std::optional<std::filesystem::path> out;
  bool corrupt_alpha_schedule = false;  // test hook
  bool quiet = false;
};

struct SelftestResult {
  std::string name;
  bool passed;
  std::string detail;
  double seconds;
};

std::vector<SelftestResult> run_selftest(const SelftestOptions& opts, std::ostream& log);

/// Parses argv and dispatches. Never throws; returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zoflow::cli
