#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "crossdefect/run_config.hpp"
#include "crossdefect/spectrum.hpp"

namespace crossdefect {

// Process exit status of a run. Every failure path maps to one of these.
namespace exit_status {
constexpr int ok = 0;
constexpr int internal = 1;   // unexpected exception
constexpr int config = 2;     // unreadable or invalid config, unknown command, bad operator file
constexpr int numeric = 3;    // not invertible, ill-conditioned, residual or validation above tolerance
constexpr int mismatch = 4;   // oracle comparison failed
constexpr int io = 5;         // output directory or referenced input not accessible
}  // namespace exit_status

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precedence: explicit override, config value, CROSSDEFECT_OUTPUT_DIR, ./crossdefect_out.
std::filesystem::path resolve_output_dir(const RunConfig& config,
                                         const std::optional<std::filesystem::path>& override_dir);

/// 17 significant digits, scientific notation.
std::string format_number(double v);

/// Writes sigma<component>_scan.csv with header lambda,statistic,validity; returns its path.
std::filesystem::path emit_scan(const ScanTable& scan, const std::filesystem::path& dir);

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;
  std::optional<int> threads;
  int verbosity = 0;
};

/// Executes the configured command, writes report.json plus CSV files and returns the
/// exit status. Never throws.
int run(const RunConfig& config, const RunOptions& options, std::ostream& out, std::ostream& log);

}  // namespace crossdefect
