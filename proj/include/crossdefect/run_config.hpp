#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crossdefect/interval_set.hpp"
#include "crossdefect/lattice_model.hpp"
#include "crossdefect/supercell.hpp"

namespace crossdefect {

enum class Command { spectrum, invert_check, factor_check, oracle, compare };
enum class ModelKind { spring_mass, operator_file };

Command parse_command(const std::string& name);
std::string command_name(Command command);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSettings {
  int order = 64;  // Gauss-Legendre nodes per axis for invert-check / factor-check
  int k_points = 201;
  int lambda_points = 2000;
  int fibres = 64;
  int sigma3_points = 200;
  int nystrom_order = 64;
};

struct ToleranceSettings {
  double detection = 1e-6;      // sigma0 distance and sigma3 singular value threshold
  double determinant = 1e-6;    // sigma12 |det| threshold
  double refinement = 1e-13;    // golden-section tolerance for sigma3
  double validation = 1e-4;     // allowed Nystrom order-doubling shift
  double residual = 1e-8;       // invert-check and factor-check
  double margin = 1e-3;         // sigma3 distance from the continuous spectrum
  double quadrature = 1e-10;    // relative tolerance of the fibre integrals
};

struct InvertSettings {
  double lambda = -1.0;
  int samples = 10;
  unsigned long long seed = 20240607ULL;
};

struct OracleSettings {
  int half_width = 40;
  Boundary boundary = Boundary::periodic;
  OracleTolerances tolerances;
};

struct RunConfig {
  Command command = Command::spectrum;
  ModelKind model = ModelKind::spring_mass;
  LatticeModel lattice;
  std::filesystem::path operator_file;
  GridSettings grid;
  Interval window{-1.0, 20.0};
  std::vector<Interval> sigma3_windows;  // empty: complement of the continuous spectrum
  bool compute_sigma3 = true;
  ToleranceSettings tolerances;
  InvertSettings invert;
  OracleSettings oracle;
  std::optional<std::filesystem::path> output_dir;
  int threads = 1;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;
};

/// INI text; relative file paths are resolved against `base_dir`.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".");
/// Throws ConfigError when the file cannot be read or parsed.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace crossdefect
