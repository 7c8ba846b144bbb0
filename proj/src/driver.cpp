#include "crossdefect/driver.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <vector>

#include "json.hpp"

#include "crossdefect/lattice_model.hpp"
#include "crossdefect/operator_file.hpp"
#include "crossdefect/spectral_engine.hpp"
#include "crossdefect/supercell.hpp"

namespace crossdefect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Failure that carries its own exit status.
struct RunFailure {
  int status;
  std::string message;
};

json intervals_json(const IntervalSet& set) {
  json a = json::array();
  for (const Interval& i : set.intervals()) a.push_back({i.lo, i.hi});
  return a;
}

// NaN and infinities are not valid JSON numbers.
json number_json(double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); }

class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw OutputError("cannot create output directory " + dir_.string());
  }

  [[nodiscard]] const fs::path& dir() const { return dir_; }

  // Header plus rows, each row already formatted.
  void csv(const std::string& name, const std::string& header, const std::vector<std::string>& rows) {
    write(name, [&](std::ostream& out) {
      out << header << '\n';
      for (const auto& r : rows) out << r << '\n';
    });
  }

  void track(const fs::path& p) { files_.push_back(p.filename().string()); }

  template <typename F>
  void write(const std::string& name, F&& body) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw OutputError("cannot write " + p.string());
    body(out);
    out.flush();
    if (!out) throw OutputError("write failed for " + p.string());
    track(p);
  }

  [[nodiscard]] const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::string join_row(std::initializer_list<std::string> fields) {
  std::string s;
  for (const auto& f : fields) {
    if (!s.empty()) s += ',';
    s += f;
  }
  return s;
}

json model_json(const RunConfig& c) {
  json m;
  if (c.model == ModelKind::spring_mass) {
    m["type"] = "spring_mass";
    m["m1"] = c.lattice.m1;
    m["m2"] = c.lattice.m2;
    json defects = json::array();
    for (const auto& d : c.lattice.point_defects) defects.push_back({{"x", d.x}, {"y", d.y}, {"delta_mass", d.delta_mass}});
    m["point_defects"] = defects;
  } else {
    m["type"] = "file";
    m["file"] = c.operator_file.string();
  }
  return m;
}

DefectOperator load_user_operator(const RunConfig& c) {
  if (!fs::exists(c.operator_file)) {
    throw RunFailure{exit_status::io, "operator file not found: " + c.operator_file.string()};
  }
  return read_operator_file(c.operator_file);
}

SpectralProblem make_problem(const RunConfig& c) {
  if (c.model == ModelKind::spring_mass) return spectral_problem(c.lattice);
  return SpectralProblem::shifted(load_user_operator(c));
}

// Operator and query at the configured invert.lambda.
std::pair<DefectOperator, SpectralQuery> operator_at(const RunConfig& c) {
  if (c.model == ModelKind::spring_mass) {
    return {build_operator(c.lattice, c.invert.lambda), SpectralQuery{0.0, SpectralMode::shift}};
  }
  return {load_user_operator(c), SpectralQuery{c.invert.lambda, SpectralMode::shift}};
}

SpectrumOptions spectrum_options(const RunConfig& c, int threads) {
  SpectrumOptions o;
  o.sigma0.window = c.window;
  o.sigma0.k_points = c.grid.k_points;
  o.sigma0.lambda_points = c.grid.lambda_points;
  o.sigma0.threshold = c.tolerances.detection;
  o.sigma0.threads = threads;
  o.sigma12.window = c.window;
  o.sigma12.lambda_points = c.grid.lambda_points;
  o.sigma12.fibres = c.grid.fibres;
  o.sigma12.det_threshold = c.tolerances.determinant;
  o.sigma12.quadrature.rel_tol = c.tolerances.quadrature;
  o.sigma12.threads = threads;
  o.sigma3.window = c.window;
  o.sigma3.windows = c.sigma3_windows;
  o.sigma3.margin = c.tolerances.margin;
  o.sigma3.lambda_points = c.grid.sigma3_points;
  o.sigma3.nystrom_order = c.grid.nystrom_order;
  o.sigma3.threshold = c.tolerances.detection;
  o.sigma3.refine_tolerance = c.tolerances.refinement;
  o.sigma3.validation_shift = c.tolerances.validation;
  o.sigma3.threads = threads;
  o.compute_sigma3 = c.compute_sigma3;
  return o;
}

json band_checks(const RunConfig& c) {
  json checks = json::array();
  if (c.model != ModelKind::spring_mass) return checks;
  // axis 1 is guided by the column of mass m2, axis 2 by the row of mass m1
  const std::pair<int, double> lines[] = {{1, c.lattice.m2}, {2, c.lattice.m1}};
  for (const auto& [axis, m] : lines) {
    if (m == 0.0 || std::abs(m) >= 1.0) continue;
    const BandDiscrepancy d = check_printed_band(m);
    checks.push_back({{"axis", axis},
                      {"m", m},
                      {"derived", {d.derived.lo, d.derived.hi}},
                      {"printed", {d.printed.first, d.printed.second}},
                      {"flagged", d.flagged},
                      {"message", d.message}});
  }
  return checks;
}

json eigenvalues_json(const std::vector<DiscreteEigenvalue>& list) {
  json a = json::array();
  for (const auto& e : list) {
    a.push_back({{"lambda", e.lambda},
                 {"residual", number_json(e.residual)},
                 {"multiplicity", e.multiplicity},
                 {"validation_shift", number_json(e.validation_shift)},
                 {"validated", e.validated}});
  }
  return a;
}

void emit_sigma3(Output& out, const std::vector<DiscreteEigenvalue>& list) {
  std::vector<std::string> rows;
  for (const auto& e : list) {
    rows.push_back(join_row({format_number(e.lambda), format_number(e.residual), std::to_string(e.multiplicity),
                             format_number(e.validation_shift), e.validated ? "1" : "0"}));
  }
  out.csv("sigma3_eigenvalues.csv", "lambda,residual,multiplicity,validation_shift,validated", rows);
}

SpectrumReport spectrum(const RunConfig& c, int threads, Output& out, json& report, std::ostream& log,
                        int verbosity) {
  const SpectralProblem problem = make_problem(c);
  if (verbosity > 0) log << "computing spectrum\n";
  SpectrumReport r = compute_spectrum(problem, spectrum_options(c, threads));
  for (const ScanTable& scan : r.scans) out.track(emit_scan(scan, out.dir()));
  emit_sigma3(out, r.sigma3);
  report["sigma0"] = intervals_json(r.sigma0);
  report["sigma1"] = intervals_json(r.sigma1);
  report["sigma2"] = intervals_json(r.sigma2);
  report["sigma3"] = eigenvalues_json(r.sigma3);
  report["warnings"] = r.warnings;
  report["metadata"] = r.metadata;
  report["band_checks"] = band_checks(c);
  if (verbosity > 0) {
    for (const auto& w : r.warnings) log << "warning: " << w << '\n';
  }
  return r;
}

int command_spectrum(const RunConfig& c, int threads, Output& out, json& report, std::ostream& stdout_,
                     std::ostream& log, int verbosity) {
  const SpectrumReport r = spectrum(c, threads, out, report, log, verbosity);
  stdout_ << "sigma0 " << r.sigma0.to_string() << '\n'
          << "sigma1 " << r.sigma1.to_string() << '\n'
          << "sigma2 " << r.sigma2.to_string() << '\n'
          << "sigma3";
  bool validated = true;
  for (const auto& e : r.sigma3) {
    stdout_ << ' ' << format_number(e.lambda);
    validated = validated && e.validated;
  }
  stdout_ << '\n';
  for (const auto& b : report["band_checks"]) {
    if (b["flagged"].get<bool>()) stdout_ << "band check: " << b["message"].get<std::string>() << '\n';
  }
  if (!validated) {
    report["failure"] = "sigma3 eigenvalue failed Nystrom validation";
    return exit_status::numeric;
  }
  return exit_status::ok;
}

int command_residual(const RunConfig& c, Output& out, json& report, std::ostream& stdout_, bool factor) {
  const auto [op, q] = operator_at(c);
  const QuadratureGrid grid = QuadratureGrid::gauss_legendre(c.grid.order);
  InvertibilityOptions inv;
  inv.derive.fibre_quadrature.rel_tol = c.tolerances.quadrature;
  std::mt19937_64 rng(c.invert.seed);

  std::vector<std::string> rows;
  double worst = 0.0;
  if (!factor) {
    const InvertibilityVerdict v = is_invertible(op, q, grid, inv);
    report["invertible"] = v.invertible;
    report["diagnostic"] = v.diagnostic;
    if (!v.invertible) throw NotInvertible(v);
    const SpectralCache cache = derive(op, q, grid, inv.derive);
    double worst_right = 0.0, worst_left = 0.0;
    for (int s = 0; s < c.invert.samples; ++s) {
      const GridFunction u = GridFunction::random(grid, op.M(), rng);
      const double norm = grid_norm(u);
      const double right = grid_norm(apply(op, inverse_apply(cache, u)) - u) / norm;
      const double left = grid_norm(inverse_apply(cache, apply(op, u)) - u) / norm;
      worst_right = std::max(worst_right, right);
      worst_left = std::max(worst_left, left);
      rows.push_back(join_row({std::to_string(s), format_number(right), format_number(left)}));
    }
    worst = std::max(worst_right, worst_left);
    out.csv("invert_check.csv", "sample,right_residual,left_residual", rows);
    report["right_residual"] = worst_right;
    report["left_residual"] = worst_left;
    stdout_ << "residual right " << format_number(worst_right) << " left " << format_number(worst_left) << '\n';
  } else {
    const Factorization f = factorize(op, q, grid, inv);
    for (int s = 0; s < c.invert.samples; ++s) {
      const GridFunction u = GridFunction::random(grid, op.M(), rng);
      const GridFunction direct = apply(op, u);
      const double r = grid_norm(apply_factors(f, u) - direct) / grid_norm(direct);
      worst = std::max(worst, r);
      rows.push_back(join_row({std::to_string(s), format_number(r)}));
    }
    out.csv("factor_check.csv", "sample,residual", rows);
    report["residual"] = worst;
    stdout_ << "factorization residual " << format_number(worst) << '\n';
  }
  report["lambda"] = c.invert.lambda;
  report["grid_order"] = c.grid.order;
  report["tolerance"] = c.tolerances.residual;
  if (!(worst <= c.tolerances.residual)) {
    report["failure"] = "residual above tolerance";
    return exit_status::numeric;
  }
  return exit_status::ok;
}

std::vector<double> oracle_eigenvalues(const RunConfig& c, Output& out, json& report) {
  if (c.model != ModelKind::spring_mass) {
    throw RunFailure{exit_status::config, "the supercell oracle needs the spring_mass model"};
  }
  const std::vector<double> eigs = supercell_eigenvalues(c.lattice, c.oracle.half_width, c.oracle.boundary);
  std::vector<std::string> rows;
  rows.reserve(eigs.size());
  for (std::size_t i = 0; i < eigs.size(); ++i) rows.push_back(join_row({std::to_string(i), format_number(eigs[i])}));
  out.csv("oracle_eigenvalues.csv", "index,eigenvalue", rows);
  report["oracle"] = {{"half_width", c.oracle.half_width},
                      {"boundary", c.oracle.boundary == Boundary::periodic ? "periodic" : "fixed"},
                      {"count", eigs.size()},
                      {"min", eigs.empty() ? json(nullptr) : json(eigs.front())},
                      {"max", eigs.empty() ? json(nullptr) : json(eigs.back())}};
  return eigs;
}

int command_compare(const RunConfig& c, int threads, Output& out, json& report, std::ostream& stdout_,
                    std::ostream& log, int verbosity) {
  if (c.model != ModelKind::spring_mass) {
    throw RunFailure{exit_status::config, "compare needs the spring_mass model"};
  }
  const SpectrumReport r = spectrum(c, threads, out, report, log, verbosity);
  const std::vector<double> eigs = oracle_eigenvalues(c, out, report);
  const OracleVerdict v = oracle_compare(r, eigs, c.oracle.tolerances);

  std::vector<std::string> rows;
  for (const auto& [s, e] : v.sigma3_matches) {
    rows.push_back(join_row({format_number(s), format_number(e), format_number(std::abs(s - e))}));
  }
  out.csv("compare_sigma3.csv", "sigma3,nearest_eigenvalue,distance", rows);
  rows.clear();
  for (double e : v.unexplained) rows.push_back(join_row({format_number(e), format_number(r.continuous().distance(e))}));
  out.csv("compare_unexplained.csv", "eigenvalue,distance_to_continuous", rows);

  report["compare"] = {{"passed", v.passed},
                       {"band_tolerance", c.oracle.tolerances.band},
                       {"eigenvalue_tolerance", c.oracle.tolerances.eigenvalue},
                       {"unexplained", v.unexplained.size()},
                       {"unmatched_sigma3", v.unmatched_sigma3},
                       {"diagnostics", v.diagnostics}};
  stdout_ << "compare " << (v.passed ? "passed" : "MISMATCH") << '\n';
  for (const auto& d : v.diagnostics) stdout_ << "  " << d << '\n';
  return v.passed ? exit_status::ok : exit_status::mismatch;
}

}  // namespace

fs::path resolve_output_dir(const RunConfig& config, const std::optional<fs::path>& override_dir) {
  if (override_dir) return *override_dir;
  if (config.output_dir) return *config.output_dir;
  if (const char* env = std::getenv("CROSSDEFECT_OUTPUT_DIR"); env && *env) return env;
  return "crossdefect_out";
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

fs::path emit_scan(const ScanTable& scan, const fs::path& dir) {
  const fs::path p = dir / ("sigma" + std::to_string(scan.component) + "_scan.csv");
  std::ofstream out(p, std::ios::binary);
  if (!out) throw OutputError("cannot write " + p.string());
  out << "lambda,statistic,validity\n";
  for (const ScanRow& r : scan.rows) {
    out << format_number(r.lambda) << ',' << format_number(r.statistic) << ',' << format_number(r.validity) << '\n';
  }
  out.flush();
  if (!out) throw OutputError("write failed for " + p.string());
  return p;
}

int run(const RunConfig& config, const RunOptions& options, std::ostream& out, std::ostream& log) {
  const int threads = options.threads.value_or(config.threads);
  json report;
  report["command"] = command_name(config.command);
  report["model"] = model_json(config);

  std::optional<Output> output;
  int status = exit_status::ok;
  std::string error;
  try {
    output.emplace(resolve_output_dir(config, options.output_dir));
    switch (config.command) {
      case Command::spectrum:
        status = command_spectrum(config, threads, *output, report, out, log, options.verbosity);
        break;
      case Command::invert_check:
        status = command_residual(config, *output, report, out, false);
        break;
      case Command::factor_check:
        status = command_residual(config, *output, report, out, true);
        break;
      case Command::oracle: {
        const auto eigs = oracle_eigenvalues(config, *output, report);
        out << "oracle " << eigs.size() << " eigenvalues\n";
        break;
      }
      case Command::compare:
        status = command_compare(config, threads, *output, report, out, log, options.verbosity);
        break;
    }
  } catch (const RunFailure& f) {
    status = f.status;
    error = f.message;
  } catch (const OutputError& e) {
    status = exit_status::io;
    error = e.what();
  } catch (const ConfigError& e) {
    status = exit_status::config;
    error = e.what();
  } catch (const OperatorFileError& e) {
    status = exit_status::config;
    error = e.what();
  } catch (const NumericalError& e) {
    status = exit_status::numeric;
    error = e.what();
  } catch (const std::invalid_argument& e) {
    status = exit_status::config;
    error = e.what();
  } catch (const std::exception& e) {
    status = exit_status::internal;
    error = e.what();
  }

  if (!error.empty()) {
    report["error"] = error;
    log << "error: " << error << '\n';
  }
  report["exit_status"] = status;
  if (!output) return status;
  try {
    report["files"] = output->files();
    output->write("report.json", [&](std::ostream& o) { o << report.dump(2) << '\n'; });
  } catch (const OutputError& e) {
    log << "error: " << e.what() << '\n';
    return status == exit_status::ok ? exit_status::io : status;
  }
  if (options.verbosity > 0) log << "wrote " << (output->dir() / "report.json").string() << '\n';
  return status;
}

}  // namespace crossdefect
