#include "crossdefect/run_config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace crossdefect {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"command", "output_dir", "threads"}},
      {"model", {"type", "m1", "m2", "point_defects", "file"}},
      {"grid", {"order", "k_points", "lambda_points", "fibres", "sigma3_points", "nystrom_order"}},
      {"window", {"lo", "hi", "sigma3", "compute_sigma3"}},
      {"tolerances",
       {"detection", "determinant", "refinement", "validation", "residual", "margin", "quadrature"}},
      {"invert", {"lambda", "samples", "seed"}},
      {"oracle", {"half_width", "boundary", "band", "eigenvalue"}},
  };
  return keys;
}

void check_keys(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
    }
  }
}

template <typename T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  if (!tree.get_child_optional(key)) return fallback;
  try {
    return tree.get<T>(key);
  } catch (const pt::ptree_bad_data&) {
    throw ConfigError("cannot parse value of " + key + ": '" + tree.get<std::string>(key) + "'");
  }
}

std::vector<std::string> split(const std::string& text, const char* separators) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(separators));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw ConfigError("cannot parse " + what + ": '" + s + "'");
  return v;
}

std::vector<PointDefect> parse_point_defects(const std::string& text) {
  std::vector<PointDefect> out;
  for (const auto& item : split(text, ";")) {
    const auto f = split(item, ", \t");
    if (f.size() != 3) throw ConfigError("point defect needs x, y, delta_mass: '" + item + "'");
    PointDefect d;
    const double x = to_double(f[0], "point defect x");
    const double y = to_double(f[1], "point defect y");
    if (x != static_cast<int>(x) || y != static_cast<int>(y)) {
      throw ConfigError("point defect site must be integer: '" + item + "'");
    }
    d.x = static_cast<int>(x);
    d.y = static_cast<int>(y);
    d.delta_mass = to_double(f[2], "point defect mass");
    out.push_back(d);
  }
  return out;
}

std::vector<Interval> parse_windows(const std::string& text) {
  std::vector<Interval> out;
  for (const auto& item : split(text, ";")) {
    const auto f = split(item, ":");
    if (f.size() != 2) throw ConfigError("window must be lo:hi, got '" + item + "'");
    out.push_back({to_double(f[0], "window"), to_double(f[1], "window")});
  }
  return out;
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "spectrum") return Command::spectrum;
  if (name == "invert-check") return Command::invert_check;
  if (name == "factor-check") return Command::factor_check;
  if (name == "oracle") return Command::oracle;
  if (name == "compare") return Command::compare;
  throw ConfigError("unknown command '" + name + "'");
}

std::string command_name(Command command) {
  switch (command) {
    case Command::spectrum: return "spectrum";
    case Command::invert_check: return "invert-check";
    case Command::factor_check: return "factor-check";
    case Command::oracle: return "oracle";
    case Command::compare: return "compare";
  }
  return "?";
}

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(grid.order, "grid.order");
  positive(grid.k_points - 1, "grid.k_points - 1");
  positive(grid.lambda_points - 1, "grid.lambda_points - 1");
  positive(grid.fibres, "grid.fibres");
  positive(grid.sigma3_points - 1, "grid.sigma3_points - 1");
  positive(grid.nystrom_order, "grid.nystrom_order");
  if (!(window.lo < window.hi)) throw ConfigError("window.lo must be below window.hi");
  for (const auto& w : sigma3_windows) {
    if (!(w.lo < w.hi)) {
      throw ConfigError("sigma3 window " + std::to_string(w.lo) + ":" + std::to_string(w.hi) + " is not ordered");
    }
  }
  positive(tolerances.detection, "tolerances.detection");
  positive(tolerances.determinant, "tolerances.determinant");
  positive(tolerances.refinement, "tolerances.refinement");
  positive(tolerances.validation, "tolerances.validation");
  positive(tolerances.residual, "tolerances.residual");
  positive(tolerances.margin, "tolerances.margin");
  positive(tolerances.quadrature, "tolerances.quadrature");
  positive(invert.samples, "invert.samples");
  positive(threads, "run.threads");
  if (oracle.half_width < 1) throw ConfigError("oracle.half_width must be at least 1");
  // zero is allowed here: it forces the comparison to fail
  if (oracle.tolerances.band < 0.0 || oracle.tolerances.eigenvalue < 0.0) {
    throw ConfigError("oracle tolerances must be non-negative");
  }
  if (model == ModelKind::spring_mass) {
    try {
      lattice.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (operator_file.empty()) {
    throw ConfigError("model.file is required for type = file");
  }
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  check_keys(tree);

  RunConfig c;
  c.command = parse_command(get<std::string>(tree, "run.command", "spectrum"));
  if (auto dir = tree.get_optional<std::string>("run.output_dir")) {
    std::filesystem::path p(*dir);
    c.output_dir = p.is_absolute() ? p : base_dir / p;
  }
  c.threads = get(tree, "run.threads", c.threads);

  const auto type = get<std::string>(tree, "model.type", "spring_mass");
  if (type == "spring_mass") {
    c.model = ModelKind::spring_mass;
  } else if (type == "file") {
    c.model = ModelKind::operator_file;
  } else {
    throw ConfigError("unknown model type '" + type + "'");
  }
  c.lattice.m1 = get(tree, "model.m1", 0.0);
  c.lattice.m2 = get(tree, "model.m2", 0.0);
  c.lattice.point_defects = parse_point_defects(get<std::string>(tree, "model.point_defects", ""));
  if (auto file = tree.get_optional<std::string>("model.file")) {
    std::filesystem::path p(*file);
    c.operator_file = p.is_absolute() ? p : base_dir / p;
  }

  c.grid.order = get(tree, "grid.order", c.grid.order);
  c.grid.k_points = get(tree, "grid.k_points", c.grid.k_points);
  c.grid.lambda_points = get(tree, "grid.lambda_points", c.grid.lambda_points);
  c.grid.fibres = get(tree, "grid.fibres", c.grid.fibres);
  c.grid.sigma3_points = get(tree, "grid.sigma3_points", c.grid.sigma3_points);
  c.grid.nystrom_order = get(tree, "grid.nystrom_order", c.grid.nystrom_order);

  c.window.lo = get(tree, "window.lo", c.window.lo);
  c.window.hi = get(tree, "window.hi", c.window.hi);
  c.sigma3_windows = parse_windows(get<std::string>(tree, "window.sigma3", ""));
  c.compute_sigma3 = get(tree, "window.compute_sigma3", c.compute_sigma3);

  auto& t = c.tolerances;
  t.detection = get(tree, "tolerances.detection", t.detection);
  t.determinant = get(tree, "tolerances.determinant", t.determinant);
  t.refinement = get(tree, "tolerances.refinement", t.refinement);
  t.validation = get(tree, "tolerances.validation", t.validation);
  t.residual = get(tree, "tolerances.residual", t.residual);
  t.margin = get(tree, "tolerances.margin", t.margin);
  t.quadrature = get(tree, "tolerances.quadrature", t.quadrature);

  c.invert.lambda = get(tree, "invert.lambda", c.invert.lambda);
  c.invert.samples = get(tree, "invert.samples", c.invert.samples);
  c.invert.seed = get(tree, "invert.seed", c.invert.seed);

  c.oracle.half_width = get(tree, "oracle.half_width", c.oracle.half_width);
  const auto boundary = get<std::string>(tree, "oracle.boundary", "periodic");
  if (boundary == "periodic") {
    c.oracle.boundary = Boundary::periodic;
  } else if (boundary == "fixed") {
    c.oracle.boundary = Boundary::fixed;
  } else {
    throw ConfigError("unknown boundary '" + boundary + "'");
  }
  c.oracle.tolerances.band = get(tree, "oracle.band", c.oracle.tolerances.band);
  c.oracle.tolerances.eigenvalue = get(tree, "oracle.eigenvalue", c.oracle.tolerances.eigenvalue);

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace crossdefect
