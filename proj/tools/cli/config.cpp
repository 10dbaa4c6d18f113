#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace codim::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const KeySpec* find_spec(const std::string& key) {
  for (const auto& s : schema()) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "key '" + key + "': expected a number, got '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(x)) {
    throw ConfigError(key, "key '" + key + "': expected a number, got '" + v + "'");
  }
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long x = 0;
  try {
    x = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "key '" + key + "': expected an integer, got '" + v + "'");
  }
  if (pos != v.size() || x < -1000000000L || x > 1000000000L) {
    throw ConfigError(key, "key '" + key + "': expected an integer, got '" + v + "'");
  }
  return static_cast<int>(x);
}

void check_type(const KeySpec& s, const std::string& v) {
  if (s.type == "double") {
    to_double(s.key, v);
  } else if (s.type == "int") {
    to_int(s.key, v);
  } else if (s.type == "bool") {
    if (v != "true" && v != "false") {
      throw ConfigError(s.key, "key '" + s.key + "': expected true or false, got '" + v + "'");
    }
  } else if (s.type == "doubles") {
    parse_numbers(s.key, v);
  } else if (s.type == "ints") {
    for (double x : parse_numbers(s.key, v)) {
      if (x != std::floor(x)) {
        throw ConfigError(s.key, "key '" + s.key + "': expected integers, got '" + v + "'");
      }
    }
  }
}

}  // namespace

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"domain", "string", "rect 0 0 1 1", "gcc ray beam gramian",
       "rect X0 Y0 WIDTH HEIGHT | disk CX CY R | polygon X1 Y1 X2 Y2 ... (counterclockwise)"},
      {"omega", "string", "disk 0.2 0.5 0.1", "gcc ray beam gramian",
       "control set, parts separated by ';': disk CX CY R | rect X0 Y0 X1 Y1 | frame W"},

      {"findim.samples", "int", "200", "findim", "number of random systems"},
      {"findim.n_max", "int", "6", "findim", "largest state dimension"},
      {"findim.m_max", "int", "3", "findim", "largest input dimension"},
      {"findim.pieces", "int", "1", "findim", "piecewise-constant pieces per random system"},
      {"findim.T", "double", "1", "findim", "horizon"},
      {"findim.steps", "int", "200", "findim", "Gramian quadrature steps"},
      {"findim.tol", "double", "0", "findim", "rank tolerance, 0 selects 1e-10 lambda_max"},
      {"findim.A", "string", "", "findim",
       "explicit A, rows separated by ';' (replaces the random family)"},
      {"findim.B", "string", "", "findim", "explicit B, rows separated by ';'"},

      {"gcc.T", "double", "2", "gcc", "horizon"},
      {"gcc.positions", "int", "25", "gcc", "seed positions per axis"},
      {"gcc.angles", "int", "16", "gcc", "seed directions"},
      {"gcc.tangency_tol", "double", "1e-8", "gcc", "|nu . p| below this aborts a trace"},

      {"ray.x0", "doubles", "0.5 0.5", "ray", "initial point"},
      {"ray.p0", "doubles", "0 -0.5", "ray", "initial momentum, |p0| = 1/2"},
      {"ray.T", "double", "2", "ray", "horizon"},
      {"ray.two_sided", "bool", "false", "ray", "trace on [-T, T]"},
      {"ray.max_reflections", "int", "1000", "ray", "reflection budget"},

      {"beam.epsilons", "doubles",
       "0.0625 0.03125 0.015625 0.0078125 0.00390625 0.001953125 0.0009765625", "beam",
       "decreasing epsilon ladder"},
      {"beam.T", "double", "1", "beam", "half-window of the symmetrized beam"},
      {"beam.M0_real", "doubles", "0 0 0 0", "beam", "Re M0, row-major"},
      {"beam.M0_imag", "doubles", "0.5 0 0 1", "beam", "Im M0, row-major, positive definite"},
      {"beam.c0", "double", "1", "beam", "amplitude at t = 0"},
      {"beam.x0", "doubles", "", "beam", "ray point at t = 0; empty selects a trapped ray"},
      {"beam.p0", "doubles", "", "beam", "ray momentum at t = 0"},
      {"beam.points_per_width", "int", "12", "beam", "grid points across sqrt(epsilon)"},
      {"beam.max_grid", "int", "1024", "beam", "largest admissible points per axis"},
      {"beam.time_samples", "int", "64", "beam", "time samples for sup-in-time metrics"},
      {"beam.cutoff_radius", "double", "0", "beam", "0 selects a quarter of the dwell time"},

      {"gramian.equation", "string", "wave", "gramian", "wave | heat"},
      {"gramian.observation", "string", "position", "gramian", "position | velocity (wave)"},
      {"gramian.dim", "int", "1", "gramian", "1 (interval) or 2 (rectangle from domain)"},
      {"gramian.L", "double", "1", "gramian", "interval length"},
      {"gramian.intervals", "doubles", "0.2 0.8", "gramian", "observation intervals as pairs"},
      {"gramian.N", "int", "20", "gramian", "modes (per axis in 2D)"},
      {"gramian.ladder", "ints", "", "gramian", "mode ladder for the refined verdict"},
      {"gramian.nx", "int", "0", "gramian", "grid points per axis, 0 selects automatically"},
      {"gramian.cfl", "double", "0.9", "gramian", "leapfrog CFL number"},
      {"gramian.T", "double", "2.5", "gramian", "horizon"},
      {"gramian.a", "double", "0", "gramian", "constant potential (wave)"},
      {"gramian.threshold_rel", "double", "1e-6", "gramian", "small eigenvalue threshold"},
      {"gramian.gap_factor", "double", "10", "gramian", "gap ratio for GAP"},
      {"gramian.decay_slope", "double", "-0.5", "gramian", "log-eigenvalue slope for DECAY"},
      {"gramian.decay_r2", "double", "0.9", "gramian", "R^2 for DECAY"},

      {"lq.equation", "string", "wave", "lq", "wave | heat"},
      {"lq.N", "int", "6", "lq", "modes"},
      {"lq.K", "int", "200", "lq", "time steps"},
      {"lq.T", "double", "2.5", "lq", "horizon"},
      {"lq.L", "double", "1", "lq", "interval length"},
      {"lq.intervals", "doubles", "0.2 0.8", "lq", "control intervals as pairs"},
      {"lq.a", "double", "0", "lq", "constant potential"},
      {"lq.q", "double", "0", "lq", "state weight"},
      {"lq.r", "double", "1", "lq", "control weight"},
      {"lq.r_min", "double", "1e-3", "lq", "lower bound for r"},
      {"lq.y0", "doubles", "", "lq", "initial modal state; empty is zero"},
      {"lq.y1", "doubles", "", "lq", "target modal state; empty is 0.1 on the first mode"},
      {"lq.perturbation", "double", "0.01", "lq", "relative control noise for the sensitivity check"},

      {"scan.Ns", "ints", "2 4 8 16", "scan", "mode counts"},
      {"scan.target", "string", "rough", "scan", "rough | smooth"},
      {"scan.K", "int", "64", "scan", "time steps"},
      {"scan.T", "double", "1", "scan", "horizon"},
      {"scan.L", "double", "1", "scan", "interval length"},
      {"scan.intervals", "doubles", "0.2 0.8", "scan", "control intervals as pairs"},
      {"scan.r", "double", "1", "scan", "control weight"},
  };
  return keys;
}

std::string schema_text() {
  std::ostringstream os;
  os << "# codimctl configuration: key = value, '#' starts a comment\n";
  os << "# key | type | default | commands | description\n";
  for (const auto& s : schema()) {
    os << s.key << " | " << s.type << " | " << (s.default_value.empty() ? "(empty)" : s.default_value)
       << " | " << s.commands << " | " << s.description << "\n";
  }
  return os.str();
}

Config::Config() {
  for (const auto& s : schema()) values_[s.key] = s.default_value;
}

void Config::set(const std::string& key, const std::string& value) {
  const KeySpec* s = find_spec(key);
  if (!s) throw ConfigError(key, "unknown key '" + key + "'");
  const std::string v = trim(value);
  if (!v.empty() || (s->type != "string" && s->type != "doubles" && s->type != "ints")) {
    check_type(*s, v);
  }
  values_[key] = v;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(assignment, "override '" + assignment + "' is not KEY=VALUE");
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
    c.set(key, line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const { return to_double(key, get(key)); }
int Config::get_int(const std::string& key) const { return to_int(key, get(key)); }
bool Config::get_bool(const std::string& key) const { return get(key) == "true"; }
std::vector<double> Config::get_doubles(const std::string& key) const {
  return parse_numbers(key, get(key));
}
std::vector<int> Config::get_ints(const std::string& key) const {
  std::vector<int> out;
  for (double x : parse_numbers(key, get(key))) out.push_back(static_cast<int>(x));
  return out;
}

std::vector<double> parse_numbers(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(to_double(key, tok));
  return out;
}

std::vector<std::string> split_parts(const std::string& text) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream is(text);
  while (std::getline(is, part, ';')) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

}  // namespace codim::cli
