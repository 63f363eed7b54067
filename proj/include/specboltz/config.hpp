#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "error.hpp"
#include "kernels.hpp"
#include "solver.hpp"
#include "weights.hpp"

namespace specboltz {

/// Environment variable naming the default weight-cache directory.
inline constexpr const char* cache_dir_env = "SPECBOLTZ_CACHE_DIR";

/// Every effective parameter of a run. Read from a flat `key = value` file;
/// '#' starts a comment, keys are case-sensitive, unknown keys are errors.
struct RunConfig {
  int n = 16;
  double half_width = 5.0;
  double lambda = 0.0;
  double beta = 1.0;
  std::string kernel = "isotropic";  ///< isotropic | grazing | tabulated
  double eps = 1e-2;                 ///< grazing cutoff
  double kernel_value = 1.0 / (4.0 * std::numbers::pi);  ///< isotropic constant
  std::string table_file;            ///< tabulated angular section (theta, b sin theta)
  std::string op = "boltzmann";      ///< boltzmann | landau
  double kn = 1.0;
  double dt = 1e-3;
  double t_final = 1.0;
  std::string scheme = "euler";      ///< euler | rk2
  std::string ic = "shell";          ///< shell | maxwellian | two_maxwellian | anisotropic
  std::string output_dir = "out";
  std::string cache_path;            ///< empty: derived name in the cache directory
  int output_every = 100;
  int threads = 0;                   ///< 0: all hardware threads

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {"N",      "L",         "lambda",    "beta",       "kernel",
                                               "eps",    "kernel_value", "table_file", "operator", "Kn",
                                               "dt",     "t_final",   "scheme",    "ic",         "output_dir",
                                               "cache_path", "output_every", "threads"};
    return k;
  }

  KernelSpec kernel_spec() const {
    AngularSection a;
    if (kernel == "isotropic")
      a = IsotropicConstant{kernel_value};
    else if (kernel == "grazing")
      a = GrazingRutherford{eps};
    else if (kernel == "tabulated") {
      if (table_file.empty()) throw ConfigError("kernel = tabulated needs table_file");
      a = TabulatedSection::from_file(table_file);
    } else
      throw ConfigError("unknown kernel '" + kernel + "' (isotropic, grazing, tabulated)");
    return make_kernel(lambda, std::move(a), beta);
  }

  OperatorKind operator_kind() const {
    if (op == "boltzmann") return OperatorKind::Boltzmann;
    if (op == "landau") return OperatorKind::Landau;
    throw ConfigError("unknown operator '" + op + "' (boltzmann, landau)");
  }

  SolverConfig solver() const {
    SolverConfig s;
    s.kn = kn;
    s.dt = dt;
    s.t_final = t_final;
    if (scheme == "euler")
      s.scheme = Scheme::ForwardEuler;
    else if (scheme == "rk2")
      s.scheme = Scheme::RK2;
    else
      throw ConfigError("unknown scheme '" + scheme + "' (euler, rk2)");
    s.output_every = output_every;
    s.validate();
    return s;
  }

  VelocityGrid grid() const { return VelocityGrid(n, half_width); }

  std::vector<double> initial_state(const VelocityGrid& g) const {
    if (ic == "shell") return shell_ic(g);
    if (ic == "maxwellian") return maxwellian(1.0, {}, 1.0, g);
    if (ic == "two_maxwellian") return two_maxwellian_ic(g);
    if (ic == "anisotropic") return anisotropic_gaussian_ic(g);
    throw ConfigError("unknown ic '" + ic + "' (shell, maxwellian, two_maxwellian, anisotropic)");
  }

  /// Checks every enumerated key and numeric range.
  void validate() const {
    (void)grid();
    (void)kernel_spec();
    (void)operator_kind();
    (void)solver();
    if (ic != "shell" && ic != "maxwellian" && ic != "two_maxwellian" && ic != "anisotropic")
      throw ConfigError("unknown ic '" + ic + "' (shell, maxwellian, two_maxwellian, anisotropic)");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    if (threads < 0) throw ConfigError("threads must be >= 0");
  }

  /// Cache file for this run: cache_path if set, else a name derived from the
  /// weight-defining parameters inside $SPECBOLTZ_CACHE_DIR (default "cache").
  std::string resolved_cache_path() const {
    if (!cache_path.empty()) return cache_path;
    const char* env = std::getenv(cache_dir_env);
    std::string dir = (env && *env) ? env : "cache";
    std::ostringstream name;
    if (op == "landau") {
      // the Landau weights depend on lambda only
      name << dir << "/weights_landau_N" << n << "_L" << format_double(half_width) << "_lambda" << format_double(lambda)
           << ".bwt";
      return name.str();
    }
    name << dir << "/weights_" << op << "_" << kernel << "_N" << n << "_L" << format_double(half_width) << "_lambda"
         << format_double(lambda) << "_beta" << format_double(beta);
    if (kernel == "grazing") name << "_eps" << format_double(eps);
    if (kernel == "isotropic") name << "_b" << format_double(kernel_value);
    name << ".bwt";
    return name.str();
  }

  /// key=value echo of every effective parameter, in a fixed order.
  std::string echo() const {
    std::ostringstream o;
    o << "N = " << n << "\nL = " << format_double(half_width) << "\nlambda = " << format_double(lambda)
      << "\nbeta = " << format_double(beta) << "\nkernel = " << kernel << "\neps = " << format_double(eps)
      << "\nkernel_value = " << format_double(kernel_value) << "\ntable_file = " << table_file
      << "\noperator = " << op << "\nKn = " << format_double(kn) << "\ndt = " << format_double(dt)
      << "\nt_final = " << format_double(t_final) << "\nscheme = " << scheme << "\nic = " << ic
      << "\noutput_dir = " << output_dir << "\ncache_path = " << resolved_cache_path()
      << "\noutput_every = " << output_every << "\nthreads = " << threads << "\n";
    return o.str();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("key '" + key + "': expected a finite number, got '" + v + "'");
  return out;
}

inline int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

}  // namespace detail

/// Applies one key to the config.
inline void set_config_key(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_int;
  using detail::parse_real;
  if (key == "N") c.n = parse_int(key, value);
  else if (key == "L") c.half_width = parse_real(key, value);
  else if (key == "lambda") c.lambda = parse_real(key, value);
  else if (key == "beta") c.beta = parse_real(key, value);
  else if (key == "kernel") c.kernel = value;
  else if (key == "eps") c.eps = parse_real(key, value);
  else if (key == "kernel_value") c.kernel_value = parse_real(key, value);
  else if (key == "table_file") c.table_file = value;
  else if (key == "operator") c.op = value;
  else if (key == "Kn") c.kn = parse_real(key, value);
  else if (key == "dt") c.dt = parse_real(key, value);
  else if (key == "t_final") c.t_final = parse_real(key, value);
  else if (key == "scheme") c.scheme = value;
  else if (key == "ic") c.ic = value;
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "cache_path") c.cache_path = value;
  else if (key == "output_every") c.output_every = parse_int(key, value);
  else if (key == "threads") c.threads = parse_int(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

inline RunConfig parse_config(std::istream& in, const std::string& source = "config") {
  RunConfig c;
  std::map<std::string, int> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (seen[key]++) throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    try {
      set_config_key(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  auto c = parse_config(in, path);
  c.validate();
  return c;
}

}  // namespace specboltz
