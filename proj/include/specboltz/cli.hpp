#pragma once

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "collision.hpp"
#include "config.hpp"
#include "conservation.hpp"
#include "diagnostics.hpp"
#include "limits.hpp"
#include "solver.hpp"
#include "weight_io.hpp"
#include "weights.hpp"

namespace specboltz::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  ok = 0,
  failure = 1,
  config_error = 2,
  cache_mismatch = 3,
  numerical_failure = 4,
  usage_error = 64,
};

inline std::string hex64(std::uint64_t v) {
  std::ostringstream o;
  o << std::hex;
  o.width(16);
  o.fill('0');
  o << v;
  return o.str();
}

inline WeightTable build_for(const RunConfig& c, bool symmetry, std::ostream& log, BuildReport* rep_out = nullptr) {
  const auto grid = c.grid();
  const auto kernel = c.kernel_spec();
  BuildOptions opt;
  opt.symmetry_reduction = symmetry;
  opt.threads = c.threads;
  const auto start = std::chrono::steady_clock::now();
  opt.progress = [&](std::size_t done, std::size_t total) {
    if (done == total || done % 16 == 0) log << "  weights: " << done << "/" << total << " |zeta| levels\n" << std::flush;
  };
  BuildReport rep;
  auto table = build_weight_table(grid, kernel, c.operator_kind(), opt, &rep);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log << "built " << operator_name(c.operator_kind()) << " weights N=" << c.n << " L=" << format_double(c.half_width)
      << " in " << format_double(std::round(secs * 100) / 100) << " s: " << rep.classes << " classes, quad_tol "
      << format_double(rep.max_error_estimate) << ", flagged classes " << rep.flagged_classes
      << ", unconverged theta integrals " << rep.theta_unconverged << "\n";
  if (rep_out) *rep_out = rep;
  return table;
}

inline int cmd_weights(const std::string& config_path, bool force, bool no_symmetry, std::ostream& out,
                       std::ostream& err) {
  const auto c = load_config(config_path);
  const auto path = c.resolved_cache_path();
  const auto meta = make_meta(c.grid(), c.kernel_spec(), c.operator_kind());
  if (!force && std::filesystem::exists(path)) {
    try {
      (void)load_table(path, meta);
      out << "weight cache " << path << " is up to date\n";
      return ok;
    } catch (const MetadataMismatch& e) {
      err << e.what() << "\n(use --force to overwrite)\n";
      return cache_mismatch;
    } catch (const FormatError&) {
      out << "existing cache " << path << " is unreadable; rebuilding\n";
    }
  }
  BuildReport rep;
  const auto table = build_for(c, !no_symmetry, out, &rep);
  save_table(table, path);
  out << "wrote " << path << " (checksum " << hex64(file_checksum(path)) << ")\n";
  if (rep.flagged_classes > 0 || rep.theta_unconverged > 0) {
    err << "warning: " << rep.flagged_classes << " weight classes and " << rep.theta_unconverged
        << " theta integrals missed their tolerance\n";
  }
  return ok;
}

inline int cmd_run(const std::string& config_path, const std::string& restart, bool build_missing, std::ostream& out,
                   std::ostream& err) {
  const auto c = load_config(config_path);
  const auto grid = c.grid();
  const auto scfg = c.solver();
  const auto cache = c.resolved_cache_path();
  const auto meta = make_meta(grid, c.kernel_spec(), c.operator_kind());
  WeightTable table;
  if (std::filesystem::exists(cache)) {
    table = load_table(cache, meta);
  } else if (build_missing) {
    table = build_for(c, true, out);
    save_table(table, cache);
  } else {
    err << "weight cache " << cache << " not found; run `specboltz weights --config " << config_path
        << "` first (or pass --build)\n";
    return config_error;
  }
  const auto checksum = file_checksum(cache);

  std::vector<double> f;
  double t0 = 0.0;
  if (!restart.empty()) {
    auto d = load_state(restart);
    if (d.n != grid.n() || d.half_width != grid.half_width())
      throw MetadataMismatch("state dump '" + restart + "' is for N=" + std::to_string(d.n) + ", L=" +
                             format_double(d.half_width) + ", config has N=" + std::to_string(grid.n()) +
                             ", L=" + format_double(grid.half_width()));
    f = std::move(d.values);
    t0 = d.t;
  } else {
    f = c.initial_state(grid);
  }

  const std::filesystem::path dir(c.output_dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream m(dir / "run_meta.txt");
    m << c.echo() << "weight_checksum_fnv1a = " << hex64(checksum) << "\nquad_tol = " << format_double(table.meta.quad_tol)
      << "\nrestart = " << restart << "\nt_start = " << format_double(t0) << "\n";
  }
  std::ofstream moments_csv(dir / "moments.csv");
  moments_csv << moments_csv_header << "\n";
  const int center = grid.n() / 2;

  CollisionOperator op(grid, table, c.threads);
  const auto proj = build_projector(grid);
  ConservativeRhs rhs(op, proj);
  const auto sink = [&](long, double t, std::span<const double> state) {
    write_moments_row(moments_csv, t, moments(state, grid));
    moments_csv.flush();
    std::ofstream s(dir / ("slice_t" + format_double(t) + ".csv"));
    write_slice_csv(s, slice(state, grid, 0, {center, center}));
    save_state((dir / ("state_t" + format_double(t) + ".bfs")).string(), grid, t, state);
  };
  RunResult res;
  try {
    res = run(std::move(f), rhs, scfg, sink, t0);
  } catch (...) {
    moments_csv.flush();
    throw;
  }
  std::ofstream m(dir / "run_meta.txt", std::ios::app);
  m << "t_end = " << format_double(res.t) << "\nsteps = " << res.steps
    << "\nmax_relative_imag_residue = " << format_double(res.stats.max_relative_imag_residue)
    << "\nmax_abs_mass_residue_before_projection = " << format_double(res.stats.max_abs_mass_residue) << "\n";
  out << "ran " << res.steps << " steps to t=" << format_double(res.t) << "; outputs in " << dir.string() << "\n";
  return ok;
}

inline int cmd_moments(const std::string& dump, std::ostream& out) {
  const auto d = load_state(dump);
  const VelocityGrid grid(d.n, d.half_width);
  const auto m = moments(d.values, grid);
  out << "t = " << format_double(d.t) << "\nrho = " << format_double(m.mass) << "\nVx = " << format_double(m.velocity.x)
      << "\nVy = " << format_double(m.velocity.y) << "\nVz = " << format_double(m.velocity.z)
      << "\nenergy = " << format_double(m.energy) << "\nT = " << format_double(m.temperature)
      << "\nH = " << format_double(m.entropy) << "\nmin_f = " << format_double(m.min_f)
      << "\nentropy_skipped_mass = " << format_double(m.skipped_mass) << "\n";
  if (m.degenerate) out << "degenerate = true\n";
  return ok;
}

struct LimitsOptions {
  std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
  double lambda = -3.0;
  std::size_t samples = 20;
  std::uint64_t seed = 1;
  int table_n = 8;  ///< 0 skips the weight-table comparison
  double half_width = 5.0;
  int threads = 0;
};

/// CSV: eps, Lambda_eps, Lambda_eps - 8, second moment, max / mean pointwise
/// Boltzmann-vs-Landau gap of G, relative Frobenius gap of the weight tables.
inline int cmd_limits(const LimitsOptions& o, std::ostream& out) {
  const auto points = sample_weight_points(o.samples, o.seed);
  std::optional<WeightTable> landau;
  std::optional<VelocityGrid> grid;
  BuildOptions bopt;
  bopt.threads = o.threads;
  if (o.table_n > 0) {
    grid.emplace(o.table_n, o.half_width);
    landau = build_weight_table(*grid, make_kernel(o.lambda, GrazingRutherford{1e-2}), OperatorKind::Landau, bopt);
  }
  out << "eps,Lambda,Lambda_minus_8,moment2,G_gap_max,G_gap_mean,table_gap\n";
  for (double eps : o.eps) {
    const auto k = make_kernel(o.lambda, GrazingRutherford{eps});
    double gmax = 0.0, gsum = 0.0;
    for (const auto& p : points) {
      const double g = grazing_gap(p, o.lambda, eps);
      gmax = std::max(gmax, g);
      gsum += g;
    }
    const double lam = grazing_moment(k, 1);
    const double m2 = grazing_moment(k, 2);
    double tg = std::numeric_limits<double>::quiet_NaN();
    if (landau && eps < 1.0) {
      const auto b = build_weight_table(*grid, k, OperatorKind::Boltzmann, bopt);
      tg = relative_frobenius(b, *landau);
    }
    write_csv_row(out, {eps, lam, lam - 8.0, m2, gmax, points.empty() ? 0.0 : gsum / points.size(), tg});
  }
  return ok;
}

/// Entry point of the `specboltz` tool.
inline int cli_main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Conservative spectral solver for the space-homogeneous Boltzmann and Landau equations"};
  app.require_subcommand(1);

  std::string config_path, restart, dump, output;
  bool force = false, no_symmetry = false, build_missing = false;
  LimitsOptions lim;

  auto* w = app.add_subcommand("weights", "build and cache the convolution weight table for a config");
  w->add_option("-c,--config", config_path, "key=value run configuration")->required();
  w->add_flag("--force", force, "rebuild even if a matching cache exists");
  w->add_flag("--no-symmetry", no_symmetry, "evaluate every (zeta, xi) pair separately");

  auto* r = app.add_subcommand("run", "time-integrate a config; writes moments.csv, slices and state dumps");
  r->add_option("-c,--config", config_path, "key=value run configuration")->required();
  r->add_option("--restart", restart, "continue from a state dump");
  r->add_flag("--build", build_missing, "build the weight cache if it is missing");

  auto* l = app.add_subcommand("limits", "grazing-collision validation sweep (CSV)");
  l->add_option("--eps", lim.eps, "grazing cutoffs")->delimiter(',');
  l->add_option("--lambda", lim.lambda, "speed exponent");
  l->add_option("--samples", lim.samples, "random (u, zeta) pairs");
  l->add_option("--seed", lim.seed, "sampling seed");
  l->add_option("--table-n", lim.table_n, "N for the weight-table comparison (0 skips it)");
  l->add_option("--L", lim.half_width, "half-width for the weight-table comparison");
  l->add_option("--threads", lim.threads, "worker threads (0: all)");
  l->add_option("-o,--output", output, "write the CSV here instead of stdout");

  auto* m = app.add_subcommand("moments", "report the moments of a state dump");
  m->add_option("dump", dump, "state dump file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage_error;
  }

  try {
    if (*w) return cmd_weights(config_path, force, no_symmetry, out, err);
    if (*r) return cmd_run(config_path, restart, build_missing, out, err);
    if (*l) {
      for (double e : lim.eps)
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("--eps values must lie in (0, 1)");
      if (output.empty()) return cmd_limits(lim, out);
      std::ofstream f(output);
      if (!f) throw ConfigError("cannot write '" + output + "'");
      return cmd_limits(lim, f);
    }
    if (*m) return cmd_moments(dump, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const InvalidArgument& e) {
    err << "invalid parameter: " << e.what() << "\n";
    return config_error;
  } catch (const MetadataMismatch& e) {
    err << "mismatch: " << e.what() << "\n";
    return cache_mismatch;
  } catch (const FormatError& e) {
    err << "file error: " << e.what() << "\n";
    return cache_mismatch;
  } catch (const QuadratureError& e) {
    err << "quadrature failure: " << e.what() << "\n";
    return numerical_failure;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return numerical_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return failure;
  }
  return usage_error;
}

}  // namespace specboltz::cli
