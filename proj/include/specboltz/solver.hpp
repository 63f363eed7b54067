#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "collision.hpp"
#include "conservation.hpp"
#include "error.hpp"
#include "grid.hpp"
#include "weight_io.hpp"

namespace specboltz {

enum class Scheme { ForwardEuler, RK2 };

inline const char* scheme_name(Scheme s) { return s == Scheme::ForwardEuler ? "euler" : "rk2"; }

struct SolverConfig {
  double kn = 1.0;       ///< Knudsen number
  double dt = 1e-3;
  double t_final = 0.0;
  Scheme scheme = Scheme::ForwardEuler;
  int output_every = 100;  ///< steps between diagnostic records

  void validate() const {
    if (!(kn > 0.0) || !std::isfinite(kn)) throw InvalidArgument("solver: Kn must be positive");
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw InvalidArgument("solver: dt must be non-negative");
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw InvalidArgument("solver: t_final must be non-negative");
    if (t_final > 0.0 && !(dt > 0.0)) throw InvalidArgument("solver: dt must be positive when t_final > 0");
    if (output_every < 1) throw InvalidArgument("solver: output_every must be >= 1");
  }

  /// Number of steps of size dt that reach t_final (t_final must be a multiple of dt).
  long steps() const {
    if (t_final == 0.0) return 0;
    const double q = t_final / dt;
    const long n = std::lround(q);
    if (std::abs(q - n) > 1e-9 * std::max(1.0, q))
      throw InvalidArgument("solver: t_final must be an integer multiple of dt");
    return n;
  }
};

/// Per-evaluation health figures of the collision step.
struct StepStats {
  double max_relative_imag_residue = 0.0;
  double max_abs_mass_residue = 0.0;  ///< |sum w Q̃| before projection
  double max_abs_qhat_zero = 0.0;     ///< |Qhat(0)|
  long evaluations = 0;

  void absorb(const CollisionResult& r) {
    max_relative_imag_residue = std::max(max_relative_imag_residue, r.relative_imag_residue);
    max_abs_mass_residue = std::max(max_abs_mass_residue, std::abs(r.mass_residue));
    max_abs_qhat_zero = std::max(max_abs_qhat_zero, std::abs(r.qhat_zero));
    ++evaluations;
  }
};

/// Right-hand side (1/Kn) P Q̃(f).
class ConservativeRhs {
 public:
  ConservativeRhs(CollisionOperator& op, const ConservationProjector& proj) : op_(&op), proj_(&proj) {
    if (proj.size() != op.grid().size()) throw InvalidArgument("solver: projector does not match the grid");
  }
  std::vector<double> operator()(std::span<const double> f, double kn, StepStats* stats = nullptr) {
    auto r = op_->evaluate(f);
    if (stats) stats->absorb(r);
    for (double v : r.q)
      if (!std::isfinite(v)) throw NumericalError("non-finite collision term");
    auto q = proj_->project(r.q);
    for (double& v : q) v /= kn;
    return q;
  }
  const VelocityGrid& grid() const { return op_->grid(); }

 private:
  CollisionOperator* op_;
  const ConservationProjector* proj_;
};

inline void check_finite(std::span<const double> f, long step) {
  for (double v : f)
    if (!std::isfinite(v)) throw NumericalError("non-finite value in the state at step " + std::to_string(step));
}

/// One Euler or midpoint (RK2) step.
inline std::vector<double> step(std::span<const double> f, ConservativeRhs& rhs, const SolverConfig& cfg,
                                long step_index = 0, StepStats* stats = nullptr) {
  cfg.validate();
  std::vector<double> out(f.begin(), f.end());
  if (cfg.dt == 0.0) return out;
  const auto eval = [&](std::span<const double> x) {
    try {
      return rhs(x, cfg.kn, stats);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at step " + std::to_string(step_index));
    }
  };
  if (cfg.scheme == Scheme::ForwardEuler) {
    const auto k1 = eval(f);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += cfg.dt * k1[j];
  } else {
    const auto k1 = eval(f);
    std::vector<double> mid(f.begin(), f.end());
    for (std::size_t j = 0; j < mid.size(); ++j) mid[j] += 0.5 * cfg.dt * k1[j];
    check_finite(mid, step_index);
    const auto k2 = eval(mid);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += cfg.dt * k2[j];
  }
  check_finite(out, step_index);
  return out;
}

/// Receives immutable snapshots of the state: (step index, time, values).
using StateSink = std::function<void(long, double, std::span<const double>)>;

struct RunResult {
  std::vector<double> f;
  double t = 0.0;
  long steps = 0;
  StepStats stats;
};

/// Advances from `t0` to t0 + cfg.t_final. The sink is called at the first
/// state, every output_every steps and at the final state (once per time).
inline RunResult run(std::vector<double> f, ConservativeRhs& rhs, const SolverConfig& cfg, const StateSink& sink = {},
                     double t0 = 0.0) {
  cfg.validate();
  if (f.size() != rhs.grid().size()) throw InvalidArgument("run: state size does not match the grid");
  check_finite(f, 0);
  const long n = cfg.steps();
  RunResult res;
  res.t = t0;
  if (sink) sink(0, t0, f);
  for (long s = 1; s <= n; ++s) {
    f = step(f, rhs, cfg, s, &res.stats);
    res.t = t0 + s * cfg.dt;
    if (sink && (s % cfg.output_every == 0 || s == n)) sink(s, res.t, f);
  }
  res.steps = n;
  res.f = std::move(f);
  return res;
}

// --------------------------------------------------------------------------
// State dumps: "BFS1", u32 version = 1, u32 N, f64 L, f64 t, N^3 f64, u64 count.

inline constexpr char state_magic[4] = {'B', 'F', 'S', '1'};
inline constexpr std::uint32_t state_format_version = 1;

struct StateDump {
  int n = 0;
  double half_width = 0.0;
  double t = 0.0;
  std::vector<double> values;
};

inline void save_state(const std::string& path, const VelocityGrid& grid, double t, std::span<const double> f) {
  if (f.size() != grid.size()) throw InvalidArgument("save_state: size does not match the grid");
  io::Writer w;
  w.bytes(state_magic, 4);
  w.put<std::uint32_t>(state_format_version);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(grid.n()));
  w.put<double>(grid.half_width());
  w.put<double>(t);
  w.bytes(reinterpret_cast<const char*>(f.data()), f.size() * sizeof(double));
  w.put<std::uint64_t>(f.size());
  io::write_file(path, w.data());
}

inline StateDump load_state(const std::string& path) {
  const auto bytes = io::read_file(path);
  const std::string what = "state dump '" + path + "'";
  io::Reader r(bytes.data(), bytes.size(), what);
  r.need(4);
  if (std::memcmp(r.cursor(), state_magic, 4) != 0) throw FormatError(what + ": bad magic (not a state dump)");
  r.skip(4);
  if (const auto v = r.get<std::uint32_t>(); v != state_format_version)
    throw FormatError(what + ": unsupported version " + std::to_string(v));
  StateDump d;
  const auto n = r.get<std::uint32_t>();
  if (n < 4 || n % 2 != 0 || n > 1024) throw FormatError(what + ": implausible N " + std::to_string(n));
  d.n = static_cast<int>(n);
  d.half_width = r.get<double>();
  d.t = r.get<double>();
  const std::size_t count = static_cast<std::size_t>(n) * n * n;
  if (r.remaining() != count * sizeof(double) + sizeof(std::uint64_t))
    throw FormatError(what + ": file is truncated or has trailing data");
  d.values.resize(count);
  std::memcpy(d.values.data(), r.cursor(), count * sizeof(double));
  r.skip(count * sizeof(double));
  if (r.get<std::uint64_t>() != count) throw FormatError(what + ": entry-count footer mismatch");
  return d;
}

}  // namespace specboltz
