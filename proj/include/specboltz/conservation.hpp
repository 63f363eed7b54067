#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "error.hpp"
#include "grid.hpp"

namespace specboltz {

/// Euclidean projection onto {Q : C Q = 0}, where the 5 x M matrix C holds the
/// discrete collision invariants (w_j; w_j v_j; w_j |v_j|^2):
///
///   P Q~ = Q~ - C^T (C C^T)^{-1} C Q~.
///
/// This is the minimizer of |Q~ - Q|_2 subject to C Q = 0. The 5 x 5 Gram
/// matrix is factorized once.
class ConservationProjector {
 public:
  using Matrix = Eigen::Matrix<double, 5, Eigen::Dynamic, Eigen::RowMajor>;
  using Gram = Eigen::Matrix<double, 5, 5>;
  using Vector5 = Eigen::Matrix<double, 5, 1>;

  explicit ConservationProjector(const VelocityGrid& grid) : c_(5, static_cast<Eigen::Index>(grid.size())) {
    const auto w = grid.quad_weights();
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const Vec3 v = grid.velocity(j);
      const auto col = static_cast<Eigen::Index>(j);
      c_(0, col) = w[j];
      c_(1, col) = w[j] * v.x;
      c_(2, col) = w[j] * v.y;
      c_(3, col) = w[j] * v.z;
      c_(4, col) = w[j] * norm2(v);
    }
    init();
  }

  /// Projector for an arbitrary constraint matrix (used by tests and for
  /// reduced invariant sets).
  explicit ConservationProjector(Matrix c) : c_(std::move(c)) { init(); }

  std::size_t size() const { return static_cast<std::size_t>(c_.cols()); }
  const Matrix& constraints() const { return c_; }
  const Gram& gram() const { return gram_; }
  /// 2-norm condition number of the Gram matrix.
  double condition_number() const { return condition_; }

  /// C q.
  Vector5 apply_constraints(std::span<const double> q) const {
    check(q.size());
    const Eigen::Map<const Eigen::VectorXd> x(q.data(), static_cast<Eigen::Index>(q.size()));
    return c_ * x;
  }

  std::vector<double> project(std::span<const double> q) const {
    check(q.size());
    for (double v : q)
      if (!std::isfinite(v)) throw InvalidArgument("project: non-finite input");
    std::vector<double> out(q.begin(), q.end());
    Eigen::Map<Eigen::VectorXd> x(out.data(), static_cast<Eigen::Index>(out.size()));
    // Second pass removes the residue left by roundoff in the first.
    for (int pass = 0; pass < 2; ++pass) {
      const Vector5 r = c_ * x;
      const Vector5 y = llt_.solve(r);
      x.noalias() -= c_.transpose() * y;
    }
    return out;
  }

 private:
  void check(std::size_t n) const {
    if (n != size()) throw InvalidArgument("projector: vector size does not match the constraint matrix");
  }
  void init() {
    if (c_.cols() < 5) throw InvalidArgument("projector: need at least 5 unknowns");
    for (Eigen::Index i = 0; i < c_.size(); ++i)
      if (!std::isfinite(c_.data()[i])) throw InvalidArgument("projector: non-finite constraint entry");
    gram_ = c_ * c_.transpose();
    llt_.compute(gram_);
    const Eigen::SelfAdjointEigenSolver<Gram> es(gram_, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(4);
    if (llt_.info() != Eigen::Success || !(lo > 0.0))
      throw NumericalError("projector: constraint Gram matrix is singular");
    condition_ = hi / lo;
  }

  Matrix c_;
  Gram gram_;
  Eigen::LLT<Gram> llt_;
  double condition_ = 0.0;
};

inline ConservationProjector build_projector(const VelocityGrid& grid) { return ConservationProjector(grid); }

inline std::vector<double> project(const ConservationProjector& p, std::span<const double> q) { return p.project(q); }

}  // namespace specboltz
