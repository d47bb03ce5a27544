#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mpcclab/numerics.hpp"

namespace mpcclab {

/// One iterate (x, y, w, z).  During solver iterations y and w stay
/// strictly positive; the struct itself is a plain value and places no
/// constraint on its entries (analysis routines evaluate arbitrary points).
struct Point {
  Vec x;
  Vec y;
  Vec w;
  Vec z;

  /// All blocks concatenated in the canonical (x, y, w, z) order.
  Vec stacked() const;
};

/// min f(x,y,w,z)  s.t.  x in [x_lower, x_upper],  F(x,y,w,z) = 0,
///                        0 <= y  perp  w >= 0.
///
/// F has exactly m + n_z rows, so the Jacobian block over (y, w, z) stacked
/// on the complementarity diagonals is square.  Evaluators are closures
/// supplied at construction and must be pure; problems are immutable after
/// construction and safe to share between concurrent solves.
struct MpccProblem {
  std::string name;
  std::size_t n_x = 0; ///< control variables
  std::size_t m = 0;   ///< complementarity pairs
  std::size_t n_z = 0; ///< auxiliary variables
  Vec x_lower;
  Vec x_upper;

  std::function<double(const Point&)> objective;
  /// gradient of f, length n_x + 2m + n_z, ordered (x, y, w, z)
  std::function<Vec(const Point&)> objective_gradient;
  /// F, length m + n_z
  std::function<Vec(const Point&)> equality_map;
  /// Jacobian of F, (m + n_z) x (n_x + 2m + n_z), columns ordered (x, y, w, z)
  std::function<DenseMatrix(const Point&)> equality_jacobian;

  std::size_t total_vars() const { return n_x + 2 * m + n_z; }
  std::size_t eq_rows() const { return m + n_z; }
};

struct EvalResult {
  double f = 0.0;
  Vec grad;     // length total_vars, order (x, y, w, z)
  Vec F;        // length eq_rows
  DenseMatrix jac_F;
};

/// Throws DimensionError if the point's blocks do not match the problem.
void validate_dimensions(const MpccProblem& problem, const Point& p);

/// Evaluates f, grad f, F and the Jacobian of F at p, validating every
/// dimension (including the ones returned by the user-supplied evaluators).
EvalResult eval_all(const MpccProblem& problem, const Point& p);

/// Central finite differences of f and F against the analytic gradient and
/// Jacobian; returns the worst relative discrepancy
/// |fd - analytic| / max(1, |analytic|, |fd|).
double check_derivatives(const MpccProblem& problem, const Point& p, double h);

/// min x + w  s.t.  -1 <= x <= 1,  -1 + x + y = 0,  0 <= y perp w >= 0.
/// Solution (x, y, w)* = (-1, 2, 0).
MpccProblem counterexample_problem();

/// A slightly larger instance (n_x = 2, m = 2, n_z = 1) with a cubic
/// coupling term in F; exercises the multi-pair and auxiliary-variable
/// code paths and gives the derivative checker something nonlinear.
MpccProblem bilinear_problem();

std::vector<std::string> builtin_problem_names();
std::optional<MpccProblem> problem_by_name(const std::string& name);

} // namespace mpcclab
