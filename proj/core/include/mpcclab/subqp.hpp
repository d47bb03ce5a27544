#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mpcclab/model.hpp"
#include "mpcclab/numerics.hpp"

namespace mpcclab {

/// Direction-finding subproblem in the step variable d, ordered (x, y, w, z):
///
///   min  linear_cost' d + 1/2 d_x' Q d_x
///   s.t. eq_matrix d = eq_rhs
///        d_lower <= d <= d_upper   (finite only on the x block)
///
/// The equality rows are the linearized F rows stacked over the
/// complementarity rows Y d_w + W d_y = -Y w + sigma (y'w / m) e, and the
/// x-block box intersects the step-to-bound box with the trust-region box.
struct QpSubproblem {
  std::size_t n_x = 0;
  std::size_t m = 0;
  std::size_t n_z = 0;

  DenseMatrix quadratic; ///< PSD Q over the x block; empty means zero
  Vec linear_cost;       ///< equals grad f, length n_x + 2m + n_z
  DenseMatrix eq_matrix; ///< (m + n_z + m) x (n_x + 2m + n_z)
  Vec eq_rhs;
  Vec d_lower; ///< -inf where unbounded
  Vec d_upper; ///< +inf where unbounded

  /// Which side of the x-block box comes from the trust region rather than
  /// from the bounds of X; lets the solver flag trust-region activity.
  std::vector<std::uint8_t> tr_limits_lower;
  std::vector<std::uint8_t> tr_limits_upper;

  std::size_t total_vars() const { return n_x + 2 * m + n_z; }
  std::size_t eq_rows() const { return m + n_z + m; }
};

enum class BoundSide : std::uint8_t { None = 0, Lower = 1, Upper = 2 };

/// Solution of a QpSubproblem: the step, the equality multipliers in the
/// convention  grad_obj(d) = eq_matrix' mu + bound terms, and nonnegative
/// multipliers for the active bounds.
struct Direction {
  Vec d_x, d_y, d_w, d_z;
  Vec eq_multipliers;                  ///< one per equality row
  Vec bound_multipliers;               ///< per variable, >= 0, nonzero only on active bounds
  std::vector<BoundSide> active_bound; ///< per variable
  std::vector<std::uint8_t> tr_active; ///< per x component: active bound comes from the trust region
  double tr_multiplier = 0.0;          ///< largest multiplier among active trust-region bounds

  Vec stacked() const;
};

/// Active-set hint for warm-starting the next solve.
struct WarmStart {
  std::vector<BoundSide> bound_state;
};

/// Delta_k = c (||F^k|| + y^k' w^k); the per-component box half-width used
/// by the feasibility-tied policy downstream is sqrt(Delta_k).
double trust_radius(const Point& p, double F_norm, double c);

/// Builds the subproblem at p.  radius is Delta_k; the x-block box is
/// [x_lower - x, x_upper - x] intersected with [-sqrt(radius), +sqrt(radius)].
/// Throws InteriorityError if any y_i <= 0 or w_i <= 0.
QpSubproblem build_direction_qp(const MpccProblem& problem, const Point& p,
                                const DenseMatrix& quadratic, double sigma, double radius);

/// Primal active-set solve.  Returns a KKT point of the convex QP; for an
/// empty/zero Q this is a vertex solution.  Throws
/// InfeasibleSubproblemError or IterationLimitError (100 x variable count).
Direction solve_direction_qp(const QpSubproblem& qp, const WarmStart* warm = nullptr);

/// Closed-form solution of the counterexample subproblem (m = 1, n_x = 1,
/// Q = 0):  d = (-s, s, -(1-sigma) w - (w/y) s) with s = sqrt(y w), and
/// multipliers (-w/y, 1/y, 1 + w/y); the third is the trust-region bound
/// multiplier and its nonnegativity certifies optimality.
Direction counterexample_direction(const Point& p, double sigma);

/// Max violation over stationarity, primal feasibility, complementary
/// slackness and dual signs; diagnostic used by tests and verification.
double kkt_residual(const QpSubproblem& qp, const Direction& dir);

} // namespace mpcclab
