#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mpcclab/model.hpp"
#include "mpcclab/subqp.hpp"

namespace mpcclab {

/// Parameters of the penalty interior-point iteration.
struct PipaConfig {
  double c = 1.0;        ///< trust-region coupling constant, > 0
  double sigma = 0.1;    ///< centering parameter, in (0,1)
  double gamma = 0.01;   ///< Armijo sufficient-decrease factor, in (0,1)
  double rho = 0.9;      ///< centrality factor, in (0,1)
  double alpha = 2.0;    ///< base penalty parameter, > 0
  double eps_frac = 1e-3; ///< step fallback is tau = 1 - eps_frac
  double eps_term = 1e-5; ///< terminate when ||d||_2 <= eps_term
  double backtrack = 0.5; ///< Armijo step reduction factor, in (0,1)
  int max_iter = 500;
  int p_max = 30; ///< cap on the penalty exponent
  std::optional<DenseMatrix> hessian; ///< constant PSD Q over the x block; empty = 0
};

/// Throws Error when a parameter is outside its declared range.
void validate_config(const PipaConfig& cfg);

/// One row per iterate.  Row 1 is the starting point; tau, d_norm, ared,
/// pred and p_exp on row k+1 describe the step that produced that iterate
/// (NaN / 0 on row 1).  comp, F_norm and delta are evaluated at the row's
/// own point; delta is the radius in effect for the next subproblem there.
struct TraceRecord {
  int k = 0;
  Point point;
  double tau = std::numeric_limits<double>::quiet_NaN();
  double d_norm = std::numeric_limits<double>::quiet_NaN(); ///< l2 over all blocks
  double ared = std::numeric_limits<double>::quiet_NaN();   ///< P(new) - P(old), signed
  double pred = std::numeric_limits<double>::quiet_NaN();   ///< grad f'd - alpha^p (1-sigma)(||F|| + y'w)
  double comp = 0.0;   ///< y'w
  double F_norm = 0.0; ///< ||F||_2
  double delta = 0.0;
  int p_exp = 0;
};

enum class SolveStatus { ConvergedSmallStep, MaxIter, Error };

struct SolveResult {
  SolveStatus status = SolveStatus::Error;
  std::vector<TraceRecord> trace;
  std::string message;
};

/// P_alpha = f + alpha_eff (||F||_2^2 + y'w); quadratic penalty on the
/// equality violation, l1 penalty on the complementarity gap.
double penalty_value(const MpccProblem& problem, const Point& p, double alpha_eff);

/// Root of g_k(tau) = (1-rho) sigma (y'w/m)
///                    + tau (min_i d_y,i d_w,i - rho d_y'd_w / m).
/// Returns the root when the tau coefficient is negative (the root is then
/// positive and finite), nothing otherwise.
std::optional<double> centrality_root(const Point& p, const Direction& d, double sigma,
                                      double rho);

/// Smallest integer p >= 1 with
///   grad_f'd - alpha^p (1-sigma)(||F|| + y'w) < -alpha^p (1-sigma)(||F|| + y'w)
///                                             < -(||F|| + y'w),
/// capped at p_max.  Throws ExponentOverflowError when no such p exists.
int penalty_exponent_update(double grad_dot_d, double comp, double F_norm, double alpha,
                            double sigma, int p_max);

/// Largest tau in {tau0, tau0 b, tau0 b^2, ...} with
///   P(p + tau d) - P(p) <= gamma tau pred  (plus a machine-epsilon slack
/// so that runs deep into the complementarity tail remain computable).
/// Throws LineSearchError after 50 halvings.
double armijo_search(const MpccProblem& problem, const Point& p, const Direction& d, double tau0,
                     double alpha_eff, double gamma, double backtrack, double pred);

/// The penalty interior-point iteration with the feasibility-tied radius
/// Delta_k = c (||F^k|| + y^k'w^k).  Solver errors are reported through the
/// result status together with the trace up to the failure.
SolveResult pipa_solve(const MpccProblem& problem, const PipaConfig& config, const Point& start);

} // namespace mpcclab
