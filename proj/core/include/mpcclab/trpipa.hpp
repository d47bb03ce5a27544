#pragma once

#include "mpcclab/pipa.hpp"

namespace mpcclab {

enum class RadiusPolicy {
  Adaptive,        ///< radius controlled by the ared/pred ratio
  FeasibilityTied, ///< radius tied to ||F|| + y'w, as in the plain iteration
};

/// Trust-region variant: identical driver, but the x-block box half-width is
/// Delta_k directly and Delta is updated from the ratio of actual over
/// predicted reduction.
struct TrConfig {
  PipaConfig base;
  double gamma0 = 0.5; ///< 0 < gamma0 <= gamma1 < 1
  double gamma1 = 0.5;
  double gamma2 = 2.0; ///< >= 1
  double eta1 = 0.25;  ///< 0 < eta1 < eta2 < 1
  double eta2 = 0.75;
  double delta0 = 1.0;
  double delta_min = 1e-12;
  RadiusPolicy policy = RadiusPolicy::Adaptive;
};

/// Defaults for the remedy: the usual constants gamma0 = gamma1 = 0.5,
/// gamma2 = 2, eta1 = 0.25, eta2 = 0.75, Delta_0 = 1, and a termination
/// tolerance tight enough (1e-9) that the complementarity gap is driven
/// below 1e-8 before the step-size test stops the run.
TrConfig default_tr_config();

void validate_tr_config(const TrConfig& cfg);

/// ared_signed / pred; both are negative for a successful descent step, so
/// the ratio is positive when the model agrees in sign.  pred must be
/// negative.
double tr_ratio(double ared_signed, double pred);

/// Three-branch radius update (upper end of each interval):
///   rho < eta1          -> gamma1 * delta
///   eta1 <= rho < eta2  -> delta
///   rho >= eta2         -> gamma2 * delta
double tr_update(double delta, double rho_k, const TrConfig& cfg);

SolveResult trpipa_solve(const MpccProblem& problem, const TrConfig& cfg, const Point& start);

} // namespace mpcclab
