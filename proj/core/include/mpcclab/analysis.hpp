#pragma once

#include <array>
#include <string>
#include <vector>

#include "mpcclab/model.hpp"
#include "mpcclab/pipa.hpp"

namespace mpcclab {

/// Names of the five per-iteration bounds checked by verify_lemma_bounds,
/// in order: y monotone above 1; w halves and stays <= 2/100; x decreases
/// by at most sqrt(y w) and stays above -1; y'w halves; tau in [5/9, 1].
extern const std::array<const char*, 5> kInductiveBoundNames;

struct VerificationReport {
  int checked_pairs = 0;
  /// pass[j][b]: bound b holds for the step from row j+1 to row j+2
  std::vector<std::array<bool, 5>> pass;
  std::array<int, 5> fail_count{};
  std::array<int, 5> first_fail{-1, -1, -1, -1, -1}; ///< 1-based row of the earliest violation
  bool x_above_limit = true; ///< x_k >= -2 / (10 (sqrt(2) - 1)) on every row
  bool y_below_limit = true; ///< y_k <= 1 + 2 / (10 (sqrt(2) - 1)) on every row
  double min_tau = 0.0;      ///< observed step-size range (bounds are not tight)
  double max_tau = 0.0;

  bool all_passed() const;
};

std::string report_to_text(const VerificationReport& report);
/// One line per consecutive pair: `k,ind1,ind2,ind3,ind4,ind5` with 0/1 flags.
std::string report_to_csv(const VerificationReport& report);

/// Checks the five inductive bounds on every consecutive pair of trace rows
/// plus the closed-form limit bounds; failures are reported, never thrown.
VerificationReport verify_lemma_bounds(const std::vector<TraceRecord>& trace);

/// x_limit = -2 / (10 (sqrt(2) - 1)) ~ -0.4828, y_limit = 1 - x_limit.
std::pair<double, double> limit_bound_constants();

struct AssumptionCheck {
  bool sc_holds = false; ///< min_i (y_i + w_i) > tol
  bool ns_holds = false; ///< stacked Jacobian/diagonal matrix invertible
  double min_singular_value = 0.0;
  double min_pair_sum = 0.0;
};

/// Strict complementarity and nonsingularity of
/// [ dF/dy  dF/dw  dF/dz ; W  Y  0 ] at p, with the smallest singular value
/// estimated by inverse iteration on the factorization.
AssumptionCheck check_assumptions(const MpccProblem& problem, const Point& p, double tol);

struct StationarityResult {
  double residual = 0.0;
  /// set when ||F(p)|| > tol_active: the residual is reported for an
  /// infeasible point and certifies nothing
  bool infeasibility_warning = false;
};

/// Distance of p from strong stationarity.  The (y,w,z) rows of the
/// Lagrangian gradient determine the equality and complementarity
/// multipliers (a square solve whenever the stacked Jacobian block is
/// nonsingular; sign-constrained least squares on biactive pairs), and the
/// x rows are then minimized over the sign-constrained multipliers of the
/// active bounds.  Zero means strongly stationary.
StationarityResult stationarity_residual(const MpccProblem& problem, const Point& p,
                                         double tol_active);

/// Recorded iterates and reduction columns of the original AMPL run of the
/// plain solver on the counterexample, together with the decimal precision
/// at which each reduction entry was printed.
struct ReferenceRow {
  double x, y, w;
  double pred_model;  ///< printed under the heading "ared"
  double ared_signed; ///< printed under the heading "pred"
  double ulp_pred;    ///< decimal ulp of the printed pred_model literal
  double ulp_ared;
};
const std::vector<ReferenceRow>& reference_run();

struct ReferenceComparison {
  double max_rel_dev = 0.0; ///< worst relative deviation over x, y, w, rows 1..10
  bool iterates_ok = false; ///< max_rel_dev <= 1e-6
  bool reductions_ok = false; ///< every reduction entry within half a printed ulp
  int worst_row = 0;
  char worst_field = ' ';
  std::string note;
};

/// Compares rows 1..10 of a trace against the stored reference run.
/// Throws TraceTooShortError when the trace has fewer rows than the table.
ReferenceComparison compare_to_reference(const std::vector<TraceRecord>& trace);

/// The worst relative iterate deviation from compare_to_reference.
double reference_deviation(const std::vector<TraceRecord>& trace);

} // namespace mpcclab
