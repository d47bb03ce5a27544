#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mpcclab/subqp.hpp"

// Primal active-set method for the direction-finding subproblem
//
//   min  c'd + 1/2 d_x' Q d_x   s.t.  E d = r,  lo <= d <= up.
//
// The working set is the set of variables pinned at a bound.  Each
// iteration solves the KKT system of the equality-constrained subproblem
// over the free variables; for zero-curvature subspaces (always the case
// when Q = 0) the KKT matrix is singular and the factorization hands back
// a null vector, along which a simplex-style ratio step is taken.  Entering
// violations and ratio-test ties are resolved by lowest index.

namespace mpcclab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-9;
constexpr double kOptTol = 1e-9;

enum class State : std::uint8_t { Free, AtLower, AtUpper };

struct RowReduction {
  DenseMatrix eq;             // kept rows only
  Vec rhs;
  std::vector<std::size_t> kept; // original row indices
};

// Keeps a maximal independent subset of the original equality rows.
// Dependent rows must be consistent with the kept ones, otherwise the
// subproblem is infeasible.
RowReduction drop_dependent_rows(const DenseMatrix& eq, const Vec& rhs) {
  const std::size_t meq = eq.rows(), n = eq.cols();
  DenseMatrix work = eq;
  Vec wrhs = rhs;
  std::vector<std::size_t> orig(meq);
  for (std::size_t i = 0; i < meq; ++i) orig[i] = i;

  double scale = 0.0;
  for (double v : eq.entries()) scale = std::max(scale, std::abs(v));
  const double piv_tol = 1e-12 * std::max(scale, 1.0);

  std::size_t rank = 0;
  for (std::size_t col = 0; col < n && rank < meq; ++col) {
    std::size_t piv = rank;
    for (std::size_t i = rank + 1; i < meq; ++i)
      if (std::abs(work(i, col)) > std::abs(work(piv, col))) piv = i;
    if (std::abs(work(piv, col)) <= piv_tol) continue;
    if (piv != rank) {
      for (std::size_t j = 0; j < n; ++j) std::swap(work(rank, j), work(piv, j));
      std::swap(wrhs[rank], wrhs[piv]);
      std::swap(orig[rank], orig[piv]);
    }
    for (std::size_t i = rank + 1; i < meq; ++i) {
      const double f = work(i, col) / work(rank, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) work(i, j) -= f * work(rank, j);
      wrhs[i] -= f * wrhs[rank];
    }
    ++rank;
  }
  double rhs_scale = std::max(1.0, norm(rhs, Norm::Inf));
  for (std::size_t i = rank; i < meq; ++i) {
    if (std::abs(wrhs[i]) > 1e-9 * rhs_scale) {
      throw InfeasibleSubproblemError("equality rows are inconsistent");
    }
  }

  RowReduction red;
  std::vector<std::size_t> kept(orig.begin(), orig.begin() + rank);
  std::sort(kept.begin(), kept.end());
  red.kept = kept;
  red.eq = DenseMatrix(rank, n);
  red.rhs.assign(rank, 0.0);
  for (std::size_t i = 0; i < rank; ++i) {
    for (std::size_t j = 0; j < n; ++j) red.eq(i, j) = eq(kept[i], j);
    red.rhs[i] = rhs[kept[i]];
  }
  return red;
}

class ActiveSetCore {
public:
  ActiveSetCore(const QpSubproblem& qp, RowReduction red)
      : qp_(qp), n_(qp.total_vars()), eq_(std::move(red.eq)), rhs_(std::move(red.rhs)),
        kept_(std::move(red.kept)) {
    meq_ = eq_.rows();
    n_all_ = n_;
    lo_ = qp.d_lower;
    up_ = qp.d_upper;
    d_.assign(n_, 0.0);
    state_.assign(n_, State::Free);
    releasable_.assign(n_, 1);
    for (std::size_t j = 0; j < n_; ++j) {
      if (lo_[j] > up_[j] + kFeasTol) {
        throw InfeasibleSubproblemError("empty box on a subproblem variable");
      }
      if (up_[j] - lo_[j] <= 1e-15 && std::isfinite(lo_[j])) {
        // degenerate box: pin the variable before the active-set loop
        d_[j] = lo_[j];
        state_[j] = State::AtLower;
        releasable_[j] = 0;
      }
    }
    iter_cap_ = 100 * static_cast<long>(n_ ? n_ : 1) + 50;
  }

  Direction solve(const WarmStart* warm) {
    bool started = warm != nullptr && try_warm_start(*warm);
    if (!started) cold_start();
    cost_ = qp_.linear_cost;
    cost_.resize(n_all_, 0.0);
    use_hessian_ = true;
    const Vec mu = run_loop();
    return extract(mu);
  }

private:
  // --- setup ------------------------------------------------------------

  bool try_warm_start(const WarmStart& warm) {
    if (warm.bound_state.size() != n_) return false;
    for (std::size_t j = 0; j < n_; ++j) {
      if (!releasable_[j]) continue; // pre-fixed stays pinned
      switch (warm.bound_state[j]) {
        case BoundSide::Lower:
          if (!std::isfinite(lo_[j])) return false;
          d_[j] = lo_[j];
          state_[j] = State::AtLower;
          break;
        case BoundSide::Upper:
          if (!std::isfinite(up_[j])) return false;
          d_[j] = up_[j];
          state_[j] = State::AtUpper;
          break;
        case BoundSide::None:
          d_[j] = std::min(std::max(0.0, lo_[j]), up_[j]);
          state_[j] = State::Free;
          break;
      }
    }
    if (!complete_unbounded_frees()) return false;
    Vec res = row_residual();
    if (norm(res, Norm::Inf) > 1e-8 * std::max(1.0, norm(rhs_, Norm::Inf))) return false;
    return true;
  }

  void cold_start() {
    for (std::size_t j = 0; j < n_; ++j) {
      if (!releasable_[j]) continue;
      d_[j] = std::min(std::max(0.0, lo_[j]), up_[j]);
      state_[j] = State::Free;
      if (std::isfinite(lo_[j]) && d_[j] <= lo_[j]) state_[j] = State::AtLower;
      if (std::isfinite(up_[j]) && d_[j] >= up_[j]) state_[j] = State::AtUpper;
    }
    complete_unbounded_frees();
    Vec res = row_residual();
    if (norm(res, Norm::Inf) > kFeasTol * std::max(1.0, norm(rhs_, Norm::Inf))) {
      feasibility_phase(res);
    }
  }

  // Moves the fully unbounded variables onto the minimum-norm solution of
  // the residual rows; with the nonsingular (y,w,z) Jacobian block this
  // already yields a feasible start and no artificial phase is needed.
  bool complete_unbounded_frees() {
    std::vector<std::size_t> fr;
    for (std::size_t j = 0; j < n_; ++j)
      if (!std::isfinite(lo_[j]) && !std::isfinite(up_[j])) fr.push_back(j);
    if (fr.empty() || meq_ == 0) return meq_ == 0;
    Vec res = row_residual();
    DenseMatrix gram(meq_, meq_);
    for (std::size_t a = 0; a < meq_; ++a)
      for (std::size_t b = 0; b < meq_; ++b) {
        double s = 0.0;
        for (std::size_t j : fr) s += eq_(a, j) * eq_(b, j);
        gram(a, b) = s;
      }
    auto sol = detail::solve_or_null_vector(gram, res);
    if (sol.singular) return false;
    for (std::size_t j : fr) {
      double add = 0.0;
      for (std::size_t a = 0; a < meq_; ++a) add += eq_(a, j) * sol.solution[a];
      d_[j] += add;
    }
    return true;
  }

  Vec row_residual() const {
    Vec res(meq_, 0.0);
    for (std::size_t a = 0; a < meq_; ++a) {
      double s = rhs_[a];
      for (std::size_t j = 0; j < n_all_; ++j) s -= eq_(a, j) * d_[j];
      res[a] = s;
    }
    return res;
  }

  // Artificial-variable phase: one signed slack per violated row, driven to
  // zero under a unit cost.
  void feasibility_phase(const Vec& res) {
    const std::size_t first_art = n_all_;
    DenseMatrix eq2(meq_, n_all_ + meq_);
    for (std::size_t a = 0; a < meq_; ++a)
      for (std::size_t j = 0; j < n_all_; ++j) eq2(a, j) = eq_(a, j);
    for (std::size_t a = 0; a < meq_; ++a) eq2(a, first_art + a) = res[a] >= 0.0 ? 1.0 : -1.0;
    eq_ = std::move(eq2);
    n_all_ += meq_;
    d_.resize(n_all_, 0.0);
    lo_.resize(n_all_, 0.0);
    up_.resize(n_all_, kInf);
    state_.resize(n_all_, State::Free);
    releasable_.resize(n_all_, 1);
    for (std::size_t a = 0; a < meq_; ++a) d_[first_art + a] = std::abs(res[a]);

    cost_.assign(n_all_, 0.0);
    for (std::size_t a = 0; a < meq_; ++a) cost_[first_art + a] = 1.0;
    use_hessian_ = false;
    run_loop();

    double infeas = 0.0;
    for (std::size_t a = 0; a < meq_; ++a) infeas += d_[first_art + a];
    if (infeas > 1e-7 * std::max(1.0, norm(rhs_, Norm::Inf))) {
      throw InfeasibleSubproblemError("equality system has no solution inside the box");
    }
    for (std::size_t a = 0; a < meq_; ++a) {
      const std::size_t j = first_art + a;
      d_[j] = 0.0;
      lo_[j] = up_[j] = 0.0;
      state_[j] = State::AtLower;
      releasable_[j] = 0;
    }
  }

  // --- main loop ----------------------------------------------------------

  Vec gradient() const {
    Vec g = cost_;
    if (use_hessian_ && !qp_.quadratic.empty()) {
      for (std::size_t i = 0; i < qp_.n_x; ++i)
        for (std::size_t j = 0; j < qp_.n_x; ++j) g[i] += qp_.quadratic(i, j) * d_[j];
    }
    return g;
  }

  std::vector<std::size_t> free_set() const {
    std::vector<std::size_t> f;
    for (std::size_t j = 0; j < n_all_; ++j)
      if (state_[j] == State::Free) f.push_back(j);
    return f;
  }

  // KKT system over the free variables:
  //   [ H_FF  -E_F' ] [t_F]   [ -c_F - (H d_A)_F ]
  //   [ E_F     0   ] [mu ] = [ r - E_A d_A      ]
  DenseMatrix assemble_kkt(const std::vector<std::size_t>& f, double damping) const {
    const std::size_t nf = f.size();
    DenseMatrix k(nf + meq_, nf + meq_);
    if (use_hessian_ && !qp_.quadratic.empty()) {
      for (std::size_t a = 0; a < nf; ++a)
        for (std::size_t b = 0; b < nf; ++b)
          if (f[a] < qp_.n_x && f[b] < qp_.n_x) k(a, b) = qp_.quadratic(f[a], f[b]);
    }
    for (std::size_t a = 0; a < nf; ++a) k(a, a) += damping;
    for (std::size_t r = 0; r < meq_; ++r)
      for (std::size_t a = 0; a < nf; ++a) {
        k(a, nf + r) = -eq_(r, f[a]);
        k(nf + r, a) = eq_(r, f[a]);
      }
    return k;
  }

  Vec assemble_kkt_rhs(const std::vector<std::size_t>& f) const {
    const std::size_t nf = f.size();
    Vec rhs(nf + meq_, 0.0);
    Vec hd_fixed(n_all_, 0.0);
    if (use_hessian_ && !qp_.quadratic.empty()) {
      for (std::size_t i = 0; i < qp_.n_x; ++i)
        for (std::size_t j = 0; j < qp_.n_x; ++j)
          if (state_[j] != State::Free) hd_fixed[i] += qp_.quadratic(i, j) * d_[j];
    }
    for (std::size_t a = 0; a < nf; ++a) rhs[a] = -cost_[f[a]] - hd_fixed[f[a]];
    for (std::size_t r = 0; r < meq_; ++r) {
      double s = rhs_[r];
      for (std::size_t j = 0; j < n_all_; ++j)
        if (state_[j] != State::Free) s -= eq_(r, j) * d_[j];
      rhs[nf + r] = s;
    }
    return rhs;
  }

  struct Ratio {
    double alpha = kInf;
    long blocker = -1;
    State side = State::AtLower;
  };

  // First (lowest-index) blocking bound along direction p over the free set.
  Ratio ratio_test(const std::vector<std::size_t>& f, const Vec& p) const {
    Ratio r;
    double pscale = 0.0;
    for (double v : p) pscale = std::max(pscale, std::abs(v));
    if (pscale == 0.0) return r;
    for (std::size_t a = 0; a < f.size(); ++a) {
      const std::size_t j = f[a];
      const double pj = p[a];
      if (std::abs(pj) <= 1e-14 * pscale) continue;
      double alpha;
      State side;
      if (pj > 0.0) {
        if (!std::isfinite(up_[j])) continue;
        alpha = (up_[j] - d_[j]) / pj;
        side = State::AtUpper;
      } else {
        if (!std::isfinite(lo_[j])) continue;
        alpha = (lo_[j] - d_[j]) / pj;
        side = State::AtLower;
      }
      if (alpha < r.alpha) {
        r.alpha = alpha;
        r.blocker = static_cast<long>(j);
        r.side = side;
      }
    }
    if (r.blocker >= 0) r.alpha = std::max(r.alpha, 0.0);
    return r;
  }

  void apply_step(const std::vector<std::size_t>& f, const Vec& p, const Ratio& r, double cap) {
    double alpha = std::min(cap, r.alpha);
    for (std::size_t a = 0; a < f.size(); ++a) d_[f[a]] += alpha * p[a];
    if (r.alpha <= cap && r.blocker >= 0) {
      const auto j = static_cast<std::size_t>(r.blocker);
      state_[j] = r.side;
      d_[j] = (r.side == State::AtLower) ? lo_[j] : up_[j];
    }
  }

  // Sign check for the bound multipliers; returns the lowest-index violator
  // or -1 when the working set is dual feasible.
  long price(const Vec& mu, const Vec& g) const {
    const double tol = kOptTol * std::max(1.0, norm(g, Norm::Inf));
    for (std::size_t j = 0; j < n_all_; ++j) {
      if (state_[j] == State::Free || !releasable_[j]) continue;
      double z = g[j];
      for (std::size_t r = 0; r < meq_; ++r) z -= eq_(r, j) * mu[r];
      if (state_[j] == State::AtLower && z < -tol) return static_cast<long>(j);
      if (state_[j] == State::AtUpper && z > tol) return static_cast<long>(j);
    }
    return -1;
  }

  Vec run_loop() {
    Vec mu(meq_, 0.0);
    for (long iter = 0; iter < iter_cap_; ++iter) {
      const auto f = free_set();
      const std::size_t nf = f.size();

      if (nf == 0) {
        // fully pinned point; price with least-squares duals
        mu = least_squares_duals();
        const long enter = price(mu, gradient());
        if (enter < 0) return mu;
        state_[static_cast<std::size_t>(enter)] = State::Free;
        continue;
      }

      auto kkt = assemble_kkt(f, 0.0);
      auto rhs = assemble_kkt_rhs(f);
      auto sol = detail::solve_or_null_vector(kkt, rhs);

      if (!sol.singular) {
        if (subspace_step(f, Vec(sol.solution.begin(), sol.solution.begin() + nf))) continue;
        mu.assign(sol.solution.begin() + nf, sol.solution.end());
        const long enter = price(mu, gradient());
        if (enter < 0) return mu;
        state_[static_cast<std::size_t>(enter)] = State::Free;
        continue;
      }

      // Singular KKT system: zero-curvature subspace.
      Vec u(sol.null_vector.begin(), sol.null_vector.begin() + nf);
      double umax = norm(u, Norm::Inf);
      if (umax <= 1e-9) {
        throw IterationLimitError("degenerate equality block in the KKT system");
      }
      const Vec g = gradient();
      double slope = 0.0;
      for (std::size_t a = 0; a < nf; ++a) slope += g[f[a]] * u[a];
      if (std::abs(slope) <= kOptTol * std::max(1.0, norm(g, Norm::Inf))) {
        // objective is flat along the null direction; resolve the target
        // with a small diagonal damping instead
        auto kkt2 = assemble_kkt(f, 1e-10);
        auto sol2 = detail::solve_or_null_vector(kkt2, rhs);
        if (sol2.singular) {
          throw IterationLimitError("flat singular subspace could not be regularized");
        }
        if (subspace_step(f, Vec(sol2.solution.begin(), sol2.solution.begin() + nf))) continue;
        mu.assign(sol2.solution.begin() + nf, sol2.solution.end());
        const long enter = price(mu, g);
        if (enter < 0) return mu;
        state_[static_cast<std::size_t>(enter)] = State::Free;
        continue;
      }
      if (slope > 0.0)
        for (double& v : u) v = -v;
      const Ratio r = ratio_test(f, u);
      if (r.blocker < 0) {
        throw Error("subproblem is unbounded along a zero-curvature direction");
      }
      apply_step(f, u, r, kInf);
    }
    throw IterationLimitError("active-set iteration limit (100 x variables) exceeded");
  }

  // Moves toward the subspace target t_F; returns true when a step was
  // taken (point changed or a bound became active), false when already there.
  bool subspace_step(const std::vector<std::size_t>& f, const Vec& target) {
    Vec p(f.size(), 0.0);
    double tscale = 0.0;
    for (std::size_t a = 0; a < f.size(); ++a) {
      p[a] = target[a] - d_[f[a]];
      tscale = std::max({tscale, std::abs(target[a]), std::abs(d_[f[a]])});
    }
    if (norm(p, Norm::Inf) <= 1e-12 * std::max(tscale, 1e-300)) return false;
    const Ratio r = ratio_test(f, p);
    if (r.alpha >= 1.0) {
      for (std::size_t a = 0; a < f.size(); ++a) d_[f[a]] = target[a];
      return true;
    }
    apply_step(f, p, r, 1.0);
    return true;
  }

  Vec least_squares_duals() const {
    if (meq_ == 0) return {};
    const Vec g = gradient();
    DenseMatrix gram(meq_, meq_);
    Vec rhs(meq_, 0.0);
    double scale = 0.0;
    for (std::size_t a = 0; a < meq_; ++a)
      for (std::size_t b = 0; b < meq_; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_all_; ++j) s += eq_(a, j) * eq_(b, j);
        gram(a, b) = s;
        scale = std::max(scale, std::abs(s));
      }
    for (std::size_t a = 0; a < meq_; ++a) {
      gram(a, a) += 1e-12 * std::max(scale, 1.0);
      double s = 0.0;
      for (std::size_t j = 0; j < n_all_; ++j) s += eq_(a, j) * g[j];
      rhs[a] = s;
    }
    return solve_linear(gram, rhs);
  }

  // --- extraction ---------------------------------------------------------

  Direction extract(const Vec& mu) const {
    Direction dir;
    const Vec g = gradient();
    dir.eq_multipliers.assign(qp_.eq_rows(), 0.0);
    for (std::size_t r = 0; r < meq_; ++r) dir.eq_multipliers[kept_[r]] = mu[r];

    dir.bound_multipliers.assign(n_, 0.0);
    dir.active_bound.assign(n_, BoundSide::None);
    for (std::size_t j = 0; j < n_; ++j) {
      if (state_[j] == State::Free) continue;
      double z = g[j];
      for (std::size_t r = 0; r < meq_; ++r) z -= eq_(r, j) * mu[r];
      const bool fixed = up_[j] - lo_[j] <= 1e-15;
      if (fixed) {
        dir.active_bound[j] = z >= 0.0 ? BoundSide::Lower : BoundSide::Upper;
        dir.bound_multipliers[j] = std::abs(z);
      } else if (state_[j] == State::AtLower) {
        dir.active_bound[j] = BoundSide::Lower;
        dir.bound_multipliers[j] = std::max(z, 0.0);
      } else {
        dir.active_bound[j] = BoundSide::Upper;
        dir.bound_multipliers[j] = std::max(-z, 0.0);
      }
    }

    auto block = [&](std::size_t off, std::size_t len) {
      return Vec(d_.begin() + static_cast<long>(off), d_.begin() + static_cast<long>(off + len));
    };
    dir.d_x = block(0, qp_.n_x);
    dir.d_y = block(qp_.n_x, qp_.m);
    dir.d_w = block(qp_.n_x + qp_.m, qp_.m);
    dir.d_z = block(qp_.n_x + 2 * qp_.m, qp_.n_z);

    dir.tr_active.assign(qp_.n_x, 0);
    dir.tr_multiplier = 0.0;
    for (std::size_t i = 0; i < qp_.n_x; ++i) {
      const bool low = dir.active_bound[i] == BoundSide::Lower && qp_.tr_limits_lower[i];
      const bool high = dir.active_bound[i] == BoundSide::Upper && qp_.tr_limits_upper[i];
      if (low || high) {
        dir.tr_active[i] = 1;
        dir.tr_multiplier = std::max(dir.tr_multiplier, dir.bound_multipliers[i]);
      }
    }
    return dir;
  }

  const QpSubproblem& qp_;
  std::size_t n_ = 0, n_all_ = 0, meq_ = 0;
  DenseMatrix eq_;
  Vec rhs_;
  std::vector<std::size_t> kept_;
  Vec lo_, up_, d_, cost_;
  std::vector<State> state_;
  std::vector<std::uint8_t> releasable_;
  bool use_hessian_ = false;
  long iter_cap_ = 0;
};

} // namespace

Direction solve_direction_qp(const QpSubproblem& qp, const WarmStart* warm) {
  const std::size_t n = qp.total_vars();
  if (qp.linear_cost.size() != n || qp.d_lower.size() != n || qp.d_upper.size() != n ||
      qp.eq_matrix.rows() != qp.eq_rows() || qp.eq_matrix.cols() != n ||
      qp.eq_rhs.size() != qp.eq_rows() || qp.tr_limits_lower.size() != qp.n_x ||
      qp.tr_limits_upper.size() != qp.n_x) {
    throw DimensionError("solve_direction_qp: inconsistent subproblem fields");
  }
  RowReduction red = drop_dependent_rows(qp.eq_matrix, qp.eq_rhs);
  ActiveSetCore core(qp, std::move(red));
  return core.solve(warm);
}

} // namespace mpcclab
