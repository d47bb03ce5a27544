#include "mpcclab/pipa.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "driver.hpp"

namespace mpcclab {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw Error(what);
}

Point advance(const Point& p, const Direction& d, double tau) {
  Point q = p;
  axpy(tau, d.d_x, q.x);
  axpy(tau, d.d_y, q.y);
  axpy(tau, d.d_w, q.w);
  axpy(tau, d.d_z, q.z);
  return q;
}

} // namespace

void validate_config(const PipaConfig& cfg) {
  require(cfg.c > 0.0, "c must be positive");
  require(cfg.sigma > 0.0 && cfg.sigma < 1.0, "sigma must lie in (0,1)");
  require(cfg.gamma > 0.0 && cfg.gamma < 1.0, "gamma must lie in (0,1)");
  require(cfg.rho > 0.0 && cfg.rho < 1.0, "rho must lie in (0,1)");
  require(cfg.alpha > 0.0, "alpha must be positive");
  require(cfg.eps_frac > 0.0 && cfg.eps_frac < 1.0, "eps-frac must lie in (0,1)");
  require(cfg.eps_term > 0.0, "eps-term must be positive");
  require(cfg.backtrack > 0.0 && cfg.backtrack < 1.0, "backtrack must lie in (0,1)");
  require(cfg.max_iter >= 1, "max-iter must be at least 1");
  require(cfg.p_max >= 1, "p_max must be at least 1");
}

double penalty_value(const MpccProblem& problem, const Point& p, double alpha_eff) {
  require(alpha_eff > 0.0, "alpha_eff must be positive");
  validate_dimensions(problem, p);
  const double f = problem.objective(p);
  const Vec F = problem.equality_map(p);
  const double nf = norm(F, Norm::Two);
  return f + alpha_eff * (nf * nf + dot(p.y, p.w));
}

std::optional<double> centrality_root(const Point& p, const Direction& d, double sigma,
                                      double rho) {
  const std::size_t m = p.y.size();
  require(m > 0 && d.d_y.size() == m && d.d_w.size() == m,
          "centrality_root: inconsistent dimensions");
  const double comp = dot(p.y, p.w);
  double min_prod = std::numeric_limits<double>::infinity();
  double inner = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double prod = d.d_y[i] * d.d_w[i];
    min_prod = std::min(min_prod, prod);
    inner += prod;
  }
  const double md = static_cast<double>(m);
  const double coeff = min_prod - rho * inner / md;
  if (coeff >= 0.0) return std::nullopt; // g_k nondecreasing and positive at 0
  return -(1.0 - rho) * sigma * (comp / md) / coeff;
}

int penalty_exponent_update(double grad_dot_d, double comp, double F_norm, double alpha,
                            double sigma, int p_max) {
  const double viol = F_norm + comp;
  require(viol > 0.0, "penalty exponent update needs comp > 0 or F_norm > 0");
  // The left inequality reduces to grad_f'd < 0 independently of p.
  if (grad_dot_d < 0.0) {
    double alpha_p = 1.0;
    for (int p = 1; p <= p_max; ++p) {
      alpha_p *= alpha;
      if (alpha_p * (1.0 - sigma) * viol > viol) return p;
    }
  }
  std::ostringstream os;
  os << "no penalty exponent p <= " << p_max << " satisfies the model-decrease condition";
  throw ExponentOverflowError(os.str());
}

double armijo_search(const MpccProblem& problem, const Point& p, const Direction& d, double tau0,
                     double alpha_eff, double gamma, double backtrack, double pred) {
  require(tau0 > 0.0 && tau0 <= 1.0, "armijo_search: tau0 must lie in (0,1]");
  require(pred < 0.0, "armijo_search: pred must be negative");
  const double p0 = penalty_value(problem, p, alpha_eff);
  // relative slack: deep in the complementarity tail the penalty difference
  // drops below the representable resolution of P itself
  const double slack =
      10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(p0));
  double tau = tau0;
  for (int trial = 0; trial <= 50; ++trial) {
    const double p1 = penalty_value(problem, advance(p, d, tau), alpha_eff);
    if (p1 - p0 <= gamma * tau * pred + slack) return tau;
    tau *= backtrack;
  }
  throw LineSearchError("no step satisfied the sufficient-decrease condition in 50 halvings");
}

SolveResult pipa_solve(const MpccProblem& problem, const PipaConfig& config, const Point& start) {
  return detail::run_penalty_interior_point(problem, config, start, nullptr);
}

namespace detail {

namespace {

TraceRecord make_record(int k, const MpccProblem& problem, const Point& p, double delta) {
  TraceRecord rec;
  rec.k = k;
  rec.point = p;
  rec.comp = dot(p.y, p.w);
  rec.F_norm = norm(problem.equality_map(p), Norm::Two);
  rec.delta = delta;
  return rec;
}

} // namespace

SolveResult run_penalty_interior_point(const MpccProblem& problem, const PipaConfig& cfg,
                                       const Point& start, const TrConfig* tr) {
  validate_config(cfg);
  if (tr != nullptr) validate_tr_config(*tr);
  validate_dimensions(problem, start);
  for (std::size_t i = 0; i < problem.m; ++i) {
    if (start.y[i] <= 0.0 || start.w[i] <= 0.0) {
      throw InteriorityError("starting point must have y, w > 0");
    }
  }
  for (std::size_t i = 0; i < problem.n_x; ++i) {
    if (start.x[i] < problem.x_lower[i] || start.x[i] > problem.x_upper[i]) {
      throw Error("starting point violates the bounds on x");
    }
  }

  const bool adaptive = tr != nullptr && tr->policy == RadiusPolicy::Adaptive;
  const DenseMatrix quadratic = cfg.hessian.value_or(DenseMatrix{});

  SolveResult result;
  if (cfg.alpha * (1.0 - cfg.sigma) > 1.0) {
    std::ostringstream os;
    os << "alpha (1 - sigma) = " << cfg.alpha * (1.0 - cfg.sigma)
       << " > 1: exponent condition holds at p = 1 for every descent step";
    result.message = os.str();
  }

  double delta = adaptive ? tr->delta0 : 0.0;
  {
    const double f0 = norm(problem.equality_map(start), Norm::Two);
    result.trace.push_back(
        make_record(1, problem, start, adaptive ? delta : trust_radius(start, f0, cfg.c)));
  }

  Point cur = start;
  std::optional<WarmStart> warm;
  result.status = SolveStatus::MaxIter;
  try {
    for (int it = 1; it <= cfg.max_iter; ++it) {
      if (adaptive && delta < tr->delta_min) {
        throw RadiusCollapseError("trust-region radius fell below its floor");
      }
      const EvalResult ev = eval_all(problem, cur);
      const double comp = dot(cur.y, cur.w);
      const double f_norm = norm(ev.F, Norm::Two);
      // the builder applies sqrt to its radius argument, so the adaptive
      // policy (half-width = Delta itself) passes Delta^2
      const double radius =
          adaptive ? delta * delta : trust_radius(cur, f_norm, cfg.c);
      const QpSubproblem qp = build_direction_qp(problem, cur, quadratic, cfg.sigma, radius);
      const Direction dir = solve_direction_qp(qp, warm ? &*warm : nullptr);
      warm = WarmStart{dir.active_bound};

      const Vec d_all = dir.stacked();
      const double d_norm = norm(d_all, Norm::Two);
      if (d_norm <= cfg.eps_term) {
        result.status = SolveStatus::ConvergedSmallStep;
        break;
      }

      const double grad_dot_d = dot(ev.grad, d_all);
      const int p_exp =
          penalty_exponent_update(grad_dot_d, comp, f_norm, cfg.alpha, cfg.sigma, cfg.p_max);
      const double alpha_eff = std::pow(cfg.alpha, p_exp);
      const double pred = grad_dot_d - alpha_eff * (1.0 - cfg.sigma) * (f_norm + comp);

      const std::optional<double> root = centrality_root(cur, dir, cfg.sigma, cfg.rho);
      const double tau_central =
          (root.has_value() && *root <= 1.0) ? *root : 1.0 - cfg.eps_frac;
      const double tau = armijo_search(problem, cur, dir, tau_central, alpha_eff, cfg.gamma,
                                       cfg.backtrack, pred);

      const Point next = advance(cur, dir, tau);
      const double ared =
          penalty_value(problem, next, alpha_eff) - penalty_value(problem, cur, alpha_eff);

      if (adaptive) {
        const double rho_k = tr_ratio(ared, pred);
        if (rho_k <= 0.0) {
          // no actual progress: keep the iterate, shrink the radius
          delta = tr->gamma1 * delta;
          continue;
        }
        delta = tr_update(delta, rho_k, *tr);
      }

      const double next_f_norm = norm(problem.equality_map(next), Norm::Two);
      TraceRecord rec =
          make_record(static_cast<int>(result.trace.size()) + 1, problem, next,
                      adaptive ? delta : trust_radius(next, next_f_norm, cfg.c));
      rec.tau = tau;
      rec.d_norm = d_norm;
      rec.ared = ared;
      rec.pred = pred;
      rec.p_exp = p_exp;
      result.trace.push_back(std::move(rec));
      cur = next;
    }
  } catch (const Error& e) {
    result.status = SolveStatus::Error;
    result.message = result.message.empty() ? e.what() : result.message + "; " + e.what();
  }
  return result;
}

} // namespace detail

} // namespace mpcclab
