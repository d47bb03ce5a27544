#include "mpcclab/subqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mpcclab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Vec Direction::stacked() const {
  Vec s;
  s.reserve(d_x.size() + d_y.size() + d_w.size() + d_z.size());
  s.insert(s.end(), d_x.begin(), d_x.end());
  s.insert(s.end(), d_y.begin(), d_y.end());
  s.insert(s.end(), d_w.begin(), d_w.end());
  s.insert(s.end(), d_z.begin(), d_z.end());
  return s;
}

double trust_radius(const Point& p, double F_norm, double c) {
  return c * (F_norm + dot(p.y, p.w));
}

QpSubproblem build_direction_qp(const MpccProblem& problem, const Point& p,
                                const DenseMatrix& quadratic, double sigma, double radius) {
  validate_dimensions(problem, p);
  for (std::size_t i = 0; i < problem.m; ++i) {
    if (p.y[i] <= 0.0 || p.w[i] <= 0.0) {
      std::ostringstream os;
      os << "subproblem requires strict interiority, pair " << i << " has y = " << p.y[i]
         << ", w = " << p.w[i];
      throw InteriorityError(os.str());
    }
  }
  if (!quadratic.empty() &&
      (quadratic.rows() != problem.n_x || quadratic.cols() != problem.n_x)) {
    throw DimensionError("quadratic term must be n_x x n_x");
  }
  if (radius < 0.0) throw Error("trust-region radius must be nonnegative");

  const EvalResult ev = eval_all(problem, p);
  const std::size_t n = problem.total_vars();
  const std::size_t n_x = problem.n_x, m = problem.m, n_z = problem.n_z;

  QpSubproblem qp;
  qp.n_x = n_x;
  qp.m = m;
  qp.n_z = n_z;
  qp.quadratic = quadratic;
  qp.linear_cost = ev.grad;

  // linearized F rows stacked over complementarity rows Y d_w + W d_y
  qp.eq_matrix = DenseMatrix(m + n_z + m, n);
  qp.eq_rhs.assign(m + n_z + m, 0.0);
  for (std::size_t r = 0; r < m + n_z; ++r) {
    for (std::size_t j = 0; j < n; ++j) qp.eq_matrix(r, j) = ev.jac_F(r, j);
    qp.eq_rhs[r] = -ev.F[r];
  }
  const double centering = sigma * dot(p.y, p.w) / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t r = m + n_z + i;
    qp.eq_matrix(r, n_x + i) = p.w[i];           // W d_y
    qp.eq_matrix(r, n_x + m + i) = p.y[i];       // Y d_w
    qp.eq_rhs[r] = -p.y[i] * p.w[i] + centering;
  }

  qp.d_lower.assign(n, -kInf);
  qp.d_upper.assign(n, kInf);
  qp.tr_limits_lower.assign(n_x, 0);
  qp.tr_limits_upper.assign(n_x, 0);
  const double half_width = std::sqrt(radius);
  for (std::size_t i = 0; i < n_x; ++i) {
    const double to_lower = problem.x_lower[i] - p.x[i];
    const double to_upper = problem.x_upper[i] - p.x[i];
    qp.d_lower[i] = std::max(to_lower, -half_width);
    qp.d_upper[i] = std::min(to_upper, half_width);
    qp.tr_limits_lower[i] = (-half_width >= to_lower) ? 1 : 0;
    qp.tr_limits_upper[i] = (half_width <= to_upper) ? 1 : 0;
  }
  return qp;
}

Direction counterexample_direction(const Point& p, double sigma) {
  if (p.x.size() != 1 || p.y.size() != 1 || p.w.size() != 1 || !p.z.empty()) {
    throw DimensionError("closed form applies to the scalar instance only");
  }
  const double y = p.y[0], w = p.w[0];
  const double s = std::sqrt(y * w);
  Direction dir;
  dir.d_x = {-s};
  dir.d_y = {s};
  dir.d_w = {-(1.0 - sigma) * w - (w / y) * s};
  dir.eq_multipliers = {-w / y, 1.0 / y};
  dir.bound_multipliers = {1.0 + w / y, 0.0, 0.0};
  dir.active_bound = {BoundSide::Lower, BoundSide::None, BoundSide::None};
  dir.tr_active = {1};
  dir.tr_multiplier = 1.0 + w / y;
  return dir;
}

double kkt_residual(const QpSubproblem& qp, const Direction& dir) {
  const std::size_t n = qp.total_vars();
  const Vec d = dir.stacked();
  if (d.size() != n || dir.eq_multipliers.size() != qp.eq_rows() ||
      dir.bound_multipliers.size() != n || dir.active_bound.size() != n) {
    throw DimensionError("kkt_residual: direction does not match subproblem");
  }

  Vec grad = qp.linear_cost;
  if (!qp.quadratic.empty()) {
    for (std::size_t i = 0; i < qp.n_x; ++i)
      for (std::size_t j = 0; j < qp.n_x; ++j) grad[i] += qp.quadratic(i, j) * d[j];
  }
  const Vec et_mu = matvec_transposed(qp.eq_matrix, dir.eq_multipliers);

  double worst = 0.0;
  // stationarity: grad - E' mu - (+mult at lower / -mult at upper) = 0
  for (std::size_t j = 0; j < n; ++j) {
    double r = grad[j] - et_mu[j];
    if (dir.active_bound[j] == BoundSide::Lower) r -= dir.bound_multipliers[j];
    if (dir.active_bound[j] == BoundSide::Upper) r += dir.bound_multipliers[j];
    worst = std::max(worst, std::abs(r));
  }
  // primal feasibility
  const Vec ed = matvec(qp.eq_matrix, d);
  for (std::size_t r = 0; r < qp.eq_rows(); ++r)
    worst = std::max(worst, std::abs(ed[r] - qp.eq_rhs[r]));
  for (std::size_t j = 0; j < n; ++j) {
    worst = std::max(worst, qp.d_lower[j] - d[j]);
    worst = std::max(worst, d[j] - qp.d_upper[j]);
  }
  // dual signs and complementary slackness
  for (std::size_t j = 0; j < n; ++j) {
    worst = std::max(worst, -dir.bound_multipliers[j]);
    if (dir.active_bound[j] == BoundSide::Lower)
      worst = std::max(worst, dir.bound_multipliers[j] * std::abs(d[j] - qp.d_lower[j]));
    else if (dir.active_bound[j] == BoundSide::Upper)
      worst = std::max(worst, dir.bound_multipliers[j] * std::abs(d[j] - qp.d_upper[j]));
    else
      worst = std::max(worst, std::abs(dir.bound_multipliers[j]));
  }
  return worst;
}

} // namespace mpcclab
