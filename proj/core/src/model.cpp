#include "mpcclab/model.hpp"

#include <cmath>
#include <sstream>

namespace mpcclab {

Vec Point::stacked() const {
  Vec s;
  s.reserve(x.size() + y.size() + w.size() + z.size());
  s.insert(s.end(), x.begin(), x.end());
  s.insert(s.end(), y.begin(), y.end());
  s.insert(s.end(), w.begin(), w.end());
  s.insert(s.end(), z.begin(), z.end());
  return s;
}

void validate_dimensions(const MpccProblem& problem, const Point& p) {
  if (p.x.size() != problem.n_x || p.y.size() != problem.m || p.w.size() != problem.m ||
      p.z.size() != problem.n_z) {
    std::ostringstream os;
    os << "point dimensions (" << p.x.size() << "," << p.y.size() << "," << p.w.size() << ","
       << p.z.size() << ") do not match problem '" << problem.name << "' (" << problem.n_x << ","
       << problem.m << "," << problem.m << "," << problem.n_z << ")";
    throw DimensionError(os.str());
  }
}

EvalResult eval_all(const MpccProblem& problem, const Point& p) {
  validate_dimensions(problem, p);
  EvalResult r;
  r.f = problem.objective(p);
  r.grad = problem.objective_gradient(p);
  if (r.grad.size() != problem.total_vars()) {
    throw DimensionError("gradient length does not equal n_x + 2m + n_z");
  }
  r.F = problem.equality_map(p);
  if (r.F.size() != problem.eq_rows()) {
    throw DimensionError("F length does not equal m + n_z");
  }
  r.jac_F = problem.equality_jacobian(p);
  if (r.jac_F.rows() != problem.eq_rows() || r.jac_F.cols() != problem.total_vars()) {
    throw DimensionError("Jacobian shape does not match (m + n_z) x (n_x + 2m + n_z)");
  }
  return r;
}

namespace {

double* component(Point& p, const MpccProblem& problem, std::size_t flat) {
  if (flat < problem.n_x) return &p.x[flat];
  flat -= problem.n_x;
  if (flat < problem.m) return &p.y[flat];
  flat -= problem.m;
  if (flat < problem.m) return &p.w[flat];
  flat -= problem.m;
  return &p.z[flat];
}

double rel_err(double fd, double an) {
  return std::abs(fd - an) / std::max({1.0, std::abs(an), std::abs(fd)});
}

} // namespace

double check_derivatives(const MpccProblem& problem, const Point& p, double h) {
  if (!(h > 0.0)) throw Error("check_derivatives: h must be positive");
  validate_dimensions(problem, p);
  const EvalResult at = eval_all(problem, p);
  double worst = 0.0;
  Point plus = p, minus = p;
  for (std::size_t j = 0; j < problem.total_vars(); ++j) {
    double* cp = component(plus, problem, j);
    double* cm = component(minus, problem, j);
    const double saved = *cp;
    *cp = saved + h;
    *cm = saved - h;
    const double fdiff = (problem.objective(plus) - problem.objective(minus)) / (2.0 * h);
    worst = std::max(worst, rel_err(fdiff, at.grad[j]));
    const Vec Fp = problem.equality_map(plus);
    const Vec Fm = problem.equality_map(minus);
    for (std::size_t r = 0; r < problem.eq_rows(); ++r) {
      worst = std::max(worst, rel_err((Fp[r] - Fm[r]) / (2.0 * h), at.jac_F(r, j)));
    }
    *cp = saved;
    *cm = saved;
  }
  return worst;
}

MpccProblem counterexample_problem() {
  MpccProblem prob;
  prob.name = "counterexample";
  prob.n_x = 1;
  prob.m = 1;
  prob.n_z = 0;
  prob.x_lower = {-1.0};
  prob.x_upper = {1.0};
  prob.objective = [](const Point& p) { return p.x[0] + p.w[0]; };
  prob.objective_gradient = [](const Point&) { return Vec{1.0, 0.0, 1.0}; };
  prob.equality_map = [](const Point& p) { return Vec{-1.0 + p.x[0] + p.y[0]}; };
  prob.equality_jacobian = [](const Point&) { return DenseMatrix(1, 3, {1.0, 1.0, 0.0}); };
  return prob;
}

MpccProblem bilinear_problem() {
  MpccProblem prob;
  prob.name = "bilinear";
  prob.n_x = 2;
  prob.m = 2;
  prob.n_z = 1;
  prob.x_lower = {-2.0, -2.0};
  prob.x_upper = {2.0, 2.0};
  // variable order: (x0, x1, y0, y1, w0, w1, z)
  prob.objective = [](const Point& p) {
    return p.x[0] + 0.5 * p.x[1] * p.x[1] + p.w[0] + 2.0 * p.w[1] + 0.1 * p.z[0] * p.z[0];
  };
  prob.objective_gradient = [](const Point& p) {
    return Vec{1.0, p.x[1], 0.0, 0.0, 1.0, 2.0, 0.2 * p.z[0]};
  };
  prob.equality_map = [](const Point& p) {
    const double x0 = p.x[0], x1 = p.x[1];
    return Vec{x0 + p.y[0] - 1.0,
               x1 + p.y[1] + 0.2 * x0 * x1 + 0.05 * x0 * x0 * x0 - 1.0,
               p.z[0] - 0.5 * (x0 + x1)};
  };
  prob.equality_jacobian = [](const Point& p) {
    const double x0 = p.x[0], x1 = p.x[1];
    DenseMatrix j(3, 7);
    j(0, 0) = 1.0;
    j(0, 2) = 1.0;
    j(1, 0) = 0.2 * x1 + 0.15 * x0 * x0;
    j(1, 1) = 1.0 + 0.2 * x0;
    j(1, 3) = 1.0;
    j(2, 0) = -0.5;
    j(2, 1) = -0.5;
    j(2, 6) = 1.0;
    return j;
  };
  return prob;
}

std::vector<std::string> builtin_problem_names() { return {"counterexample", "bilinear"}; }

std::optional<MpccProblem> problem_by_name(const std::string& name) {
  if (name == "counterexample") return counterexample_problem();
  if (name == "bilinear") return bilinear_problem();
  return std::nullopt;
}

} // namespace mpcclab
