#include "mpcclab/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace mpcclab {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::initializer_list<double> entries)
    : rows_(rows), cols_(cols), entries_(entries) {
  if (entries_.size() != rows * cols) {
    throw DimensionError("DenseMatrix: entry count does not match rows x cols");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double norm(const Vec& v, Norm kind) {
  switch (kind) {
    case Norm::Two: {
      double s = 0.0;
      for (double x : v) s += x * x;
      return std::sqrt(s);
    }
    case Norm::Inf: {
      double s = 0.0;
      for (double x : v) s = std::max(s, std::abs(x));
      return s;
    }
    case Norm::One: {
      double s = 0.0;
      for (double x : v) s += std::abs(x);
      return s;
    }
  }
  return 0.0;
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double s, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw DimensionError("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

Vec matvec(const DenseMatrix& a, const Vec& x) {
  if (a.cols() != x.size()) throw DimensionError("matvec: size mismatch");
  Vec y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Vec matvec_transposed(const DenseMatrix& a, const Vec& x) {
  if (a.rows() != x.size()) throw DimensionError("matvec_transposed: size mismatch");
  Vec y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * x[i];
  return y;
}

namespace detail {

// Relative pivot threshold; matrices here are tiny, so partial pivoting
// with a column-scaled cutoff is all that is needed.
constexpr double kPivotRel = 1e-12;

LuOrNull solve_or_null_vector(const DenseMatrix& a, const Vec& b) {
  const std::size_t n = a.rows();
  if (a.rows() != a.cols()) throw DimensionError("solve_linear: matrix must be square");
  if (b.size() != n) throw DimensionError("solve_linear: rhs size mismatch");

  // column scales of the input matrix, for the singularity test
  Vec colscale(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) colscale[j] = std::max(colscale[j], std::abs(a(i, j)));

  DenseMatrix u = a;
  Vec rhs = b;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(u(i, k)) > std::abs(u(piv, k))) piv = i;

    const double threshold = kPivotRel * colscale[k];
    if (std::abs(u(piv, k)) <= threshold) {
      // Singular at column k: rows 0..k-1 are an upper trapezoid, column k
      // has no usable pivot.  Back-substitute a null vector with v_k = 1.
      Vec v(n, 0.0);
      v[k] = 1.0;
      for (std::size_t jj = k; jj-- > 0;) {
        double s = 0.0;
        for (std::size_t l = jj + 1; l <= k; ++l) s += u(jj, l) * v[l];
        v[jj] = -s / u(jj, jj);
      }
      double vmax = 0.0;
      for (double x : v) vmax = std::max(vmax, std::abs(x));
      for (double& x : v) x /= vmax;
      return LuOrNull{true, {}, std::move(v)};
    }

    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(u(k, j), u(piv, j));
      std::swap(rhs[k], rhs[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = u(i, k) / u(k, k);
      if (f == 0.0) continue;
      u(i, k) = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) u(i, j) -= f * u(k, j);
      rhs[i] -= f * rhs[k];
    }
  }

  Vec x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= u(i, j) * x[j];
    x[i] = s / u(i, i);
  }
  return LuOrNull{false, std::move(x), {}};
}

} // namespace detail

Vec solve_linear(const DenseMatrix& a, const Vec& b) {
  auto r = detail::solve_or_null_vector(a, b);
  if (r.singular) throw SingularMatrixError("solve_linear: matrix is numerically singular");
  return r.solution;
}

} // namespace mpcclab
