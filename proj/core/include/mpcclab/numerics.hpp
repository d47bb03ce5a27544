#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "mpcclab/errors.hpp"

namespace mpcclab {

using Vec = std::vector<double>;

/// Dense row-major matrix. Everything in this project is desk scale
/// (at most ~10x10), so there is no sparsity and no blocking.
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::initializer_list<double> entries);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  const Vec& entries() const { return entries_; }

  DenseMatrix transposed() const;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec entries_;
};

enum class Norm { Two, Inf, One };

double norm(const Vec& v, Norm kind);
double dot(const Vec& a, const Vec& b);

/// y += s * x
void axpy(double s, const Vec& x, Vec& y);

Vec matvec(const DenseMatrix& a, const Vec& x);

/// x^T applied from the left: returns A^T x.
Vec matvec_transposed(const DenseMatrix& a, const Vec& x);

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// Throws SingularMatrixError when a pivot falls below 1e-12 relative to
/// the largest entry of the corresponding column of the input matrix.
Vec solve_linear(const DenseMatrix& a, const Vec& b);

namespace detail {

/// Outcome of an LU factorization attempt that, instead of failing on a
/// singular matrix, reports a (right) null vector extracted at the first
/// unacceptable pivot. Used by the active-set solver to detect
/// zero-curvature subspaces of a KKT system.
struct LuOrNull {
  bool singular = false;
  Vec solution;    // valid when !singular
  Vec null_vector; // valid when singular; satisfies ||A v|| ~ 0, ||v||_inf = 1
};

LuOrNull solve_or_null_vector(const DenseMatrix& a, const Vec& b);

} // namespace detail

} // namespace mpcclab
