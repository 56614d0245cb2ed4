#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace elai {

/// Dense row-major matrix of doubles. Sized for desk-scale problems; every
/// operation uses a fixed sequential summation order so results are
/// reproducible bit for bit.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);

struct EighResult {
  std::vector<double> eigenvalues;  // descending; ties keep original order
  Matrix eigenvectors;              // columns aligned with eigenvalues
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
/// Deterministic rotation order; each eigenvector column is sign-fixed so its
/// largest-magnitude entry is positive. Throws NonConvergence past max_sweeps.
EighResult jacobi_eigh(const Matrix& sym, double tol = 1e-10, int max_sweeps = 1000);

/// Lower Cholesky factor of a symmetric positive-definite matrix, or nullopt
/// when a pivot collapses.
std::optional<Matrix> cholesky(const Matrix& spd);

/// X = L^-1 B by forward substitution (L lower triangular).
Matrix solve_lower(const Matrix& l, const Matrix& b);

/// x = L^-T v by back substitution.
std::vector<double> solve_lower_transposed(const Matrix& l, std::span<const double> v);

}  // namespace elai
