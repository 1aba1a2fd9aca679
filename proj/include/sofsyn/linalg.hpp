#pragma once

// Small dense real matrices and the handful of factorizations the synthesis
// pipeline needs. Everything here targets dimensions of a few dozen at most.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace sofsyn {

class Matrix {
 public:
  Matrix() = default;
  // Zero matrix.
  Matrix(std::size_t rows, std::size_t cols);
  // Row-major data; throws ContractError on size mismatch or non-finite entries.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  // Nested-list literal, one initializer list per row.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);
  static Matrix column(std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Matrix transpose() const;
  double trace() const;
  double frobenius_norm() const;
  double max_abs() const;
  bool is_zero() const;
  bool all_finite() const;

  // Copy of the block with top-left corner (r, c).
  Matrix block(std::size_t r, std::size_t c, std::size_t nrows, std::size_t ncols) const;
  void set_block(std::size_t r, std::size_t c, const Matrix& b);

  Matrix& operator+=(const Matrix& b);
  Matrix& operator-=(const Matrix& b);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator-(Matrix a);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

// Matrix product; ShapeError when a.cols() != b.rows().
Matrix mat_mul(const Matrix& a, const Matrix& b);
inline Matrix operator*(const Matrix& a, const Matrix& b) { return mat_mul(a, b); }

// (M + Mᵀ) / 2.
Matrix symmetrize(const Matrix& m);
// Frobenius inner product Σ a_ij b_ij.
double inner(const Matrix& a, const Matrix& b);
// Kronecker product a ⊗ b.
Matrix kron(const Matrix& a, const Matrix& b);
// Horizontal and vertical concatenation.
Matrix hcat(const Matrix& a, const Matrix& b);
Matrix vcat(const Matrix& a, const Matrix& b);

struct SymEigDecomposition {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // column k pairs with eigenvalues[k]
};

// Relative tolerance used for symmetry checks on eigensolver input.
inline constexpr double kSymmetryTolerance = 1e-9;

bool is_symmetric(const Matrix& m, double tol = kSymmetryTolerance);

// Cyclic Jacobi eigendecomposition. The input must be symmetric within
// kSymmetryTolerance · (1 + max|m_ij|); it is symmetrized before use.
SymEigDecomposition sym_eig(const Matrix& m);
// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& m);

// All eigenvalues of a general real square matrix: balancing, Hessenberg
// reduction, Francis double-shift QR. Conjugate pairs are adjacent; no other
// ordering is implied. Throws NumericError on non-convergence.
std::vector<std::complex<double>> general_eigenvalues(const Matrix& m);

// Solution of a·x = b by LU with partial pivoting. Throws NumericError when
// the 1-norm condition estimate exceeds max_condition.
inline constexpr double kMaxCondition = 1e14;
Matrix solve_linear(const Matrix& a, const Matrix& b, double max_condition = kMaxCondition);

// Lower-triangular L with L·Lᵀ = m, or nullopt when m is not positive definite.
std::optional<Matrix> cholesky(const Matrix& m);

// Inverse of a symmetric positive definite matrix from its Cholesky factor.
Matrix spd_inverse_from_cholesky(const Matrix& lower);
// Solves L·x = b for lower-triangular L (forward substitution, in place on b).
Matrix forward_substitute(const Matrix& lower, Matrix b);
// Solves Lᵀ·x = b for lower-triangular L.
Matrix backward_substitute_transposed(const Matrix& lower, Matrix b);

}  // namespace sofsyn
