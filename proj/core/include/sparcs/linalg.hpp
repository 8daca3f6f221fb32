#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sparcs {

class Rng;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  Matrix transposed() const;

  /// Copy of the sub-block starting at (r0, c0).
  Matrix block(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);

  /// Rows selected by index, in the given order.
  Matrix select_rows(std::span<const std::size_t> idx) const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

/// a * b. Throws DimensionError naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// out += a^T * b (shapes must already agree).
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a * b^T
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a * b
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out);

/// diag(d) * m : scales row r by d[r].
Matrix scale_rows(std::span<const double> d, const Matrix& m);
/// m * diag(d) : scales column c by d[c].
Matrix scale_cols(const Matrix& m, std::span<const double> d);

double frobenius_norm(std::span<const double> t);
inline double frobenius_norm(const Matrix& m) { return frobenius_norm(m.data()); }

/// max |entry|
double max_abs(std::span<const double> t);
inline double max_abs(const Matrix& m) { return max_abs(m.data()); }

/// Induced infinity norm (max absolute row sum).
double inf_norm(const Matrix& m);

/// Determinant by partial-pivot LU (used for SO(d) checks).
double determinant(const Matrix& m);

/// Orthonormal factor of a square matrix, sign-fixed so that R has a positive
/// diagonal and det(Q) = +1. Applied to a standard Gaussian draw this samples
/// SO(d). Throws DegeneracyError when any |R_kk| < 1e-12.
Matrix qr_orthonormal(const Matrix& g);

/// argmin_beta ||x beta - y||_F^2 via the normal equations (Cholesky).
/// Callers append a constant column for an intercept. Throws
/// DegeneracyError when a pivot falls below 1e-12.
Matrix least_squares(const Matrix& x, const Matrix& y);

/// Appends a constant 1 column.
Matrix with_ones_column(const Matrix& x);

}  // namespace sparcs
