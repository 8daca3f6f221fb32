#include "sparcs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "sparcs/error.hpp"
#include "sparcs/rng.hpp"

namespace sparcs {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                         " does not match " + shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data_) v = rng.normal();
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const {
  if (r0 + rows > rows_ || c0 + cols > cols_) {
    throw DimensionError("block: window exceeds " + shape_string());
  }
  Matrix b(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>((r0 + r) * cols_ + c0), cols,
                b.data_.begin() + static_cast<std::ptrdiff_t>(r * cols));
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
  if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_) {
    throw DimensionError("set_block: " + b.shape_string() + " does not fit in " + shape_string());
  }
  for (std::size_t r = 0; r < b.rows_; ++r)
    std::copy_n(b.data_.begin() + static_cast<std::ptrdiff_t>(r * b.cols_), b.cols_,
                data_.begin() + static_cast<std::ptrdiff_t>((r0 + r) * cols_ + c0));
}

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
  Matrix out(idx.size(), cols_);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto src = row(idx[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.row(i).data();
    const double* ar = a.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ar[p];
      if (av == 0.0) continue;
      const double* br = b.row(p).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + a.shape_string() + " * " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  matmul_acc(a, b, out);
  return out;
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  // out(i, j) += sum_p a(p, i) b(p, j)
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  for (std::size_t p = 0; p < k; ++p) {
    const double* ar = a.row(p).data();
    const double* br = b.row(p).data();
    for (std::size_t i = 0; i < n; ++i) {
      const double av = ar[i];
      if (av == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: " + a.shape_string() + "^T * " + b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  matmul_tn_acc(a, b, out);
  return out;
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  // out(i, j) += dot(a.row(i), b.row(j))
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.row(i).data();
    double* o = out.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
      const double* br = b.row(j).data();
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      o[j] += s;
    }
  }
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: " + a.shape_string() + " * " + b.shape_string() + "^T");
  }
  Matrix out(a.rows(), b.rows());
  matmul_nt_acc(a, b, out);
  return out;
}

Matrix scale_rows(std::span<const double> d, const Matrix& m) {
  if (d.size() != m.rows()) throw DimensionError("scale_rows: diagonal length vs " + m.shape_string());
  Matrix out = m;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (double& v : out.row(r)) v *= d[r];
  return out;
}

Matrix scale_cols(const Matrix& m, std::span<const double> d) {
  if (d.size() != m.cols()) throw DimensionError("scale_cols: diagonal length vs " + m.shape_string());
  Matrix out = m;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] *= d[c];
  }
  return out;
}

double frobenius_norm(std::span<const double> t) {
  double s = 0.0;
  for (double v : t) s += v * v;
  return std::sqrt(s);
}

double max_abs(std::span<const double> t) {
  double m = 0.0;
  for (double v : t) m = std::max(m, std::abs(v));
  return m;
}

double inf_norm(const Matrix& m) {
  double best = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (double v : m.row(r)) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

double determinant(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("determinant: non-square " + m.shape_string());
  Matrix a = m;
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a(r, k)) > std::abs(a(piv, k))) piv = r;
    if (a(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(piv, c));
      det = -det;
    }
    det *= a(k, k);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a(r, k) / a(k, k);
      for (std::size_t c = k; c < n; ++c) a(r, c) -= f * a(k, c);
    }
  }
  return det;
}

Matrix qr_orthonormal(const Matrix& g) {
  if (g.rows() != g.cols()) throw DimensionError("qr_orthonormal: non-square " + g.shape_string());
  const std::size_t n = g.rows();
  // Householder QR; q accumulates the reflectors applied to the identity.
  Matrix r = g;
  Matrix q = Matrix::identity(n);
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < n; ++i) norm += r(i, k) * r(i, k);
    norm = std::sqrt(norm);
    if (norm < 1e-12) throw DegeneracyError("qr_orthonormal: rank-deficient input at column " + std::to_string(k));
    const double alpha = r(k, k) > 0 ? -norm : norm;
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < n; ++i) {
      v[i] = r(i, k) - (i == k ? alpha : 0.0);
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 == 0.0) continue;
    // r <- (I - 2 v v^T / |v|^2) r
    for (std::size_t c = k; c < n; ++c) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += v[i] * r(i, c);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < n; ++i) r(i, c) -= s * v[i];
    }
    // q <- q (I - 2 v v^T / |v|^2)
    for (std::size_t row = 0; row < n; ++row) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += q(row, i) * v[i];
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < n; ++i) q(row, i) -= s * v[i];
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(r(k, k)) < 1e-12) {
      throw DegeneracyError("qr_orthonormal: |R_kk| < 1e-12 at k=" + std::to_string(k));
    }
    if (r(k, k) < 0) {
      for (std::size_t row = 0; row < n; ++row) q(row, k) = -q(row, k);
    }
  }
  if (determinant(q) < 0) {
    for (std::size_t row = 0; row < n; ++row) q(row, 0) = -q(row, 0);
  }
  return q;
}

Matrix least_squares(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    throw DimensionError("least_squares: " + x.shape_string() + " vs " + y.shape_string());
  }
  if (x.rows() < x.cols()) {
    throw DimensionError("least_squares: underdetermined system " + x.shape_string());
  }
  const std::size_t d = x.cols();
  Matrix gram = matmul_tn(x, x);
  Matrix rhs = matmul_tn(x, y);
  // Cholesky gram = L L^T, in place in the lower triangle.
  Matrix l(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    double s = gram(j, j);
    for (std::size_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
    if (s < 1e-12) throw DegeneracyError("least_squares: singular normal matrix (pivot " + std::to_string(s) + ")");
    l(j, j) = std::sqrt(s);
    for (std::size_t i = j + 1; i < d; ++i) {
      double t = gram(i, j);
      for (std::size_t k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
      l(i, j) = t / l(j, j);
    }
  }
  Matrix beta(d, y.cols());
  for (std::size_t c = 0; c < y.cols(); ++c) {
    std::vector<double> z(d);
    for (std::size_t i = 0; i < d; ++i) {
      double t = rhs(i, c);
      for (std::size_t k = 0; k < i; ++k) t -= l(i, k) * z[k];
      z[i] = t / l(i, i);
    }
    for (std::size_t i = d; i-- > 0;) {
      double t = z[i];
      for (std::size_t k = i + 1; k < d; ++k) t -= l(k, i) * beta(k, c);
      beta(i, c) = t / l(i, i);
    }
  }
  return beta;
}

Matrix with_ones_column(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.row(r);
    auto dst = out.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
    dst[x.cols()] = 1.0;
  }
  return out;
}

}  // namespace sparcs
