#pragma once

// Straightforward reference implementations used as test oracles. They share
// nothing with the library beyond the Matrix container.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sparcs/linalg.hpp"
#include "sparcs/rng.hpp"
#include "sparcs/spectral.hpp"

namespace oracle {

using sparcs::Matrix;

inline Matrix mul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

// Gauss-Jordan with partial pivoting.
inline Matrix inverse(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    if (a(p, c) == 0.0) throw std::runtime_error("singular");
    for (std::size_t k = 0; k < n; ++k) {
      std::swap(a(c, k), a(p, k));
      std::swap(inv(c, k), inv(p, k));
    }
    const double d = a(c, c);
    for (std::size_t k = 0; k < n; ++k) {
      a(c, k) /= d;
      inv(c, k) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        a(r, k) -= f * a(c, k);
        inv(r, k) -= f * inv(c, k);
      }
    }
  }
  return inv;
}

// Unit lower block-bidiagonal eigenvector matrix.
inline Matrix dense_phi(const sparcs::SpectralParams& p) {
  const auto& l = p.layers;
  Matrix m = Matrix::identity(l.total());
  for (std::size_t i = 0; i < p.phi.size(); ++i)
    for (std::size_t r = 0; r < l[i + 1]; ++r)
      for (std::size_t c = 0; c < l[i]; ++c) m(l.offset(i + 1) + r, l.offset(i) + c) = p.phi[i](r, c);
  return m;
}

// Phi Lambda Phi^-1 with a Gauss-Jordan inverse.
inline Matrix dense_adjacency(const sparcs::SpectralParams& p) {
  Matrix phi = dense_phi(p);
  Matrix pl = phi;
  std::size_t col = 0;
  for (const auto& e : p.eig)
    for (double v : e) {
      for (std::size_t r = 0; r < pl.rows(); ++r) pl(r, col) *= v;
      ++col;
    }
  return mul(pl, inverse(phi));
}

inline Matrix block(const sparcs::SpectralParams& p, const Matrix& dense, std::size_t i, std::size_t j) {
  return dense.block(p.layers.offset(i), p.layers.offset(j), p.layers[i], p.layers[j]);
}

inline double max_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a.data()[k] - b.data()[k]));
  return d;
}

// Forward pass straight from the dense adjacency: a_i = f(sum_{k<i} A_ik a_k).
inline Matrix dense_forward(const sparcs::SpectralParams& p, const Matrix& x) {
  const Matrix a = dense_adjacency(p);
  const auto& l = p.layers;
  Matrix out(x.rows(), l[l.depth()]);
  for (std::size_t s = 0; s < x.rows(); ++s) {
    std::vector<std::vector<double>> act(l.count());
    act[0].assign(x.row(s).begin(), x.row(s).end());
    for (std::size_t i = 1; i < l.count(); ++i) {
      act[i].assign(l[i], 0.0);
      for (std::size_t r = 0; r < l[i]; ++r) {
        double z = 0.0;
        for (std::size_t k = 0; k < i; ++k)
          for (std::size_t c = 0; c < l[k]; ++c) z += a(l.offset(i) + r, l.offset(k) + c) * act[k][c];
        act[i][r] = i == l.depth() ? z : std::max(0.0, z);
      }
    }
    for (std::size_t r = 0; r < out.cols(); ++r) out(s, r) = act.back()[r];
  }
  return out;
}

inline sparcs::SpectralParams scalar_params(std::vector<double> phis, std::vector<double> eigs) {
  sparcs::SpectralParams p;
  p.layers = sparcs::LayerSizes(std::vector<std::size_t>(eigs.size(), 1));
  for (double v : phis) p.phi.push_back(Matrix{{v}});
  for (double v : eigs) p.eig.push_back({v});
  p.frozen_input = eigs.front() == 0.0;
  return p;
}

inline sparcs::SpectralParams random_config(sparcs::Rng& rng, std::size_t b, std::size_t max_size) {
  std::vector<std::size_t> sizes(b + 1);
  for (auto& n : sizes) n = 1 + rng.below(max_size);
  return sparcs::random_params(sparcs::LayerSizes(sizes), rng);
}

}  // namespace oracle
