#include "sparcs/network.hpp"

#include <algorithm>
#include <cmath>

#include "sparcs/error.hpp"

namespace sparcs {

Gradients Gradients::zeros_like(const SpectralParams& params) {
  Gradients g;
  for (const auto& p : params.phi) g.d_phi.emplace_back(p.rows(), p.cols());
  for (const auto& e : params.eig) g.d_eig.emplace_back(e.size(), 0.0);
  return g;
}

Gradients& Gradients::operator+=(const Gradients& o) {
  if (o.d_phi.size() != d_phi.size() || o.d_eig.size() != d_eig.size())
    throw DimensionError("Gradients::operator+=: layout mismatch");
  for (std::size_t i = 0; i < d_phi.size(); ++i) d_phi[i] += o.d_phi[i];
  for (std::size_t j = 0; j < d_eig.size(); ++j) {
    if (d_eig[j].size() != o.d_eig[j].size()) throw DimensionError("Gradients::operator+=: layout mismatch");
    for (std::size_t k = 0; k < d_eig[j].size(); ++k) d_eig[j][k] += o.d_eig[j][k];
  }
  return *this;
}

std::vector<double> Gradients::flatten() const {
  std::vector<double> out;
  for (const auto& p : d_phi) out.insert(out.end(), p.data().begin(), p.data().end());
  for (const auto& e : d_eig) out.insert(out.end(), e.begin(), e.end());
  return out;
}

ActivationTrace forward(const SpectralParams& params, const Matrix& x) {
  const auto& layers = params.layers;
  if (x.cols() != layers[0]) {
    throw DimensionError("forward: input has " + std::to_string(x.cols()) + " columns, layer 0 has " +
                         std::to_string(layers[0]) + " neurons");
  }
  ActivationTrace t;
  t.weights = weight_blocks(params);
  const std::size_t last = layers.depth();
  t.pre.resize(last + 1);
  t.act.resize(last + 1);
  t.act[0] = x;
  for (std::size_t i = 1; i <= last; ++i) {
    Matrix z(x.rows(), layers[i]);
    for (std::size_t k = 0; k < i; ++k) matmul_nt_acc(t.act[k], t.weights.at(i, k), z);
    Matrix a = z;
    if (i != last)
      for (double& v : a.data()) v = v > 0.0 ? v : 0.0;
    t.pre[i] = std::move(z);
    t.act[i] = std::move(a);
  }
  return t;
}

Matrix predict(const SpectralParams& params, const Matrix& x) { return forward(params, x).act.back(); }

Gradients backward(const SpectralParams& params, const ActivationTrace& trace, const Matrix& d_output) {
  const auto& layers = params.layers;
  const std::size_t last = layers.depth();
  if (trace.act.size() != last + 1 || !(trace.weights.layers() == layers)) {
    throw InputError("backward: trace was not produced for these parameters");
  }
  const std::size_t n = trace.batch_size();
  if (d_output.rows() != n || d_output.cols() != layers[last]) {
    throw DimensionError("backward: d_output " + d_output.shape_string() + " vs output " +
                         trace.act[last].shape_string());
  }

  // Stage 1: adjoints of every bundle W(i, k) through the layered update rule.
  WeightBlocks adj_w(layers);
  std::vector<Matrix> d_act(last + 1);
  for (std::size_t i = 1; i <= last; ++i) d_act[i] = Matrix(n, layers[i]);
  d_act[last] = d_output;
  for (std::size_t i = last; i >= 1; --i) {
    Matrix dz = d_act[i];
    if (i != last) {
      const Matrix& z = trace.pre[i];
      for (std::size_t e = 0; e < dz.size(); ++e)
        if (!(z.data()[e] > 0.0)) dz.data()[e] = 0.0;
    }
    for (std::size_t k = 0; k < i; ++k) {
      matmul_tn_acc(dz, trace.act[k], adj_w.at(i, k));
      if (k > 0) matmul_acc(dz, trace.weights.at(i, k), d_act[k]);
    }
  }

  // Stage 2: through W(i, j) = (-1)^(i-1-j) D_i phi[i-2] ... phi[j].
  // The bundles of row i come from the recursion M_{i-1} = D_i,
  // M_j = -M_{j+1} phi[j]; reverse it from j = 0 upward.
  Gradients g = Gradients::zeros_like(params);
  for (std::size_t i = 1; i <= last; ++i) {
    std::vector<Matrix> adj(i);
    for (std::size_t j = 0; j < i; ++j) adj[j] = adj_w.at(i, j);
    for (std::size_t j = 0; j + 1 < i; ++j) {
      // M_j = -M_{j+1} phi[j]
      Matrix t = matmul_nt(adj[j], params.phi[j]);
      adj[j + 1] -= t;
      Matrix u = matmul_tn(trace.weights.at(i, j + 1), adj[j]);
      g.d_phi[j] -= u;
    }
    const Matrix& dd = adj[i - 1];
    const Matrix& f = params.phi[i - 1];
    const auto& e_src = params.eig[i - 1];
    const auto& e_dst = params.eig[i];
    auto& g_src = g.d_eig[i - 1];
    auto& g_dst = g.d_eig[i];
    Matrix& g_phi = g.d_phi[i - 1];
    for (std::size_t r = 0; r < f.rows(); ++r) {
      for (std::size_t c = 0; c < f.cols(); ++c) {
        const double a = dd(r, c);
        g_phi(r, c) += a * (e_src[c] - e_dst[r]);
        g_src[c] += a * f(r, c);
        g_dst[r] -= a * f(r, c);
      }
    }
  }
  if (params.frozen_input) std::fill(g.d_eig[0].begin(), g.d_eig[0].end(), 0.0);
  return g;
}

double mse(const Matrix& prediction, const Matrix& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw DimensionError("mse: " + prediction.shape_string() + " vs " + target.shape_string());
  }
  if (prediction.empty()) throw InputError("mse: empty batch");
  double s = 0.0;
  for (std::size_t e = 0; e < prediction.size(); ++e) {
    const double d = prediction.data()[e] - target.data()[e];
    s += d * d;
  }
  return s / static_cast<double>(prediction.size());
}

Matrix mse_gradient(const Matrix& prediction, const Matrix& target) {
  Matrix g = prediction;
  g -= target;
  g *= 2.0 / static_cast<double>(prediction.size());
  return g;
}

namespace {

std::vector<std::vector<bool>> relu_masks(const ActivationTrace& t) {
  std::vector<std::vector<bool>> masks;
  for (std::size_t i = 1; i + 1 < t.pre.size(); ++i) {
    std::vector<bool> m(t.pre[i].size());
    for (std::size_t e = 0; e < m.size(); ++e) m[e] = t.pre[i].data()[e] > 0.0;
    masks.push_back(std::move(m));
  }
  return masks;
}

}  // namespace

FiniteDifferenceResult finite_difference_gradients(const SpectralParams& params, const Matrix& x,
                                                   const Matrix& y, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw InputError("finite_difference_gradients: eps outside [1e-7, 1e-3]");
  const auto base_masks = relu_masks(forward(params, x));

  FiniteDifferenceResult out;
  out.grads = Gradients::zeros_like(params);

  SpectralParams work = params;
  // Perturbations of frozen input eigenvalues would break validate(); skip them.
  work.frozen_input = false;

  auto probe = [&](double& slot, double& grad_slot) {
    const double orig = slot;
    slot = orig + eps;
    const auto tp = forward(work, x);
    const double lp = mse(tp.act.back(), y);
    const bool kink_p = relu_masks(tp) != base_masks;
    slot = orig - eps;
    const auto tm = forward(work, x);
    const double lm = mse(tm.act.back(), y);
    const bool kink_m = relu_masks(tm) != base_masks;
    slot = orig;
    grad_slot = (lp - lm) / (2.0 * eps);
    out.kink_excluded.push_back(kink_p || kink_m);
  };

  for (std::size_t i = 0; i < work.phi.size(); ++i)
    for (std::size_t e = 0; e < work.phi[i].size(); ++e) probe(work.phi[i].data()[e], out.grads.d_phi[i].data()[e]);
  for (std::size_t j = 0; j < work.eig.size(); ++j) {
    for (std::size_t e = 0; e < work.eig[j].size(); ++e) {
      if (j == 0 && params.frozen_input) {
        out.kink_excluded.push_back(false);
        continue;
      }
      probe(work.eig[j][e], out.grads.d_eig[j][e]);
    }
  }
  return out;
}

GradientComparison compare_gradients(const Gradients& analytic, const FiniteDifferenceResult& numeric,
                                     double floor) {
  const auto a = analytic.flatten();
  const auto f = numeric.grads.flatten();
  if (a.size() != f.size() || a.size() != numeric.kink_excluded.size())
    throw DimensionError("compare_gradients: layout mismatch");
  GradientComparison c;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (numeric.kink_excluded[k]) {
      ++c.kink_excluded;
      continue;
    }
    const double denom = std::max({std::abs(a[k]), std::abs(f[k]), floor});
    c.worst_relative_error = std::max(c.worst_relative_error, std::abs(a[k] - f[k]) / denom);
    ++c.compared;
  }
  return c;
}

}  // namespace sparcs
