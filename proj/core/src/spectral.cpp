#include "sparcs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparcs/error.hpp"
#include "sparcs/rng.hpp"

namespace sparcs {

LayerSizes::LayerSizes(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw InputError("LayerSizes: need at least two layers");
  for (std::size_t n : sizes_)
    if (n == 0) throw InputError("LayerSizes: every layer needs at least one neuron");
}

std::size_t LayerSizes::total() const { return std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{0}); }

std::size_t LayerSizes::offset(std::size_t i) const {
  return std::accumulate(sizes_.begin(), sizes_.begin() + static_cast<std::ptrdiff_t>(i), std::size_t{0});
}

std::string LayerSizes::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(sizes_[i]);
  }
  return s + ")";
}

std::size_t SpectralParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : phi) n += p.size();
  for (const auto& e : eig) n += e.size();
  return n;
}

void SpectralParams::validate() const {
  const std::size_t b = layers.depth();
  if (phi.size() != b || eig.size() != b + 1) {
    throw DimensionError("SpectralParams: expected " + std::to_string(b) + " phi blocks and " +
                         std::to_string(b + 1) + " eigenvalue vectors");
  }
  for (std::size_t i = 0; i < b; ++i) {
    if (phi[i].rows() != layers[i + 1] || phi[i].cols() != layers[i]) {
      throw DimensionError("SpectralParams: phi[" + std::to_string(i) + "] is " + phi[i].shape_string() +
                           ", layers are " + layers.to_string());
    }
    if (!phi[i].all_finite()) throw InputError("SpectralParams: non-finite phi[" + std::to_string(i) + "]");
  }
  for (std::size_t j = 0; j <= b; ++j) {
    if (eig[j].size() != layers[j]) {
      throw DimensionError("SpectralParams: eig[" + std::to_string(j) + "] has length " +
                           std::to_string(eig[j].size()));
    }
    for (double v : eig[j])
      if (!std::isfinite(v)) throw InputError("SpectralParams: non-finite eig[" + std::to_string(j) + "]");
  }
  if (frozen_input)
    for (double v : eig[0])
      if (v != 0.0) throw InputError("SpectralParams: frozen input eigenvalues must be zero");
}

LowerBlocks::LowerBlocks(const LayerSizes& layers) : layers_(layers) {
  const std::size_t n = layers.count();
  blocks_.resize(n * (n - 1) / 2);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) blocks_[index(i, j)] = Matrix(layers[i], layers[j]);
}

Matrix& LowerBlocks::at(std::size_t i, std::size_t j) {
  if (j >= i || i >= layers_.count()) throw DimensionError("LowerBlocks: no block (" + std::to_string(i) + "," + std::to_string(j) + ")");
  return blocks_[index(i, j)];
}

const Matrix& LowerBlocks::at(std::size_t i, std::size_t j) const {
  if (j >= i || i >= layers_.count()) throw DimensionError("LowerBlocks: no block (" + std::to_string(i) + "," + std::to_string(j) + ")");
  return blocks_[index(i, j)];
}

SpectralParams init_perceptron(const LayerSizes& layers, std::uint64_t seed) {
  Rng rng(seed);
  SpectralParams p;
  p.layers = layers;
  const std::size_t b = layers.depth();
  for (std::size_t i = 0; i < b; ++i) {
    const double a = std::sqrt(6.0 / static_cast<double>(layers[i] + layers[i + 1]));
    Matrix m(layers[i + 1], layers[i]);
    for (double& v : m.data()) v = rng.uniform(-a, a);
    p.phi.push_back(std::move(m));
  }
  for (std::size_t j = 0; j <= b; ++j) p.eig.emplace_back(layers[j], j == b ? 1.0 : 0.0);
  return p;
}

SpectralParams random_params(const LayerSizes& layers, Rng& rng, double scale) {
  SpectralParams p;
  p.layers = layers;
  p.frozen_input = false;
  for (std::size_t i = 0; i < layers.depth(); ++i) {
    Matrix m(layers[i + 1], layers[i]);
    for (double& v : m.data()) v = rng.uniform(-scale, scale);
    p.phi.push_back(std::move(m));
  }
  for (std::size_t j = 0; j < layers.count(); ++j) {
    std::vector<double> e(layers[j]);
    for (double& v : e) v = rng.uniform(-scale, scale);
    p.eig.push_back(std::move(e));
  }
  return p;
}

InverseBlocks phi_inverse_blocks(const SpectralParams& params) {
  InverseBlocks s(params.layers);
  const std::size_t n = params.layers.count();
  for (std::size_t j = 0; j + 1 < n; ++j) {
    // Walk down column j: S(i, j) = -phi[i-1] S(i-1, j), S(j, j) = I.
    Matrix acc = -1.0 * params.phi[j];
    s.at(j + 1, j) = acc;
    for (std::size_t i = j + 2; i < n; ++i) {
      acc = -1.0 * matmul(params.phi[i - 1], acc);
      s.at(i, j) = acc;
    }
  }
  return s;
}

Matrix assemble_phi(const SpectralParams& params) {
  const auto& layers = params.layers;
  Matrix m = Matrix::identity(layers.total());
  for (std::size_t i = 0; i < layers.depth(); ++i)
    m.set_block(layers.offset(i + 1), layers.offset(i), params.phi[i]);
  return m;
}

Matrix assemble_lower(const LowerBlocks& blocks, bool identity_diagonal) {
  const auto& layers = blocks.layers();
  Matrix m = identity_diagonal ? Matrix::identity(layers.total()) : Matrix(layers.total(), layers.total());
  for (std::size_t i = 1; i < layers.count(); ++i)
    for (std::size_t j = 0; j < i; ++j) m.set_block(layers.offset(i), layers.offset(j), blocks.at(i, j));
  return m;
}

Matrix phi_inverse_polynomial(const SpectralParams& params) {
  const unsigned b = static_cast<unsigned>(params.depth());
  const Matrix phi = assemble_phi(params);
  const std::size_t n = phi.rows();
  Matrix result(n, n);
  Matrix power = Matrix::identity(n);
  for (unsigned k = 0; k <= b; ++k) {
    if (k > 0) power = matmul(power, phi);
    const double coef = static_cast<double>(binomial(b + 1, k + 1)) * (k % 2 == 0 ? 1.0 : -1.0);
    Matrix term = power;
    term *= coef;
    result += term;
  }
  return result;
}

WeightBlocks weight_blocks(const SpectralParams& params) {
  const auto& layers = params.layers;
  WeightBlocks w(layers);
  for (std::size_t i = 1; i < layers.count(); ++i) {
    const Matrix& f = params.phi[i - 1];
    // D_i = phi[i-1] diag(eig[i-1]) - diag(eig[i]) phi[i-1]
    Matrix d(f.rows(), f.cols());
    for (std::size_t r = 0; r < f.rows(); ++r)
      for (std::size_t c = 0; c < f.cols(); ++c)
        d(r, c) = f(r, c) * params.eig[i - 1][c] - params.eig[i][r] * f(r, c);
    w.at(i, i - 1) = d;
    Matrix acc = std::move(d);
    for (std::size_t j = i - 1; j-- > 0;) {
      acc = -1.0 * matmul(acc, params.phi[j]);
      w.at(i, j) = acc;
    }
  }
  return w;
}

Matrix assemble_dense_adjacency(const SpectralParams& params) {
  const Matrix phi = assemble_phi(params);
  Matrix phi_lambda = phi;
  std::vector<double> lambda;
  for (const auto& e : params.eig) lambda.insert(lambda.end(), e.begin(), e.end());
  phi_lambda = scale_cols(phi_lambda, lambda);
  return matmul(phi_lambda, phi_inverse_polynomial(params));
}

double nilpotency_residual(const SpectralParams& params) {
  return nilpotency_residual(params, params.depth() + 1);
}

double nilpotency_residual(const SpectralParams& params, std::size_t power) {
  Matrix n = assemble_phi(params);
  n -= Matrix::identity(n.rows());
  Matrix acc = Matrix::identity(n.rows());
  for (std::size_t k = 0; k < power; ++k) acc = matmul(acc, n);
  return inf_norm(acc);
}

__int128 binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  __int128 r = 1;
  for (unsigned i = 1; i <= k; ++i) {
    // r * (n - k + i) is divisible by i at every step.
    __int128 next;
    if (__builtin_mul_overflow(r, static_cast<__int128>(n - k + i), &next)) {
      throw CapacityError("binomial: C(" + std::to_string(n) + "," + std::to_string(k) + ") overflows 128 bits");
    }
    r = next / i;
  }
  return r;
}

std::string to_string(__int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1 : static_cast<unsigned __int128>(v);
  std::string s;
  while (u > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

namespace {

__int128 checked_mul(__int128 a, __int128 b) {
  __int128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw CapacityError("binomial_identities: product overflows 128 bits");
  return r;
}

__int128 checked_add(__int128 a, __int128 b) {
  __int128 r;
  if (__builtin_add_overflow(a, b, &r)) throw CapacityError("binomial_identities: sum overflows 128 bits");
  return r;
}

}  // namespace

BinomialReport binomial_identities(unsigned max_b) {
  if (max_b > 60) {
    throw CapacityError("binomial_identities: max_B = " + std::to_string(max_b) +
                        " exceeds the exact-arithmetic cap of 60");
  }
  BinomialReport report;
  report.max_b = max_b;
  auto sign = [](unsigned k) -> __int128 { return k % 2 == 0 ? 1 : -1; };

  for (unsigned b = 1; b <= max_b; ++b) {
    __int128 s = 0;
    for (unsigned k = 0; k <= b; ++k) s = checked_add(s, sign(k) * binomial(b + 1, k + 1));
    ++report.checks;
    if (s != 1) report.violations.push_back({"alternating", b, 0, to_string(s)});

    for (unsigned rho = 1; rho <= b; ++rho) {
      __int128 t = 0;
      for (unsigned k = rho; k <= b; ++k)
        t = checked_add(t, sign(k) * checked_mul(binomial(k, rho), binomial(b + 1, k + 1)));
      ++report.checks;
      if (t != sign(rho)) report.violations.push_back({"inverse_coef", b, rho, to_string(t)});
    }
  }
  for (unsigned n = 2; n <= max_b; ++n) {
    for (unsigned rho = 1; rho < n; ++rho) {
      __int128 t = 0;
      for (unsigned k = rho; k <= n; ++k)
        t = checked_add(t, sign(k) * checked_mul(binomial(k, rho), binomial(n, k)));
      ++report.checks;
      if (t != 0) report.violations.push_back({"vanishing", n, rho, to_string(t)});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

std::size_t DirectModel::weight_count() const {
  std::size_t n = 0;
  for (const auto& c : connections) n += c.weights.size();
  return n;
}

DirectModel export_direct(const SpectralParams& params, double eig_threshold) {
  params.validate();
  if (eig_threshold < 0) throw InputError("export_direct: eig_threshold must be >= 0");
  const auto& layers = params.layers;
  const std::size_t last = layers.depth();
  constexpr double kDeadBlock = 1e-12;

  const auto& out_eig = params.eig[last];
  if (eig_threshold > 0 &&
      std::all_of(out_eig.begin(), out_eig.end(), [&](double v) { return std::abs(v) < eig_threshold; })) {
    throw StructuralError("export_direct: threshold " + std::to_string(eig_threshold) +
                          " would remove the entire output layer");
  }

  // Sub-threshold hidden eigenvalues are zeroed before the bundles are built,
  // so the export reproduces the thresholded spectral model exactly.
  SpectralParams cut = params;
  for (std::size_t l = 1; l < last; ++l)
    for (double& v : cut.eig[l])
      if (std::abs(v) < eig_threshold) v = 0.0;
  const WeightBlocks w = weight_blocks(cut);

  // keep[l][n]: neuron n of layer l survives.
  std::vector<std::vector<bool>> keep(layers.count());
  for (std::size_t l = 0; l <= last; ++l) keep[l].assign(layers[l], true);

  auto restricted = [&](std::size_t i, std::size_t j) {
    std::vector<std::size_t> rows, cols;
    for (std::size_t r = 0; r < layers[i]; ++r)
      if (keep[i][r]) rows.push_back(r);
    for (std::size_t c = 0; c < layers[j]; ++c)
      if (keep[j][c]) cols.push_back(c);
    Matrix m(rows.size(), cols.size());
    const Matrix& src = w.at(i, j);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c) m(r, c) = src(rows[r], cols[c]);
    return m;
  };

  // Forward liveness: a hidden neuron carries signal only if some live
  // incoming entry reaches it.
  for (std::size_t i = 1; i < last; ++i) {
    std::vector<bool> reached(layers[i], false);
    for (std::size_t j = 0; j < i; ++j) {
      const Matrix& b = w.at(i, j);
      for (std::size_t r = 0; r < layers[i]; ++r) {
        if (reached[r]) continue;
        for (std::size_t c = 0; c < layers[j]; ++c) {
          if (keep[j][c] && std::abs(b(r, c)) >= kDeadBlock) {
            reached[r] = true;
            break;
          }
        }
      }
    }
    for (std::size_t r = 0; r < layers[i]; ++r) keep[i][r] = reached[r];
  }
  // Backward liveness: it also has to feed some surviving later neuron.
  for (std::size_t j = last - 1; j >= 1; --j) {
    std::vector<bool> used(layers[j], false);
    for (std::size_t i = j + 1; i <= last; ++i) {
      const Matrix& b = w.at(i, j);
      for (std::size_t r = 0; r < layers[i]; ++r) {
        if (!keep[i][r]) continue;
        for (std::size_t c = 0; c < layers[j]; ++c)
          if (std::abs(b(r, c)) >= kDeadBlock) used[c] = true;
      }
    }
    for (std::size_t c = 0; c < layers[j]; ++c) keep[j][c] = keep[j][c] && used[c];
  }

  DirectModel model;
  std::vector<std::size_t> slot(layers.count(), SIZE_MAX);
  for (std::size_t l = 0; l <= last; ++l) {
    DirectLayer dl;
    dl.source_layer = l;
    for (std::size_t n = 0; n < layers[l]; ++n)
      if (keep[l][n]) dl.neurons.push_back(n);
    if (dl.neurons.empty()) {
      if (l == last) throw StructuralError("export_direct: output layer lost every neuron");
      if (l == 0) throw StructuralError("export_direct: input layer is empty");
      continue;
    }
    slot[l] = model.layers.size();
    model.layers.push_back(std::move(dl));
  }
  for (std::size_t i = 1; i <= last; ++i) {
    if (slot[i] == SIZE_MAX) continue;
    for (std::size_t j = 0; j < i; ++j) {
      if (slot[j] == SIZE_MAX) continue;
      Matrix m = restricted(i, j);
      if (frobenius_norm(m) < kDeadBlock) continue;
      model.connections.push_back({slot[i], slot[j], std::move(m)});
    }
  }
  return model;
}

Matrix direct_forward(const DirectModel& model, const Matrix& x) {
  if (model.layers.empty()) throw StructuralError("direct_forward: empty model");
  const auto& input = model.layers.front();
  const std::size_t n_in = input.neurons.empty() ? 0 : input.neurons.back() + 1;
  if (x.cols() < n_in) {
    throw DimensionError("direct_forward: input has " + std::to_string(x.cols()) + " columns, model needs " +
                         std::to_string(n_in));
  }
  std::vector<Matrix> acts(model.layers.size());
  {
    Matrix a0(x.rows(), input.neurons.size());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < input.neurons.size(); ++c) a0(r, c) = x(r, input.neurons[c]);
    acts[0] = std::move(a0);
  }
  const std::size_t last = model.layers.size() - 1;
  for (std::size_t i = 1; i <= last; ++i) {
    Matrix z(x.rows(), model.layers[i].neurons.size());
    for (const auto& conn : model.connections)
      if (conn.to == i) matmul_nt_acc(acts[conn.from], conn.weights, z);
    if (i != last)
      for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
    acts[i] = std::move(z);
  }
  return acts[last];
}

}  // namespace sparcs
