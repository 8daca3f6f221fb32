#pragma once

// Spectral parametrization of a layered feed-forward graph.
//
// The network has B+1 layers with sizes N_0 .. N_B (0-based throughout the
// code; layer 0 is the input, layer B the output). The eigenvector matrix Phi
// is block lower-bidiagonal with identity diagonal blocks and phi[i]
// (N_{i+1} x N_i) below the diagonal. The eigenvalue matrix Lambda is
// diagonal with one vector eig[j] per layer. Every inter-layer weight bundle
// W(i, j), j < i, is a closed-form function of these blocks:
//
//   D_i    = phi[i-1] diag(eig[i-1]) - diag(eig[i]) phi[i-1]
//   W(i,j) = (-1)^(i-1-j) D_i phi[i-2] phi[i-3] ... phi[j]
//
// which equals the (i, j) block of Phi Lambda Phi^{-1}.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "sparcs/linalg.hpp"

namespace sparcs {

class Rng;

/// Layer widths (N_0, ..., N_B). At least two layers, each nonempty.
class LayerSizes {
 public:
  LayerSizes() = default;
  explicit LayerSizes(std::vector<std::size_t> sizes);
  LayerSizes(std::initializer_list<std::size_t> sizes)
      : LayerSizes(std::vector<std::size_t>(sizes)) {}

  /// Number of layers, B + 1.
  std::size_t count() const { return sizes_.size(); }
  /// B: number of eigenvector blocks (depth of the graph).
  std::size_t depth() const { return sizes_.size() - 1; }
  std::size_t operator[](std::size_t i) const { return sizes_[i]; }
  std::size_t total() const;
  /// Row/column offset of layer i in the dense (sum N_i)-sized matrices.
  std::size_t offset(std::size_t i) const;
  const std::vector<std::size_t>& values() const { return sizes_; }
  std::string to_string() const;

  friend bool operator==(const LayerSizes&, const LayerSizes&) = default;

 private:
  std::vector<std::size_t> sizes_;
};

/// The trainable state: B eigenvector blocks and B+1 eigenvalue vectors.
struct SpectralParams {
  LayerSizes layers;
  std::vector<Matrix> phi;               // phi[i]: N_{i+1} x N_i
  std::vector<std::vector<double>> eig;  // eig[j]: N_j
  bool frozen_input = true;              // eig[0] pinned to zero
  bool frozen_output = true;             // eig[B] excluded from regularization

  std::size_t depth() const { return layers.depth(); }
  /// sum N_i N_{i+1} + sum N_i
  std::size_t parameter_count() const;
  /// Throws DimensionError / InputError on broken invariants.
  void validate() const;

  friend bool operator==(const SpectralParams&, const SpectralParams&) = default;
};

/// Strictly lower block-triangular storage keyed by (i, j), j < i.
class LowerBlocks {
 public:
  LowerBlocks() = default;
  explicit LowerBlocks(const LayerSizes& layers);

  const LayerSizes& layers() const { return layers_; }
  Matrix& at(std::size_t i, std::size_t j);
  const Matrix& at(std::size_t i, std::size_t j) const;

 private:
  static std::size_t index(std::size_t i, std::size_t j) { return i * (i - 1) / 2 + j; }
  LayerSizes layers_;
  std::vector<Matrix> blocks_;
};

/// W(i, j) for every j < i.
using WeightBlocks = LowerBlocks;
/// Strictly-lower blocks S(i, j) of Phi^{-1}; the diagonal blocks are identities.
using InverseBlocks = LowerBlocks;

/// Xavier-uniform phi; eig[0..B-1] = 0, eig[B] = 1. Deterministic in seed.
SpectralParams init_perceptron(const LayerSizes& layers, std::uint64_t seed);

/// phi and eig entries uniform on [-scale, scale]; frozen_input off. For
/// identity checks and gradient tests.
SpectralParams random_params(const LayerSizes& layers, Rng& rng, double scale = 1.0);

/// Closed form: S(i,j) = (-1)^(i-j) phi[i-1] phi[i-2] ... phi[j].
InverseBlocks phi_inverse_blocks(const SpectralParams& params);

/// Dense Phi.
Matrix assemble_phi(const SpectralParams& params);

/// Dense block matrix with the given strictly-lower blocks and `diagonal`
/// (identity when true, zero otherwise) on the diagonal blocks.
Matrix assemble_lower(const LowerBlocks& blocks, bool identity_diagonal);

/// Dense Phi^{-1} = sum_{k=0}^{B} (-1)^k C(B+1, k+1) Phi^k.
Matrix phi_inverse_polynomial(const SpectralParams& params);

/// All bundles W(i, j). Eigenvalue blocks act as row/column scalings.
WeightBlocks weight_blocks(const SpectralParams& params);

/// Dense Phi Lambda Phi^{-1} (oracle; uses the polynomial inverse).
Matrix assemble_dense_adjacency(const SpectralParams& params);

/// ||(Phi - I)^power||_inf; power defaults to B+1 where it must vanish.
double nilpotency_residual(const SpectralParams& params);
double nilpotency_residual(const SpectralParams& params, std::size_t power);

/// Exact binomial coefficient; throws CapacityError on 128-bit overflow.
__int128 binomial(unsigned n, unsigned k);

struct BinomialViolation {
  std::string identity;
  unsigned n = 0;
  unsigned rho = 0;
  std::string value;  // decimal rendering of the offending sum
};

struct BinomialReport {
  unsigned max_b = 0;
  std::size_t checks = 0;
  std::vector<BinomialViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Exact-integer checks, for every B <= max_b and 1 <= rho < n <= max_b:
///   alternating:  sum_{k=0}^{B} (-1)^k C(B+1, k+1) = 1
///   vanishing:    sum_{k=rho}^{n} (-1)^k C(k, rho) C(n, k) = 0
///   inverse_coef: sum_{k=rho}^{B} (-1)^k C(k, rho) C(B+1, k+1) = (-1)^rho, rho <= B
/// max_b > 60 throws CapacityError.
BinomialReport binomial_identities(unsigned max_b);

std::string to_string(__int128 v);

// Direct-space export -------------------------------------------------------

struct DirectLayer {
  std::size_t source_layer = 0;          // index in the spectral model
  std::vector<std::size_t> neurons;      // surviving neuron indices
};

struct DirectConnection {
  std::size_t to = 0;    // index into DirectModel::layers
  std::size_t from = 0;  // index into DirectModel::layers
  Matrix weights;        // |to.neurons| x |from.neurons|
};

/// Plain layered model: every live bundle (including skips) stored explicitly.
struct DirectModel {
  std::vector<DirectLayer> layers;            // input first, output last
  std::vector<DirectConnection> connections;  // sorted by (to, from)

  std::size_t weight_count() const;
  std::size_t hidden_layer_count() const { return layers.size() - 2; }
};

/// Zeroes hidden eigenvalues with |eig| < eig_threshold, materializes the
/// weight bundles, then drops hidden neurons that no longer receive or pass
/// on signal, empty layers, and dead blocks (Frobenius < 1e-12). The result
/// computes the same function as the thresholded spectral model. Throws
/// StructuralError if the threshold would silence the whole output layer.
DirectModel export_direct(const SpectralParams& params, double eig_threshold);

/// Same update rule as the spectral forward pass, on the exported bundles.
/// x holds the full input layer (all N_0 columns).
Matrix direct_forward(const DirectModel& model, const Matrix& x);

}  // namespace sparcs
