#pragma once

#include <cstddef>
#include <vector>

#include "sparcs/linalg.hpp"
#include "sparcs/spectral.hpp"

namespace sparcs {

/// Per-layer pre- and post-activations for one batch (samples are rows).
/// act[0] is the input, act[B] the (linear) output.
struct ActivationTrace {
  std::vector<Matrix> pre;  // pre[0] is empty; pre[i] = sum_{k<i} act[k] W(i,k)^T
  std::vector<Matrix> act;
  WeightBlocks weights;     // bundles the pass was evaluated with

  const Matrix& output() const { return act.back(); }
  std::size_t batch_size() const { return act.front().rows(); }
};

/// d(loss)/d(params), same shapes as SpectralParams.
struct Gradients {
  std::vector<Matrix> d_phi;
  std::vector<std::vector<double>> d_eig;

  static Gradients zeros_like(const SpectralParams& params);
  Gradients& operator+=(const Gradients& o);
  /// Flattened view in (phi..., eig...) order.
  std::vector<double> flatten() const;
};

/// a_i = ReLU(sum_{k<i} W(i,k) a_k) for hidden layers, linear into the
/// output layer. Weight bundles are rebuilt from params on every call.
ActivationTrace forward(const SpectralParams& params, const Matrix& x);

/// Convenience: forward(params, x).output().
Matrix predict(const SpectralParams& params, const Matrix& x);

/// Reverse-mode gradients of a loss whose derivative w.r.t. the network
/// output is d_output (summed over the batch). Each phi block and eigenvalue
/// collects contributions from every bundle it appears in. d_eig[0] is zero
/// when the input eigenvalues are frozen.
Gradients backward(const SpectralParams& params, const ActivationTrace& trace, const Matrix& d_output);

/// Mean over batch and output columns of squared error.
double mse(const Matrix& prediction, const Matrix& target);
/// d mse / d prediction.
Matrix mse_gradient(const Matrix& prediction, const Matrix& target);

struct FiniteDifferenceResult {
  Gradients grads;
  /// Flattened indices (Gradients::flatten order) whose +/-eps perturbation
  /// changed some hidden ReLU pattern; their central difference straddles a
  /// kink and is not comparable.
  std::vector<bool> kink_excluded;
};

/// Central differences of mse(forward(params, x), y) for every scalar
/// parameter. eps must lie in [1e-7, 1e-3]. Frozen input eigenvalues get 0.
FiniteDifferenceResult finite_difference_gradients(const SpectralParams& params, const Matrix& x,
                                                   const Matrix& y, double eps);

struct GradientComparison {
  double worst_relative_error = 0.0;
  std::size_t compared = 0;
  std::size_t kink_excluded = 0;
};

/// |a - f| / max(|a|, |f|, floor) over non-kink parameters.
GradientComparison compare_gradients(const Gradients& analytic, const FiniteDifferenceResult& numeric,
                                     double floor = 1e-6);

}  // namespace sparcs
