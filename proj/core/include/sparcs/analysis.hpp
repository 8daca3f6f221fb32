#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "sparcs/linalg.hpp"
#include "sparcs/spectral.hpp"

namespace sparcs {

/// Path strengths of a three-layer model, gamma[i][j][k] = W(2,1)_ij * W(1,0)_jk
/// with no summation over j. Flattened row-major as N_2 x N_1 x N_0.
/// StructuralError unless the model has exactly three layers.
std::vector<double> gamma_tensor(const SpectralParams& params);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges over [0, max]
  std::vector<std::size_t> counts;
};

/// Histogram of |eig[layer]|. When every value is zero the range collapses
/// to [0, 1] so the spike lands in the first bin.
Histogram eigenvalue_histogram(const SpectralParams& params, std::size_t layer, std::size_t bins);

/// Mean of the larger half (ceil(n/2) entries) of |values|.
double top_half_mean_abs(const std::vector<double>& values);

struct PruningPoint {
  std::size_t active = 0;        // hidden neurons whose eigenvalue is still in place
  double relative_increase = 0;  // (L - L0) / L0 on the validation set
  std::size_t layer = 0;         // neuron removed to reach this point (unset for the first point)
  std::size_t neuron = 0;
  double eigenvalue = 0.0;
};

struct PruningCurve {
  std::vector<PruningPoint> points;  // first point is the unpruned model
  double base_loss = 0.0;
  double threshold = 0.0;            // fraction, e.g. 0.05
  std::size_t selected = 0;          // index into points
  /// true when the eigenvalue-to-neuron correspondence is not guaranteed:
  /// it needs zero input eigenvalues and at most one hidden layer left active.
  bool correspondence_warning = false;
  std::vector<std::size_t> removable_layers;  // hidden layers with every eigenvalue zeroed

  void write_csv(std::ostream& os) const;
};

struct PruneResult {
  SpectralParams params;
  PruningCurve curve;
};

/// Zeroes hidden eigenvalues one at a time in ascending |value| order,
/// recording the relative validation-MSE increase after each removal, and
/// keeps the smallest active count whose increase stays <= loss_threshold_pct
/// percent. InputError on an empty validation set or a non-positive threshold.
PruneResult spectral_prune(const SpectralParams& params, const Matrix& val_x, const Matrix& val_y,
                           double loss_threshold_pct);

/// Number of hidden neurons with a nonzero eigenvalue, per hidden layer.
std::vector<std::size_t> active_hidden_neurons(const SpectralParams& params);

struct ParamCountRow {
  LayerSizes layers;
  unsigned __int128 spectral = 0;  // sum N_i N_{i+1} + sum N_i
  unsigned __int128 direct = 0;    // sum_{j<i} N_i N_j
  std::string spectral_expr;
  std::string direct_expr;
};

std::vector<ParamCountRow> param_count_comparison(const std::vector<LayerSizes>& configs);
void write_param_count_csv(const std::vector<ParamCountRow>& rows, std::ostream& os);

/// 1 - SS_res / SS_tot per output column, averaged over columns.
/// DegeneracyError if some target column has zero variance.
double r2_score(const Matrix& y_true, const Matrix& y_pred);

/// R^2 of an intercept + linear least-squares fit trained on (train_x,
/// train_y) and evaluated on (test_x, test_y).
double ols_baseline_r2(const Matrix& train_x, const Matrix& train_y, const Matrix& test_x, const Matrix& test_y);

}  // namespace sparcs
