#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sparcs/datasets.hpp"
#include "sparcs/network.hpp"
#include "sparcs/spectral.hpp"

namespace sparcs {

enum class RegType { L1, L2 };

std::string to_string(RegType r);
RegType parse_reg_type(const std::string& s);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 100;
  std::size_t epochs = 300;
  RegType reg_type = RegType::L2;
  double reg_strength = 1e-4;  // rho
  std::uint64_t seed = 42;     // split + shuffling
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double validation_fraction = 0.2;

  void validate() const;
};

struct LossBreakdown {
  double data = 0.0;         // MSE
  double regularizer = 0.0;  // Omega, before multiplying by rho
  double total = 0.0;        // data + rho * Omega
};

/// Omega over the hidden eigenvalues eig[1..B-1] only.
double regularizer(const SpectralParams& params, RegType type);
/// d Omega / d eig for hidden layers (zero elsewhere; sign(0) = 0 for L1).
void add_regularizer_gradient(const SpectralParams& params, RegType type, double strength, Gradients& g);

LossBreakdown loss_total(const SpectralParams& params, const Matrix& x, const Matrix& y, const TrainConfig& config);

/// Adam moments, shaped like the parameters.
struct AdamState {
  Gradients m;
  Gradients v;
  std::uint64_t step = 0;

  static AdamState for_params(const SpectralParams& params);
};

/// One bias-corrected Adam update in place. Frozen input eigenvalues never move.
void adam_step(AdamState& state, SpectralParams& params, const Gradients& grads, const TrainConfig& config);

struct LayerEigSummary {
  double mean_abs = 0.0;
  double max_abs = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_loss;
  double regularizer = 0.0;
  std::vector<LayerEigSummary> eig;  // one per layer
  std::optional<double> gamma_norm;  // three-layer models only
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  void write_csv(std::ostream& os) const;
};

LayerEigSummary summarize_eig(const std::vector<double>& e);

struct TrainResult {
  SpectralParams params;
  TrainHistory history;
};

/// Seeded split into train / validation rows, then per-epoch shuffled
/// minibatch Adam. Throws TrainingError naming the epoch and batch on a
/// non-finite loss.
TrainResult train(SpectralParams params, const Dataset& data, const TrainConfig& config);

/// Deterministic split used by train(): (train, validation).
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double validation_fraction, std::uint64_t seed);

}  // namespace sparcs
