#include "sparcs/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparcs/analysis.hpp"
#include "sparcs/error.hpp"
#include "sparcs/rng.hpp"

namespace sparcs {

std::string to_string(RegType r) { return r == RegType::L1 ? "L1" : "L2"; }

RegType parse_reg_type(const std::string& s) {
  if (s == "L1" || s == "l1") return RegType::L1;
  if (s == "L2" || s == "l2") return RegType::L2;
  throw ConfigError("unknown regularization type '" + s + "' (expected L1 or L2)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(reg_strength >= 0.0)) throw ConfigError("reg_strength must be >= 0");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam epsilon must be > 0");
}

double regularizer(const SpectralParams& params, RegType type) {
  double s = 0.0;
  for (std::size_t j = 1; j < params.depth(); ++j)
    for (double v : params.eig[j]) s += type == RegType::L1 ? std::abs(v) : v * v;
  return s;
}

void add_regularizer_gradient(const SpectralParams& params, RegType type, double strength, Gradients& g) {
  if (strength == 0.0) return;
  for (std::size_t j = 1; j < params.depth(); ++j) {
    for (std::size_t k = 0; k < params.eig[j].size(); ++k) {
      const double v = params.eig[j][k];
      const double d = type == RegType::L1 ? (v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0)) : 2.0 * v;
      g.d_eig[j][k] += strength * d;
    }
  }
}

LossBreakdown loss_total(const SpectralParams& params, const Matrix& x, const Matrix& y, const TrainConfig& config) {
  LossBreakdown b;
  b.data = mse(predict(params, x), y);
  b.regularizer = regularizer(params, config.reg_type);
  b.total = config.reg_strength == 0.0 ? b.data : b.data + config.reg_strength * b.regularizer;
  return b;
}

AdamState AdamState::for_params(const SpectralParams& params) {
  return AdamState{Gradients::zeros_like(params), Gradients::zeros_like(params), 0};
}

namespace {

void adam_update(std::span<double> theta, std::span<double> m, std::span<double> v, std::span<const double> g,
                 const TrainConfig& c, double bc1, double bc2) {
  for (std::size_t k = 0; k < theta.size(); ++k) {
    m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
    v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
    const double mhat = m[k] / bc1;
    const double vhat = v[k] / bc2;
    theta[k] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.adam_eps);
  }
}

}  // namespace

void adam_step(AdamState& state, SpectralParams& params, const Gradients& grads, const TrainConfig& config) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.phi.size(); ++i)
    adam_update(params.phi[i].data(), state.m.d_phi[i].data(), state.v.d_phi[i].data(), grads.d_phi[i].data(), config,
                bc1, bc2);
  for (std::size_t j = 0; j < params.eig.size(); ++j) {
    if (j == 0 && params.frozen_input) continue;
    adam_update(params.eig[j], state.m.d_eig[j], state.v.d_eig[j], grads.d_eig[j], config, bc1, bc2);
  }
}

LayerEigSummary summarize_eig(const std::vector<double>& e) {
  LayerEigSummary s;
  for (double v : e) {
    s.mean_abs += std::abs(v);
    s.max_abs = std::max(s.max_abs, std::abs(v));
  }
  if (!e.empty()) s.mean_abs /= static_cast<double>(e.size());
  return s;
}

void TrainHistory::write_csv(std::ostream& os) const {
  const std::size_t layers = epochs.empty() ? 0 : epochs.front().eig.size();
  os << "epoch,train_loss,val_loss,regularizer";
  for (std::size_t j = 0; j < layers; ++j) os << ",eig" << j + 1 << "_mean_abs,eig" << j + 1 << "_max_abs";
  os << ",gamma_norm\n";
  for (const auto& r : epochs) {
    os << r.epoch << "," << format_double(r.train_loss) << "," << (r.val_loss ? format_double(*r.val_loss) : "")
       << "," << format_double(r.regularizer);
    for (const auto& s : r.eig) os << "," << format_double(s.mean_abs) << "," << format_double(s.max_abs);
    os << "," << (r.gamma_norm ? format_double(*r.gamma_norm) : "") << "\n";
  }
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double validation_fraction, std::uint64_t seed) {
  data.validate();
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5EED5917));
  rng.shuffle(idx);
  const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(data.size())));
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  return {data.subset(tr), data.subset(val)};
}

TrainResult train(SpectralParams params, const Dataset& data, const TrainConfig& config) {
  config.validate();
  params.validate();
  data.validate();
  if (data.size() == 0) throw InputError("train: empty dataset");
  if (data.x.cols() != params.layers[0] || data.y.cols() != params.layers[params.depth()]) {
    throw DimensionError("train: dataset " + data.x.shape_string() + " -> " + data.y.shape_string() +
                         " does not match layers " + params.layers.to_string());
  }
  auto [tr, val] = split_dataset(data, config.validation_fraction, config.seed);
  if (tr.size() == 0) throw InputError("train: validation split left no training rows");

  Rng rng(derive_seed(config.seed, 0xBA7C4));
  AdamState adam = AdamState::for_params(params);
  TrainResult result;
  std::vector<std::size_t> order(tr.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const Matrix bx = tr.x.select_rows(rows);
      const Matrix by = tr.y.select_rows(rows);
      const ActivationTrace trace = forward(params, bx);
      const double loss = mse(trace.output(), by);
      if (!std::isfinite(loss)) {
        throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_no));
      }
      Gradients g = backward(params, trace, mse_gradient(trace.output(), by));
      add_regularizer_gradient(params, config.reg_type, config.reg_strength, g);
      adam_step(adam, params, g, config);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = mse(predict(params, tr.x), tr.y);
    if (!std::isfinite(rec.train_loss)) {
      throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) + " (end-of-epoch evaluation)");
    }
    if (val.size() > 0) rec.val_loss = mse(predict(params, val.x), val.y);
    rec.regularizer = regularizer(params, config.reg_type);
    for (const auto& e : params.eig) rec.eig.push_back(summarize_eig(e));
    if (params.depth() == 2) rec.gamma_norm = frobenius_norm(gamma_tensor(params));
    result.history.epochs.push_back(std::move(rec));
  }
  result.params = std::move(params);
  return result;
}

}  // namespace sparcs
