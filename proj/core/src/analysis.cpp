#include "sparcs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sparcs/datasets.hpp"
#include "sparcs/error.hpp"
#include "sparcs/network.hpp"

namespace sparcs {

std::vector<double> gamma_tensor(const SpectralParams& params) {
  if (params.layers.count() != 3) {
    throw StructuralError("gamma_tensor: needs a three-layer model, got layers " + params.layers.to_string());
  }
  const WeightBlocks w = weight_blocks(params);
  const Matrix& out = w.at(2, 1);  // N_2 x N_1
  const Matrix& in = w.at(1, 0);   // N_1 x N_0
  const std::size_t n2 = out.rows(), n1 = out.cols(), n0 = in.cols();
  std::vector<double> g(n2 * n1 * n0);
  for (std::size_t i = 0; i < n2; ++i)
    for (std::size_t j = 0; j < n1; ++j)
      for (std::size_t k = 0; k < n0; ++k) g[(i * n1 + j) * n0 + k] = out(i, j) * in(j, k);
  return g;
}

Histogram eigenvalue_histogram(const SpectralParams& params, std::size_t layer, std::size_t bins) {
  if (layer >= params.eig.size()) throw InputError("eigenvalue_histogram: no layer " + std::to_string(layer));
  if (bins == 0) throw InputError("eigenvalue_histogram: bins must be positive");
  const auto& e = params.eig[layer];
  double hi = 0.0;
  for (double v : e) hi = std::max(hi, std::abs(v));
  if (hi == 0.0) hi = 1.0;
  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(hi * static_cast<double>(b) / static_cast<double>(bins));
  for (double v : e) {
    auto b = static_cast<std::size_t>(std::abs(v) / hi * static_cast<double>(bins));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

double top_half_mean_abs(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  std::vector<double> a;
  a.reserve(values.size());
  for (double v : values) a.push_back(std::abs(v));
  std::sort(a.begin(), a.end(), std::greater<>());
  const std::size_t k = (a.size() + 1) / 2;
  return std::accumulate(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / static_cast<double>(k);
}

std::vector<std::size_t> active_hidden_neurons(const SpectralParams& params) {
  std::vector<std::size_t> out;
  for (std::size_t j = 1; j < params.depth(); ++j)
    out.push_back(static_cast<std::size_t>(
        std::count_if(params.eig[j].begin(), params.eig[j].end(), [](double v) { return v != 0.0; })));
  return out;
}

void PruningCurve::write_csv(std::ostream& os) const {
  os << "active,relative_increase,removed_layer,removed_neuron,removed_eigenvalue,selected\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    os << p.active << "," << format_double(p.relative_increase) << ",";
    if (k == 0) {
      os << ",,";
    } else {
      os << p.layer + 1 << "," << p.neuron << "," << format_double(p.eigenvalue);
    }
    os << "," << (k == selected ? 1 : 0) << "\n";
  }
}

PruneResult spectral_prune(const SpectralParams& params, const Matrix& val_x, const Matrix& val_y,
                           double loss_threshold_pct) {
  if (val_x.rows() == 0) throw InputError("spectral_prune: empty validation set");
  if (!(loss_threshold_pct > 0.0)) throw InputError("spectral_prune: threshold must be positive");
  params.validate();

  struct Candidate {
    std::size_t layer, neuron;
    double value;
  };
  std::vector<Candidate> order;
  for (std::size_t j = 1; j < params.depth(); ++j)
    for (std::size_t n = 0; n < params.eig[j].size(); ++n) order.push_back({j, n, params.eig[j][n]});
  std::stable_sort(order.begin(), order.end(),
                   [](const Candidate& a, const Candidate& b) { return std::abs(a.value) < std::abs(b.value); });

  PruningCurve curve;
  curve.threshold = loss_threshold_pct / 100.0;
  curve.base_loss = mse(predict(params, val_x), val_y);
  auto relative = [&](double loss) {
    if (curve.base_loss > 0.0) return (loss - curve.base_loss) / curve.base_loss;
    return loss == curve.base_loss ? 0.0 : std::numeric_limits<double>::infinity();
  };

  curve.points.push_back({order.size(), 0.0, 0, 0, 0.0});
  SpectralParams work = params;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& c = order[k];
    work.eig[c.layer][c.neuron] = 0.0;
    const double loss = mse(predict(work, val_x), val_y);
    curve.points.push_back({order.size() - k - 1, relative(loss), c.layer, c.neuron, c.value});
  }
  // Smallest active count whose increase is within the threshold.
  curve.selected = 0;
  for (std::size_t k = 0; k < curve.points.size(); ++k)
    if (curve.points[k].relative_increase <= curve.threshold) curve.selected = k;

  PruneResult result{params, {}};
  for (std::size_t k = 0; k < curve.selected; ++k) result.params.eig[order[k].layer][order[k].neuron] = 0.0;

  std::size_t live_hidden_layers = 0;
  for (std::size_t j = 1; j < result.params.depth(); ++j) {
    const auto& e = result.params.eig[j];
    if (std::all_of(e.begin(), e.end(), [](double v) { return v == 0.0; })) {
      curve.removable_layers.push_back(j);
    } else {
      ++live_hidden_layers;
    }
  }
  const auto& in = result.params.eig[0];
  const bool input_zero = std::all_of(in.begin(), in.end(), [](double v) { return v == 0.0; });
  curve.correspondence_warning = !(input_zero && live_hidden_layers <= 1);
  result.curve = std::move(curve);
  return result;
}

namespace {

std::string join_terms(const std::vector<std::string>& terms) {
  std::string s;
  for (std::size_t k = 0; k < terms.size(); ++k) s += (k ? " + " : "") + terms[k];
  return s;
}

std::string u128_string(unsigned __int128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return {s.rbegin(), s.rend()};
}

}  // namespace

std::vector<ParamCountRow> param_count_comparison(const std::vector<LayerSizes>& configs) {
  std::vector<ParamCountRow> rows;
  for (const auto& layers : configs) {
    ParamCountRow row;
    row.layers = layers;
    std::vector<std::string> prod_terms, eig_terms, direct_terms;
    for (std::size_t i = 0; i + 1 < layers.count(); ++i) {
      row.spectral += static_cast<unsigned __int128>(layers[i]) * layers[i + 1];
      prod_terms.push_back(std::to_string(layers[i]) + "*" + std::to_string(layers[i + 1]));
    }
    for (std::size_t i = 0; i < layers.count(); ++i) {
      row.spectral += layers[i];
      eig_terms.push_back(std::to_string(layers[i]));
    }
    for (std::size_t i = 1; i < layers.count(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        row.direct += static_cast<unsigned __int128>(layers[i]) * layers[j];
        direct_terms.push_back(std::to_string(layers[i]) + "*" + std::to_string(layers[j]));
      }
    }
    row.spectral_expr = "(" + join_terms(prod_terms) + ") + (" + join_terms(eig_terms) + ")";
    row.direct_expr = join_terms(direct_terms);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_param_count_csv(const std::vector<ParamCountRow>& rows, std::ostream& os) {
  os << "layers,sizes,spectral,direct,spectral_expr,direct_expr\n";
  for (const auto& r : rows) {
    std::string sizes;
    for (std::size_t i = 0; i < r.layers.count(); ++i) sizes += (i ? " " : "") + std::to_string(r.layers[i]);
    os << r.layers.count() << "," << sizes << "," << u128_string(r.spectral) << "," << u128_string(r.direct) << ",\""
       << r.spectral_expr << "\",\"" << r.direct_expr << "\"\n";
  }
}

double r2_score(const Matrix& y_true, const Matrix& y_pred) {
  if (y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols()) {
    throw DimensionError("r2_score: " + y_true.shape_string() + " vs " + y_pred.shape_string());
  }
  if (y_true.rows() < 2) throw InputError("r2_score: need at least two samples");
  const std::size_t n = y_true.rows(), m = y_true.cols();
  double total = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += y_true(r, c);
    mean /= static_cast<double>(n);
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      ss_tot += (y_true(r, c) - mean) * (y_true(r, c) - mean);
      ss_res += (y_true(r, c) - y_pred(r, c)) * (y_true(r, c) - y_pred(r, c));
    }
    if (ss_tot == 0.0) throw DegeneracyError("r2_score: target column " + std::to_string(c) + " has zero variance");
    total += 1.0 - ss_res / ss_tot;
  }
  return total / static_cast<double>(m);
}

double ols_baseline_r2(const Matrix& train_x, const Matrix& train_y, const Matrix& test_x, const Matrix& test_y) {
  const Matrix beta = least_squares(with_ones_column(train_x), train_y);
  return r2_score(test_y, matmul(with_ones_column(test_x), beta));
}

}  // namespace sparcs
