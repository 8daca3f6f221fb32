#include "sparcs/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "sparcs/datasets.hpp"
#include "sparcs/error.hpp"
#include "sparcs/network.hpp"
#include "sparcs/rng.hpp"
#include "sparcs/training.hpp"

namespace sparcs {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

Provenance artifact_provenance(const ExperimentConfig& config) {
  return {{"version", kVersion}, {"config_hash", config.hash()}, {"seed", std::to_string(config.seed)}};
}

void write_provenance(std::ostream& os, const Provenance& provenance) {
  for (const auto& [k, v] : provenance) os << "# " << k << "=" << v << "\n";
}

void parallel_for(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, jobs);
  if (workers <= 1) {
    for (std::size_t k = 0; k < jobs; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < jobs; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next = jobs;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

std::ofstream open_artifact(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  return os;
}

std::string layers_field(const LayerSizes& l) {
  std::string s;
  for (std::size_t i = 0; i < l.count(); ++i) s += (i ? " " : "") + std::to_string(l[i]);
  return s;
}

LayerSizes random_layers(Rng& rng, std::size_t b, std::size_t max_size) {
  std::vector<std::size_t> sizes(b + 1);
  for (auto& n : sizes) n = 1 + rng.below(max_size);
  return LayerSizes(sizes);
}

// Largest |a - b| over the lower blocks, and where it happens (0-based).
struct BlockDiff {
  double value = 0.0;
  std::size_t i = 0, j = 0;
};

BlockDiff lower_block_diff(const LayerSizes& layers, const LowerBlocks& blocks, const Matrix& dense, bool strict) {
  BlockDiff worst;
  for (std::size_t i = 0; i < layers.count(); ++i) {
    for (std::size_t j = 0; j < (strict ? i : i + 1); ++j) {
      if (j == i) continue;
      const Matrix got = dense.block(layers.offset(i), layers.offset(j), layers[i], layers[j]);
      const Matrix& want = blocks.at(i, j);
      double d = 0.0;
      for (std::size_t k = 0; k < got.data().size(); ++k) d = std::max(d, std::abs(got.data()[k] - want.data()[k]));
      if (d > worst.value || std::isnan(d)) worst = {d, i, j};
    }
  }
  return worst;
}

double diagonal_block_diff(const SpectralParams& p, const Matrix& dense) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.layers.count(); ++i) {
    const std::size_t o = p.layers.offset(i);
    for (std::size_t r = 0; r < p.layers[i]; ++r)
      for (std::size_t c = 0; c < p.layers[i]; ++c) {
        const double want = r == c ? p.eig[i][r] : 0.0;
        worst = std::max(worst, std::abs(dense(o + r, o + c) - want));
      }
  }
  return worst;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

VerifyReport run_verify(const VerifyOptions& o) {
  if (o.max_b > 60 || o.binomial_max_b > 60) {
    throw CapacityError("verify: max_B = " + std::to_string(std::max(o.max_b, o.binomial_max_b)) +
                        " exceeds the exact-arithmetic cap of 60");
  }
  if (o.max_b < 1 || o.max_size < 1) throw ConfigError("verify: max_B and max_size must be >= 1");
  VerifyReport report;
  report.binomial = binomial_identities(o.binomial_max_b);
  for (const auto& v : report.binomial.violations) {
    report.failures.push_back("binomial identity '" + v.identity + "' fails at n=" + std::to_string(v.n) +
                              " rho=" + std::to_string(v.rho) + ": value " + v.value);
  }

  for (unsigned b = 1; b <= o.max_b; ++b) {
    VerifyRow row;
    row.b = b;
    for (std::size_t t = 0; t < o.trials; ++t) {
      const std::uint64_t seed = derive_seed(o.seed, b * 1000003ULL + t);
      Rng rng(seed);
      const SpectralParams p = random_params(random_layers(rng, b, o.max_size), rng);
      const std::string where =
          "B=" + std::to_string(b) + " trial=" + std::to_string(t) + " seed=" + std::to_string(seed) +
          " layers=" + p.layers.to_string();
      ++row.configs;

      const Matrix phi = assemble_phi(p);
      const Matrix poly = phi_inverse_polynomial(p);
      Matrix residual = matmul(phi, poly);
      residual -= Matrix::identity(phi.rows());
      const double inv = inf_norm(residual);
      row.inverse_residual = std::max(row.inverse_residual, inv);
      if (!(inv < o.inverse_tol)) report.failures.push_back(where + ": |Phi Phi^-1 - I|_inf = " + fmt(inv));

      InverseBlocks closed = phi_inverse_blocks(p);
      if (o.tamper) o.tamper(closed);
      const BlockDiff cf = lower_block_diff(p.layers, closed, poly, true);
      row.closed_form_diff = std::max(row.closed_form_diff, cf.value);
      if (!(cf.value < o.block_tol)) {
        report.failures.push_back(where + ": closed-form inverse block S_" + std::to_string(cf.i + 1) +
                                  std::to_string(cf.j + 1) + " differs from the polynomial inverse by " +
                                  fmt(cf.value));
      }

      const Matrix dense = assemble_dense_adjacency(p);
      const BlockDiff wd = lower_block_diff(p.layers, weight_blocks(p), dense, true);
      row.weight_block_diff = std::max(row.weight_block_diff, wd.value);
      if (!(wd.value < o.block_tol)) {
        report.failures.push_back(where + ": weight block W_" + std::to_string(wd.i + 1) + std::to_string(wd.j + 1) +
                                  " differs from the dense adjacency by " + fmt(wd.value));
      }
      const double dd = diagonal_block_diff(p, dense);
      row.diagonal_diff = std::max(row.diagonal_diff, dd);
      if (!(dd < o.diagonal_tol)) report.failures.push_back(where + ": diagonal blocks differ from diag(eig) by " + fmt(dd));

      const double nil = nilpotency_residual(p);
      row.nilpotency = std::max(row.nilpotency, nil);
      if (!(nil < o.nilpotency_tol)) report.failures.push_back(where + ": nilpotency residual " + fmt(nil));
    }
    report.rows.push_back(row);
  }
  return report;
}

void write_verify_csv(const VerifyReport& report, std::ostream& os) {
  os << "B,configs,inverse_residual,closed_form_diff,weight_block_diff,diagonal_diff,nilpotency\n";
  for (const auto& r : report.rows) {
    os << r.b << "," << r.configs << "," << fmt(r.inverse_residual) << "," << fmt(r.closed_form_diff) << ","
       << fmt(r.weight_block_diff) << "," << fmt(r.diagonal_diff) << "," << fmt(r.nilpotency) << "\n";
  }
}

GradcheckReport run_gradcheck(const GradcheckOptions& o) {
  if (o.max_b < 1 || o.max_size < 1 || o.batch < 1) throw ConfigError("gradcheck: max_B, max_size and batch must be >= 1");
  GradcheckReport report;
  for (std::size_t t = 0; t < o.trials; ++t) {
    Rng rng(derive_seed(o.seed, t));
    const std::size_t b = 1 + rng.below(o.max_b);
    const SpectralParams p = random_params(random_layers(rng, b, o.max_size), rng);
    const Matrix x = Matrix::gaussian(o.batch, p.layers[0], rng);
    const Matrix y = Matrix::gaussian(o.batch, p.layers[b], rng);

    const ActivationTrace trace = forward(p, x);
    const Gradients analytic = backward(p, trace, mse_gradient(trace.output(), y));
    const FiniteDifferenceResult numeric = finite_difference_gradients(p, x, y, o.eps);
    const GradientComparison cmp = compare_gradients(analytic, numeric);

    report.rows.push_back({t, p.layers, cmp.compared, cmp.kink_excluded, cmp.worst_relative_error});
    report.worst = std::max(report.worst, cmp.worst_relative_error);
    report.compared += cmp.compared;
    report.kink_excluded += cmp.kink_excluded;
  }
  return report;
}

void write_gradcheck_csv(const GradcheckReport& report, std::ostream& os) {
  os << "trial,layers,compared,kink_excluded,worst_relative_error\n";
  for (const auto& r : report.rows)
    os << r.trial << "," << layers_field(r.layers) << "," << r.compared << "," << r.kink_excluded << ","
       << fmt(r.worst) << "\n";
}

LayerSizes family_layers(const ExperimentConfig& c) {
  return LayerSizes({c.data.d + (c.model.bias ? 1 : 0), c.model.hidden.at(0), 1});
}

namespace {

struct TrialOutcome {
  bool failed = false;
  std::string error;
  double gamma = 0.0;
  std::vector<double> eig_norms;
};

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

std::string run_tag(double alpha, double beta, std::size_t trial) {
  return "a" + fmt(alpha) + "_b" + fmt(beta) + "_t" + std::to_string(trial);
}

}  // namespace

FamilySweepReport run_family_sweep(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  const Provenance prov = artifact_provenance(c);
  const LayerSizes layers = family_layers(c);
  const fs::path out = c.out;
  fs::create_directories(out / "runs");
  fs::create_directories(out / "data");

  // One dataset per (alpha, beta), shared by all trials at that point.
  struct Point {
    double alpha, beta;
    Dataset data;
  };
  std::vector<Point> grid;
  for (double beta : c.data.betas) {
    for (double alpha : c.data.alphas) {
      FamilyParams fp;
      fp.alpha = alpha;
      fp.beta = beta;
      fp.d = c.data.d;
      Dataset ds = gen_family(fp, c.data.n, c.data.seed);
      Provenance dp = prov;
      dp.insert(dp.end(), ds.provenance.begin(), ds.provenance.end());
      ds.provenance = dp;
      auto os = open_artifact(out / "data" / family_file_name(alpha, beta, c.data.seed));
      write_csv(ds, os);
      if (c.model.bias) ds.x = with_ones_column(ds.x);
      grid.push_back({alpha, beta, std::move(ds)});
    }
  }

  const std::size_t trials = c.data.trials;
  std::vector<TrialOutcome> outcomes(grid.size() * trials);
  std::mutex log_mutex;
  log << "family sweep: " << grid.size() << " datasets x " << trials << " trials, layers " << layers.to_string()
      << "\n";

  parallel_for(outcomes.size(), c.parallel, [&](std::size_t job) {
    const Point& pt = grid[job / trials];
    const std::size_t trial = job % trials;
    SpectralParams init = init_perceptron(layers, c.seed + trial);
    init.frozen_input = c.model.freeze_input;
    TrainConfig tc = c.train;
    tc.seed = c.train.seed + trial;
    TrialOutcome& res = outcomes[job];
    const std::string tag = run_tag(pt.alpha, pt.beta, trial);
    try {
      TrainResult r = train(std::move(init), pt.data, tc);
      res.gamma = frobenius_norm(gamma_tensor(r.params));
      for (const auto& e : r.params.eig) res.eig_norms.push_back(frobenius_norm(e));
      auto os = open_artifact(out / "runs" / ("history_" + tag + ".csv"));
      write_provenance(os, prov);
      r.history.write_csv(os);
    } catch (const TrainingError& e) {
      res.failed = true;
      res.error = e.what();
      std::lock_guard lock(log_mutex);
      log << "trial " << tag << " failed: " << e.what() << "\n";
    }
  });

  FamilySweepReport report;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    FamilyPoint fp;
    fp.alpha = grid[g].alpha;
    fp.beta = grid[g].beta;
    std::vector<double> gammas;
    std::vector<std::vector<double>> norms(layers.count());
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& o = outcomes[g * trials + t];
      if (o.failed) {
        ++fp.failed;
        continue;
      }
      gammas.push_back(o.gamma);
      for (std::size_t j = 0; j < layers.count(); ++j) norms[j].push_back(o.eig_norms[j]);
    }
    fp.trials = gammas.size();
    std::tie(fp.gamma_mean, fp.gamma_std) = mean_std(gammas);
    for (const auto& n : norms) {
      const auto [m, s] = mean_std(n);
      fp.eig_norm_mean.push_back(m);
      fp.eig_norm_std.push_back(s);
    }
    report.points.push_back(std::move(fp));
  }
  for (double beta : c.data.betas) {
    double peak = 0.0;
    for (const auto& p : report.points)
      if (p.beta == beta) peak = std::max(peak, p.gamma_mean);
    for (auto& p : report.points) {
      if (p.beta != beta) continue;
      p.norm_mean = peak > 0.0 ? p.gamma_mean / peak : 0.0;
      p.norm_std = peak > 0.0 ? p.gamma_std / peak : 0.0;
    }
  }

  {
    const fs::path path = out / "gamma_vs_alpha.csv";
    auto os = open_artifact(path);
    write_provenance(os, prov);
    os << "alpha,beta,mean,std,raw_mean,raw_std,trials,failed\n";
    for (const auto& p : report.points)
      os << fmt(p.alpha) << "," << fmt(p.beta) << "," << fmt(p.norm_mean) << "," << fmt(p.norm_std) << ","
         << fmt(p.gamma_mean) << "," << fmt(p.gamma_std) << "," << p.trials << "," << p.failed << "\n";
    report.artifacts.push_back(path);
  }
  {
    const fs::path path = out / "eig_norm_vs_alpha.csv";
    auto os = open_artifact(path);
    write_provenance(os, prov);
    os << "alpha,beta,layer,mean,std\n";
    for (const auto& p : report.points)
      for (std::size_t j = 0; j < p.eig_norm_mean.size(); ++j)
        os << fmt(p.alpha) << "," << fmt(p.beta) << "," << j + 1 << "," << fmt(p.eig_norm_mean[j]) << ","
           << fmt(p.eig_norm_std[j]) << "\n";
    report.artifacts.push_back(path);
  }
  {
    ordered_json j;
    j["provenance"] = ordered_json::object();
    for (const auto& [k, v] : prov) j["provenance"][k] = v;
    j["config"] = ordered_json::parse(c.canonical_json());
    j["layers"] = layers.values();
    ordered_json failures = ordered_json::array();
    for (std::size_t g = 0; g < grid.size(); ++g)
      for (std::size_t t = 0; t < trials; ++t)
        if (outcomes[g * trials + t].failed)
          failures.push_back({{"run", run_tag(grid[g].alpha, grid[g].beta, t)}, {"error", outcomes[g * trials + t].error}});
    j["failed_trials"] = failures;
    const fs::path path = out / "summary.json";
    auto os = open_artifact(path);
    os << j.dump(1) << "\n";
    report.artifacts.push_back(path);
  }
  return report;
}

LayerSizes teacher_layers(const ExperimentConfig& c) {
  std::vector<std::size_t> sizes{c.data.d};
  sizes.insert(sizes.end(), c.model.hidden.begin(), c.model.hidden.end());
  sizes.push_back(c.data.d);
  return LayerSizes(sizes);
}

TeacherStudentReport run_teacher_student(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  const Provenance prov = artifact_provenance(c);
  const LayerSizes layers = teacher_layers(c);
  if (layers.count() < 4) throw ConfigError("teacher_student needs at least two hidden layers");
  const fs::path out = c.out;
  fs::create_directories(out);
  TeacherStudentReport rep;

  auto [data, teacher] = gen_teacher(c.data.d, c.data.teacher_hidden, c.data.n, c.data.seed);
  {
    Dataset ds = data;
    Provenance dp = prov;
    dp.insert(dp.end(), ds.provenance.begin(), ds.provenance.end());
    ds.provenance = dp;
    const fs::path path = out / "data" / teacher_file_name(c.data.d, c.data.seed);
    auto os = open_artifact(path);
    write_csv(ds, os);
    rep.artifacts.push_back(path);
  }

  log << "teacher-student: layers " << layers.to_string() << ", " << data.size() << " samples, " << c.train.epochs
      << " epochs\n";
  SpectralParams init = init_perceptron(layers, c.seed);
  init.frozen_input = true;
  TrainResult trained = train(std::move(init), data, c.train);
  rep.trained = trained.params;
  const auto [train_set, val_set] = split_dataset(data, c.train.validation_fraction, c.train.seed);

  {
    const fs::path path = out / "history.csv";
    auto os = open_artifact(path);
    write_provenance(os, prov);
    trained.history.write_csv(os);
    rep.artifacts.push_back(path);
  }
  save_checkpoint(rep.trained, out / "trained.ckpt", prov);
  rep.artifacts.push_back(out / "trained.ckpt");

  for (const auto& e : rep.trained.eig) rep.eig_mean_abs.push_back(summarize_eig(e).mean_abs);
  rep.first_hidden_mean_abs = rep.eig_mean_abs[1];
  rep.second_hidden_top_half = top_half_mean_abs(rep.trained.eig[2]);
  rep.separation_ratio =
      rep.second_hidden_top_half > 0.0 ? rep.first_hidden_mean_abs / rep.second_hidden_top_half : INFINITY;

  for (std::size_t j = 1; j < layers.depth(); ++j) {
    const Histogram h = eigenvalue_histogram(rep.trained, j, c.prune.histogram_bins);
    const fs::path path = out / ("hist_eig" + std::to_string(j + 1) + ".csv");
    auto os = open_artifact(path);
    write_provenance(os, prov);
    os << "bin,lo,hi,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b)
      os << b << "," << fmt(h.edges[b]) << "," << fmt(h.edges[b + 1]) << "," << h.counts[b] << "\n";
    rep.artifacts.push_back(path);
  }

  PruneResult pr = spectral_prune(rep.trained, val_set.x, val_set.y, c.prune.threshold_pct);
  rep.pruned = std::move(pr.params);
  rep.curve = std::move(pr.curve);
  {
    const fs::path path = out / "pruning_curve.csv";
    auto os = open_artifact(path);
    write_provenance(os, prov);
    rep.curve.write_csv(os);
    rep.artifacts.push_back(path);
  }
  save_checkpoint(rep.pruned, out / "pruned.ckpt", prov);
  rep.artifacts.push_back(out / "pruned.ckpt");

  for (auto n : active_hidden_neurons(rep.trained)) rep.active_before += n;
  rep.active_per_layer = active_hidden_neurons(rep.pruned);
  for (auto n : rep.active_per_layer) rep.active_after += n;
  rep.r2_trained = r2_score(val_set.y, predict(rep.trained, val_set.x));
  rep.r2_pruned = r2_score(val_set.y, predict(rep.pruned, val_set.x));
  rep.r2_ols = ols_baseline_r2(train_set.x, train_set.y, val_set.x, val_set.y);

  {
    ordered_json j;
    j["provenance"] = ordered_json::object();
    for (const auto& [k, v] : prov) j["provenance"][k] = v;
    j["config"] = ordered_json::parse(c.canonical_json());
    j["layers"] = layers.values();
    j["eig_mean_abs"] = rep.eig_mean_abs;
    j["first_hidden_mean_abs"] = rep.first_hidden_mean_abs;
    j["second_hidden_top_half_mean_abs"] = rep.second_hidden_top_half;
    j["separation_ratio"] = rep.separation_ratio;
    j["r2_trained"] = rep.r2_trained;
    j["r2_pruned"] = rep.r2_pruned;
    j["r2_ols"] = rep.r2_ols;
    j["active_before"] = rep.active_before;
    j["active_after"] = rep.active_after;
    j["active_per_layer"] = rep.active_per_layer;
    std::vector<std::size_t> removable;
    for (auto l : rep.curve.removable_layers) removable.push_back(l + 1);
    j["removable_layers"] = removable;
    j["correspondence_warning"] = rep.curve.correspondence_warning;
    j["validation_base_mse"] = rep.curve.base_loss;
    const fs::path path = out / "summary.json";
    auto os = open_artifact(path);
    os << j.dump(1) << "\n";
    rep.artifacts.push_back(path);
  }
  return rep;
}

std::vector<LayerSizes> paramcount_layers(const ExperimentConfig& c) {
  std::vector<LayerSizes> configs;
  for (auto w : c.paramcount.widths)
    for (std::size_t l = c.paramcount.min_layers; l <= c.paramcount.max_layers; ++l)
      configs.emplace_back(std::vector<std::size_t>(l, w));
  for (const auto& custom : c.paramcount.custom) configs.emplace_back(custom);
  return configs;
}

std::vector<ParamCountRow> run_paramcount(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  const auto rows = param_count_comparison(paramcount_layers(c));
  auto os = open_artifact(fs::path(c.out) / "paramcount.csv");
  write_provenance(os, artifact_provenance(c));
  write_param_count_csv(rows, os);
  write_param_count_csv(rows, log);
  return rows;
}

DirectModel run_export(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  const SpectralParams p = load_checkpoint(c.exportsec.checkpoint);
  DirectModel model = export_direct(p, c.exportsec.eig_threshold);
  Provenance prov = artifact_provenance(c);
  prov.emplace_back("checkpoint", c.exportsec.checkpoint);
  prov.emplace_back("eig_threshold", fmt(c.exportsec.eig_threshold));
  auto os = open_artifact(fs::path(c.out) / "direct_model.json");
  os << direct_model_json(model, prov);
  log << "exported " << model.connections.size() << " connection blocks, " << model.weight_count() << " weights\n";
  return model;
}

}  // namespace sparcs
