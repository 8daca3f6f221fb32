#pragma once

// Experiment drivers behind the `sparcs` subcommands. Each driver writes its
// artifacts under an output directory and returns a structured report; the
// command-line tool only maps reports to exit codes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparcs/analysis.hpp"
#include "sparcs/checkpoint.hpp"
#include "sparcs/config.hpp"
#include "sparcs/spectral.hpp"

namespace sparcs {

/// `version`, `config_hash`, `seed` lines shared by every artifact.
Provenance artifact_provenance(const ExperimentConfig& config);
void write_provenance(std::ostream& os, const Provenance& provenance);

/// Runs fn(0..jobs-1) on at most `workers` threads (0 = hardware concurrency).
/// The first exception thrown by any job is rethrown after all threads join.
void parallel_for(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& fn);

// ---- verify ----

struct VerifyOptions {
  unsigned max_b = 6;
  std::size_t trials = 100;
  std::size_t max_size = 8;
  unsigned binomial_max_b = 25;
  std::uint64_t seed = 0;
  double inverse_tol = 1e-10;
  double block_tol = 1e-10;
  double diagonal_tol = 1e-12;
  double nilpotency_tol = 1e-9;
  /// Test hook: edits the closed-form inverse blocks before they are compared.
  std::function<void(InverseBlocks&)> tamper;
};

struct VerifyRow {
  unsigned b = 0;
  std::size_t configs = 0;
  double inverse_residual = 0.0;   // max |Phi Phi^-1 - I|_inf
  double closed_form_diff = 0.0;   // max |closed form - polynomial|
  double weight_block_diff = 0.0;  // max |W(i,j) - dense block|
  double diagonal_diff = 0.0;      // max |dense diagonal block - diag(eig)|
  double nilpotency = 0.0;         // max |(Phi - I)^(B+1)|_inf
};

struct VerifyReport {
  std::vector<VerifyRow> rows;
  BinomialReport binomial;
  std::vector<std::string> failures;  // one line per failing case with its parameters
  bool passed() const { return failures.empty(); }
};

/// CapacityError if either bound exceeds the exact-arithmetic cap of 60.
VerifyReport run_verify(const VerifyOptions& options);
void write_verify_csv(const VerifyReport& report, std::ostream& os);

// ---- gradcheck ----

struct GradcheckOptions {
  std::size_t trials = 50;
  std::size_t max_b = 3;
  std::size_t max_size = 5;
  double eps = 1e-5;
  std::size_t batch = 6;
  std::uint64_t seed = 0;
};

struct GradcheckRow {
  std::size_t trial = 0;
  LayerSizes layers;
  std::size_t compared = 0;
  std::size_t kink_excluded = 0;
  double worst = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckRow> rows;
  double worst = 0.0;
  std::size_t compared = 0;
  std::size_t kink_excluded = 0;
};

GradcheckReport run_gradcheck(const GradcheckOptions& options);
void write_gradcheck_csv(const GradcheckReport& report, std::ostream& os);

// ---- family sweep ----

struct FamilyPoint {
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t trials = 0;  // finished trials
  std::size_t failed = 0;  // trials stopped by a non-finite loss
  double gamma_mean = 0.0;
  double gamma_std = 0.0;
  double norm_mean = 0.0;  // gamma_mean / max over the alpha grid at this beta
  double norm_std = 0.0;
  std::vector<double> eig_norm_mean;  // per layer, ||eig[j]||_2
  std::vector<double> eig_norm_std;
};

struct FamilySweepReport {
  std::vector<FamilyPoint> points;  // betas outer, alphas inner (config order)
  std::vector<std::filesystem::path> artifacts;
};

/// Layers (d + bias, hidden, 1).
LayerSizes family_layers(const ExperimentConfig& config);
FamilySweepReport run_family_sweep(const ExperimentConfig& config, std::ostream& log);

// ---- teacher-student ----

struct TeacherStudentReport {
  SpectralParams trained;
  SpectralParams pruned;
  PruningCurve curve;
  std::vector<double> eig_mean_abs;  // per layer
  double first_hidden_mean_abs = 0.0;
  double second_hidden_top_half = 0.0;
  double separation_ratio = 0.0;  // first_hidden_mean_abs / second_hidden_top_half
  double r2_trained = 0.0;
  double r2_pruned = 0.0;
  double r2_ols = 0.0;
  std::size_t active_before = 0;
  std::size_t active_after = 0;
  std::vector<std::size_t> active_per_layer;  // after pruning
  std::vector<std::filesystem::path> artifacts;
};

/// Layers (d, hidden..., d).
LayerSizes teacher_layers(const ExperimentConfig& config);
TeacherStudentReport run_teacher_student(const ExperimentConfig& config, std::ostream& log);

// ---- paramcount / export ----

std::vector<LayerSizes> paramcount_layers(const ExperimentConfig& config);
std::vector<ParamCountRow> run_paramcount(const ExperimentConfig& config, std::ostream& log);

DirectModel run_export(const ExperimentConfig& config, std::ostream& log);

}  // namespace sparcs
