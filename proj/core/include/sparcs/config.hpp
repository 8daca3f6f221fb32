#pragma once

// Experiment configuration: one JSON document with fixed sections.
// Unknown sections or keys are rejected so that a misspelled hyperparameter
// can never silently fall back to its default.
//
//   {
//     "experiment": { "kind": "...", "seed": 0, "parallel": 0, "out": "out" },
//     "model":      { "hidden": [50], "bias": true, "freeze_input": true },
//     "train":      { "learning_rate": 1e-3, "batch_size": 100, "epochs": 300,
//                     "reg_type": "L2", "reg_strength": 1e-4,
//                     "validation_fraction": 0.2, "beta1": 0.9, "beta2": 0.999,
//                     "adam_eps": 1e-8 },
//     "data":       { "d": 2, "n": 1000, "seed": 42, "alphas": 21,
//                     "betas": [5, 1000], "trials": 100, "teacher_hidden": 20 },
//     "prune":      { "threshold_pct": 5, "histogram_bins": 20 },
//     "verify":     { "max_B": 6, "trials": 100, "max_size": 8, "binomial_max_B": 25 },
//     "gradcheck":  { "trials": 50, "max_B": 3, "max_size": 5, "eps": 1e-5, "batch": 6 },
//     "paramcount": { "widths": [100], "min_layers": 2, "max_layers": 10,
//                     "custom": [[10, 300, 1]] },
//     "export":     { "checkpoint": "path", "eig_threshold": 0 }
//   }
//
// Every section is optional; missing keys take the defaults below.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sparcs/training.hpp"

namespace sparcs {

enum class ExperimentKind { FamilySweep, TeacherStudent, Verify, Gradcheck, ParamCount, Export };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

struct ModelSection {
  std::vector<std::size_t> hidden{50};
  bool bias = true;
  bool freeze_input = true;
};

struct DataSection {
  std::size_t d = 2;
  std::size_t n = 1000;
  std::uint64_t seed = 42;
  std::vector<double> alphas;  // filled from an integer grid size or an explicit list
  std::vector<double> betas{5.0, 1000.0};
  std::size_t trials = 100;
  std::size_t teacher_hidden = 20;
};

struct PruneSection {
  double threshold_pct = 5.0;
  std::size_t histogram_bins = 20;
};

struct VerifySection {
  unsigned max_b = 6;
  std::size_t trials = 100;
  std::size_t max_size = 8;
  unsigned binomial_max_b = 25;
};

struct GradcheckSection {
  std::size_t trials = 50;
  std::size_t max_b = 3;
  std::size_t max_size = 5;
  double eps = 1e-5;
  std::size_t batch = 6;
};

struct ParamCountSection {
  std::vector<std::size_t> widths{100};
  std::size_t min_layers = 2;
  std::size_t max_layers = 10;
  std::vector<std::vector<std::size_t>> custom;
};

struct ExportSection {
  std::string checkpoint;
  double eig_threshold = 0.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Verify;
  std::uint64_t seed = 0;    // model initialization seed base
  std::size_t parallel = 0;  // 0 = hardware concurrency
  std::filesystem::path out = "out";
  ModelSection model;
  TrainConfig train;
  DataSection data;
  PruneSection prune;
  VerifySection verify;
  GradcheckSection gradcheck;
  ParamCountSection paramcount;
  ExportSection exportsec;

  /// Range and consistency checks; throws ConfigError.
  void validate() const;
  /// Canonical JSON rendering of every effective value.
  std::string canonical_json() const;
  /// 16 hex digits (FNV-1a 64 of canonical_json()).
  std::string hash() const;
};

/// Strict parse; throws ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Defaults for a kind (grid of 21 alphas etc.), used when no file is given.
ExperimentConfig default_config(ExperimentKind kind);

inline constexpr const char* kVersion = "sparcs 1.0.0";

}  // namespace sparcs
