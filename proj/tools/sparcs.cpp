// sparcs: run spectral-network experiments from a JSON config.
//
// Exit codes: 0 success, 1 failed check, 2 bad config or input.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sparcs/config.hpp"
#include "sparcs/error.hpp"
#include "sparcs/experiments.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallel;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--seed", a.seed, "base seed (overrides the config)");
  cmd->add_option("--parallel", a.parallel, "worker threads, 0 = all cores");
}

sparcs::ExperimentConfig resolve(sparcs::ExperimentKind kind, const CommonArgs& a) {
  sparcs::ExperimentConfig c = a.config.empty() ? sparcs::default_config(kind) : sparcs::load_config(a.config);
  if (c.kind != kind) {
    throw sparcs::ConfigError("config is for '" + sparcs::to_string(c.kind) + "', not '" + sparcs::to_string(kind) + "'");
  }
  if (!a.out.empty()) c.out = a.out;
  if (a.seed) c.seed = *a.seed;
  if (a.parallel) c.parallel = *a.parallel;
  c.validate();
  return c;
}

std::ofstream artifact(const sparcs::ExperimentConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.out);
  std::ofstream os(c.out / name);
  if (!os) throw sparcs::InputError("cannot write " + (c.out / name).string());
  sparcs::write_provenance(os, sparcs::artifact_provenance(c));
  return os;
}

int cmd_verify(const CommonArgs& a) {
  const auto c = resolve(sparcs::ExperimentKind::Verify, a);
  sparcs::VerifyOptions o;
  o.max_b = c.verify.max_b;
  o.trials = c.verify.trials;
  o.max_size = c.verify.max_size;
  o.binomial_max_b = c.verify.binomial_max_b;
  o.seed = c.seed;
  const auto report = sparcs::run_verify(o);
  auto os = artifact(c, "verify.csv");
  sparcs::write_verify_csv(report, os);
  sparcs::write_verify_csv(report, std::cout);
  std::cout << "binomial identities: " << report.binomial.checks << " checks, " << report.binomial.violations.size()
            << " violations\n";
  for (const auto& f : report.failures) std::cout << "FAIL " << f << "\n";
  std::cout << (report.passed() ? "PASS" : "FAIL") << "\n";
  return report.passed() ? 0 : 1;
}

int cmd_gradcheck(const CommonArgs& a) {
  const auto c = resolve(sparcs::ExperimentKind::Gradcheck, a);
  sparcs::GradcheckOptions o;
  o.trials = c.gradcheck.trials;
  o.max_b = c.gradcheck.max_b;
  o.max_size = c.gradcheck.max_size;
  o.eps = c.gradcheck.eps;
  o.batch = c.gradcheck.batch;
  o.seed = c.seed;
  const auto report = sparcs::run_gradcheck(o);
  auto os = artifact(c, "gradcheck.csv");
  sparcs::write_gradcheck_csv(report, os);
  const bool ok = report.worst <= 1e-4;
  std::cout << "compared " << report.compared << " entries (" << report.kink_excluded << " excluded at ReLU kinks)\n"
            << "worst relative error " << report.worst << "\n"
            << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

int cmd_family(const CommonArgs& a) {
  const auto c = resolve(sparcs::ExperimentKind::FamilySweep, a);
  const auto report = sparcs::run_family_sweep(c, std::cerr);
  std::cout << "alpha,beta,mean,std,trials,failed\n";
  for (const auto& p : report.points)
    std::cout << p.alpha << "," << p.beta << "," << p.norm_mean << "," << p.norm_std << "," << p.trials << ","
              << p.failed << "\n";
  return 0;
}

int cmd_teacher(const CommonArgs& a) {
  const auto c = resolve(sparcs::ExperimentKind::TeacherStudent, a);
  const auto r = sparcs::run_teacher_student(c, std::cerr);
  std::cout << "mean |eig| per layer:";
  for (double v : r.eig_mean_abs) std::cout << " " << v;
  std::cout << "\nseparation ratio " << r.separation_ratio << "\n"
            << "active hidden neurons " << r.active_before << " -> " << r.active_after << "\n"
            << "R2 trained " << r.r2_trained << ", pruned " << r.r2_pruned << ", OLS " << r.r2_ols << "\n";
  if (r.curve.correspondence_warning) std::cout << "warning: eigenvalue/neuron correspondence not guaranteed\n";
  return 0;
}

int cmd_paramcount(const CommonArgs& a) {
  const auto c = resolve(sparcs::ExperimentKind::ParamCount, a);
  sparcs::run_paramcount(c, std::cout);
  return 0;
}

int cmd_export(const CommonArgs& a, const std::string& checkpoint, std::optional<double> threshold) {
  CommonArgs args = a;
  auto c = a.config.empty() ? sparcs::default_config(sparcs::ExperimentKind::Export) : sparcs::load_config(a.config);
  if (!checkpoint.empty()) c.exportsec.checkpoint = checkpoint;
  if (threshold) c.exportsec.eig_threshold = *threshold;
  if (c.kind != sparcs::ExperimentKind::Export) throw sparcs::ConfigError("config is not an export config");
  if (!args.out.empty()) c.out = args.out;
  if (args.seed) c.seed = *args.seed;
  c.validate();
  sparcs::run_export(c, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral parametrization experiments"};
  app.set_version_flag("--version", std::string(sparcs::kVersion));
  app.require_subcommand(1);

  CommonArgs args;
  std::string checkpoint;
  std::optional<double> threshold;
  auto* verify = app.add_subcommand("verify", "check the algebraic identities on random configurations");
  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  auto* family = app.add_subcommand("family", "alpha/beta regression family sweep");
  auto* teacher = app.add_subcommand("teacher", "teacher-student training and spectral pruning");
  auto* paramcount = app.add_subcommand("paramcount", "spectral vs direct parameter counts");
  auto* exp = app.add_subcommand("export", "convert a checkpoint to explicit weight blocks");
  for (auto* cmd : {verify, gradcheck, family, teacher, paramcount, exp}) add_common(cmd, args);
  exp->add_option("--checkpoint", checkpoint, "checkpoint to export");
  exp->add_option("--eig-threshold", threshold, "drop hidden neurons with |eig| below this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify) return cmd_verify(args);
    if (*gradcheck) return cmd_gradcheck(args);
    if (*family) return cmd_family(args);
    if (*teacher) return cmd_teacher(args);
    if (*paramcount) return cmd_paramcount(args);
    if (*exp) return cmd_export(args, checkpoint, threshold);
  } catch (const sparcs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sparcs::CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sparcs::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sparcs::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sparcs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
