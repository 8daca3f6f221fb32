// Gated end-to-end checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sparcs/analysis.hpp"
#include "sparcs/config.hpp"
#include "sparcs/experiments.hpp"
#include "sparcs/network.hpp"
#include "sparcs/rng.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void save(const fs::path& p, const std::function<void(std::ostream&)>& write) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  write(os);
}

// Every gated run, writing its CSV artifacts under `dir`. Filled on the first
// pass and replayed for the reproducibility check.
struct Runs {
  fs::path config_dir;
  sparcs::VerifyReport verify;
  double verify_s = 0;
  sparcs::GradcheckReport gradcheck;
  double gradcheck_s = 0;
  sparcs::FamilySweepReport family;
  double family_s = 0;
  sparcs::TeacherStudentReport teacher;
  double teacher_s = 0;
  std::vector<sparcs::ParamCountRow> paramcount;
  double paramcount_s = 0;

  void run_all(const fs::path& dir, std::ostream& log) {
    {
      Clock c;
      verify = sparcs::run_verify(sparcs::VerifyOptions{});
      verify_s = c.seconds();
      save(dir / "verify" / "verify.csv", [&](std::ostream& os) { sparcs::write_verify_csv(verify, os); });
    }
    {
      Clock c;
      gradcheck = sparcs::run_gradcheck(sparcs::GradcheckOptions{});
      gradcheck_s = c.seconds();
      save(dir / "gradcheck" / "gradcheck.csv", [&](std::ostream& os) { sparcs::write_gradcheck_csv(gradcheck, os); });
    }
    {
      auto cfg = sparcs::load_config(config_dir / "family_desk.json");
      cfg.out = dir / "family";
      Clock c;
      family = sparcs::run_family_sweep(cfg, log);
      family_s = c.seconds();
    }
    {
      auto cfg = sparcs::load_config(config_dir / "teacher_desk.json");
      cfg.out = dir / "teacher";
      Clock c;
      teacher = sparcs::run_teacher_student(cfg, log);
      teacher_s = c.seconds();
    }
    {
      auto cfg = sparcs::load_config(config_dir / "paramcount.json");
      cfg.out = dir / "paramcount";
      Clock c;
      paramcount = sparcs::run_paramcount(cfg, log);
      paramcount_s = c.seconds();
    }
  }
};

Outcome algebraic(const Runs& r) {
  bool ok = r.verify.failures.empty() && r.verify.rows.size() == 6 && r.verify_s < 10.0;
  double inv = 0, cf = 0, wb = 0, dg = 0, nil = 0;
  for (const auto& row : r.verify.rows) {
    ok = ok && row.configs == 100;
    inv = std::max(inv, row.inverse_residual);
    cf = std::max(cf, row.closed_form_diff);
    wb = std::max(wb, row.weight_block_diff);
    dg = std::max(dg, row.diagonal_diff);
    nil = std::max(nil, row.nilpotency);
  }
  ok = ok && inv < 1e-10 && cf < 1e-10 && wb < 1e-10 && dg < 1e-12 && nil < 1e-9;
  return {ok, "inverse " + num(inv) + ", closed form " + num(cf) + ", weight blocks " + num(wb) + ", diagonal " +
                  num(dg) + ", nilpotency " + num(nil) + ", " + num(r.verify_s) + " s"};
}

Outcome binomial() {
  Clock c;
  const auto rep = sparcs::binomial_identities(25);
  const double s = c.seconds();
  return {rep.ok() && rep.checks > 0 && s < 1.0,
          std::to_string(rep.checks) + " checks, " + std::to_string(rep.violations.size()) + " violations, " +
              num(s) + " s"};
}

Outcome gradients(const Runs& r) {
  const auto& g = r.gradcheck;
  const bool ok = g.rows.size() >= 50 && g.compared > 0 && g.worst < 1e-5 && r.gradcheck_s < 30.0;
  return {ok, "worst relative error " + num(g.worst) + " over " + std::to_string(g.compared) + " parameters (" +
                  std::to_string(g.kink_excluded) + " at kinks), " + num(r.gradcheck_s) + " s"};
}

Outcome superposition() {
  double worst = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    sparcs::Rng rng(sparcs::derive_seed(4242, t));
    const std::size_t b = 1 + rng.below(4);
    std::vector<std::size_t> sizes(b + 1);
    for (auto& n : sizes) n = 1 + rng.below(8);
    const auto p = sparcs::init_perceptron(sparcs::LayerSizes(sizes), rng.next_u64());
    const std::size_t rows = 1 + rng.below(16);
    const sparcs::Matrix x1 = sparcs::Matrix::gaussian(rows, sizes[0], rng);
    const sparcs::Matrix x2 = sparcs::Matrix::gaussian(rows, sizes[0], rng);
    const double a = rng.uniform(-2, 2), c = rng.uniform(-2, 2);
    const sparcs::Matrix lhs = sparcs::predict(p, a * x1 + c * x2);
    const sparcs::Matrix rhs = a * sparcs::predict(p, x1) + c * sparcs::predict(p, x2);
    for (std::size_t k = 0; k < lhs.size(); ++k) worst = std::max(worst, std::abs(lhs.data()[k] - rhs.data()[k]));
  }
  return {worst < 1e-10, "worst deviation " + num(worst) + " over 100 batches"};
}

Outcome family(const Runs& r) {
  std::vector<const sparcs::FamilyPoint*> sharp, smooth;
  for (const auto& pt : r.family.points) (pt.beta == 1000.0 ? sharp : smooth).push_back(&pt);
  if (sharp.size() != 11 || smooth.size() != 11) return {false, "unexpected alpha grid"};

  bool low = true, high = true;
  double low_max = 0, high_min = 1;
  for (const auto* pt : sharp) {
    if (pt->alpha <= 0.1 + 1e-12) {
      low = low && pt->norm_mean < 0.2;
      low_max = std::max(low_max, pt->norm_mean);
    }
    if (pt->alpha >= 0.9 - 1e-12) {
      high = high && pt->norm_mean > 0.8;
      high_min = std::min(high_min, pt->norm_mean);
    }
  }
  std::size_t jump_at = 0;
  double jump = -1;
  for (std::size_t k = 0; k + 1 < sharp.size(); ++k) {
    const double d = sharp[k + 1]->norm_mean - sharp[k]->norm_mean;
    if (d > jump) {
      jump = d;
      jump_at = k;
    }
  }
  const double j0 = sharp[jump_at]->alpha, j1 = sharp[jump_at + 1]->alpha;
  const bool jump_ok = j0 >= 0.4 - 1e-12 && j1 <= 0.6 + 1e-12;
  bool monotone = true;
  for (std::size_t k = 0; k + 1 < smooth.size(); ++k) {
    const double slack = std::max(smooth[k]->norm_std, smooth[k + 1]->norm_std);
    monotone = monotone && smooth[k + 1]->norm_mean + slack >= smooth[k]->norm_mean;
  }
  std::size_t failed = 0;
  for (const auto& pt : r.family.points) failed += pt.failed;
  const bool ok = low && high && jump_ok && monotone && failed == 0 && r.family_s < 1200.0;
  return {ok, std::string("(a) ") + (low && high ? "ok" : "no") + " max low " + num(low_max) + ", min high " +
                  num(high_min) + "; (b) " + (jump_ok ? "ok" : "no") + " largest jump " + num(jump) + " on [" +
                  num(j0) + ", " + num(j1) + "]; (c) " + (monotone ? "ok" : "no") + "; " + num(r.family_s) + " s"};
}

Outcome teacher(const Runs& r) {
  const auto& t = r.teacher;
  const bool sep = t.separation_ratio < 0.1;
  const bool margin = t.r2_pruned - t.r2_ols >= 0.1;
  const bool fewer = t.active_after < t.active_before;
  return {sep && margin && fewer && r.teacher_s < 900.0,
          std::string("(a) ") + (sep ? "ok" : "no") + " separation " + num(t.separation_ratio) + " (needs < 0.1); (b) " +
              (margin ? "ok" : "no") + " pruned R2 " + num(t.r2_pruned) + " vs OLS " + num(t.r2_ols) + "; (c) " +
              (fewer ? "ok" : "no") + " active " + std::to_string(t.active_before) + " -> " +
              std::to_string(t.active_after) + "; " + num(r.teacher_s) + " s"};
}

Outcome paramcount(const Runs& r) {
  bool ok = r.paramcount_s < 1.0;
  std::size_t seen = 0;
  for (const auto& row : r.paramcount) {
    const auto& v = row.layers.values();
    if (!std::all_of(v.begin(), v.end(), [](std::size_t n) { return n == 100; })) continue;
    ++seen;
    const unsigned __int128 n = 100, l = v.size();
    const unsigned __int128 spectral = (l - 1) * n * n + l * n;
    const unsigned __int128 direct = l * (l - 1) / 2 * n * n;
    ok = ok && row.spectral == spectral && row.direct == direct;
    ok = ok && (l == 2 ? row.direct < row.spectral : row.spectral < row.direct);
  }
  ok = ok && seen == 9;
  return {ok, std::to_string(seen) + " depths at width 100, " + num(r.paramcount_s) + " s"};
}

Outcome reproducible(const fs::path& a, const fs::path& b) {
  std::size_t files = 0;
  std::vector<std::string> diffs;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    ++files;
    const auto rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) diffs.push_back(rel.string());
  }
  std::string detail = std::to_string(files) + " CSV files compared";
  if (!diffs.empty()) detail += ", differing: " + diffs.front() + (diffs.size() > 1 ? " and others" : "");
  return {diffs.empty() && files > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparcs acceptance suite"};
  std::string config_dir = SPARCS_CONFIG_DIR;
  std::string out = "acceptance_out";
  bool quiet = false;
  app.add_option("--configs", config_dir, "directory holding the desk profiles");
  app.add_option("--out", out, "scratch directory for artifacts");
  app.add_flag("--quiet", quiet, "suppress training logs");
  CLI11_PARSE(app, argc, argv);

  fs::remove_all(out);
  std::ostringstream sink;
  std::ostream& log = quiet ? static_cast<std::ostream&>(sink) : std::clog;

  Runs first{config_dir}, second{config_dir};
  try {
    first.run_all(fs::path(out) / "run1", log);
    second.run_all(fs::path(out) / "run2", log);
  } catch (const std::exception& e) {
    std::printf("FAIL run aborted: %s\n", e.what());
    return 1;
  }

  const std::vector<std::pair<std::string, Outcome>> results{
      {"1 algebraic identities", algebraic(first)},
      {"2 binomial identities", binomial()},
      {"3 gradient correctness", gradients(first)},
      {"4 perceptron-init linearity", superposition()},
      {"5 nonlinearity sweep", family(first)},
      {"6 teacher-student", teacher(first)},
      {"7 parameter count", paramcount(first)},
      {"8 reproducibility", reproducible(fs::path(out) / "run1", fs::path(out) / "run2")},
  };
  bool all = true;
  for (const auto& [name, o] : results) {
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    all = all && o.pass;
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
