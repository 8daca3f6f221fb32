#include "sparcs/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sparcs/error.hpp"

namespace sparcs {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::FamilySweep: return "family_sweep";
    case ExperimentKind::TeacherStudent: return "teacher_student";
    case ExperimentKind::Verify: return "verify";
    case ExperimentKind::Gradcheck: return "gradcheck";
    case ExperimentKind::ParamCount: return "paramcount";
    case ExperimentKind::Export: return "export";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "family_sweep" || s == "family") return ExperimentKind::FamilySweep;
  if (s == "teacher_student" || s == "teacher") return ExperimentKind::TeacherStudent;
  if (s == "verify") return ExperimentKind::Verify;
  if (s == "gradcheck") return ExperimentKind::Gradcheck;
  if (s == "paramcount") return ExperimentKind::ParamCount;
  if (s == "export") return ExperimentKind::Export;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

namespace {

std::vector<double> alpha_grid(std::size_t points) {
  std::vector<double> a;
  if (points == 1) return {0.0};
  for (std::size_t k = 0; k < points; ++k) a.push_back(static_cast<double>(k) / static_cast<double>(points - 1));
  return a;
}

// Walks one section and rejects keys nobody consumed.
class Section {
 public:
  Section(const json& root, const char* name) : name_(name) {
    if (root.contains(name)) {
      node_ = &root.at(name);
      if (!node_->is_object()) throw ConfigError(std::string("section '") + name + "' must be an object");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string(name_) + "." + key + ": " + e.what());
    }
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [k, v] : node_->items())
      if (!seen_.count(k)) throw ConfigError("unknown key '" + std::string(name_) + "." + k + "'");
  }

 private:
  const char* name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

template <typename T>
void get_unsigned(Section& s, const char* key, T& out) {
  const json* v = s.raw(key);
  if (!v) return;
  if (!v->is_number_integer() || v->get<long long>() < 0) {
    throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
  }
  out = static_cast<T>(v->get<unsigned long long>());
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  static const std::set<std::string> kSections{"experiment", "model", "train",      "data",  "prune",
                                               "verify",     "gradcheck", "paramcount", "export"};
  for (const auto& [k, v] : root.items())
    if (!kSections.count(k)) throw ConfigError("unknown section '" + k + "'");

  ExperimentConfig c;
  {
    Section s(root, "experiment");
    std::string kind = to_string(c.kind);
    s.get("kind", kind);
    c = default_config(parse_experiment_kind(kind));
    get_unsigned(s, "seed", c.seed);
    get_unsigned(s, "parallel", c.parallel);
    std::string out = c.out.string();
    s.get("out", out);
    c.out = out;
    s.finish();
  }
  {
    Section s(root, "model");
    s.get("hidden", c.model.hidden);
    s.get("bias", c.model.bias);
    s.get("freeze_input", c.model.freeze_input);
    s.finish();
  }
  {
    Section s(root, "train");
    s.get("learning_rate", c.train.learning_rate);
    get_unsigned(s, "batch_size", c.train.batch_size);
    get_unsigned(s, "epochs", c.train.epochs);
    std::string reg = to_string(c.train.reg_type);
    s.get("reg_type", reg);
    c.train.reg_type = parse_reg_type(reg);
    s.get("reg_strength", c.train.reg_strength);
    s.get("validation_fraction", c.train.validation_fraction);
    s.get("beta1", c.train.beta1);
    s.get("beta2", c.train.beta2);
    s.get("adam_eps", c.train.adam_eps);
    s.finish();
  }
  {
    Section s(root, "data");
    get_unsigned(s, "d", c.data.d);
    get_unsigned(s, "n", c.data.n);
    get_unsigned(s, "seed", c.data.seed);
    if (const json* a = s.raw("alphas")) {
      if (a->is_number_integer()) {
        if (a->get<long long>() < 1) throw ConfigError("'data.alphas' grid size must be >= 1");
        c.data.alphas = alpha_grid(a->get<std::size_t>());
      } else if (a->is_array()) {
        try {
          c.data.alphas = a->get<std::vector<double>>();
        } catch (const json::exception& e) {
          throw ConfigError(std::string("data.alphas: ") + e.what());
        }
      } else {
        throw ConfigError("'data.alphas' must be a grid size or a list of values");
      }
    }
    s.get("betas", c.data.betas);
    get_unsigned(s, "trials", c.data.trials);
    get_unsigned(s, "teacher_hidden", c.data.teacher_hidden);
    s.finish();
  }
  {
    Section s(root, "prune");
    s.get("threshold_pct", c.prune.threshold_pct);
    get_unsigned(s, "histogram_bins", c.prune.histogram_bins);
    s.finish();
  }
  {
    Section s(root, "verify");
    get_unsigned(s, "max_B", c.verify.max_b);
    get_unsigned(s, "trials", c.verify.trials);
    get_unsigned(s, "max_size", c.verify.max_size);
    get_unsigned(s, "binomial_max_B", c.verify.binomial_max_b);
    s.finish();
  }
  {
    Section s(root, "gradcheck");
    get_unsigned(s, "trials", c.gradcheck.trials);
    get_unsigned(s, "max_B", c.gradcheck.max_b);
    get_unsigned(s, "max_size", c.gradcheck.max_size);
    s.get("eps", c.gradcheck.eps);
    get_unsigned(s, "batch", c.gradcheck.batch);
    s.finish();
  }
  {
    Section s(root, "paramcount");
    s.get("widths", c.paramcount.widths);
    get_unsigned(s, "min_layers", c.paramcount.min_layers);
    get_unsigned(s, "max_layers", c.paramcount.max_layers);
    s.get("custom", c.paramcount.custom);
    s.finish();
  }
  {
    Section s(root, "export");
    s.get("checkpoint", c.exportsec.checkpoint);
    s.get("eig_threshold", c.exportsec.eig_threshold);
    s.finish();
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.data.alphas = alpha_grid(21);
  if (kind == ExperimentKind::TeacherStudent) {
    // Teacher-student table: batch 1024, 180 epochs, rho 3e-3, 200-wide student.
    c.model.hidden = {200, 200};
    c.model.bias = false;
    c.train.batch_size = 1024;
    c.train.epochs = 180;
    c.train.reg_strength = 3e-3;
    c.data.d = 20;
    c.data.teacher_hidden = 20;
    c.data.n = 100000;
  } else {
    // Simple regression table: batch 100, 300 epochs, 300 hidden, rho 1e-4.
    c.model.hidden = {300};
    c.model.bias = true;
    c.train.batch_size = 100;
    c.train.epochs = 300;
    c.train.reg_strength = 1e-4;
  }
  return c;
}

void ExperimentConfig::validate() const {
  train.validate();
  if (model.hidden.empty() && (kind == ExperimentKind::FamilySweep || kind == ExperimentKind::TeacherStudent))
    throw ConfigError("model.hidden must list at least one hidden width");
  for (auto h : model.hidden)
    if (h == 0) throw ConfigError("model.hidden widths must be positive");
  if (kind == ExperimentKind::FamilySweep) {
    if (model.hidden.size() != 1) throw ConfigError("family_sweep uses a single hidden layer (three-layer model)");
    if (data.alphas.empty()) throw ConfigError("data.alphas is empty");
    for (double a : data.alphas)
      if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("data.alphas values must lie in [0, 1]");
    if (data.betas.empty()) throw ConfigError("data.betas is empty");
    for (double b : data.betas)
      if (!(b > 0.0)) throw ConfigError("data.betas values must be positive");
    if (data.trials == 0) throw ConfigError("data.trials must be >= 1");
  }
  if (kind == ExperimentKind::FamilySweep || kind == ExperimentKind::TeacherStudent) {
    if (data.d == 0) throw ConfigError("data.d must be positive");
    if (data.n < 2) throw ConfigError("data.n must be >= 2");
  }
  if (kind == ExperimentKind::TeacherStudent) {
    if (data.teacher_hidden != data.d) throw ConfigError("data.teacher_hidden must equal data.d (rotation teacher)");
    if (!model.freeze_input) throw ConfigError("teacher_student pins the input eigenvalues (model.freeze_input)");
    if (train.validation_fraction <= 0.0) throw ConfigError("teacher_student needs a validation split for pruning");
  }
  if (!(prune.threshold_pct > 0.0)) throw ConfigError("prune.threshold_pct must be positive");
  if (prune.histogram_bins == 0) throw ConfigError("prune.histogram_bins must be positive");
  if (verify.max_b < 1) throw ConfigError("verify.max_B must be >= 1");
  if (verify.max_size < 1 || gradcheck.max_size < 1) throw ConfigError("max_size must be >= 1");
  if (gradcheck.max_b < 1) throw ConfigError("gradcheck.max_B must be >= 1");
  if (!(gradcheck.eps >= 1e-7 && gradcheck.eps <= 1e-3)) throw ConfigError("gradcheck.eps must lie in [1e-7, 1e-3]");
  if (gradcheck.batch < 1) throw ConfigError("gradcheck.batch must be >= 1");
  if (paramcount.min_layers < 2 || paramcount.max_layers < paramcount.min_layers)
    throw ConfigError("paramcount layer range must satisfy 2 <= min_layers <= max_layers");
  for (const auto& l : paramcount.custom) {
    if (l.size() < 2) throw ConfigError("paramcount.custom entries need at least two layers");
    for (auto n : l)
      if (n == 0) throw ConfigError("paramcount.custom widths must be positive");
  }
  if (kind == ExperimentKind::Export && exportsec.checkpoint.empty())
    throw ConfigError("export.checkpoint is required");
  if (!(exportsec.eig_threshold >= 0.0)) throw ConfigError("export.eig_threshold must be >= 0");
}

std::string ExperimentConfig::canonical_json() const {
  ordered_json j;
  j["experiment"] = {{"kind", to_string(kind)}, {"seed", seed}, {"parallel", parallel}};
  j["model"] = {{"hidden", model.hidden}, {"bias", model.bias}, {"freeze_input", model.freeze_input}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"epochs", train.epochs},
                {"reg_type", to_string(train.reg_type)},
                {"reg_strength", train.reg_strength},
                {"validation_fraction", train.validation_fraction},
                {"beta1", train.beta1},
                {"beta2", train.beta2},
                {"adam_eps", train.adam_eps}};
  j["data"] = {{"d", data.d},         {"n", data.n},           {"seed", data.seed},
               {"alphas", data.alphas}, {"betas", data.betas}, {"trials", data.trials},
               {"teacher_hidden", data.teacher_hidden}};
  j["prune"] = {{"threshold_pct", prune.threshold_pct}, {"histogram_bins", prune.histogram_bins}};
  j["verify"] = {{"max_B", verify.max_b},
                 {"trials", verify.trials},
                 {"max_size", verify.max_size},
                 {"binomial_max_B", verify.binomial_max_b}};
  j["gradcheck"] = {{"trials", gradcheck.trials},
                    {"max_B", gradcheck.max_b},
                    {"max_size", gradcheck.max_size},
                    {"eps", gradcheck.eps},
                    {"batch", gradcheck.batch}};
  j["paramcount"] = {{"widths", paramcount.widths},
                     {"min_layers", paramcount.min_layers},
                     {"max_layers", paramcount.max_layers},
                     {"custom", paramcount.custom}};
  j["export"] = {{"checkpoint", exportsec.checkpoint}, {"eig_threshold", exportsec.eig_threshold}};
  return j.dump();
}

std::string ExperimentConfig::hash() const {
  // The worker count does not change any artifact, so it stays out of the hash.
  ExperimentConfig c = *this;
  c.parallel = 0;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : c.canonical_json()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sparcs
