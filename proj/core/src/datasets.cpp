#include "sparcs/datasets.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sparcs/error.hpp"
#include "sparcs/rng.hpp"

namespace sparcs {

void Dataset::validate() const {
  if (x.rows() != y.rows()) {
    throw DimensionError("Dataset: x " + x.shape_string() + " and y " + y.shape_string() + " row counts differ");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  return Dataset{x.select_rows(rows), y.select_rows(rows), provenance};
}

void FamilyParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("FamilyParams: alpha must lie in [0, 1]");
  if (!(beta > 0.0)) throw InputError("FamilyParams: beta must be positive");
  if (d == 0) throw InputError("FamilyParams: d must be positive");
  if (!w.empty() && w.size() != d) throw DimensionError("FamilyParams: w length differs from d");
  if (g != "dot_square") throw InputError("FamilyParams: unknown nonlinearity '" + g + "'");
}

double family_target(const FamilyParams& p, std::span<const double> x) {
  double lin = 0.0, quad = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    lin += (p.w.empty() ? 1.0 : p.w[k]) * x[k];
    quad += x[k] * x[k];
  }
  const double t = std::tanh(p.beta * (p.alpha - 0.5));
  return 0.25 * (1.0 - t) * lin + 0.25 * (1.0 + t) * quad;
}

Dataset gen_family(const FamilyParams& params, std::size_t n, std::uint64_t seed) {
  params.validate();
  if (n == 0) throw InputError("gen_family: n must be positive");
  Rng rng(seed);
  Dataset ds{Matrix(n, params.d), Matrix(n, 1), {}};
  for (std::size_t r = 0; r < n; ++r) {
    for (double& v : ds.x.row(r)) v = rng.uniform(-1.0, 1.0);
    ds.y(r, 0) = family_target(params, ds.x.row(r));
  }
  std::string w = "ones";
  if (!params.w.empty()) {
    w.clear();
    for (std::size_t k = 0; k < params.w.size(); ++k) w += (k ? ";" : "") + format_double(params.w[k]);
  }
  ds.provenance = {{"generator", "family"},     {"alpha", format_double(params.alpha)},
                   {"beta", format_double(params.beta)}, {"d", std::to_string(params.d)},
                   {"w", w},                      {"g", params.g},
                   {"n", std::to_string(n)},      {"seed", std::to_string(seed)}};
  return ds;
}

Matrix teacher_forward(const Teacher& t, const Matrix& x) {
  Matrix h = matmul_nt(x, t.w1);
  for (double& v : h.data()) v = v > 0.0 ? v : 0.0;
  return matmul_nt(h, t.w2);
}

std::pair<Dataset, Teacher> gen_teacher(std::size_t d, std::size_t hidden, std::size_t n, std::uint64_t seed) {
  if (d != hidden) {
    throw StructuralError("gen_teacher: rotation teacher needs hidden == d (got d=" + std::to_string(d) +
                          ", hidden=" + std::to_string(hidden) + ")");
  }
  if (d == 0 || n == 0) throw InputError("gen_teacher: d and n must be positive");
  Rng rng(seed);
  Teacher t;
  t.w1 = qr_orthonormal(Matrix::gaussian(d, d, rng));
  t.w2 = qr_orthonormal(Matrix::gaussian(d, d, rng));
  Dataset ds{Matrix(n, d), Matrix(), {}};
  for (double& v : ds.x.data()) v = rng.uniform(-1.0, 1.0);
  ds.y = teacher_forward(t, ds.x);
  ds.provenance = {{"generator", "teacher"},
                   {"d", std::to_string(d)},
                   {"hidden", std::to_string(hidden)},
                   {"n", std::to_string(n)},
                   {"seed", std::to_string(seed)}};
  return {std::move(ds), std::move(t)};
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

void write_csv(const Dataset& ds, std::ostream& os) {
  ds.validate();
  for (const auto& [k, v] : ds.provenance) os << "# " << k << "=" << v << "\n";
  for (std::size_t c = 0; c < ds.x.cols(); ++c) os << (c ? "," : "") << "x" << c + 1;
  for (std::size_t c = 0; c < ds.y.cols(); ++c) os << (ds.x.cols() + c ? "," : "") << "y" << c + 1;
  os << "\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    bool first = true;
    for (double v : ds.x.row(r)) {
      os << (first ? "" : ",") << format_double(v);
      first = false;
    }
    for (double v : ds.y.row(r)) {
      os << (first ? "" : ",") << format_double(v);
      first = false;
    }
    os << "\n";
  }
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("save_csv: cannot open " + path.string());
  write_csv(ds, os);
  if (!os) throw InputError("save_csv: write failed for " + path.string());
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

Dataset read_csv(std::istream& is) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dx = 0, dy = 0;
  bool have_header = false;
  std::vector<double> xs, ys;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body(line);
      body.remove_prefix(1);
      if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) {
        ds.provenance.emplace_back(std::string(body), "");
      } else {
        ds.provenance.emplace_back(std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
      }
      continue;
    }
    const auto cells = split_commas(line);
    if (!have_header) {
      for (const auto cell : cells) {
        if (cell.size() >= 2 && cell.front() == 'x' && dy == 0) {
          ++dx;
        } else if (cell.size() >= 2 && cell.front() == 'y') {
          ++dy;
        } else {
          throw ParseError("line " + std::to_string(line_no) + ": bad header cell '" + std::string(cell) + "'");
        }
      }
      have_header = true;
      continue;
    }
    if (cells.size() != dx + dy) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(dx + dy) +
                       " columns, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v;
      try {
        v = parse_double(cells[c]);
      } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
      }
      (c < dx ? xs : ys).push_back(v);
    }
  }
  if (!have_header) throw ParseError("line " + std::to_string(line_no) + ": missing header");
  const std::size_t n = dx ? xs.size() / dx : 0;
  ds.x = Matrix(n, dx, std::move(xs));
  ds.y = Matrix(n, dy, std::move(ys));
  return ds;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("load_csv: cannot open " + path.string());
  return read_csv(is);
}

std::string family_file_name(double alpha, double beta, std::uint64_t seed) {
  return "family_a" + format_double(alpha) + "_b" + format_double(beta) + "_seed" + std::to_string(seed) + ".csv";
}

std::string teacher_file_name(std::size_t d, std::uint64_t seed) {
  return "teacher_d" + std::to_string(d) + "_seed" + std::to_string(seed) + ".csv";
}

}  // namespace sparcs
