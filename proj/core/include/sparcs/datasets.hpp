#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sparcs/linalg.hpp"

namespace sparcs {

/// Paired samples (rows) plus the key/value provenance that regenerates them.
struct Dataset {
  Matrix x;
  Matrix y;
  std::vector<std::pair<std::string, std::string>> provenance;

  std::size_t size() const { return x.rows(); }
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

/// Target family interpolating between w.x and g(x):
///   f(x) = 1/4 [1 - tanh(beta (alpha - 1/2))] w.x + 1/4 [1 + tanh(beta (alpha - 1/2))] g(x)
struct FamilyParams {
  double alpha = 0.0;
  double beta = 5.0;
  std::size_t d = 2;
  std::vector<double> w;        // empty means all ones
  std::string g = "dot_square";  // g(x) = x.x; the only shipped nonlinearity

  void validate() const;
};

/// Evaluates the family target at one point.
double family_target(const FamilyParams& p, std::span<const double> x);

/// x ~ U([-1, 1]^d), y = f(x).
Dataset gen_family(const FamilyParams& params, std::size_t n, std::uint64_t seed);

struct Teacher {
  Matrix w1;  // d x d, in SO(d)
  Matrix w2;  // d x d, in SO(d)
};

/// t(x) = w2 ReLU(w1 x)
Matrix teacher_forward(const Teacher& t, const Matrix& x);

/// Rotation teacher; x ~ U([-1, 1]^d). Requires hidden == d (StructuralError otherwise).
std::pair<Dataset, Teacher> gen_teacher(std::size_t d, std::size_t hidden, std::size_t n, std::uint64_t seed);

/// Header `x1..xd,y1..ym`, 17 significant digits, provenance as `# key=value`.
void save_csv(const Dataset& ds, const std::filesystem::path& path);
void write_csv(const Dataset& ds, std::ostream& os);
/// Throws ParseError with the 1-based line number on malformed input.
Dataset load_csv(const std::filesystem::path& path);
Dataset read_csv(std::istream& is);

/// `family_a{alpha}_b{beta}_seed{s}.csv`
std::string family_file_name(double alpha, double beta, std::uint64_t seed);
/// `teacher_d{d}_seed{s}.csv`
std::string teacher_file_name(std::size_t d, std::uint64_t seed);

/// Shortest text that parses back to exactly the same double, at most 17
/// significant digits.
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace sparcs
