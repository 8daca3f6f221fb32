#include "sparcs/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sparcs/datasets.hpp"
#include "sparcs/error.hpp"

namespace sparcs {

namespace {

constexpr const char* kMagic = "SPARCS1";

void write_values(std::ostream& os, std::span<const double> v) {
  for (std::size_t k = 0; k < v.size(); ++k) os << (k ? " " : "") << format_double(v[k]);
  os << "\n";
}

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  // Next non-comment, non-blank line split on whitespace.
  std::vector<std::string> next(const char* what) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string t; ss >> t;) tokens.push_back(t);
      if (!tokens.empty()) return tokens;
    }
    fail(std::string("unexpected end of file, expected ") + what);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("checkpoint line " + std::to_string(line_no_) + ": " + msg);
  }

  std::size_t to_size(const std::string& s) const {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("not a count: '" + s + "'");
    return v;
  }

  double to_double(const std::string& s) const {
    try {
      return parse_double(s);
    } catch (const ParseError& e) {
      fail(e.what());
    }
  }

  void expect(const std::vector<std::string>& tokens, const char* key, std::size_t arity) const {
    if (tokens.front() != key) fail(std::string("expected '") + key + "', found '" + tokens.front() + "'");
    if (tokens.size() != arity + 1) fail(std::string("'") + key + "' takes " + std::to_string(arity) + " fields");
  }

 private:
  std::istream& is_;
  std::size_t line_no_ = 0;
};

}  // namespace

void write_checkpoint(const SpectralParams& params, std::ostream& os, const Provenance& provenance) {
  params.validate();
  os << kMagic << "\n";
  for (const auto& [k, v] : provenance) os << "# " << k << "=" << v << "\n";
  os << "layers " << params.layers.count();
  for (std::size_t n : params.layers.values()) os << " " << n;
  os << "\nfrozen_input " << (params.frozen_input ? 1 : 0) << "\n";
  os << "frozen_output " << (params.frozen_output ? 1 : 0) << "\n";
  for (std::size_t i = 0; i < params.phi.size(); ++i) {
    const Matrix& m = params.phi[i];
    os << "phi " << i << " " << m.rows() << " " << m.cols() << "\n";
    for (std::size_t r = 0; r < m.rows(); ++r) write_values(os, m.row(r));
  }
  for (std::size_t j = 0; j < params.eig.size(); ++j) {
    os << "eig " << j << " " << params.eig[j].size() << "\n";
    write_values(os, params.eig[j]);
  }
  os << "end\n";
}

SpectralParams read_checkpoint(std::istream& is) {
  LineReader in(is);
  auto tok = in.next("magic");
  if (tok.size() != 1 || tok[0] != kMagic) in.fail("missing SPARCS1 magic");

  tok = in.next("layers");
  if (tok.front() != "layers" || tok.size() < 2) in.fail("expected 'layers <count> <sizes...>'");
  const std::size_t count = in.to_size(tok[1]);
  if (tok.size() != count + 2) in.fail("layer count does not match the listed sizes");
  std::vector<std::size_t> sizes;
  for (std::size_t k = 0; k < count; ++k) sizes.push_back(in.to_size(tok[k + 2]));

  SpectralParams p;
  try {
    p.layers = LayerSizes(sizes);
  } catch (const Error& e) {
    in.fail(e.what());
  }
  tok = in.next("frozen_input");
  in.expect(tok, "frozen_input", 1);
  p.frozen_input = in.to_size(tok[1]) != 0;
  tok = in.next("frozen_output");
  in.expect(tok, "frozen_output", 1);
  p.frozen_output = in.to_size(tok[1]) != 0;

  for (std::size_t i = 0; i < p.layers.depth(); ++i) {
    tok = in.next("phi header");
    in.expect(tok, "phi", 3);
    if (in.to_size(tok[1]) != i) in.fail("phi blocks out of order");
    const std::size_t rows = in.to_size(tok[2]), cols = in.to_size(tok[3]);
    if (rows != p.layers[i + 1] || cols != p.layers[i]) in.fail("phi block shape does not match layers");
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto vals = in.next("phi row");
      if (vals.size() != cols) in.fail("phi row has " + std::to_string(vals.size()) + " values, expected " + std::to_string(cols));
      for (std::size_t c = 0; c < cols; ++c) m(r, c) = in.to_double(vals[c]);
    }
    p.phi.push_back(std::move(m));
  }
  for (std::size_t j = 0; j < p.layers.count(); ++j) {
    tok = in.next("eig header");
    in.expect(tok, "eig", 2);
    if (in.to_size(tok[1]) != j) in.fail("eigenvalue vectors out of order");
    const std::size_t len = in.to_size(tok[2]);
    if (len != p.layers[j]) in.fail("eigenvalue vector length does not match layers");
    const auto vals = in.next("eigenvalues");
    if (vals.size() != len) in.fail("eigenvalue line has the wrong length");
    std::vector<double> e;
    for (const auto& v : vals) e.push_back(in.to_double(v));
    p.eig.push_back(std::move(e));
  }
  tok = in.next("end");
  if (tok.size() != 1 || tok[0] != "end") in.fail("expected 'end'");
  try {
    p.validate();
  } catch (const Error& e) {
    in.fail(e.what());
  }
  return p;
}

void save_checkpoint(const SpectralParams& params, const std::filesystem::path& path, const Provenance& provenance) {
  std::ofstream os(path);
  if (!os) throw InputError("save_checkpoint: cannot open " + path.string());
  write_checkpoint(params, os, provenance);
}

SpectralParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("load_checkpoint: cannot open " + path.string());
  return read_checkpoint(is);
}

std::string direct_model_json(const DirectModel& model, const Provenance& provenance) {
  nlohmann::ordered_json j;
  j["format"] = "sparcs-direct-1";
  nlohmann::ordered_json prov = nlohmann::ordered_json::object();
  for (const auto& [k, v] : provenance) prov[k] = v;
  j["provenance"] = prov;
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : model.layers) {
    j["layers"].push_back({{"source_layer", l.source_layer}, {"neurons", l.neurons}});
  }
  j["connections"] = nlohmann::ordered_json::array();
  for (const auto& c : model.connections) {
    j["connections"].push_back({{"to", c.to},
                                {"from", c.from},
                                {"skip", c.to - c.from > 1},
                                {"rows", c.weights.rows()},
                                {"cols", c.weights.cols()},
                                {"weights", c.weights.values()}});
  }
  return j.dump(1) + "\n";
}

DirectModel parse_direct_model_json(const std::string& text) {
  DirectModel model;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "sparcs-direct-1") throw ParseError("direct model: unknown format");
    for (const auto& l : j.at("layers")) {
      model.layers.push_back({l.at("source_layer").get<std::size_t>(), l.at("neurons").get<std::vector<std::size_t>>()});
    }
    for (const auto& c : j.at("connections")) {
      DirectConnection conn;
      conn.to = c.at("to").get<std::size_t>();
      conn.from = c.at("from").get<std::size_t>();
      conn.weights = Matrix(c.at("rows").get<std::size_t>(), c.at("cols").get<std::size_t>(),
                            c.at("weights").get<std::vector<double>>());
      model.connections.push_back(std::move(conn));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("direct model: ") + e.what());
  }
  return model;
}

}  // namespace sparcs
