#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockric/blockmodel.hpp"
#include "blockric/matrix.hpp"
#include "blockric/tolerance.hpp"

namespace blockric {

// Reports use insertion-ordered JSON so that identical inputs serialize to
// identical bytes.
using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "blockric";
inline constexpr const char* kToolVersion = "0.1.0";

struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  std::size_t points = 0;

  std::vector<double> materialize() const {
    if (points == 0) throw InvalidInput("grid: needs at least one point");
    if (!(min <= max)) throw InvalidInput("grid: min must not exceed max");
    if (points == 1) return {min};
    std::vector<double> out(points);
    const double step = (max - min) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) out[i] = min + step * static_cast<double>(i);
    return out;
  }
};

struct LadderSpec {
  double hi = 1e-2;
  double lo = 1e-8;
  double ratio = 10.0;

  std::vector<double> materialize() const {
    if (!(hi > 0.0) || !(lo > 0.0) || hi < lo) throw InvalidInput("eps ladder: need hi >= lo > 0");
    if (!(ratio > 1.0)) throw InvalidInput("eps ladder: ratio must exceed 1");
    std::vector<double> out;
    for (double eps = hi; eps >= lo * (1.0 - 1e-12); eps /= ratio) out.push_back(eps);
    return out;
  }
};

struct Problem {
  Matrix a0, a1, v;
  ToleranceProfile tolerances;
  std::optional<GridSpec> grid;
  std::optional<LadderSpec> ladder;

  BlockOperator make_operator() const { return BlockOperator(a0, a1, v, tolerances); }
};

namespace io_detail {

inline Complex parse_complex(const Json& j, const std::string& where) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && (j.size() == 1 || j.size() == 2)) {
    for (const auto& part : j)
      if (!part.is_number()) throw ParseError(where + ": complex entry parts must be numbers");
    const double re = j[0].get<double>();
    const double im = j.size() == 2 ? j[1].get<double>() : 0.0;
    return Complex(re, im);
  }
  throw ParseError(where + ": expected a number or [re, im]");
}

inline Matrix parse_matrix(const Json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw ParseError(name + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty())
    throw ParseError(name + ": rows must be non-empty arrays");
  const std::size_t cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw ParseError(name + ": rows must all have the same length");
    for (std::size_t k = 0; k < cols; ++k)
      m(i, k) = parse_complex(j[i][k], name + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  if (!m.is_finite()) throw ParseError(name + ": entries must be finite");
  return m;
}

}  // namespace io_detail

inline Problem parse_problem(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("problem file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("problem file: top level must be an object");

  Problem p;
  for (const char* field : {"a0", "a1", "v"})
    if (!j.contains(field)) throw ParseError(std::string("problem file: missing block '") + field + "'");
  p.a0 = io_detail::parse_matrix(j["a0"], "a0");
  p.a1 = io_detail::parse_matrix(j["a1"], "a1");
  p.v = io_detail::parse_matrix(j["v"], "v");

  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    if (!t.is_object()) throw ParseError("tolerances: expected an object");
    auto pick = [&](const char* key, double& target) {
      if (!t.contains(key)) return;
      if (!t[key].is_number()) throw ParseError(std::string("tolerances.") + key + ": expected a number");
      target = t[key].get<double>();
    };
    pick("eig_cluster_tol", p.tolerances.eig_cluster_tol);
    pick("rank_rtol", p.tolerances.rank_rtol);
    pick("residual_tol", p.tolerances.residual_tol);
    try {
      p.tolerances.validate();
    } catch (const InvalidInput& e) {
      throw ParseError(e.what());
    }
  }

  if (j.contains("scan")) {
    const Json& s = j["scan"];
    if (!s.is_object()) throw ParseError("scan: expected an object");
    if (s.contains("grid")) {
      const Json& g = s["grid"];
      for (const char* key : {"min", "max", "points"})
        if (!g.contains(key) || !g[key].is_number())
          throw ParseError(std::string("scan.grid.") + key + ": expected a number");
      p.grid = GridSpec{g["min"].get<double>(), g["max"].get<double>(),
                        g["points"].get<std::size_t>()};
    }
    if (s.contains("eps_ladder")) {
      const Json& l = s["eps_ladder"];
      for (const char* key : {"hi", "lo", "ratio"})
        if (!l.contains(key) || !l[key].is_number())
          throw ParseError(std::string("scan.eps_ladder.") + key + ": expected a number");
      p.ladder = LadderSpec{l["hi"].get<double>(), l["lo"].get<double>(), l["ratio"].get<double>()};
    }
  }
  return p;
}

inline Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& name = "matrix") {
  return io_detail::parse_matrix(j, name);
}

// FNV-1a over the raw input bytes; stable across platforms.
inline std::string content_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open input file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace blockric
