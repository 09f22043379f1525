#pragma once

// JSON files: matrix sets {"dim", "matrices": [{"name", "rows"}]} and cones
// {"dim", "rays", "functional", "meta"}. Doubles are written in the shortest
// decimal form that parses back to the same bits.

#include "pcone/cone.hpp"
#include "pcone/core.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace pcone::io {

using Json = nlohmann::json;

inline Json to_json(const RealVector &v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json to_json(const RealMatrix &m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Json to_json(const Word &w) { return Json(w.indices); }

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

namespace detail {

inline double number(const Json &j, const std::string &where) {
  if (!j.is_number()) throw InputError(where + ": expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw InputError(where + ": non-finite number");
  return x;
}

inline RealVector vector_from(const Json &j, Index d, const std::string &where) {
  if (!j.is_array() || static_cast<Index>(j.size()) != d)
    throw InputError(where + ": expected an array of " + std::to_string(d) + " numbers");
  RealVector v(d);
  for (Index i = 0; i < d; ++i) v(i) = number(j[static_cast<std::size_t>(i)], where);
  return v;
}

inline Json parse_text(const std::string &text, const std::string &origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw InputError(origin + ": malformed JSON (" + e.what() + ")");
  }
}

inline std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline Index dim_field(const Json &j, const std::string &origin) {
  if (!j.is_object()) throw InputError(origin + ": top level must be an object");
  if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<long long>() < 1)
    throw InputError(origin + ": 'dim' must be a positive integer");
  return static_cast<Index>(j["dim"].get<long long>());
}

} // namespace detail

inline GeneratorSet matrix_set_from_json(const Json &j, const std::string &origin = "matrix set") {
  const Index d = detail::dim_field(j, origin);
  if (!j.contains("matrices") || !j["matrices"].is_array() || j["matrices"].empty())
    throw InputError(origin + ": 'matrices' must be a nonempty array");
  std::vector<RealMatrix> mats;
  std::vector<std::string> names;
  std::size_t k = 0;
  for (const auto &entry : j["matrices"]) {
    ++k;
    const std::string where = origin + ": matrix " + std::to_string(k);
    if (!entry.is_object() || !entry.contains("rows"))
      throw InputError(where + " must be an object with 'rows'");
    if (entry.contains("name") && !entry["name"].is_string())
      throw InputError(where + ": 'name' must be a string");
    names.push_back(entry.contains("name") ? entry["name"].get<std::string>() : "A" + std::to_string(k));
    const Json &rows = entry["rows"];
    if (!rows.is_array() || static_cast<Index>(rows.size()) != d)
      throw InputError(where + ": expected " + std::to_string(d) + " rows");
    RealMatrix m(d, d);
    for (Index i = 0; i < d; ++i)
      m.row(i) = detail::vector_from(rows[static_cast<std::size_t>(i)], d,
                                     where + " row " + std::to_string(i + 1))
                     .transpose();
    mats.push_back(std::move(m));
  }
  return GeneratorSet(std::move(mats), std::move(names));
}

inline Json matrix_set_to_json(const GeneratorSet &gens) {
  Json mats = Json::array();
  for (std::size_t i = 0; i < gens.size(); ++i)
    mats.push_back({{"name", gens.names[i]}, {"rows", to_json(gens[i])}});
  return {{"dim", gens.dim()}, {"matrices", std::move(mats)}};
}

inline ConeApprox cone_from_json(const Json &j, const std::string &origin = "cone") {
  const Index d = detail::dim_field(j, origin);
  if (!j.contains("rays") || !j["rays"].is_array() || j["rays"].empty())
    throw InputError(origin + ": 'rays' must be a nonempty array");
  ConeApprox c;
  c.dim = d;
  c.rays.resize(d, static_cast<Index>(j["rays"].size()));
  Index k = 0;
  for (const auto &r : j["rays"]) {
    RealVector v = detail::vector_from(r, d, origin + ": ray " + std::to_string(k + 1));
    if (v.norm() == 0.0) throw InputError(origin + ": ray " + std::to_string(k + 1) + " is zero");
    c.rays.col(k++) = v.normalized();
  }
  if (j.contains("functional") && !j["functional"].is_null())
    c.support_functional = detail::vector_from(j["functional"], d, origin + ": functional");
  return c;
}

inline Json cone_to_json(const ConeApprox &c, Json meta = Json::object()) {
  Json rays = Json::array();
  for (Index k = 0; k < c.rays.cols(); ++k) rays.push_back(to_json(RealVector(c.rays.col(k))));
  meta["pointed"] = c.pointed;
  meta["invariance_residual"] = c.invariance_residual;
  meta["strict_margin"] = c.strict_margin ? Json(*c.strict_margin) : Json(nullptr);
  meta["thinning_angle"] = c.thinning_angle;
  meta["low_confidence"] = c.low_confidence;
  meta["full_dimensional"] = c.full_dimensional;
  meta["refinement_rounds"] = c.refinement_rounds;
  meta["inflation"] = c.inflation;
  if (!c.ray_words.empty()) {
    Json words = Json::array();
    for (const auto &w : c.ray_words) words.push_back(to_json(w));
    meta["ray_words"] = std::move(words);
  }
  return {{"dim", c.rays.rows()},
          {"rays", std::move(rays)},
          {"functional", c.support_functional ? to_json(*c.support_functional) : Json(nullptr)},
          {"meta", std::move(meta)}};
}

inline Json read_json(const std::string &path) {
  return detail::parse_text(detail::slurp(path), path);
}

inline GeneratorSet read_matrix_set(const std::string &path) {
  return matrix_set_from_json(read_json(path), path);
}

inline ConeApprox read_cone(const std::string &path) { return cone_from_json(read_json(path), path); }

inline void write_json(const std::string &path, const Json &j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw InputError("write to '" + path + "' failed");
}

} // namespace pcone::io
