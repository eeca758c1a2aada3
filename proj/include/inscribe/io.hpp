#pragma once

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "inscribe/core.hpp"
#include "inscribe/error.hpp"
#include "inscribe/pipeline.hpp"

namespace inscribe {

using json = nlohmann::ordered_json;

/// {"dim": d, "vertices": [[x_1..x_d], ...], "facets": [[i, j, ...], ...]}
/// with 0-based vertex indices; "facets" is optional.
struct PolytopeFile {
  PolytopeVRep polytope;
  std::optional<FacetIncidence> facets;
};

namespace detail {

inline std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

[[noreturn]] inline void bad_field(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::Parse, where + ": " + what);
}

}  // namespace detail

inline PolytopeFile polytope_from_json(const json& doc) {
  if (!doc.is_object()) detail::bad_field("/", "expected an object");
  if (!doc.contains("dim") || !doc["dim"].is_number_integer()) detail::bad_field("/dim", "missing or not an integer");
  const auto dim = doc["dim"].get<long long>();
  if (dim < 1 || dim > 64) detail::bad_field("/dim", "must be in [1, 64], got " + std::to_string(dim));
  if (!doc.contains("vertices") || !doc["vertices"].is_array()) detail::bad_field("/vertices", "missing or not an array");
  const auto& vs = doc["vertices"];
  const auto n = static_cast<Eigen::Index>(vs.size());
  PolytopeFile out;
  out.polytope.dim = static_cast<int>(dim);
  out.polytope.vertices.resize(dim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string where = "/vertices/" + std::to_string(i);
    const auto& row = vs[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<long long>(row.size()) != dim)
      detail::bad_field(where, "expected " + std::to_string(dim) + " coordinates");
    for (long long a = 0; a < dim; ++a) {
      const auto& c = row[static_cast<std::size_t>(a)];
      if (!c.is_number()) detail::bad_field(where + "/" + std::to_string(a), "not a number");
      const double x = c.get<double>();
      if (!std::isfinite(x)) detail::bad_field(where + "/" + std::to_string(a), "not finite");
      out.polytope.vertices(a, i) = x;
    }
  }
  if (n < dim + 1)
    throw Error(ErrorCode::InvalidArgument, "polytope has " + std::to_string(n) + " vertices, a " + std::to_string(dim) +
                                                "-polytope needs at least " + std::to_string(dim + 1));

  if (doc.contains("facets") && !doc["facets"].is_null()) {
    const auto& fs = doc["facets"];
    if (!fs.is_array()) detail::bad_field("/facets", "not an array");
    FacetIncidence inc(n, static_cast<Eigen::Index>(fs.size()));
    for (std::size_t j = 0; j < fs.size(); ++j) {
      const std::string where = "/facets/" + std::to_string(j);
      if (!fs[j].is_array()) detail::bad_field(where, "not an array");
      for (std::size_t k = 0; k < fs[j].size(); ++k) {
        const auto& e = fs[j][k];
        if (!e.is_number_integer()) detail::bad_field(where + "/" + std::to_string(k), "not an integer");
        const auto i = e.get<long long>();
        if (i < 0 || i >= n) detail::bad_field(where + "/" + std::to_string(k), "vertex index " + std::to_string(i) + " out of range");
        if (inc.on_facet(i, static_cast<Eigen::Index>(j))) detail::bad_field(where, "repeated vertex " + std::to_string(i));
        inc.on_facet(i, static_cast<Eigen::Index>(j)) = true;
      }
    }
    validate_incidence(inc, out.polytope.dim);
    out.facets = std::move(inc);
  }
  return out;
}

inline PolytopeFile parse_polytope_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
  }
  return polytope_from_json(doc);
}

inline PolytopeFile read_polytope_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Parse, path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_polytope_json(buf.str());
}

inline json facets_to_json(const FacetIncidence& inc) {
  json fs = json::array();
  for (Eigen::Index j = 0; j < inc.m(); ++j) {
    json f = json::array();
    for (auto i : inc.facet_vertices(j)) f.push_back(i);
    fs.push_back(std::move(f));
  }
  return fs;
}

inline json vertices_to_json(const PolytopeVRep& v) {
  json vs = json::array();
  for (Eigen::Index i = 0; i < v.n(); ++i) {
    json row = json::array();
    for (int a = 0; a < v.dim; ++a) row.push_back(v.vertices(a, i));
    vs.push_back(std::move(row));
  }
  return vs;
}

inline json polytope_to_json(const PolytopeVRep& v, const FacetIncidence* facets = nullptr) {
  json doc;
  doc["dim"] = v.dim;
  doc["vertices"] = vertices_to_json(v);
  if (facets) doc["facets"] = facets_to_json(*facets);
  return doc;
}

inline json report_to_json(const PipelineReport& r) {
  json doc;
  doc["method"] = r.method;
  doc["inscribed"] = r.inscribed;
  doc["converged"] = r.converged;
  doc["capped"] = r.capped;
  doc["rank_at_tol"] = r.rank_at_tol;
  doc["iterations"] = r.iterations;
  doc["sdp_solves"] = r.sdp_solves;
  doc["wall_time_s"] = r.wall_time_s;
  json hist = json::array();
  for (const auto& bad : r.bad_facet_history) {
    json h = json::array();
    for (auto j : bad) h.push_back(j);
    hist.push_back(std::move(h));
  }
  doc["bad_facet_history"] = std::move(hist);
  json steps = json::array();
  for (const auto& s : r.steps) steps.push_back({{"method", s.method}, {"inscribed", s.inscribed}, {"iterations", s.iterations}});
  doc["steps"] = std::move(steps);
  doc["vertices"] = r.vertices ? vertices_to_json(*r.vertices) : json(nullptr);
  return doc;
}

}  // namespace inscribe
