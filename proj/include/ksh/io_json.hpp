#pragma once

#include "ksh/map_state.hpp"
#include "ksh/solver.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace ksh::io {

using nlohmann::json;

/// Schema violations carry a JSON-pointer-style path; the CLI maps this to
/// exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Writer. All floating values are emitted as decimal with 17 significant
// digits, which round-trips IEEE doubles exactly; nlohmann's own dump would
// use shortest-round-trip instead.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_double(std::string& out, double v) {
  if (!std::isfinite(v)) throw ValidationError("non-finite value cannot be serialized");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

inline void write_string(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

inline bool is_scalar_array(const json& j) {
  for (const auto& e : j)
    if (e.is_structured()) return false;
  return true;
}

inline void write_value(std::string& out, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  switch (j.type()) {
    case json::value_t::null: out += "null"; break;
    case json::value_t::boolean: out += (j.get<bool>() ? "true" : "false"); break;
    case json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case json::value_t::number_float: write_double(out, j.get<double>()); break;
    case json::value_t::string: write_string(out, j.get<std::string>()); break;
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      if (is_scalar_array(j)) {  // numeric rows stay on one line
        out += '[';
        bool first = true;
        for (const auto& e : j) {
          if (!first) out += ", ";
          first = false;
          write_value(out, e, indent, depth + 1);
        }
        out += ']';
        break;
      }
      out += "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        write_value(out, e, indent, depth + 1);
      }
      out += '\n';
      out += pad;
      out += ']';
      break;
    }
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        write_string(out, it.key());
        out += ": ";
        write_value(out, it.value(), indent, depth + 1);
      }
      out += '\n';
      out += pad;
      out += '}';
      break;
    }
    default: throw ValidationError("unsupported json value");
  }
}

}  // namespace detail

inline std::string dump_json(const json& j, int indent = 2) {
  std::string out;
  detail::write_value(out, j, indent, 0);
  out += '\n';
  return out;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << dump_json(j);
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open: " + path.string());
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return j;
}

// ---------------------------------------------------------------------------
// Field access with JSON-pointer diagnostics
// ---------------------------------------------------------------------------

inline const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError(where + "/" + key + ": missing required field");
  return j.at(key);
}

inline double require_number(const json& j, const std::string& key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number()) throw ValidationError(where + "/" + key + ": expected number");
  return v.get<double>();
}

inline std::vector<double> number_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw ValidationError(where + "/" + std::to_string(i) + ": expected number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Domain files: {"points": coords or ids, "metric": "euclidean" | matrix,
//                "weights": [...], "interior": [ids], "grid": optional}
// ---------------------------------------------------------------------------

inline json domain_to_json(const PointCloudSpace& s) {
  json j;
  const int n = s.size();
  if (s.has_coords()) {
    json pts = json::array();
    for (int i = 0; i < n; ++i) {
      json row = json::array();
      for (double c : s.point_coords(i)) row.push_back(c);
      pts.push_back(std::move(row));
    }
    j["points"] = std::move(pts);
    j["metric"] = "euclidean";
  } else {
    json ids = json::array();
    for (int i = 0; i < n; ++i) ids.push_back(i);
    j["points"] = std::move(ids);
    json m = json::array();
    for (int i = 0; i < n; ++i) {
      json row = json::array();
      for (int k = 0; k < n; ++k) row.push_back(s.dense_metric()(i, k));
      m.push_back(std::move(row));
    }
    j["metric"] = std::move(m);
  }
  j["weights"] = s.weights();
  json ids = json::array();
  for (int i : s.interior_ids()) ids.push_back(i);
  j["interior"] = std::move(ids);
  if (s.grid_info()) {
    const GridInfo& g = *s.grid_info();
    json gj;
    gj["dim"] = g.dim;
    gj["npts"] = std::vector<int>(g.npts.begin(), g.npts.begin() + g.dim);
    gj["origin"] = std::vector<double>(g.origin.begin(), g.origin.begin() + g.dim);
    gj["spacing"] = std::vector<double>(g.spacing.begin(), g.spacing.begin() + g.dim);
    j["grid"] = std::move(gj);
  }
  return j;
}

inline PointCloudSpace domain_from_json(const json& j) {
  const json& points = require(j, "points", "");
  const json& metric = require(j, "metric", "");
  std::vector<double> weights = number_array(require(j, "weights", ""), "/weights");
  const json& interior = require(j, "interior", "");
  if (!interior.is_array()) throw ValidationError("/interior: expected array of ids");
  const auto n = weights.size();
  std::vector<uint8_t> labels(n, 0);
  for (std::size_t i = 0; i < interior.size(); ++i) {
    if (!interior[i].is_number_integer())
      throw ValidationError("/interior/" + std::to_string(i) + ": expected integer id");
    const auto id = interior[i].get<std::int64_t>();
    if (id < 0 || id >= static_cast<std::int64_t>(n))
      throw ValidationError("/interior/" + std::to_string(i) + ": id out of range");
    labels[static_cast<std::size_t>(id)] = 1;
  }
  if (metric.is_string() && metric.get<std::string>() == "euclidean") {
    if (!points.is_array() || points.empty() || !points[0].is_array())
      throw ValidationError("/points: expected coordinate rows for euclidean metric");
    const auto dim = points[0].size();
    if (dim < 1 || dim > 3) throw ValidationError("/points/0: dimension must be 1..3");
    std::vector<double> coords;
    coords.reserve(points.size() * dim);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto row = number_array(points[i], "/points/" + std::to_string(i));
      if (row.size() != dim)
        throw ValidationError("/points/" + std::to_string(i) + ": ragged coordinates");
      coords.insert(coords.end(), row.begin(), row.end());
    }
    if (points.size() != n) throw ValidationError("/weights: size mismatch with points");
    std::optional<GridInfo> grid;
    if (j.contains("grid")) {
      const json& gj = j.at("grid");
      GridInfo g;
      g.dim = static_cast<int>(require_number(gj, "dim", "/grid"));
      const auto npts = number_array(require(gj, "npts", "/grid"), "/grid/npts");
      const auto origin = number_array(require(gj, "origin", "/grid"), "/grid/origin");
      const auto spacing = number_array(require(gj, "spacing", "/grid"), "/grid/spacing");
      if (g.dim < 1 || g.dim > 3 || npts.size() != static_cast<std::size_t>(g.dim) ||
          origin.size() != spacing.size() || origin.size() != npts.size())
        throw ValidationError("/grid: inconsistent grid record");
      std::size_t product = 1;
      for (int a = 0; a < g.dim; ++a) {
        g.npts[a] = static_cast<int>(npts[a]);
        g.origin[a] = origin[a];
        g.spacing[a] = spacing[a];
        if (g.npts[a] < 1 || !(g.spacing[a] > 0.0))
          throw ValidationError("/grid: counts must be >= 1 and spacing positive");
        product *= static_cast<std::size_t>(g.npts[a]);
      }
      if (product != n) throw ValidationError("/grid: npts product must equal the point count");
      grid = g;
    }
    return PointCloudSpace::from_coords(static_cast<int>(dim), std::move(coords),
                                        std::move(weights), std::move(labels), grid);
  }
  if (!metric.is_array()) throw ValidationError("/metric: expected \"euclidean\" or matrix");
  if (metric.size() != n) throw ValidationError("/metric: row count mismatch");
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = number_array(metric[i], "/metric/" + std::to_string(i));
    if (row.size() != n)
      throw ValidationError("/metric/" + std::to_string(i) + ": row length mismatch");
    for (std::size_t k = 0; k < n; ++k) m(i, k) = row[k];
  }
  return PointCloudSpace::from_dense(std::move(m), std::move(weights), std::move(labels));
}

// ---------------------------------------------------------------------------
// Target descriptor: {"type": "sphere"|"euclidean", "dim": n,
//                     "center": [...], "rho": rho}
// ---------------------------------------------------------------------------

inline json target_to_json(const Target& t, const RegularBall& b) {
  json j;
  j["type"] = t.is_sphere() ? "sphere" : "euclidean";
  j["dim"] = t.dim();
  j["center"] = std::vector<double>(b.center.data(), b.center.data() + b.center.size());
  j["rho"] = b.rho;
  return j;
}

inline std::pair<Target, RegularBall> target_from_json(const json& j) {
  const json& type = require(j, "type", "/target");
  if (!type.is_string()) throw ValidationError("/target/type: expected string");
  const std::string kind = type.get<std::string>();
  if (kind != "sphere" && kind != "euclidean")
    throw ValidationError("/target/type: must be \"sphere\" or \"euclidean\"");
  const int dim = static_cast<int>(require_number(j, "dim", "/target"));
  Target t = kind == "sphere" ? Target::sphere(dim) : Target::euclidean(dim);
  const auto center = number_array(require(j, "center", "/target"), "/target/center");
  if (static_cast<int>(center.size()) != t.ambient_dim())
    throw ValidationError("/target/center: wrong length for declared dim");
  Vec c(t.ambient_dim());
  for (int i = 0; i < c.size(); ++i) c[i] = center[static_cast<std::size_t>(i)];
  const double rho = require_number(j, "rho", "/target");
  try {
    return {t, RegularBall::make(t, c, rho)};
  } catch (const std::exception& e) {
    throw ValidationError(std::string("/target: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Map files: {"domain": file ref, "target": descriptor, "values": [[...]]}
// ---------------------------------------------------------------------------

inline json map_to_json(const MapState& u, const std::string& domain_ref) {
  json j;
  j["domain"] = domain_ref;
  j["target"] = target_to_json(u.target(), u.ball());
  json vals = json::array();
  for (const Vec& v : u.values()) {
    json row = json::array();
    for (int k = 0; k < v.size(); ++k) row.push_back(v[k]);
    vals.push_back(std::move(row));
  }
  j["values"] = std::move(vals);
  return j;
}

inline MapState map_from_json(const json& j, DomainPtr domain) {
  auto [target, ball] = target_from_json(require(j, "target", ""));
  const json& vals = require(j, "values", "");
  if (!vals.is_array() || static_cast<int>(vals.size()) != domain->size())
    throw ValidationError("/values: must list one value per domain point");
  std::vector<Vec> values(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const auto row = number_array(vals[i], "/values/" + std::to_string(i));
    if (static_cast<int>(row.size()) != target.ambient_dim())
      throw ValidationError("/values/" + std::to_string(i) + ": wrong coordinate count");
    Vec v(target.ambient_dim());
    for (int k = 0; k < v.size(); ++k) v[k] = row[static_cast<std::size_t>(k)];
    values[i] = std::move(v);
  }
  try {
    return MapState(std::move(domain), target, ball, std::move(values));
  } catch (const std::exception& e) {
    throw ValidationError(std::string("/values: ") + e.what());
  }
}

/// Loads a map file, resolving its "domain" reference relative to the map's
/// own directory.
inline MapState load_map(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  const json& ref = require(j, "domain", "");
  if (!ref.is_string()) throw ValidationError("/domain: expected file reference string");
  std::filesystem::path dpath(ref.get<std::string>());
  if (dpath.is_relative()) dpath = path.parent_path() / dpath;
  auto domain = std::make_shared<PointCloudSpace>(domain_from_json(read_json_file(dpath)));
  return map_from_json(j, std::move(domain));
}

// ---------------------------------------------------------------------------
// CSV coordinate ingestion: one point per line, comma-separated coordinates.
// ---------------------------------------------------------------------------

inline std::pair<int, std::vector<double>> read_csv_points(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open: " + path.string());
  std::vector<double> coords;
  int dim = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    int count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        coords.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                              ": expected number, got '" + cell + "'");
      }
      ++count;
    }
    if (dim == -1) dim = count;
    if (count != dim)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
  }
  if (dim < 1 || dim > 3) throw ValidationError(path.string() + ": dimension must be 1..3");
  return {dim, std::move(coords)};
}

// ---------------------------------------------------------------------------
// Run manifests: content hashes + resolved configuration, emitted with every
// output so identical invocations reproduce outputs byte for byte.
// ---------------------------------------------------------------------------

inline std::string fnv64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string hash_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open for hashing: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return fnv64_hex(ss.str());
}

inline constexpr const char* kToolVersion = "ksharm 0.1.0";

inline json make_manifest(const std::string& command, json config,
                          const std::vector<std::filesystem::path>& inputs,
                          std::uint64_t seed) {
  json j;
  j["command"] = command;
  j["config"] = std::move(config);
  json hashes;
  for (const auto& p : inputs) hashes[p.string()] = hash_file(p);
  j["input_hashes"] = std::move(hashes);
  j["tool_version"] = kToolVersion;
  j["seed"] = seed;
  return j;
}

// ---------------------------------------------------------------------------
// Report serializers
// ---------------------------------------------------------------------------

inline json energy_report_to_json(const EnergyReport& rep) {
  json j;
  j["r"] = rep.r;
  j["total"] = rep.total;
  j["per_point_ks"] = rep.per_point_ks;
  j["excluded_mass_fraction"] = rep.excluded_mass_fraction;
  return j;
}

inline json solve_result_to_json(const SolveResult& res, const std::string& domain_ref) {
  json j;
  j["map"] = map_to_json(res.map, domain_ref);
  j["energy_trace"] = res.energy_trace;
  j["cauchy_trace"] = res.cauchy_trace;
  j["projection_events"] = res.projection_events;
  j["converged"] = res.converged;
  j["sweeps_used"] = res.sweeps_used;
  j["final_max_move"] = res.final_max_move;
  return j;
}

inline json scaling_study_to_json(const ScalingStudy& study) {
  json j;
  j["kind"] = study.kind == EstimateKind::I ? "estimateI" : "estimateII";
  json rows = json::array();
  for (const auto& pt : study.points) {
    json row;
    row["scale"] = pt.scale;
    row["p95_positive"] = pt.p95_positive;
    row["max_positive"] = pt.max_positive;
    row["positive_count"] = pt.positive_count;
    rows.push_back(std::move(row));
  }
  j["scales"] = std::move(rows);
  if (study.slope)
    j["slope"] = *study.slope;
  else
    j["slope"] = nullptr;
  return j;
}

}  // namespace ksh::io
