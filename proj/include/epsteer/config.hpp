#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metrics.hpp"
#include "optimizer.hpp"
#include "path.hpp"

namespace epsteer {

/// Invalid configuration; what() starts with the offending field path.
struct ConfigError : InputError {
  ConfigError(const std::string& path, const std::string& msg) : InputError(path + ": " + msg), field(path) {}
  std::string field;
};

enum class RunMethod { Uniform, Stable, Optimize, Compare, Sheets };

inline std::string to_string(RunMethod m) {
  switch (m) {
    case RunMethod::Uniform: return "uniform";
    case RunMethod::Stable: return "stable";
    case RunMethod::Optimize: return "optimize";
    case RunMethod::Compare: return "compare";
    case RunMethod::Sheets: return "sheets";
  }
  return "unknown";
}

inline std::optional<RunMethod> parse_run_method(const std::string& s) {
  for (auto m : {RunMethod::Uniform, RunMethod::Stable, RunMethod::Optimize, RunMethod::Compare, RunMethod::Sheets})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

enum class TargetPreset { Chiral, Nonchiral };

/// H(x, y) = h0 + x hx + y hy; absent means the built-in family.
struct AffineFamilySpec {
  CMatrix h0, hx, hy;
};

struct SheetSpec {
  double x_min = -2.0, x_max = 2.0;
  int nx = 80;  // even counts keep nodes off the built-in EPs
  double y_min = -2.0, y_max = 2.0;
  int ny = 80;
};

struct RunConfig {
  std::optional<AffineFamilySpec> family;
  LoopSpec loop;
  RunMethod method = RunMethod::Stable;
  std::vector<Direction> directions{Direction::CCW};
  std::vector<Mode> modes{Mode::A};
  double p0 = 0.9;
  TargetPreset targets = TargetPreset::Chiral;
  double purity = 0.9;
  std::vector<double> purity_levels;    // compare: time-to-purity sweep, empty skips it
  std::optional<double> total_time;     // uniform; absent: shortest time meeting CCW A->B purity
  GaConfig ga;
  SheetSpec sheets;
  std::string out = "out";

  HamiltonianFamily make_family() const {
    return family ? HamiltonianFamily::affine(family->h0, family->hx, family->hy) : HamiltonianFamily::builtin();
  }
  ConstraintSet constraints() const {
    return targets == TargetPreset::Chiral ? ConstraintSet::chiral(purity) : ConstraintSet::nonchiral(purity);
  }
};

/// Command-line values; each one set here replaces the file value.
struct ConfigOverrides {
  std::optional<std::string> method;
  std::optional<std::string> direction;  // "ccw", "cw" or "ccw,cw"
  std::optional<std::string> mode;       // "A", "B" or "A,B"
  std::optional<double> p0;
  std::optional<double> purity;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

namespace detail {

// Reads one JSON object, tracking which keys were consumed so leftovers can
// be rejected by name.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string sub(const std::string& key) const { return path_ + "." + key; }

  const nlohmann::json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (const auto* v = get(key)) out = as<T>(*v, sub(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(sub(k), "unknown key");
  }

  template <class T>
  static T as(const nlohmann::json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
        throw ConfigError(path, "expected a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
    }
    return v.get<T>();
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline ParameterPoint read_point(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(path, "expected a point [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline CMatrix read_matrix(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a square matrix (array of rows)");
  const auto n = static_cast<Eigen::Index>(v.size());
  CMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = v[r];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) throw ConfigError(rp, "row length must be " + std::to_string(n));
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& e = row[c];
      const std::string ep = rp + "[" + std::to_string(c) + "]";
      if (e.is_number())
        m(r, c) = e.get<double>();
      else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
        m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
      else
        throw ConfigError(ep, "expected a number or [re, im]");
    }
  }
  return m;
}

inline nlohmann::json write_matrix(const CMatrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t comma = s.find(',', start);
    const size_t end = comma == std::string::npos ? s.size() : comma;
    if (end > start) out.push_back(s.substr(start, end - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T, class Parse>
std::vector<T> read_enum_list(const nlohmann::json& v, const std::string& path, Parse parse) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array");
  std::vector<T> out;
  for (size_t i = 0; i < v.size(); ++i) {
    const std::string ip = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_string()) throw ConfigError(ip, "expected a string");
    try {
      out.push_back(parse(v[i].get<std::string>()));
    } catch (const InputError& e) {
      throw ConfigError(ip, e.what());
    }
  }
  return out;
}

}  // namespace detail

/// Range and consistency checks; throws ConfigError naming the field.
inline void validate(const RunConfig& c) {
  const std::string p = "config";
  auto unit_open = [&](double v, const std::string& field, const char* what) {
    if (!(v > 0.0)) throw ConfigError(p + "." + field, std::string(what) + " must be greater than 0");
    if (!(v < 1.0)) throw ConfigError(p + "." + field, std::string(what) + " must be less than 1");
  };
  unit_open(c.p0, "p0", "P₀");
  unit_open(c.purity, "purity", "purity");
  for (size_t i = 0; i < c.purity_levels.size(); ++i)
    unit_open(c.purity_levels[i], "purity_levels[" + std::to_string(i) + "]", "purity level");
  if (c.total_time && !(*c.total_time > 0.0 && std::isfinite(*c.total_time)))
    throw ConfigError(p + ".total_time", "must be positive and finite");

  const auto& l = c.loop;
  if (l.n_intervals < 3) throw ConfigError(p + ".loop.n_intervals", "must be >= 3");
  if (l.kind != LoopKind::Polyline) {
    if (!(l.radius_a > 0.0)) throw ConfigError(p + ".loop.radius_a", "must be positive");
    if (l.kind == LoopKind::Ellipse && !(l.radius_b > 0.0)) throw ConfigError(p + ".loop.radius_b", "must be positive");
  } else if (l.polyline.size() < 4 || !(l.polyline.front() == l.polyline.back())) {
    throw ConfigError(p + ".loop.polyline", "needs >= 3 distinct vertices and must close (first == last)");
  }

  auto no_dups = [&](const auto& v, const std::string& field) {
    for (size_t i = 0; i < v.size(); ++i)
      for (size_t k = 0; k < i; ++k)
        if (v[i] == v[k]) throw ConfigError(p + "." + field, "duplicate entry");
  };
  if (c.directions.empty()) throw ConfigError(p + ".directions", "must not be empty");
  if (c.modes.empty()) throw ConfigError(p + ".modes", "must not be empty");
  no_dups(c.directions, "directions");
  no_dups(c.modes, "modes");

  if (c.family) {
    const auto n = c.family->h0.rows();
    if (n != 2 || c.family->hx.rows() != n || c.family->hy.rows() != n)
      throw ConfigError(p + ".family", "mode conversion needs 2x2 matrices h0, hx, hy");
  }
  const auto& s = c.sheets;
  if (s.nx < 1 || s.ny < 1) throw ConfigError(p + ".sheets", "nx and ny must be >= 1");
  if (!(s.x_max >= s.x_min) || !(s.y_max >= s.y_min)) throw ConfigError(p + ".sheets", "empty region");
  try {
    c.ga.validate();
  } catch (const InputError& e) {
    throw ConfigError(p + ".ga", e.what());
  }
  if (c.out.empty()) throw ConfigError(p + ".out", "must not be empty");
}

/// Builds a config from JSON (missing keys keep their defaults) and validates it.
inline RunConfig parse_config(const nlohmann::json& j, const ConfigOverrides& flags = {}) {
  using detail::ObjectReader;
  RunConfig c;
  const nlohmann::json root = j.is_null() ? nlohmann::json::object() : j;
  ObjectReader top(root, "config");

  if (const auto* f = top.get("family")) {
    if (f->is_string()) {
      if (f->get<std::string>() != "builtin") throw ConfigError("config.family", "expected \"builtin\" or {h0, hx, hy}");
    } else {
      ObjectReader fr(*f, "config.family");
      AffineFamilySpec a;
      const std::pair<const char*, CMatrix*> parts[] = {{"h0", &a.h0}, {"hx", &a.hx}, {"hy", &a.hy}};
      for (const auto& [key, dst] : parts) {
        const auto* m = fr.get(key);
        if (!m) throw ConfigError(fr.sub(key), "missing");
        *dst = detail::read_matrix(*m, fr.sub(key));
      }
      fr.finish();
      c.family = std::move(a);
    }
  }

  if (const auto* lj = top.get("loop")) {
    ObjectReader lr(*lj, "config.loop");
    if (const auto* k = lr.get("kind")) {
      const auto s = ObjectReader::as<std::string>(*k, lr.sub("kind"));
      if (s == "circle") c.loop.kind = LoopKind::Circle;
      else if (s == "ellipse") c.loop.kind = LoopKind::Ellipse;
      else if (s == "polyline") c.loop.kind = LoopKind::Polyline;
      else throw ConfigError(lr.sub("kind"), "unknown loop kind '" + s + "' (circle, ellipse, polyline)");
    }
    if (const auto* v = lr.get("center")) c.loop.center = detail::read_point(*v, lr.sub("center"));
    lr.read("radius_a", c.loop.radius_a);
    lr.read("radius_b", c.loop.radius_b);
    lr.read("start_angle", c.loop.start_angle);
    lr.read("n_intervals", c.loop.n_intervals);
    if (const auto* v = lr.get("polyline")) {
      if (!v->is_array()) throw ConfigError(lr.sub("polyline"), "expected an array of points");
      for (size_t i = 0; i < v->size(); ++i)
        c.loop.polyline.push_back(detail::read_point((*v)[i], lr.sub("polyline") + "[" + std::to_string(i) + "]"));
    }
    lr.finish();
  }

  if (const auto* m = top.get("method")) {
    const auto s = ObjectReader::as<std::string>(*m, "config.method");
    const auto rm = parse_run_method(s);
    if (!rm) throw ConfigError("config.method", "unknown method '" + s + "' (uniform, stable, optimize, compare, sheets)");
    c.method = *rm;
  }
  if (const auto* v = top.get("directions"))
    c.directions = detail::read_enum_list<Direction>(*v, "config.directions", parse_direction);
  if (const auto* v = top.get("modes")) c.modes = detail::read_enum_list<Mode>(*v, "config.modes", parse_mode);
  top.read("p0", c.p0);
  if (const auto* t = top.get("targets")) {
    const auto s = ObjectReader::as<std::string>(*t, "config.targets");
    if (s == "chiral") c.targets = TargetPreset::Chiral;
    else if (s == "nonchiral") c.targets = TargetPreset::Nonchiral;
    else throw ConfigError("config.targets", "unknown preset '" + s + "' (chiral, nonchiral)");
  }
  top.read("purity", c.purity);
  if (const auto* v = top.get("purity_levels")) {
    if (!v->is_array()) throw ConfigError("config.purity_levels", "expected an array of numbers");
    for (size_t i = 0; i < v->size(); ++i)
      c.purity_levels.push_back(ObjectReader::as<double>((*v)[i], "config.purity_levels[" + std::to_string(i) + "]"));
  }
  if (const auto* v = top.get("total_time"); v && !v->is_null())
    c.total_time = ObjectReader::as<double>(*v, "config.total_time");

  if (const auto* gj = top.get("ga")) {
    ObjectReader gr(*gj, "config.ga");
    gr.read("population", c.ga.population);
    gr.read("generations", c.ga.generations);
    gr.read("crossover_rate", c.ga.crossover_rate);
    gr.read("mutation_rate", c.ga.mutation_rate);
    gr.read("sparsity_weight", c.ga.sparsity_weight);
    gr.read("penalty_weight", c.ga.penalty_weight);
    gr.read("seed", c.ga.seed);
    gr.read("elites", c.ga.elites);
    gr.read("tournament", c.ga.tournament);
    gr.read("dwell_cap", c.ga.dwell_cap);
    gr.read("threads", c.ga.threads);
    gr.finish();
  }
  if (const auto* sj = top.get("sheets")) {
    ObjectReader sr(*sj, "config.sheets");
    sr.read("x_min", c.sheets.x_min);
    sr.read("x_max", c.sheets.x_max);
    sr.read("nx", c.sheets.nx);
    sr.read("y_min", c.sheets.y_min);
    sr.read("y_max", c.sheets.y_max);
    sr.read("ny", c.sheets.ny);
    sr.finish();
  }
  top.read("out", c.out);
  top.finish();

  // Flags win over the file.
  if (flags.method) {
    const auto rm = parse_run_method(*flags.method);
    if (!rm) throw ConfigError("--method", "unknown method '" + *flags.method + "'");
    c.method = *rm;
  }
  auto list_flag = [](const std::string& s, const char* name, auto parse) {
    using T = decltype(parse(std::string{}));
    std::vector<T> out;
    try {
      for (const auto& item : detail::split_list(s)) out.push_back(parse(item));
    } catch (const InputError& e) {
      throw ConfigError(name, e.what());
    }
    return out;
  };
  if (flags.direction) c.directions = list_flag(*flags.direction, "--direction", parse_direction);
  if (flags.mode) c.modes = list_flag(*flags.mode, "--mode", parse_mode);
  if (flags.p0) c.p0 = *flags.p0;
  if (flags.purity) c.purity = *flags.purity;
  if (flags.seed) c.ga.seed = *flags.seed;
  if (flags.out) c.out = *flags.out;

  validate(c);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& file, const ConfigOverrides& flags = {}) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string(), "cannot open config file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(file.string(), std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j, flags);
}

/// Effective configuration with every default spelled out.
inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json j;
  if (c.family)
    j["family"] = {{"h0", detail::write_matrix(c.family->h0)},
                   {"hx", detail::write_matrix(c.family->hx)},
                   {"hy", detail::write_matrix(c.family->hy)}};
  else
    j["family"] = "builtin";

  const auto& l = c.loop;
  const char* kind = l.kind == LoopKind::Circle ? "circle" : l.kind == LoopKind::Ellipse ? "ellipse" : "polyline";
  json poly = json::array();
  for (const auto& pt : l.polyline) poly.push_back({pt.x, pt.y});
  j["loop"] = {{"kind", kind},
               {"center", {l.center.x, l.center.y}},
               {"radius_a", l.radius_a},
               {"radius_b", l.radius_b},
               {"start_angle", l.start_angle},
               {"n_intervals", l.n_intervals},
               {"polyline", poly}};
  j["method"] = to_string(c.method);
  j["directions"] = json::array();
  for (auto d : c.directions) j["directions"].push_back(to_string(d));
  j["modes"] = json::array();
  for (auto m : c.modes) j["modes"].push_back(to_string(m));
  j["p0"] = c.p0;
  j["targets"] = c.targets == TargetPreset::Chiral ? "chiral" : "nonchiral";
  j["purity"] = c.purity;
  j["purity_levels"] = c.purity_levels;
  j["total_time"] = c.total_time ? json(*c.total_time) : json(nullptr);
  const auto& g = c.ga;
  j["ga"] = {{"population", g.population},         {"generations", g.generations},
             {"crossover_rate", g.crossover_rate}, {"mutation_rate", g.mutation_rate},
             {"sparsity_weight", g.sparsity_weight}, {"penalty_weight", g.penalty_weight},
             {"seed", g.seed},                     {"elites", g.elites},
             {"tournament", g.tournament},         {"dwell_cap", g.dwell_cap},
             {"threads", g.threads}};
  const auto& s = c.sheets;
  j["sheets"] = {{"x_min", s.x_min}, {"x_max", s.x_max}, {"nx", s.nx},
                 {"y_min", s.y_min}, {"y_max", s.y_max}, {"ny", s.ny}};
  j["out"] = c.out;
  return j;
}

}  // namespace epsteer
