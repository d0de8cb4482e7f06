#pragma once

// CSV and JSON formats for samples, specs, sweep configs and results.
//
// CSV: headered, comma-separated, doubles written with 17 significant digits
// so a write/read round trip is exact. JSON keys are lower_snake_case.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "proxyci/bench.hpp"
#include "proxyci/ci_test.hpp"
#include "proxyci/error.hpp"
#include "proxyci/scm.hpp"

namespace proxyci {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- CSV ------------------------------------------------------------------

/// Named numeric columns of a headered CSV file, in file order.
struct CsvTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  const std::vector<double>* find(std::string_view name) const {
    for (std::size_t c = 0; c < names.size(); ++c)
      if (names[c] == name) return &columns[c];
    return nullptr;
  }
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc{} || ptr != last)
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": '" + std::string(s) + "' is not a number");
  return v;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty input: missing header");
  ++line_no;
  for (auto name : detail::split_commas(line)) {
    if (name.empty()) throw Error(ErrorCode::ParseError, "header has an empty column name");
    if (std::find(t.names.begin(), t.names.end(), name) != t.names.end())
      throw Error(ErrorCode::ParseError, "duplicate column '" + std::string(name) + "'");
    t.names.emplace_back(name);
  }
  t.columns.resize(t.names.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cells.size() != t.names.size())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                             " fields, header has " + std::to_string(t.names.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) t.columns[c].push_back(detail::parse_double(cells[c], line_no));
  }
  return t;
}

struct XywData {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;
};

/// Reads a CSV with columns x, y and w (any order; other columns are ignored).
inline XywData read_xyw_csv(std::istream& in) {
  const auto t = read_csv(in);
  XywData d;
  for (auto [name, dst] : {std::pair{"x", &d.x}, std::pair{"y", &d.y}, std::pair{"w", &d.w}}) {
    const auto* col = t.find(name);
    if (!col) throw Error(ErrorCode::ParseError, std::string("header lacks column '") + name + "'");
    *dst = *col;
  }
  return d;
}

inline void write_sample_csv(std::ostream& out, const ScmSample& s, bool with_latent) {
  out << (with_latent ? "x,y,w,u\n" : "x,y,w\n");
  for (std::size_t t = 0; t < s.size(); ++t) {
    out << format_double(s.x[t]) << ',' << format_double(s.y[t]) << ',' << format_double(s.w[t]);
    if (with_latent) out << ',' << format_double(s.u[t]);
    out << '\n';
  }
}

inline void write_error_table_csv(std::ostream& out, const ErrorTable& table) {
  auto rate = [](const std::optional<double>& r) { return r ? format_double(*r) : std::string("NA"); };
  out << "graph,n,l_w,l_x,type1,type2,failures,reps\n";
  for (const auto& c : table.cells)
    out << to_string(c.graph) << ',' << c.n << ',' << c.l_w << ',' << c.l_x << ',' << rate(c.type1) << ','
        << rate(c.type2) << ',' << c.failures << ',' << c.reps << '\n';
}

inline void write_dis_error_csv(std::ostream& out, const std::vector<DisErrorPoint>& curve) {
  out << "bins,bin_length,e_dis,cell_count\n";
  for (const auto& p : curve)
    out << p.bins << ',' << format_double(p.bin_length) << ',' << format_double(p.e_dis) << ',' << p.cell_count << '\n';
}

// ---- enum names -------------------------------------------------------------

namespace detail {

template <class E, std::size_t N>
E parse_enum(const std::string& s, const std::array<E, N>& values, ErrorCode code, const char* what) {
  for (E v : values)
    if (to_string(v) == s) return v;
  throw Error(code, std::string("unknown ") + what + " '" + s + "'");
}

}  // namespace detail

inline constexpr std::string_view to_string(LevelMode m) noexcept {
  return m == LevelMode::SingleLevel ? "single-level" : "all-levels";
}

inline LevelMode parse_level_mode(const std::string& s, ErrorCode code = ErrorCode::ConfigError) {
  return detail::parse_enum(s, std::array{LevelMode::SingleLevel, LevelMode::AllLevels}, code, "mode");
}
inline Graph parse_graph(const std::string& s, ErrorCode code = ErrorCode::SpecError) {
  return detail::parse_enum(s, std::array{Graph::Confounder, Graph::Mediator}, code, "graph");
}
inline FunctionKind parse_function(const std::string& s) {
  return detail::parse_enum(s, std::array{FunctionKind::Linear, FunctionKind::Tanh, FunctionKind::Sin,
                                          FunctionKind::Sigmoid, FunctionKind::Zero},
                            ErrorCode::SpecError, "function");
}
inline NoiseKind parse_noise_kind(const std::string& s) {
  return detail::parse_enum(s, kNoiseMenu, ErrorCode::SpecError, "noise kind");
}

// ---- JSON: results ------------------------------------------------------------

inline Json to_json(const TestResult& r, const TestConfig& cfg) {
  const auto& d = r.diagnostics;
  Json j;
  j["statistic"] = r.statistic;
  j["df"] = r.df;
  j["p_value"] = r.p_value;
  j["reject"] = r.reject;
  j["alpha"] = r.alpha;
  j["bins"] = {{"x", cfg.bins_x}, {"w", cfg.bins_w}, {"y", cfg.bins_y}};
  j["mode"] = to_string(cfg.mode);
  j["n"] = r.n;
  j["diagnostics"] = {{"x_cuts", d.x_partition.cuts()},
                      {"w_cuts", d.w_partition.cuts()},
                      {"y_cuts", d.y_partition.cuts()},
                      {"y_levels", d.y_levels},
                      {"q_rank", d.q_rank},
                      {"gram_pivot_ratio", d.gram_pivot_ratio},
                      {"min_search_pivot", d.min_search_pivot}};
  return j;
}

inline Json to_json(const NullDiagnostic& d) {
  Json j;
  j["df"] = d.df;
  j["ks_distance"] = d.ks_distance;
  j["mean"] = d.mean;
  j["failures"] = d.failures;
  j["degenerate"] = d.degenerate;
  j["statistics"] = d.statistics;
  return j;
}

inline Json to_json(const ErrorTable& t) {
  Json cells = Json::array();
  for (const auto& c : t.cells) {
    Json j;
    j["graph"] = to_string(c.graph);
    j["n"] = c.n;
    j["l_w"] = c.l_w;
    j["l_x"] = c.l_x;
    j["type1"] = c.type1 ? Json(*c.type1) : Json(nullptr);
    j["type2"] = c.type2 ? Json(*c.type2) : Json(nullptr);
    j["failures"] = c.failures;
    j["reps"] = c.reps;
    cells.push_back(std::move(j));
  }
  return cells;
}

inline Json to_json(const std::vector<DisErrorPoint>& curve) {
  Json out = Json::array();
  for (const auto& p : curve)
    out.push_back({{"bins", p.bins}, {"bin_length", p.bin_length}, {"e_dis", p.e_dis}, {"cell_count", p.cell_count}});
  return out;
}

// ---- JSON: spec -------------------------------------------------------------

inline Json to_json(const Noise& n) {
  return {{"kind", to_string(n.kind)}, {"scale", n.scale}, {"rate", n.rate}, {"shape", n.shape}};
}

inline Json to_json(const ScmSpec& s) {
  Json j;
  j["graph"] = to_string(s.graph);
  j["edge_xy"] = s.edge_xy;
  j["effect_strength"] = s.effect_strength;
  j["f_link"] = to_string(s.f_link);
  j["f_w"] = to_string(s.f_w);
  j["f_y"] = to_string(s.f_y);
  j["f_xy"] = to_string(s.f_xy);
  j["noise_root"] = to_json(s.noise_root);
  j["noise_link"] = to_json(s.noise_link);
  j["noise_w"] = to_json(s.noise_w);
  j["noise_y"] = to_json(s.noise_y);
  j["smooth"] = s.smooth;
  j["jump"] = s.jump ? Json{{"location", s.jump->location}, {"magnitude", s.jump->magnitude}} : Json(nullptr);
  return j;
}

namespace detail {

// Typed field access that reports schema problems with the given error code.
class JsonReader {
 public:
  JsonReader(const Json& j, ErrorCode code, std::string where) : j_(j), code_(code), where_(std::move(where)) {
    if (!j.is_object()) fail("expected an object");
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, v] : j_.items())
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail("unknown key '" + k + "'");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const Json& at(const char* key) const { return j_.at(key); }

  template <class T>
  void get(const char* key, T& dst) const {
    if (!j_.contains(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(std::string("field '") + key + "' has the wrong type");
    }
  }

  std::string str(const char* key, std::string fallback) const {
    get(key, fallback);
    return fallback;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw Error(code_, where_ + ": " + msg); }

 private:
  const Json& j_;
  ErrorCode code_;
  std::string where_;
};

template <class T>
void get_unsigned(const JsonReader& r, const char* key, T& dst) {
  if (!r.has(key)) return;
  const Json& v = r.at(key);
  if (!v.is_number_unsigned()) r.fail(std::string("field '") + key + "' must be a non-negative integer");
  dst = v.get<T>();
}

}  // namespace detail

inline Noise noise_from_json(const Json& j, const std::string& where) {
  detail::JsonReader r(j, ErrorCode::SpecError, where);
  r.allow_only({"kind", "scale", "rate", "shape"});
  Noise n;
  n.kind = parse_noise_kind(r.str("kind", "gaussian"));
  r.get("scale", n.scale);
  r.get("rate", n.rate);
  r.get("shape", n.shape);
  return n;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline ScmSpec spec_from_json(const Json& j) {
  detail::JsonReader r(j, ErrorCode::SpecError, "spec");
  r.allow_only({"graph", "edge_xy", "effect_strength", "f_link", "f_w", "f_y", "f_xy", "noise_root", "noise_link",
                "noise_w", "noise_y", "smooth", "jump"});
  ScmSpec s;
  s.graph = parse_graph(r.str("graph", "confounder"));
  r.get("edge_xy", s.edge_xy);
  r.get("effect_strength", s.effect_strength);
  s.f_link = parse_function(r.str("f_link", "linear"));
  s.f_w = parse_function(r.str("f_w", "linear"));
  s.f_y = parse_function(r.str("f_y", "linear"));
  s.f_xy = parse_function(r.str("f_xy", "linear"));
  for (auto [key, dst] : {std::pair{"noise_root", &s.noise_root}, std::pair{"noise_link", &s.noise_link},
                          std::pair{"noise_w", &s.noise_w}, std::pair{"noise_y", &s.noise_y}})
    if (r.has(key)) *dst = noise_from_json(r.at(key), std::string("spec.") + key);
  r.get("smooth", s.smooth);
  if (r.has("jump")) {
    detail::JsonReader jr(r.at("jump"), ErrorCode::SpecError, "spec.jump");
    jr.allow_only({"location", "magnitude"});
    Jump jump;
    jr.get("location", jump.location);
    jr.get("magnitude", jump.magnitude);
    s.jump = jump;
  }
  s.validate();
  return s;
}

// ---- JSON: sweep config -----------------------------------------------------

inline Json to_json(const SweepConfig& c) {
  Json graphs = Json::array();
  for (auto g : c.graphs) graphs.push_back(to_string(g));
  Json j;
  j["graphs"] = graphs;
  j["sample_sizes"] = c.sample_sizes;
  j["bin_numbers"] = c.bin_numbers;
  j["bins_x"] = c.bins_x;
  j["bins_y"] = c.bins_y;
  j["replications"] = c.replications;
  j["spec_seeds"] = c.spec_seeds;
  j["alpha"] = c.alpha;
  j["mode"] = to_string(c.mode);
  j["base_seed"] = c.base_seed;
  j["threads"] = c.threads;
  return j;
}

inline SweepConfig sweep_config_from_json(const Json& j) {
  detail::JsonReader r(j, ErrorCode::ConfigError, "sweep config");
  r.allow_only({"graphs", "sample_sizes", "bin_numbers", "bins_x", "bins_y", "replications", "spec_seeds", "alpha",
                "mode", "base_seed", "threads"});
  SweepConfig c;
  if (r.has("graphs")) {
    std::vector<std::string> names;
    r.get("graphs", names);
    c.graphs.clear();
    for (const auto& n : names) c.graphs.push_back(parse_graph(n, ErrorCode::ConfigError));
  }
  for (auto [key, dst] : {std::pair{"sample_sizes", &c.sample_sizes}, std::pair{"bin_numbers", &c.bin_numbers}}) {
    if (!r.has(key)) continue;
    if (!r.at(key).is_array()) r.fail(std::string("field '") + key + "' must be an array");
    dst->clear();
    for (const auto& v : r.at(key)) {
      if (!v.is_number_unsigned()) r.fail(std::string("field '") + key + "' must hold non-negative integers");
      dst->push_back(v.get<std::size_t>());
    }
  }
  detail::get_unsigned(r, "bins_x", c.bins_x);
  detail::get_unsigned(r, "bins_y", c.bins_y);
  detail::get_unsigned(r, "replications", c.replications);
  detail::get_unsigned(r, "spec_seeds", c.spec_seeds);
  detail::get_unsigned(r, "base_seed", c.base_seed);
  detail::get_unsigned(r, "threads", c.threads);
  r.get("alpha", c.alpha);
  c.mode = parse_level_mode(r.str("mode", "single-level"));
  c.validate();
  return c;
}

inline Json parse_json(std::istream& in, ErrorCode code) {
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(code, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace proxyci
