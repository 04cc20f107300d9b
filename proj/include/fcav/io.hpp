#pragma once

// Serialization: the line-oriented graph format, JSON model configs, CSV
// output and run manifests.

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fcav/models.hpp"

#ifndef FCAV_GIT_DESCRIBE
#define FCAV_GIT_DESCRIBE "unknown"
#endif

namespace fcav {

using Json = nlohmann::json;

inline constexpr const char* kCsvSchemaLine = "# factor-cavity schema v1";

// ---------------------------------------------------------------------------
// Graph text format:
//   n m q
//   arity weight-id v_1 ... v_k      (one line per factor)
//   var spin                          (one line per pin)

inline void write_graph(std::ostream& out, const FactorGraph& g) {
  out << g.n() << ' ' << g.m() << ' ' << g.q() << '\n';
  for (const Factor& f : g.factors()) {
    out << f.arity() << ' ' << f.weight_id;
    for (int v : f.vars) out << ' ' << v;
    out << '\n';
  }
  for (const Pin& p : g.pins()) out << p.var << ' ' << p.spin << '\n';
}

inline std::string graph_to_string(const FactorGraph& g) {
  std::ostringstream s;
  write_graph(s, g);
  return s.str();
}

inline FactorGraph read_graph(std::istream& in, const FamilyPtr& family = nullptr) {
  int n = 0, m = 0, q = 0;
  if (!(in >> n >> m >> q)) throw Error(ErrorCode::Parse, "graph: missing header");
  std::vector<Factor> factors(static_cast<std::size_t>(std::max(m, 0)));
  for (Factor& f : factors) {
    int k = 0;
    if (!(in >> k >> f.weight_id)) throw Error(ErrorCode::Parse, "graph: truncated factor line");
    if (k < 1) throw Error(ErrorCode::Parse, "graph: arity must be positive");
    f.vars.resize(static_cast<std::size_t>(k));
    for (int& v : f.vars)
      if (!(in >> v)) throw Error(ErrorCode::Parse, "graph: truncated factor line");
  }
  std::vector<Pin> pins;
  Pin p;
  while (in >> p.var >> p.spin) pins.push_back(p);
  if (!in.eof()) throw Error(ErrorCode::Parse, "graph: malformed pin line");
  return FactorGraph(n, q, std::move(factors), family, std::move(pins));
}

inline FactorGraph graph_from_string(const std::string& text, const FamilyPtr& family = nullptr) {
  std::istringstream s(text);
  return read_graph(s, family);
}

// ---------------------------------------------------------------------------
// Degree specs and families.

inline Json degree_to_json(const DegreeSpec& d) {
  return Json{{"support", d.support()}, {"mass", d.mass()}, {"max_degree", d.max_degree()}};
}

inline DegreeSpec degree_from_json(const Json& j) {
  if (j.is_string()) return parse_degree_spec(j.get<std::string>());
  if (j.is_number_integer()) return DegreeSpec::constant(j.get<int>());
  if (!j.is_object()) throw Error(ErrorCode::Parse, "degree spec must be a string, integer or table");
  if (j.contains("poisson"))
    return DegreeSpec::poisson(j.at("poisson").get<double>(), j.value("max_degree", DegreeSpec::kDefaultMaxDegree));
  return DegreeSpec(j.at("support").get<std::vector<int>>(), j.at("mass").get<std::vector<double>>(),
                    j.value("max_degree", DegreeSpec::kDefaultMaxDegree));
}

inline Json family_to_json(const WeightFamily& f) {
  Json tables = Json::array();
  for (int k : f.arities())
    for (std::size_t t = 0; t < f.tables(k).size(); ++t) {
      const WeightTable& w = f.tables(k)[t];
      tables.push_back(Json{{"arity", k},
                            {"mass", f.masses(k)[t]},
                            {"label", w.label},
                            {"log_normalizer", w.log_normalizer},
                            {"values", w.values}});
    }
  return Json{{"q", f.q()}, {"tables", tables}};
}

inline std::shared_ptr<WeightFamily> family_from_json(const Json& j) {
  auto f = std::make_shared<WeightFamily>(j.at("q").get<int>());
  for (const Json& t : j.at("tables")) {
    WeightTable w;
    w.arity = t.at("arity").get<int>();
    w.values = t.at("values").get<std::vector<double>>();
    w.label = t.value("label", std::string());
    w.log_normalizer = t.value("log_normalizer", 0.0);
    f->add(std::move(w), t.at("mass").get<double>());
  }
  return f;
}

/// Builds a registered model by name from numeric parameters and optional
/// degree specs.
inline ModelSpec build_model(const std::string& name, const std::map<std::string, double>& params,
                             const std::optional<DegreeSpec>& dspec = std::nullopt,
                             const std::optional<DegreeSpec>& kspec = std::nullopt) {
  auto get = [&](const char* key, std::optional<double> fallback = std::nullopt) {
    const auto it = params.find(key);
    if (it != params.end()) return it->second;
    if (fallback) return *fallback;
    throw Error(ErrorCode::InvalidArgument, "model '" + name + "' needs parameter '" + key + "'");
  };
  if (name == "ldgm")
    return ldgm(get("eta"), dspec.value_or(DegreeSpec::constant(static_cast<int>(get("d", 3.0)))),
                kspec.value_or(DegreeSpec::constant(static_cast<int>(get("k", 3.0)))));
  if (name == "sbm" || name == "potts" || name == "assortative-sbm") {
    const int q = static_cast<int>(get("q", 2.0));
    const double beta = get("beta");
    ModelSpec m = name == "assortative-sbm" ? assortative_sbm(q, beta, static_cast<int>(get("d", 3.0)))
                                            : sbm(q, beta, dspec.value_or(DegreeSpec::constant(static_cast<int>(get("d", 3.0)))));
    if (name == "potts") {
      m.name = "potts";
      m.focus = "null";
    }
    return m;
  }
  if (name == "kspin")
    return kspin(get("beta"), get("d"), kspec.value_or(DegreeSpec::constant(2)), static_cast<int>(get("r", 6.0)));
  throw Error(ErrorCode::InvalidArgument, "unknown model '" + name + "'");
}

/// Full model record; families are written table by table so that a round
/// trip reproduces the model exactly.
inline Json model_to_json(const ModelSpec& m) {
  return Json{{"model", m.name},
              {"params", m.params},
              {"focus", m.focus},
              {"dspec", degree_to_json(m.dspec)},
              {"kspec", degree_to_json(m.kspec)},
              {"family", family_to_json(*m.family)}};
}

inline ModelSpec model_from_json(const Json& j) {
  const std::string name = j.value("model", std::string("custom"));
  std::map<std::string, double> params;
  if (j.contains("params")) params = j.at("params").get<std::map<std::string, double>>();
  std::optional<DegreeSpec> dspec, kspec;
  if (j.contains("dspec")) dspec = degree_from_json(j.at("dspec"));
  if (j.contains("kspec")) kspec = degree_from_json(j.at("kspec"));
  ModelSpec m;
  if (j.contains("family")) {
    require(dspec && kspec, "model config with explicit family needs dspec and kspec");
    m.name = name;
    m.params = params;
    m.dspec = *dspec;
    m.kspec = *kspec;
    m.family = family_from_json(j.at("family"));
    m.focus = j.value("focus", std::string("planted"));
  } else {
    m = build_model(name, params, dspec, kspec);
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// CSV, digests and manifests.

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  // shortest text that round-trips to the same double
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(std::vector<std::string> cells) {
    require(cells.size() == columns_.size(), "csv: row width does not match header");
    rows_.push_back(std::move(cells));
  }

  /// Header row and data rows, without the schema comment.
  std::string body() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(columns_);
    for (const auto& r : rows_) line(r);
    return out.str();
  }

  std::string str() const { return std::string(kCsvSchemaLine) + "\n" + body(); }
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Strips the schema comment (and any other comment lines) from CSV text.
inline std::string csv_body(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') out << line << '\n';
  return out.str();
}

inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string digest_hex(const std::string& text) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << fnv1a(text);
  return s.str();
}

inline std::string git_describe() { return FCAV_GIT_DESCRIBE; }

inline Json make_manifest(const std::string& operation, const Json& inputs, std::uint64_t seed, double wall_seconds) {
  return Json{{"operation", operation},
              {"inputs_digest", digest_hex(inputs.dump())},
              {"inputs", inputs},
              {"git_describe", git_describe()},
              {"seed", seed},
              {"wall_time_seconds", wall_seconds}};
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace fcav
