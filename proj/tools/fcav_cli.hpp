#pragma once

// Command-line front end. Every subcommand resolves an experiment config
// (JSON file, then flag overrides), runs, and writes a CSV plus a JSON
// manifest. Exit codes: 0 ok, 1 assumption violation or failed check,
// 2 runtime or usage error.

#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fcav/acceptance.hpp"
#include "fcav/fcav.hpp"

namespace fcav::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitError = 2;

/// Flag values as parsed; unset optionals defer to the config file.
struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out;
  std::optional<std::string> model;
  std::map<std::string, double> params;
  std::optional<std::string> dspec, kspec;
  std::optional<std::string> grid;
  // budgets
  std::optional<long> pop_size, sweeps, eval_samples, restarts, pos_trials, graphs, n;
  // operation-specific
  std::string kind = "planted";
  std::string graph_path;
  int theta = 0;
  bool waive_pos = false;
  bool inject_corruption = false;
  bool no_determinism = false;
  std::vector<int> only;
};

/// Fully resolved experiment: model, grid, seed and budget.
struct ExperimentConfig {
  std::string operation;
  std::string model_name;
  Json model_json;
  std::string grid_param;
  std::vector<double> grid_values;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  long pop_size = 10'000, sweeps = 200, eval_samples = 100'000, restarts = 1, pos_trials = 10'000, graphs = 100, n = 10;
  std::string out;

  Json to_json() const {
    return Json{{"operation", operation},
                {"model", model_json},
                {"grid", {{"param", grid_param}, {"values", grid_values}}},
                {"seed", seed},
                {"budget",
                 {{"pop_size", pop_size},
                  {"sweeps", sweeps},
                  {"eval_samples", eval_samples},
                  {"restarts", restarts},
                  {"pos_trials", pos_trials},
                  {"graphs", graphs},
                  {"n", n}}}};
  }

  /// Model at a grid value (or the base model when param is empty).
  ModelSpec model_at(std::optional<double> value = std::nullopt) const {
    Json j = model_json;
    if (value && !grid_param.empty()) {
      j["params"][grid_param] = *value;
      if (grid_param == "d" && j.value("model", std::string()) != "kspin") j.erase("dspec");
      if (grid_param == "k") j.erase("kspec");
    }
    return model_from_json(j);
  }

  SupOptions sup_options() const {
    SupOptions s;
    s.restarts = static_cast<int>(restarts);
    s.pd.pop_size = pop_size;
    s.pd.sweeps = static_cast<int>(sweeps);
    s.eval_samples = eval_samples;
    s.workers = workers;
    return s;
  }
};

inline std::vector<double> parse_grid_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, "grid value '" + item + "' is not a number");
    }
  }
  return out;
}

inline ExperimentConfig resolve(const std::string& operation, const Flags& f) {
  ExperimentConfig c;
  c.operation = operation;
  Json file = Json::object();
  if (!f.config_path.empty()) {
    try {
      file = Json::parse(read_text(f.config_path));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::Parse, "config '" + f.config_path + "': " + e.what());
    }
    if (!file.is_object()) throw Error(ErrorCode::Parse, "config '" + f.config_path + "' must be a JSON object");
    if (file.contains("operation") && file.at("operation").get<std::string>() != operation)
      throw Error(ErrorCode::InvalidArgument,
                  "config is for operation '" + file.at("operation").get<std::string>() + "', not '" + operation + "'");
  }
  c.model_json = file.value("model", Json::object());
  if (f.model) c.model_json["model"] = *f.model;
  for (const auto& [k, v] : f.params) c.model_json["params"][k] = v;
  if (f.dspec) c.model_json["dspec"] = *f.dspec;
  if (f.kspec) c.model_json["kspec"] = *f.kspec;
  c.model_name = c.model_json.value("model", std::string());

  if (file.contains("grid")) {
    c.grid_param = file["grid"].at("param").get<std::string>();
    c.grid_values = file["grid"].at("values").get<std::vector<double>>();
  }
  if (f.grid) {
    const auto eq = f.grid->find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Parse, "--grid expects param=v1,v2,...");
    c.grid_param = f.grid->substr(0, eq);
    c.grid_values = parse_grid_values(f.grid->substr(eq + 1));
  }

  c.seed = f.seed.value_or(file.value("seed", std::uint64_t{1}));
  c.workers = f.workers.value_or(file.value("workers", default_workers()));
  if (c.workers == 0) throw Error(ErrorCode::InvalidArgument, "workers must be positive");
  const Json budget = file.value("budget", Json::object());
  auto pick = [&](const std::optional<long>& flag, const char* key, long& slot) {
    slot = flag.value_or(budget.value(key, slot));
    if (slot <= 0) throw Error(ErrorCode::InvalidArgument, std::string("budget '") + key + "' must be positive");
  };
  pick(f.pop_size, "pop_size", c.pop_size);
  pick(f.sweeps, "sweeps", c.sweeps);
  pick(f.eval_samples, "eval_samples", c.eval_samples);
  pick(f.restarts, "restarts", c.restarts);
  pick(f.pos_trials, "pos_trials", c.pos_trials);
  pick(f.graphs, "graphs", c.graphs);
  pick(f.n, "n", c.n);
  c.out = !f.out.empty() ? f.out : file.value("output", std::string());
  return c;
}

/// Writes CSV and manifest to <out>.csv / <out>.manifest.json, or the CSV to
/// stdout when no output prefix is set.
inline void emit(const ExperimentConfig& c, const CsvTable& table, const Stopwatch& sw, std::ostream& out,
                 const Json& extra = Json::object()) {
  if (c.out.empty()) {
    out << table.str();
    return;
  }
  write_text(c.out + ".csv", table.str());
  Json manifest = make_manifest(c.operation, c.to_json(), c.seed, sw.seconds());
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  write_text(c.out + ".manifest.json", manifest.dump(2) + "\n");
}

inline std::string yes_no(bool b) { return b ? "1" : "0"; }

inline FactorGraph obtain_graph(const ExperimentConfig& c, const Flags& f, const ModelSpec& model,
                                std::optional<Assignment>* sigma = nullptr) {
  if (!f.graph_path.empty()) return graph_from_string(read_text(f.graph_path), model.family);
  const int n = static_cast<int>(c.n);
  if (f.kind == "null") return sample_null(n, model.dspec, model.kspec, model.family, c.seed);
  if (f.kind == "planted") {
    const DegreeSequence seq = sample_degree_sequence(n, model.dspec, model.kspec, derive_seed(c.seed, 0));
    Rng rng = substream(c.seed, 1);
    const Assignment s = uniform_assignment(n, model.q(), rng);
    if (sigma) *sigma = s;
    return sample_planted(seq, s, model.family, f.theta, derive_seed(c.seed, 2));
  }
  if (f.kind == "nishimori") {
    NishimoriDraw d = sample_nishimori(n, model.dspec, model.kspec, model.family, c.seed, n > 16);
    if (sigma) *sigma = d.sigma;
    if (f.theta == 0) return d.graph;
    std::vector<int> vars(static_cast<std::size_t>(f.theta));
    std::iota(vars.begin(), vars.end(), 0);
    return pin_to(d.graph, vars, std::vector<int>(d.sigma.spins.begin(), d.sigma.spins.begin() + f.theta));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown --kind '" + f.kind + "' (null, planted, nishimori)");
}

inline int op_check(const Flags& f, std::ostream& out) {
  Stopwatch sw;
  const ExperimentConfig c = resolve("check", f);
  const ModelSpec model = c.model_at();
  PosOptions pos;
  pos.trials = c.pos_trials;
  pos.seed = derive_seed(c.seed, 0x905);
  pos.workers = c.workers;
  const SymResult sym = check_sym(*model.family);
  const std::vector<CheckReport> reports = {check_deg(model.dspec, model.kspec), sym.report, check_bal(*model.family),
                                            check_pos(*model.family, pos)};
  CsvTable table({"check", "passed", "detail", "witness", "note"});
  bool ok = true;
  std::ostringstream text;
  text << "model " << model.name << " (q=" << model.q() << ")\n";
  for (const auto& r : reports) {
    ok = ok && r.passed;
    text << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (r.name == "SYM" && sym.xi) text << "  xi = " << format_number(*sym.xi);
    if (r.witness) text << "  witness: " << *r.witness;
    if (!r.note.empty()) text << "  note: " << r.note;
    text << '\n';
    std::string witness = r.witness.value_or("");
    std::replace(witness.begin(), witness.end(), ',', ';');
    table.add_row({r.name, yes_no(r.passed), format_number(r.detail), witness, r.note});
  }
  table.add_row({"xi", yes_no(sym.xi.has_value()), sym.xi ? format_number(*sym.xi) : "nan", "", ""});
  if (c.out.empty()) {
    out << text.str();
  } else {
    out << text.str();
    emit(c, table, sw, out);
  }
  return ok ? kExitOk : kExitViolation;
}

inline int op_sample(const Flags& f, std::ostream& out) {
  Stopwatch sw;
  const ExperimentConfig c = resolve("sample", f);
  const ModelSpec model = c.model_at();
  std::optional<Assignment> sigma;
  const FactorGraph g = obtain_graph(c, f, model, &sigma);
  CsvTable table({"variable", "spin"});
  if (sigma)
    for (int i = 0; i < sigma->n(); ++i) table.add_row({std::to_string(i), std::to_string((*sigma)[static_cast<std::size_t>(i)])});
  if (c.out.empty()) {
    out << graph_to_string(g);
    return kExitOk;
  }
  write_text(c.out + ".graph", graph_to_string(g));
  emit(c, table, sw, out, Json{{"kind", f.kind}, {"graph_digest", digest_hex(graph_to_string(g))}});
  return kExitOk;
}

inline int op_exact(const Flags& f, std::ostream& out) {
  Stopwatch sw;
  const ExperimentConfig c = resolve("exact", f);
  const ModelSpec model = c.model_at();
  const FactorGraph g = obtain_graph(c, f, model);
  const BoltzmannSummary s = partition_function(g, true, {}, c.workers);
  CsvTable table({"quantity", "index", "value"});
  table.add_row({"log_z", "", format_number(s.log_z)});
  table.add_row({"log_z_per_n", "", format_number(s.log_z / g.n())});
  table.add_row({"two_point", "", format_number(s.correlation.value_or(std::nan("")))});
  for (int i = 0; i < g.n(); ++i)
    for (int z = 0; z < g.q(); ++z)
      table.add_row({"marginal", std::to_string(i) + ":" + std::to_string(z),
                     format_number(s.marginals[static_cast<std::size_t>(i)][static_cast<std::size_t>(z)])});
  emit(c, table, sw, out);
  return kExitOk;
}

inline int op_bp(const Flags& f, std::ostream& out) {
  Stopwatch sw;
  const ExperimentConfig c = resolve("bp", f);
  const ModelSpec model = c.model_at();
  const FactorGraph g = obtain_graph(c, f, model);
  const BPState st = bp_run(g, static_cast<int>(c.sweeps) * 5, 0.5, 1e-10);
  const auto marg = bp_marginals(st);
  CsvTable table({"quantity", "index", "value"});
  table.add_row({"bethe", "", format_number(bethe_instance(st))});
  table.add_row({"iterations", "", std::to_string(st.iterations)});
  table.add_row({"converged", "", yes_no(st.converged)});
  table.add_row({"last_change", "", format_number(st.last_change)});
  for (int i = 0; i < g.n(); ++i)
    for (int z = 0; z < g.q(); ++z)
      table.add_row({"marginal", std::to_string(i) + ":" + std::to_string(z),
                     format_number(marg[static_cast<std::size_t>(i)][static_cast<std::size_t>(z)])});
  emit(c, table, sw, out);
  return kExitOk;
}

inline int op_bethe(const Flags& f, std::ostream& out) {
  Stopwatch sw;
  const ExperimentConfig c = resolve("bethe", f);
  const ModelSpec model = c.model_at();
  require_xi(model);
  const SupBethe s = sup_bethe(model, c.sup_options(), c.seed);
  CsvTable table({"quantity", "tag", "value", "stderr"});
  for (const auto& cand : s.candidates)
    table.add_row({"candidate", cand.tag, format_number(cand.estimate.value), format_number(cand.estimate.stderr)});
  table.add_row({"sup", s.tag, format_number(s.value), format_number(s.stderr)});
  table.add_row({"phi_a", "", format_number(annealed_free_entropy(model)), "0"});
  table.add_row({"information", "", format_number(information_term(model)), "0"});
  emit(c, table, sw, out, Json{{"heuristic_sup", s.heuristic}});
  return kExitOk;
}

inline int op_mi_scan(const Flags& f, std::ostream& out) {
  Stopwatch sw;
  ExperimentConfig c = resolve("mi-scan", f);
  if (c.grid_values.empty()) {
    c.grid_param = c.grid_param.empty() ? "eta" : c.grid_param;
    c.grid_values = {c.model_at().params.count(c.grid_param) ? c.model_at().params.at(c.grid_param) : 0.0};
  }
  std::vector<MIResult> results(c.grid_values.size());
  parallel_for(c.grid_values.size(), c.workers, [&](std::size_t i) {
    MIOptions mo;
    mo.sup = c.sup_options();
    mo.sup.workers = 1;
    mo.waive_pos = f.waive_pos;
    mo.pos.trials = c.pos_trials;
    mo.pos.seed = derive_seed(c.seed, 0x905);
    results[i] = mutual_information(c.model_at(c.grid_values[i]), mo, derive_seed(c.seed, i));
  });
  CsvTable table({c.grid_param, "mi", "stderr", "information", "sup", "sup_tag", "phi_a"});
  for (std::size_t i = 0; i < results.size(); ++i) {
    const MIResult& r = results[i];
    table.add_row({format_number(c.grid_values[i]), format_number(r.value), format_number(r.stderr),
                   format_number(r.information), format_number(r.sup.value), r.sup.tag,
                   format_number(annealed_free_entropy(c.model_at(c.grid_values[i])))});
  }
  emit(c, table, sw, out, Json{{"pos_waived", f.waive_pos}});
  return kExitOk;
}

inline int op_threshold(const Flags& f, std::ostream& out) {
  Stopwatch sw;
  const ExperimentConfig c = resolve("threshold", f);
  if (c.grid_values.empty()) throw Error(ErrorCode::InvalidArgument, "threshold needs a grid (--grid param=v1,v2,...)");
  ScanOptions so;
  so.sup = c.sup_options();
  const ScanResult r = threshold_scan([&](double v) { return c.model_at(v); }, c.grid_values, {}, so, c.seed, c.workers);
  CsvTable table({c.grid_param, "b_uniform", "b_pd_uniform_init", "b_pd_planted_init", "comparator", "phi_a", "sup",
                  "stderr", "tag", "crosses"});
  for (const ScanRow& row : r.rows)
    table.add_row({format_number(row.param), format_number(row.b_uniform), format_number(row.b_pd_uniform_init),
                   format_number(row.b_pd_planted_init), format_number(row.comparator), format_number(row.phi_a),
                   format_number(row.sup), format_number(row.stderr), row.tag, yes_no(row.crosses)});
  Json extra{{"threshold", r.threshold ? Json(*r.threshold) : Json(nullptr)},
             {"bracket", r.bracket ? Json::array({r.bracket->first, r.bracket->second}) : Json(nullptr)}};
  emit(c, table, sw, out, extra);
  return kExitOk;
}

inline int op_selftest(const Flags& f, std::ostream& out) {
  Stopwatch sw;
  AcceptanceOptions o;
  if (f.seed) o.seed = *f.seed;
  o.workers = f.workers.value_or(default_workers());
  o.inject_corruption = f.inject_corruption;
  o.determinism = !f.no_determinism;
  o.only = f.only;
  const auto results = run_acceptance(o, [&](const CriterionResult& r) { out << format_result_line(r) << std::endl; });
  bool ok = true;
  for (const auto& r : results) ok = ok && r.passed;
  out << (ok ? "selftest: all criteria passed" : "selftest: FAILURES") << std::endl;
  if (!f.out.empty()) {
    write_text(f.out + ".csv", std::string(kCsvSchemaLine) + "\n" + csv_bodies(results));
    Json verdicts = Json::array();
    for (const auto& r : results) verdicts.push_back({{"criterion", r.id}, {"passed", r.passed}, {"seconds", r.seconds}});
    Json manifest = make_manifest("selftest", Json{{"seed", o.seed}, {"inject_corruption", o.inject_corruption}}, o.seed, sw.seconds());
    manifest["verdicts"] = verdicts;
    write_text(f.out + ".manifest.json", manifest.dump(2) + "\n");
  }
  return ok ? kExitOk : kExitViolation;
}

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::AssumptionViolation:
    case ErrorCode::SymViolation:
      return kExitViolation;
    default:
      return kExitError;
  }
}

inline void error_record(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
  err << Json{{"error", {{"code", code}, {"message", message}, {"exit_code", exit_code}}}}.dump() << std::endl;
}

/// Entry point; args excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"factor-cavity: sparse random factor graphs, exact oracles and the Bethe variational formula", "fcav"};
  app.require_subcommand(1);
  Flags f;
  using Op = int (*)(const Flags&, std::ostream&);
  const std::vector<std::tuple<std::string, std::string, Op>> ops = {
      {"check", "run the DEG, SYM, BAL and POS checks", op_check},
      {"sample", "sample a null, planted or Nishimori graph", op_sample},
      {"exact", "partition function and marginals by enumeration", op_exact},
      {"bp", "belief propagation on one graph", op_bp},
      {"bethe", "maximise the Bethe functional by population dynamics", op_bethe},
      {"mi-scan", "mutual information over a parameter grid", op_mi_scan},
      {"threshold", "scan for the condensation threshold", op_threshold},
      {"selftest", "run the acceptance suite", op_selftest}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, op] : ops) {
    CLI::App* s = app.add_subcommand(name, help);
    subs.push_back(s);
    s->add_option("--config", f.config_path, "JSON experiment config");
    s->add_option("--seed", f.seed, "base seed");
    s->add_option("--workers", f.workers, "worker cap (default: FCAV_WORKERS or hardware threads)");
    s->add_option("--out", f.out, "output prefix for <out>.csv and <out>.manifest.json");
    if (name == "selftest") {
      s->add_flag("--inject-corruption", f.inject_corruption, "plant a negative weight entry before the SYM criterion");
      s->add_flag("--no-determinism", f.no_determinism, "skip the rerun criterion");
      s->add_option("--only", f.only, "run only these criteria");
      continue;
    }
    s->add_option("--model", f.model, "ldgm, sbm, potts, assortative-sbm or kspin");
    for (const char* p : {"eta", "beta", "q", "d", "k", "r"})
      s->add_option_function<double>(std::string("--") + p, [&f, p](double v) { f.params[p] = v; }, std::string("model parameter ") + p);
    s->add_option("--dspec", f.dspec, "variable degree law, e.g. 3 or 2:0.5,4:0.5 or po:2.5 (Poisson)");
    s->add_option("--kspec", f.kspec, "factor arity law");
    s->add_option("--grid", f.grid, "param=v1,v2,... for mi-scan and threshold");
    s->add_option("--pop-size", f.pop_size, "population size");
    s->add_option("--sweeps", f.sweeps, "population dynamics sweeps");
    s->add_option("--eval-samples", f.eval_samples, "Monte Carlo samples per Bethe evaluation");
    s->add_option("--restarts", f.restarts, "population dynamics restarts per initialisation");
    s->add_option("--pos-trials", f.pos_trials, "POS falsifier trials");
    s->add_option("--graphs", f.graphs, "planted graphs for Monte Carlo estimates");
    s->add_option("--n", f.n, "number of variables for sampled graphs");
    s->add_option("--kind", f.kind, "null, planted or nishimori");
    s->add_option("--graph", f.graph_path, "read the graph from this file instead of sampling");
    s->add_option("--theta", f.theta, "number of pinned variables");
    s->add_flag("--waive-pos", f.waive_pos, "do not require the POS check");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help_out, help_err;
    const int code = app.exit(e, help_out, help_err);
    out << help_out.str();
    if (code != 0) {
      err << help_err.str();
      return kExitError;
    }
    return kExitOk;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      return std::get<2>(ops[i])(f, out);
    } catch (const Error& e) {
      const int code = exit_code_for(e);
      error_record(err, to_string(e.code()), e.what(), code);
      return code;
    } catch (const std::exception& e) {
      error_record(err, "RuntimeError", e.what(), kExitError);
      return kExitError;
    }
  }
  return kExitError;
}

}  // namespace fcav::cli
