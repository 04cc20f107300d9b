#pragma once

// Acceptance suite. Each criterion returns a verdict, a one-line summary and
// a CSV table of the numbers behind it; the determinism criterion reruns the
// others and compares their CSV bodies byte for byte.

#include <functional>
#include <string>
#include <vector>

#include "fcav/bp.hpp"
#include "fcav/exact.hpp"
#include "fcav/io.hpp"

namespace fcav {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string summary;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  CsvTable table{{"criterion"}};
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240521;
  unsigned workers = 1;
  /// Run the determinism criterion (reruns criteria 1-9).
  bool determinism = true;
  /// Replace one ldgm table entry by a negative value before the SYM criterion.
  bool inject_corruption = false;
  /// Only run these criteria (empty: all).
  std::vector<int> only;
};

namespace acceptance {

inline std::string num(double x) { return format_number(x); }

/// Short form for parameter labels.
inline std::string lbl(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

inline double binary_entropy(double eta) { return -eta * std::log(eta) - (1.0 - eta) * std::log(1.0 - eta); }

inline CriterionResult nishimori(const AcceptanceOptions& o) {
  CriterionResult r;
  r.id = 1;
  r.title = "Nishimori identity by full enumeration";
  r.budget_seconds = 10;
  r.table = CsvTable({"model", "param", "max_discrepancy", "terms"});
  double worst = 0.0;
  const struct {
    std::string name;
    double param;
    ModelSpec model;
  } cases[] = {{"sbm", 0.7, sbm(2, 0.7, 2)},
               {"ldgm", 0.25, ldgm(0.25, DegreeSpec::constant(2), DegreeSpec::constant(2))}};
  for (const auto& c : cases) {
    const auto rep = nishimori_check(3, c.model.dspec, c.model.kspec, c.model.family, 1e-10, derive_seed(o.seed, 1));
    worst = std::max(worst, rep.max_discrepancy);
    r.table.add_row({c.name, lbl(c.param), num(rep.max_discrepancy), std::to_string(rep.terms)});
  }
  r.passed = worst <= 1e-10;
  r.summary = "max discrepancy " + num(worst) + " (limit 1e-10)";
  return r;
}

inline CriterionResult sharp(const AcceptanceOptions&) {
  CriterionResult r;
  r.id = 2;
  r.title = "Colour-first planted construction equals the reweighted law";
  r.budget_seconds = 30;
  r.table = CsvTable({"model", "degrees", "sigma", "theta", "graphs", "max_difference"});
  const struct {
    std::string name;
    ModelSpec model;
  } cases[] = {{"sbm-0.7", sbm(2, 0.7, 2)},
               {"ldgm-0.25", ldgm(0.25, DegreeSpec::constant(2), DegreeSpec::constant(2))},
               {"sbm-0", sbm(2, 0.0, 2)}};
  DegreeSequence balanced;
  balanced.n = 3;
  balanced.var_degrees = {2, 1, 1};
  balanced.fac_arities = {2, 2};
  DegreeSequence pruned = balanced;
  pruned.var_degrees = {2, 2, 1};
  pruned.pruned = true;
  double worst = 0.0;
  for (const auto& c : cases)
    for (const DegreeSequence* seq : {&balanced, &pruned})
      for (int code = 0; code < 8; ++code)
        for (int theta : {0, 1}) {
          Assignment sigma({code >> 2 & 1, code >> 1 & 1, code & 1}, 2);
          const GraphLaw def = planted_law_definition(*seq, sigma, *c.model.family, theta);
          const GraphLaw sh = planted_law_sharp(*seq, sigma, *c.model.family, theta);
          const double diff = max_law_difference(def, sh);
          worst = std::max(worst, diff);
          std::string degrees;
          for (int d : seq->var_degrees) degrees += std::to_string(d);
          r.table.add_row({c.name, degrees, std::to_string(code), std::to_string(theta), std::to_string(def.size()), num(diff)});
        }
  r.passed = worst <= 1e-10;
  r.summary = "max termwise difference " + num(worst) + " over " + std::to_string(r.table.rows()) + " (sequence, sigma, theta) cases";
  return r;
}

inline CriterionResult sym(const AcceptanceOptions& o) {
  CriterionResult r;
  r.id = 3;
  r.title = "SYM constants";
  r.budget_seconds = 1;
  r.table = CsvTable({"model", "param", "xi", "expected", "abs_error", "passed"});
  bool ok = true;
  double worst = 0.0;
  auto record = [&](const std::string& name, const std::string& param, const WeightFamily& family, double expected,
                    double tol) {
    const auto res = check_sym(family);
    const double xi = res.xi.value_or(std::numeric_limits<double>::quiet_NaN());
    const double err = std::abs(xi - expected);
    const bool pass = res.report.passed && err <= tol;
    ok = ok && pass;
    if (res.xi) worst = std::max(worst, err);
    r.table.add_row({name, param, num(xi), num(expected), num(err), pass ? "1" : "0"});
  };
  const DegreeSpec ks = parse_degree_spec("2:0.5,3:0.5");
  // "exactly": agreement to a few units in the last place
  constexpr double exact_tol = 4 * std::numeric_limits<double>::epsilon();
  for (double eta : {0.05, 0.25, 0.45}) {
    ModelSpec m = ldgm(eta, DegreeSpec::constant(3), ks);
    if (o.inject_corruption && eta == 0.05) {
      auto corrupted = std::make_shared<WeightFamily>(2);
      for (int k : m.family->arities())
        for (std::size_t t = 0; t < m.family->tables(k).size(); ++t) {
          WeightTable w = m.family->tables(k)[t];
          if (k == 2 && t == 0) w.values[0] = -0.5;
          corrupted->add(std::move(w), m.family->masses(k)[t]);
        }
      m.family = corrupted;
    }
    record("ldgm", "eta=" + lbl(eta), *m.family, 1.0, exact_tol);
  }
  for (double beta : {0.5, 1.0, 2.0}) record("kspin", "beta=" + lbl(beta), *kspin(beta, 2.0, ks, 6).family, 1.0, exact_tol);
  for (int q : {2, 3})
    for (double beta : {0.5, 2.0})
      record("sbm", "q=" + std::to_string(q) + ",beta=" + lbl(beta), *sbm(q, beta, 3).family, (q - 1 + std::exp(-beta)) / q,
             1e-12);
  r.passed = ok;
  r.summary = ok ? "all constants match (max error " + num(worst) + ")" : "SYM check failed or constant mismatch";
  return r;
}

inline std::vector<std::pair<std::string, ModelSpec>> bethe_grid() {
  std::vector<std::pair<std::string, ModelSpec>> out;
  const DegreeSpec ks = parse_degree_spec("2:0.5,3:0.5");
  for (double eta : {0.1, 0.25, 0.4})
    for (const char* d : {"2", "3", "2:0.5,4:0.5"})
      out.emplace_back("ldgm eta=" + lbl(eta) + " d=" + d, ldgm(eta, parse_degree_spec(d), ks));
  for (double beta : {0.5, 1.0, 2.0})
    for (int d : {3, 4, 5}) out.emplace_back("sbm q=3 beta=" + lbl(beta) + " d=" + std::to_string(d), sbm(3, beta, d));
  for (double beta : {0.5, 1.0, 2.0})
    for (double d : {1.0, 2.0, 3.0}) out.emplace_back("kspin beta=" + lbl(beta) + " d=" + lbl(d), kspin(beta, d, ks, 6));
  return out;
}

inline CriterionResult uniform_atom(const AcceptanceOptions& o) {
  CriterionResult r;
  r.id = 4;
  r.title = "Bethe functional at the uniform atom equals phi_a";
  r.budget_seconds = 60;
  r.table = CsvTable({"model", "phi_a", "closed_form", "closed_error", "monte_carlo", "stderr", "mc_error"});
  bool ok = true;
  std::size_t idx = 0;
  for (const auto& [name, model] : bethe_grid()) {
    const double phi = annealed_free_entropy(model);
    const double closed = bethe_uniform_closed_form(model);
    const auto mc = bethe_estimate(SimplexPopulation::uniform_atom(model.q()), model, 100'000, derive_seed(o.seed, 40 + idx++), o.workers);
    const bool pass = std::abs(closed - phi) <= 1e-12 && std::abs(mc.value - phi) <= std::max(3 * mc.stderr, 1e-12);
    ok = ok && pass;
    r.table.add_row({name, num(phi), num(closed), num(std::abs(closed - phi)), num(mc.value), num(mc.stderr),
                     num(std::abs(mc.value - phi))});
  }
  r.passed = ok;
  r.summary = std::to_string(r.table.rows()) + " models; closed form within 1e-12 and Monte Carlo within 3 SE" +
              (ok ? "" : " FAILED");
  return r;
}

inline CriterionResult ldgm_information(const AcceptanceOptions& o) {
  CriterionResult r;
  r.id = 5;
  r.title = "LDGM information term and zero information at eta = 1/2";
  r.budget_seconds = 60;
  r.table = CsvTable({"quantity", "eta", "k", "value", "reference", "error_or_stderr"});
  bool ok = true;
  for (double eta : {0.05, 0.1, 0.25, 0.4, 0.5})
    for (int k : {2, 3, 4}) {
      const ModelSpec m = ldgm(eta, DegreeSpec::constant(k), DegreeSpec::constant(k));
      const double info = information_per_arity(*m.family, k);
      const double ref = std::log(2.0) - binary_entropy(eta);
      ok = ok && std::abs(info - ref) <= 1e-12;
      r.table.add_row({"information", lbl(eta), std::to_string(k), num(info), num(ref), num(std::abs(info - ref))});
    }
  MIOptions mo;
  mo.sup.pd.pop_size = 2000;
  mo.sup.pd.sweeps = 50;
  mo.sup.eval_samples = 100'000;
  mo.sup.workers = o.workers;
  mo.pos.workers = o.workers;
  const ModelSpec half = ldgm(0.5, DegreeSpec::constant(3), parse_degree_spec("2:0.5,3:0.5"));
  const MIResult mi = mutual_information(half, mo, derive_seed(o.seed, 5));
  const bool mi_ok = std::abs(mi.value) <= std::max(3 * mi.stderr, 1e-12);
  ok = ok && mi_ok;
  r.table.add_row({"mutual_information", "0.5", "2:0.5,3:0.5", num(mi.value), "0", num(mi.stderr)});
  r.passed = ok;
  r.summary = "information term matches ln2 - H(eta) to 1e-12; MI(eta=1/2) = " + num(mi.value) + " +- " + num(mi.stderr);
  return r;
}

inline CriterionResult sbm_comparator_identity(const AcceptanceOptions&) {
  CriterionResult r;
  r.id = 6;
  r.title = "SBM uniform-atom value equals the closed-form comparator";
  r.budget_seconds = 5;
  r.table = CsvTable({"q", "d", "beta", "bethe_uniform", "comparator", "error"});
  double worst = 0.0;
  for (int q : {2, 3})
    for (int d : {3, 5})
      for (double beta : {0.5, 2.0}) {
        const ModelSpec m = sbm(q, beta, d);
        const double b = bethe_uniform_closed_form(m);
        const double c = sbm_comparator(q, d, beta);
        worst = std::max(worst, std::abs(b - c));
        r.table.add_row({std::to_string(q), std::to_string(d), lbl(beta), num(b), num(c), num(std::abs(b - c))});
      }
  r.passed = worst <= 1e-12;
  r.summary = "max error " + num(worst) + " (limit 1e-12)";
  return r;
}

inline CriterionResult finite_size_mi(const AcceptanceOptions& o) {
  CriterionResult r;
  r.id = 7;
  r.title = "Finite-size mutual information agrees with the variational formula";
  r.budget_seconds = 600;
  r.table = CsvTable({"eta", "mi_monte_carlo", "mc_stderr", "mutual_information", "formula_stderr", "difference", "allowed"});
  bool ok = true;
  std::string detail;
  for (double eta : {0.4, 0.45}) {
    const ModelSpec m = ldgm(eta, DegreeSpec::constant(2), DegreeSpec::constant(2));
    const auto mc = mi_monte_carlo(m, 12, 200, derive_seed(o.seed, 70 + static_cast<std::uint64_t>(eta * 100)), o.workers);
    MIOptions mo;
    mo.sup.pd.pop_size = 5000;
    mo.sup.pd.sweeps = 100;
    mo.sup.eval_samples = 100'000;
    mo.sup.workers = o.workers;
    mo.pos.workers = o.workers;
    const MIResult mi = mutual_information(m, mo, derive_seed(o.seed, 71));
    const double diff = std::abs(mc.value - mi.value);
    const double allowed = std::max(3 * std::hypot(mc.stderr, mi.stderr), 0.05);
    ok = ok && diff <= allowed;
    r.table.add_row({lbl(eta), num(mc.value), num(mc.stderr), num(mi.value), num(mi.stderr), num(diff), num(allowed)});
    detail += (detail.empty() ? "" : "; ") + std::string("eta=") + lbl(eta) + " diff " + num(diff);
  }
  r.passed = ok;
  r.summary = detail + " (allowed max(3 SE, 0.05))";
  return r;
}

inline CriterionResult pos_falsifier(const AcceptanceOptions& o) {
  CriterionResult r;
  r.id = 8;
  r.title = "POS falsifier";
  r.budget_seconds = 300;
  r.table = CsvTable({"family", "trials", "violations", "min_margin", "expected_violation", "verdict_ok"});
  const DegreeSpec ks = parse_degree_spec("2:0.5,3:0.5");
  const struct {
    std::string name;
    ModelSpec model;
    bool expect_violation;
  } cases[] = {{"ldgm eta=0.1", ldgm(0.1, DegreeSpec::constant(3), ks), false},
               {"ldgm eta=0.3", ldgm(0.3, DegreeSpec::constant(3), ks), false},
               {"kspin beta=1", kspin(1.0, 2.0, ks, 6), false},
               {"kspin beta=2", kspin(2.0, 2.0, ks, 6), false},
               {"assortative sbm q=2 beta=1", assortative_sbm(2, 1.0, 3), true}};
  bool ok = true;
  std::size_t idx = 0;
  for (const auto& c : cases) {
    PosOptions po;
    po.trials = 10'000;
    po.seed = derive_seed(o.seed, 80 + idx++);
    po.workers = o.workers;
    const CheckReport rep = check_pos(*c.model.family, po);
    const bool verdict = rep.passed != c.expect_violation;
    ok = ok && verdict;
    r.table.add_row({c.name, num(po.trials), num(rep.values.at("violations")), num(rep.values.at("min_margin")),
                     c.expect_violation ? "1" : "0", verdict ? "1" : "0"});
  }
  r.passed = ok;
  r.summary = ok ? "no violation for ldgm and k-spin; violation found for the assortative block model"
                 : "unexpected falsifier verdict";
  return r;
}

/// Random factor tree: each new factor attaches to one existing variable and
/// brings arity-1 fresh variables.
inline FactorGraph random_tree(const ModelSpec& model, int n_max, Rng& rng) {
  std::vector<Factor> factors;
  int n = 1;
  for (;;) {
    const int k = model.kspec.sample(rng);
    if (n + k - 1 > n_max) break;
    Factor f;
    f.weight_id = model.family->sample_index(k, rng);
    const int anchor = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    const int slot = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k)));
    for (int i = 0; i < k; ++i) f.vars.push_back(i == slot ? anchor : n++);
    factors.push_back(std::move(f));
  }
  std::vector<Pin> pins;
  if (n > 2 && uniform01(rng) < 0.5)
    pins.push_back({static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n))),
                    static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(model.q())))});
  return FactorGraph(n, model.q(), std::move(factors), model.family, std::move(pins));
}

inline CriterionResult bp_trees(const AcceptanceOptions& o) {
  CriterionResult r;
  r.id = 9;
  r.title = "Belief propagation is exact on trees";
  r.budget_seconds = 30;
  r.table = CsvTable({"model", "instance", "n", "m", "marginal_error", "bethe_error"});
  const DegreeSpec ks = parse_degree_spec("2:0.5,3:0.5");
  const struct {
    std::string name;
    ModelSpec model;
  } cases[] = {{"ldgm", ldgm(0.2, DegreeSpec::constant(3), ks)}, {"sbm", sbm(3, 1.0, 3)}, {"kspin", kspin(1.0, 2.0, ks, 6)}};
  double worst = 0.0;
  std::size_t idx = 0;
  for (const auto& c : cases) {
    Rng rng = substream(o.seed, 90 + idx++);
    for (int inst = 0; inst < 10; ++inst) {
      const FactorGraph g = random_tree(c.model, 12, rng);
      const auto exact = partition_function(g);
      const BPState st = bp_run(g, 5000, 0.5, 1e-14);
      const auto marg = bp_marginals(st);
      double merr = 0.0;
      for (int i = 0; i < g.n(); ++i)
        for (int s = 0; s < g.q(); ++s)
          merr = std::max(merr, std::abs(marg[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)] -
                                         exact.marginals[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)]));
      const double berr = std::abs(bethe_instance(st) - exact.log_z);
      worst = std::max({worst, merr, berr});
      r.table.add_row({c.name, std::to_string(inst), std::to_string(g.n()), std::to_string(g.m()), num(merr), num(berr)});
    }
  }
  r.passed = worst <= 1e-8;
  r.summary = "max error " + num(worst) + " over " + std::to_string(r.table.rows()) + " trees (limit 1e-8)";
  return r;
}

using CriterionFn = std::function<CriterionResult(const AcceptanceOptions&)>;

inline const std::vector<CriterionFn>& criteria() {
  static const std::vector<CriterionFn> all = {nishimori,      sharp,          sym,           uniform_atom, ldgm_information,
                                               sbm_comparator_identity, finite_size_mi, pos_falsifier, bp_trees};
  return all;
}

inline bool selected(const AcceptanceOptions& o, int id) {
  return o.only.empty() || std::find(o.only.begin(), o.only.end(), id) != o.only.end();
}

}  // namespace acceptance

/// Concatenated CSV bodies of a set of results, each preceded by its id.
inline std::string csv_bodies(const std::vector<CriterionResult>& results) {
  std::string out;
  for (const auto& r : results) out += "criterion " + std::to_string(r.id) + "\n" + r.table.body();
  return out;
}

/// Runs criteria 1-9 without timing or budget checks.
inline std::vector<CriterionResult> run_core_criteria(const AcceptanceOptions& o,
                                                      const std::function<void(const CriterionResult&)>& on_result = {}) {
  std::vector<CriterionResult> results;
  const auto& all = acceptance::criteria();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!acceptance::selected(o, static_cast<int>(i + 1))) continue;
    Stopwatch sw;
    CriterionResult r;
    try {
      r = all[i](o);
    } catch (const std::exception& e) {
      r.id = static_cast<int>(i + 1);
      r.title = "criterion " + std::to_string(i + 1);
      r.passed = false;
      r.summary = std::string("error: ") + e.what();
    }
    r.seconds = sw.seconds();
    if (r.budget_seconds > 0 && r.seconds > r.budget_seconds) {
      r.passed = false;
      r.summary += " [over runtime budget " + format_number(r.budget_seconds) + " s]";
    }
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

/// Full suite; criterion 10 reruns 1-9 and compares CSV bodies.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& o,
                                                   const std::function<void(const CriterionResult&)>& on_result = {}) {
  Stopwatch total;
  std::vector<CriterionResult> results = run_core_criteria(o, on_result);
  if (o.determinism && acceptance::selected(o, 10)) {
    CriterionResult r;
    r.id = 10;
    r.title = "Determinism: identical CSV bodies on rerun with the same seed";
    r.budget_seconds = 1200;
    AcceptanceOptions again = o;
    const auto rerun = run_core_criteria(again);
    const std::string a = csv_bodies(results), b = csv_bodies(rerun);
    r.table = CsvTable({"first_digest", "second_digest", "bytes"});
    r.table.add_row({digest_hex(a), digest_hex(b), std::to_string(a.size())});
    r.seconds = total.seconds();
    r.passed = a == b && r.seconds <= r.budget_seconds;
    r.summary = std::string(a == b ? "byte-identical" : "MISMATCH") + " CSV bodies (" + std::to_string(a.size()) +
                " bytes, digest " + digest_hex(a) + "); suite total " + format_number(std::round(r.seconds)) + " s";
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

inline std::string format_result_line(const CriterionResult& r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f s", r.seconds);
  return std::string(r.passed ? "[PASS]" : "[FAIL]") + " [PRIMARY] " + std::to_string(r.id) + ". " + r.title + ": " +
         r.summary + " (" + buf + ")";
}

}  // namespace fcav
