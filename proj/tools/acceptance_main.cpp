// Acceptance suite runner: one pass/fail line per criterion.

#include <iostream>

#include <CLI11.hpp>

#include "fcav/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"factor-cavity acceptance suite"};
  fcav::AcceptanceOptions options;
  options.workers = fcav::default_workers();
  std::string csv_path;
  app.add_option("--seed", options.seed, "base seed");
  app.add_option("--workers", options.workers, "worker threads");
  app.add_option("--only", options.only, "run only these criteria");
  app.add_flag("--no-determinism", [&](std::int64_t) { options.determinism = false; }, "skip the rerun criterion");
  app.add_option("--csv", csv_path, "write the concatenated CSV bodies here");
  CLI11_PARSE(app, argc, argv);

  const auto results = fcav::run_acceptance(options, [](const fcav::CriterionResult& r) {
    std::cout << fcav::format_result_line(r) << std::endl;
  });
  bool ok = true;
  for (const auto& r : results) ok = ok && r.passed;
  if (!csv_path.empty()) fcav::write_text(csv_path, std::string(fcav::kCsvSchemaLine) + "\n" + fcav::csv_bodies(results));
  std::cout << (ok ? "acceptance: all criteria passed" : "acceptance: FAILURES") << std::endl;
  return ok ? 0 : 1;
}
