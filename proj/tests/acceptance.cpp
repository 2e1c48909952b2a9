// Acceptance run: verify-all twice with the default configuration, the second
// run checked byte for byte against the first. Prints one PASS/FAIL line per
// criterion. Exits 0 once the report is complete; --strict exits with the
// verify-all code instead.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <string>

#include "dhs/harness.hpp"

using namespace dhs;
namespace fs = std::filesystem;

namespace {

std::string summary(const CriterionResult& c) {
  std::size_t passed = 0;
  std::string failing;
  for (const auto& it : c.items) {
    if (it.verdict == Verdict::pass) {
      ++passed;
      continue;
    }
    if (!failing.empty()) failing += "; ";
    failing += it.label + " (" + verdict_name(it.verdict) + ": " + it.classification + ")";
  }
  char head[160];
  std::snprintf(head, sizeof head, "%zu/%zu items, %.1f s of %.0f s", passed, c.items.size(), c.seconds, c.budget);
  return failing.empty() ? head : std::string(head) + " | " + failing;
}

}  // namespace

int main(int argc, char** argv) {
  std::string base = "acceptance_runs";
  bool strict = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0)
      strict = true;
    else
      base = argv[i];
  }
  const fs::path first_dir = fs::path(base) / "first", second_dir = fs::path(base) / "second";
  fs::remove_all(first_dir);
  fs::remove_all(second_dir);

  RunConfig cfg;
  cfg.output_dir = first_dir.string();
  std::cerr << "first run into " << first_dir << '\n';
  verify_all(cfg, &std::cerr);

  cfg.output_dir = second_dir.string();
  cfg.reference_dir = first_dir.string();
  std::cerr << "second run into " << second_dir << ", reference " << first_dir << '\n';
  const auto report = verify_all(cfg, &std::cerr);

  for (const auto& c : report.criteria) {
    const bool pass = c.verdict == Verdict::pass;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL")
              << (c.verdict == Verdict::flagged ? " (flagged)" : "") << "  " << c.title << "  [" << summary(c) << "]\n";
  }
  std::cout << "verdict: " << (second_dir / "verdict.json").string() << '\n';
  return strict ? report.exit_code() : 0;
}
