#pragma once

#include <string>
#include <vector>

// Self-contained validation suites: each one checks a body of claims about
// the library (formula equivalences, protocol bounds, Monte Carlo
// expectations, safety under fuzzing, liveness, reproducibility) and reports
// a single pass/fail verdict with a one-line summary. The CLI and the
// acceptance runner are thin wrappers around these.
namespace csend::verify {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;   // key numbers on success, first failure otherwise
    double seconds = 0.0;
};

// Knobs for the scalable suites; the defaults are the acceptance settings.
struct SuiteOptions {
    unsigned fc_max_n = 8;          // fault-pattern grid extends to this n
    std::uint64_t fuzz_traces = 10000;  // randomized traces in the safety suite
};

// Registered suite names, in execution order.
std::vector<std::string> suite_names();

// Runs one suite by name; throws std::invalid_argument for unknown names.
// Internal exceptions fail the suite instead of escaping.
SuiteResult run_suite(const std::string& name, const SuiteOptions& options = {});

// Runs every registered suite.
std::vector<SuiteResult> run_all(const SuiteOptions& options = {});

}  // namespace csend::verify
