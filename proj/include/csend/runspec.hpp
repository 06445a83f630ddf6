#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "csend/analysis.hpp"
#include "csend/protocols.hpp"
#include "csend/simnet.hpp"

// Campaign execution: a RunSpec describes a batch of independent trials; the
// runner fans them out over worker threads, keeps results in trial order, and
// renders them as CSV. Identical specs (seed included) always produce
// byte-identical CSV.
namespace csend::cli {

struct RunSpec {
    proto::ProtocolKind protocol = proto::ProtocolKind::Pcs;
    std::uint32_t n1 = 4;
    std::uint32_t f1 = 1;
    std::uint32_t n2 = 4;
    std::uint32_t f2 = 1;
    sim::NetworkConfig network;
    sim::AdversaryStrategy adversary;
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    std::uint64_t delta = 4;           // async backoff unit
    std::uint32_t parallel_rounds = 1; // async steps launched immediately
    std::uint64_t max_pulses = 100000;
    std::uint64_t max_iters = 0;       // probing cap, 0 = protocol default

    // Throws config_error on contradictions (n <= 2f, bad probabilities,
    // zero trials). Returns human-readable warnings for list-protocol specs
    // whose worst-case placement can defeat the list, which stay runnable so
    // the failure mode can be studied.
    std::vector<std::string> validate() const;
};

struct TrialResult {
    proto::TrialStats stats;
    bool violation = false;   // an internal invariant broke during the trial
    std::string diagnostic;
};

// Runs one trial. The trial's whole random state derives from (spec.seed,
// trial_index): fault placement, coins, network, adversary. When trace_out is
// given the run records events and copies them out (also on violation).
TrialResult run_single_trial(const RunSpec& spec, std::uint64_t trial_index,
                             sim::Trace* trace_out = nullptr);

struct CampaignResult {
    std::vector<TrialResult> trials;  // indexed by trial number

    bool any_violation() const;
};

// Default worker count: the CSEND_JOBS environment variable, else 1.
unsigned default_jobs();

// jobs == 0 consults default_jobs(). Results are identical for every jobs
// value; only wall time changes.
CampaignResult run_campaign(const RunSpec& spec, unsigned jobs = 0);

// The stable per-trial schema.
const char* csv_header();

void write_csv(std::ostream& os, const RunSpec& spec, const CampaignResult& result);

// Analytic sweep: one row per f in [0, f_max], expectation and reference
// curves at cluster sizes n = 2f+1 and n = 3f+1, decimals at 12 significant
// digits.
void write_sweep_csv(std::ostream& os, unsigned f_max);

// One empirically-validated sweep cell.
struct SweepRow {
    proto::ProtocolKind protocol;
    std::uint32_t n1, f1, n2, f2;
    analysis::Rational analytic;
    analysis::Rational empirical_mean;
    std::uint64_t empirical_max = 0;
    std::uint64_t trials = 0;
    double ci95 = 0.0;
    bool ok = false;  // |mean - analytic| within ci95
};

SweepRow sweep_point(proto::ProtocolKind kind, std::uint32_t n1, std::uint32_t f1,
                     std::uint32_t n2, std::uint32_t f2, std::uint64_t trials, std::uint64_t seed,
                     unsigned jobs = 0);

// Empirical sweep: per f, the probing protocols at n = 2f+1 and n = 3f+1
// under the worst-case adversary, against their analytic expectations.
void write_empirical_sweep_csv(std::ostream& os, unsigned f_max, std::uint64_t trials,
                               std::uint64_t seed, unsigned jobs = 0);

}  // namespace csend::cli
