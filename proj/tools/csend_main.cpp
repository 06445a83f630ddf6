#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "csend/analysis.hpp"
#include "csend/core.hpp"
#include "csend/protocols.hpp"
#include "csend/runspec.hpp"
#include "csend/simnet.hpp"
#include "csend/verify.hpp"

namespace {

namespace analysis = csend::analysis;
namespace cli = csend::cli;
namespace proto = csend::proto;
namespace sim = csend::sim;
namespace verify = csend::verify;
using analysis::BigInt;
using analysis::Rational;

std::string exact_and_decimal(const Rational& r) {
    std::ostringstream os;
    os << r << " = " << analysis::to_decimal_string(r);
    return os.str();
}

// "50:1.0,10:0.25" -> phases of (pulses, drop probability); pulses 0 holds
// the phase forever.
std::vector<sim::NetworkPhase> parse_schedule(const std::string& text) {
    std::vector<sim::NetworkPhase> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos) {
            throw csend::config_error("reliability phase needs pulses:drop, got " + part);
        }
        sim::NetworkPhase phase;
        std::size_t used = 0;
        phase.pulses = std::stoull(part.substr(0, colon), &used);
        if (used != colon) throw csend::config_error("bad pulse count in phase " + part);
        phase.drop_prob = std::stod(part.substr(colon + 1), &used);
        if (colon + 1 + used != part.size()) {
            throw csend::config_error("bad drop probability in phase " + part);
        }
        out.push_back(phase);
    }
    if (out.empty()) throw csend::config_error("empty reliability schedule");
    return out;
}

int run_analyze(std::uint32_t n1, std::uint32_t f1, std::uint32_t n2, std::uint32_t f2) {
    if (n1 <= 2 * f1 || n2 <= 2 * f2) {
        std::cerr << "clusters need n > 2f on both sides, got n1=" << n1 << " f1=" << f1
                  << " n2=" << n2 << " f2=" << f2 << "\n";
        return 2;
    }
    std::cout << "clusters: n1=" << n1 << " f1=" << f1 << " (non-faulty " << (n1 - f1)
              << "), n2=" << n2 << " f2=" << f2 << " (non-faulty " << (n2 - f2) << ")\n";

    const Rational probing = analysis::pcs_expected_steps(n1, f1, n2, f2);
    const bool third = n1 > 3 * f1 && n2 > 3 * f2;
    std::cout << "expected probing steps n1*n2/(nf1*nf2): " << exact_and_decimal(probing)
              << "  (bound " << (third ? "9/4, n > 3f both sides" : "4, n > 2f both sides")
              << ")\n";

    const std::uint32_t len = std::min(n1, n2);
    const std::uint32_t m1 = std::min(f1, len);
    const std::uint32_t m2 = std::min(f2, len);
    const BigInt fact = analysis::factorial(len);
    const BigInt total = fact * fact;
    std::cout << "fault patterns of equal lists, length " << len << " with " << m1 << " and "
              << m2 << " faulty entries (k = positions holding a faulty entry):\n";
    for (std::uint32_t k = std::max(m1, m2); k <= std::min(len, m1 + m2); ++k) {
        const BigInt fc = analysis::fc_closed(len, m1, m2, k);
        std::cout << "  k=" << k << "  pairs " << fc << "  share "
                  << analysis::to_decimal_string(Rational(fc, total)) << "\n";
    }

    if (m1 + m2 >= len) {
        std::cout << "position expectations are undefined here: with " << m1 << "+" << m2
                  << " faults in lists of length " << len
                  << ", some permutation pairs have no all-good position, so a list run can "
                     "fail outright\n";
    } else {
        std::cout << "expected probes to a good position (with replacement): PT = "
                  << exact_and_decimal(analysis::pt_exact(len, m1, m2)) << "\n";
        std::cout << "expected scan steps over a random permutation pair (without replacement): "
                  << exact_and_decimal(analysis::scan_expected_steps(len, m1, m2)) << "\n";
    }
    if (n1 == n2 && f1 == f2 && n1 == 2 * f1 + 1) {
        std::cout << "half-faulty diagonal, 4 - 2/(f+1) - f!^2/(2f)!: "
                  << exact_and_decimal(analysis::pt_equal_half(f1)) << "\n";
    }

    const auto curves = analysis::reference_curves(n1, f1, n2, f2);
    std::cout << "reference curves: pbs_cs_steps " << curves.pbs_cs_steps << " (or "
              << curves.pbs_cs_steps_3f << " at n > 3f), geobft_messages_optimistic "
              << curves.geobft_messages_optimistic << ", chainspace_messages "
              << curves.chainspace_messages << "\n";
    return 0;
}

int write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream out(path);
    if (!out) {
        std::cerr << "cannot open " << path << " for writing\n";
        return 2;
    }
    out << text;
    return 0;
}

int run_simulate(const cli::RunSpec& spec, const std::string& out_path,
                 const std::string& trace_path, unsigned jobs) {
    for (const auto& warning : spec.validate()) std::cerr << "warning: " << warning << "\n";
    const auto campaign = cli::run_campaign(spec, jobs);
    std::ostringstream csv;
    cli::write_csv(csv, spec, campaign);
    if (const int rc = write_text(out_path, csv.str()); rc != 0) return rc;

    if (campaign.any_violation()) {
        std::size_t index = 0;
        while (!campaign.trials[index].violation) ++index;
        sim::Trace trace;
        const auto replay = cli::run_single_trial(spec, index, &trace);
        std::cerr << "invariant violation in trial " << index << ": " << replay.diagnostic
                  << "\n";
        if (trace_path.empty()) {
            trace.write(std::cerr);
        } else {
            std::ofstream tf(trace_path);
            trace.write(tf);
            std::cerr << "offending trace written to " << trace_path << "\n";
        }
        return 1;
    }
    return 0;
}

int run_verify(const std::string& filter, const verify::SuiteOptions& options) {
    std::vector<std::string> selected;
    for (const auto& name : verify::suite_names()) {
        if (filter.empty() || name.rfind(filter, 0) == 0) selected.push_back(name);
    }
    if (selected.empty()) {
        std::cerr << "no suite starts with '" << filter << "'; available:";
        for (const auto& name : verify::suite_names()) std::cerr << ' ' << name;
        std::cerr << "\n";
        return 2;
    }
    std::size_t passed = 0;
    for (const auto& name : selected) {
        const auto result = verify::run_suite(name, options);
        std::cout << "suite " << result.name << ": " << (result.passed ? "PASS" : "FAIL") << " ("
                  << std::fixed << std::setprecision(1) << result.seconds << "s) "
                  << result.detail << "\n"
                  << std::defaultfloat;
        std::cout.flush();
        passed += result.passed ? 1 : 0;
    }
    std::cout << passed << " of " << selected.size() << " suites passed\n";
    return passed == selected.size() ? 0 : 1;
}

int run_sweep(unsigned f_max, std::uint64_t trials, std::uint64_t seed,
              const std::string& out_path, unsigned jobs) {
    std::ostringstream csv;
    if (trials == 0) {
        cli::write_sweep_csv(csv, f_max);
    } else {
        cli::write_empirical_sweep_csv(csv, f_max, trials, seed, jobs);
    }
    return write_text(out_path, csv.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"probabilistic cluster-sending: analytic tables, simulation campaigns, "
                 "validation suites, sweep curves"};
    app.require_subcommand(1);
    // Config processing happens at the top level; keys live in a [simulate] section.
    app.set_config("--config", "", "config file with a [simulate] section (flags win)");

    // analyze
    auto* analyze = app.add_subcommand(
        "analyze", "print the expectation formulas and fault-pattern table for a cluster pair");
    constexpr std::uint32_t kUnset = UINT32_MAX;
    std::uint32_t a_n = kUnset, a_f = kUnset;
    std::uint32_t a_n1 = kUnset, a_f1 = kUnset, a_n2 = kUnset, a_f2 = kUnset;
    analyze->add_option("--n", a_n, "cluster size, both sides");
    analyze->add_option("--f", a_f, "faulty replicas, both sides");
    analyze->add_option("--n1", a_n1, "first cluster size (overrides --n)");
    analyze->add_option("--f1", a_f1, "first cluster faults (overrides --f)");
    analyze->add_option("--n2", a_n2, "second cluster size (overrides --n)");
    analyze->add_option("--f2", a_f2, "second cluster faults (overrides --f)");

    // simulate
    cli::RunSpec spec;
    std::string out_path;
    std::string trace_path;
    std::string schedule_text;
    unsigned jobs = 0;
    auto* simulate =
        app.add_subcommand("simulate", "run independent trials of one spec, one CSV row each");
    simulate->fallthrough();
    const std::map<std::string, proto::ProtocolKind> protocols{
        {"pcs", proto::ProtocolKind::Pcs},
        {"ppcs", proto::ProtocolKind::Ppcs},
        {"plcs_min", proto::ProtocolKind::PlcsMin},
        {"plcs_max", proto::ProtocolKind::PlcsMax},
    };
    simulate->add_option("--protocol", spec.protocol, "pcs | ppcs | plcs_min | plcs_max")
        ->transform(CLI::CheckedTransformer(protocols, CLI::ignore_case));
    simulate->add_option("--n1", spec.n1, "first cluster size");
    simulate->add_option("--f1", spec.f1, "first cluster faulty count");
    simulate->add_option("--n2", spec.n2, "second cluster size");
    simulate->add_option("--f2", spec.f2, "second cluster faulty count");
    const std::map<std::string, sim::NetworkConfig::Mode> modes{
        {"sync", sim::NetworkConfig::Mode::Sync},
        {"async", sim::NetworkConfig::Mode::Async},
    };
    simulate->add_option("--network", spec.network.mode, "sync | async")
        ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case));
    simulate->add_option("--drop", spec.network.drop_prob, "per-message loss probability (async)")
        ->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--dup", spec.network.dup_prob, "per-message duplication probability")
        ->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--delay-max", spec.network.delay_max,
                         "extra delivery delay bound in pulses (async)");
    simulate->add_option("--reliability", schedule_text,
                         "drop-probability phases pulses:drop[,pulses:drop...]; overrides --drop "
                         "while they last");
    const std::map<std::string, sim::AdversaryKind> adversaries{
        {"silent", sim::AdversaryKind::Silent},
        {"drop_outbound", sim::AdversaryKind::DropOutbound},
        {"drop_inbound", sim::AdversaryKind::DropInbound},
        {"worst_case", sim::AdversaryKind::WorstCase},
        {"randomized", sim::AdversaryKind::Randomized},
    };
    simulate
        ->add_option("--adversary", spec.adversary.kind,
                     "silent | drop_outbound | drop_inbound | worst_case | randomized")
        ->transform(CLI::CheckedTransformer(adversaries, CLI::ignore_case));
    simulate->add_option("--adversary-seed", spec.adversary.seed,
                         "extra entropy for the randomized adversary");
    simulate->add_option("--trials", spec.trials, "independent trials")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--seed", spec.seed, "campaign seed; every trial derives from it");
    simulate->add_option("--delta", spec.delta, "async backoff unit in pulses")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--parallel-rounds", spec.parallel_rounds,
                         "async steps launched immediately")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--max-pulses", spec.max_pulses, "global pulse cap per trial");
    simulate->add_option("--max-iters", spec.max_iters, "probing step cap, 0 = protocol default");
    simulate->add_option("--jobs", jobs, "worker threads (0 = CSEND_JOBS or 1)");
    simulate->add_option("--out", out_path, "CSV destination (default stdout)");
    simulate->add_option("--export-trace", trace_path,
                         "on violation, write the offending trace here instead of stderr");

    // verify
    std::string suite_filter;
    verify::SuiteOptions vopts;
    auto* ver = app.add_subcommand("verify", "run the validation suites");
    ver->add_option("--suite", suite_filter, "prefix filter over suite names");
    ver->add_option("--max-n", vopts.fc_max_n, "fault-pattern grid bound (default 8)")
        ->check(CLI::PositiveNumber);
    ver->add_option("--traces", vopts.fuzz_traces, "randomized safety traces (default 10000)")
        ->check(CLI::PositiveNumber);

    // sweep
    unsigned f_max = 20;
    std::uint64_t sweep_trials = 0;
    std::uint64_t sweep_seed = 1;
    std::string sweep_out;
    unsigned sweep_jobs = 0;
    auto* sweep = app.add_subcommand(
        "sweep", "emit expectation and reference curves per f as CSV (analytic, or empirical "
                 "with --trials)");
    sweep->add_option("--f-max", f_max, "largest f (default 20)");
    sweep->add_option("--trials", sweep_trials,
                      "Monte Carlo trials per point; 0 keeps the sweep analytic");
    sweep->add_option("--seed", sweep_seed, "campaign seed for empirical sweeps");
    sweep->add_option("--jobs", sweep_jobs, "worker threads (0 = CSEND_JOBS or 1)");
    sweep->add_option("--out", sweep_out, "CSV destination (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*analyze) {
            const auto pick = [](std::uint32_t specific, std::uint32_t shared,
                                 std::uint32_t fallback) {
                if (specific != kUnset) return specific;
                if (shared != kUnset) return shared;
                return fallback;
            };
            const auto n1 = pick(a_n1, a_n, 0);
            const auto n2 = pick(a_n2, a_n, 0);
            const auto f1 = pick(a_f1, a_f, 0);
            const auto f2 = pick(a_f2, a_f, 0);
            if (n1 == 0 || n2 == 0) {
                std::cerr << "analyze needs --n (or --n1 and --n2)\n";
                return 2;
            }
            return run_analyze(n1, f1, n2, f2);
        }
        if (*simulate) {
            if (!schedule_text.empty()) {
                spec.network.reliability_schedule = parse_schedule(schedule_text);
            }
            return run_simulate(spec, out_path, trace_path, jobs);
        }
        if (*ver) return run_verify(suite_filter, vopts);
        if (*sweep) return run_sweep(f_max, sweep_trials, sweep_seed, sweep_out, sweep_jobs);
    } catch (const csend::config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const csend::invariant_error& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 1;
    } catch (const csend::protocol_error& e) {
        std::cerr << "protocol misuse: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 2;
}
