#include "csend/runspec.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <ostream>
#include <thread>

namespace csend::cli {

std::vector<std::string> RunSpec::validate() const {
    if (trials == 0) throw config_error("trials must be positive");
    if (n1 <= 2 * f1 || n2 <= 2 * f2) {
        throw config_error("clusters need n > 2f (got n1=" + std::to_string(n1) + " f1=" +
                           std::to_string(f1) + ", n2=" + std::to_string(n2) + " f2=" +
                           std::to_string(f2) + ")");
    }
    network.validate();
    if (delta == 0) throw config_error("delta must be positive");
    if (parallel_rounds == 0) throw config_error("parallel_rounds must be positive");

    std::vector<std::string> warnings;
    if (protocol == proto::ProtocolKind::PlcsMin && std::min(n1, n2) <= f1 + f2) {
        warnings.push_back(
            "plcs_min outside its robustness condition min(n1, n2) > f1 + f2: some fault "
            "placements defeat the list; such trials report confirmed=false");
    }
    if (protocol == proto::ProtocolKind::PlcsMax && (n1 <= 3 * f1 || n2 <= 3 * f2)) {
        warnings.push_back(
            "plcs_max outside its robustness condition n > 3f on both clusters: some fault "
            "placements defeat the list; such trials report confirmed=false");
    }
    return warnings;
}

namespace {

std::set<std::uint32_t> draw_placement(sim::DetRng& rng, std::uint32_t n, std::uint32_t f) {
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::set<std::uint32_t> out;
    for (std::uint32_t k = 0; k < f; ++k) {
        const auto j = k + rng.below(idx.size() - k);
        std::swap(idx[k], idx[j]);
        out.insert(idx[k]);
    }
    return out;
}

}  // namespace

TrialResult run_single_trial(const RunSpec& spec, std::uint64_t trial_index,
                             sim::Trace* trace_out) {
    const auto trial_seed = sim::mix_seed(spec.seed, "trial", trial_index);
    sim::DetRng placement(sim::mix_seed(trial_seed, "placement"));
    auto faulty1 = draw_placement(placement, spec.n1, spec.f1);
    auto faulty2 = draw_placement(placement, spec.n2, spec.f2);

    sim::SimConfig cfg;
    cfg.network = spec.network;
    cfg.adversary = spec.adversary;
    cfg.seed = trial_seed;
    cfg.max_pulses = spec.max_pulses;
    cfg.record_events = trace_out != nullptr;

    sim::Simulation sim(cfg, {ClusterConfig("c1", spec.n1, std::move(faulty1)),
                              ClusterConfig("c2", spec.n2, std::move(faulty2))});
    const auto v = make_value("v");

    TrialResult result;
    try {
        if (spec.network.mode == sim::NetworkConfig::Mode::Sync) {
            switch (spec.protocol) {
                case proto::ProtocolKind::Pcs:
                    result.stats = proto::pcs(sim, "c1", "c2", v, spec.max_iters);
                    break;
                case proto::ProtocolKind::Ppcs:
                    result.stats = proto::ppcs(sim, "c1", "c2", v, spec.max_iters);
                    break;
                case proto::ProtocolKind::PlcsMin:
                    result.stats = proto::plcs(sim, "c1", "c2", v, proto::SelectFunction::Min);
                    break;
                case proto::ProtocolKind::PlcsMax:
                    result.stats = proto::plcs(sim, "c1", "c2", v, proto::SelectFunction::Max);
                    break;
            }
        } else {
            proto::AsyncOptions opts;
            opts.delta = spec.delta;
            opts.parallel_rounds = spec.parallel_rounds;
            result.stats = proto::async_drive(sim, "c1", "c2", v, spec.protocol, opts);
        }
    } catch (const config_error&) {
        // This placement defeats the configured list; the trial reports an
        // unconfirmed run instead of aborting the campaign.
        result.stats = proto::TrialStats{};
    } catch (const invariant_error& e) {
        result.violation = true;
        result.diagnostic = e.what();
    } catch (const protocol_error& e) {
        result.violation = true;
        result.diagnostic = e.what();
    }

    if (trace_out) *trace_out = sim.trace();
    return result;
}

bool CampaignResult::any_violation() const {
    for (const auto& t : trials) {
        if (t.violation) return true;
    }
    return false;
}

unsigned default_jobs() {
    const char* env = std::getenv("CSEND_JOBS");
    if (!env) return 1;
    const auto parsed = std::strtoul(env, nullptr, 10);
    if (parsed == 0) return 1;
    return static_cast<unsigned>(parsed);
}

CampaignResult run_campaign(const RunSpec& spec, unsigned jobs) {
    spec.validate();
    if (jobs == 0) jobs = default_jobs();
    jobs = static_cast<unsigned>(std::min<std::uint64_t>(jobs, spec.trials));

    CampaignResult result;
    result.trials.resize(spec.trials);
    if (jobs <= 1) {
        for (std::uint64_t i = 0; i < spec.trials; ++i) {
            result.trials[i] = run_single_trial(spec, i);
        }
        return result;
    }

    std::atomic<std::uint64_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= spec.trials) return;
            result.trials[i] = run_single_trial(spec, i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return result;
}

const char* csv_header() {
    return "protocol,n1,f1,n2,f2,network,trial,steps,inter_cluster_msgs,consensus_c1,"
           "consensus_c2,pulses,confirmed";
}

void write_csv(std::ostream& os, const RunSpec& spec, const CampaignResult& result) {
    os << csv_header() << '\n';
    for (std::size_t i = 0; i < result.trials.size(); ++i) {
        const auto& s = result.trials[i].stats;
        os << proto::to_string(spec.protocol) << ',' << spec.n1 << ',' << spec.f1 << ','
           << spec.n2 << ',' << spec.f2 << ',' << sim::to_string(spec.network.mode) << ',' << i
           << ',' << s.cs_steps << ',' << s.inter_cluster_msgs << ',' << s.consensus_c1 << ','
           << s.consensus_c2 << ',' << s.pulses << ',' << (s.confirmed ? "true" : "false")
           << '\n';
    }
}

void write_sweep_csv(std::ostream& os, unsigned f_max) {
    using analysis::Rational;
    os << "f,pcs_expected_2f1,plcs_expected_2f1,pcs_expected_3f1,plcs_expected_3f1,"
          "pcs_messages_3f1,plcs_messages_3f1,pbs_cs_steps,geobft_messages,chainspace_messages\n";
    for (unsigned f = 0; f <= f_max; ++f) {
        const unsigned n2f = 2 * f + 1;
        const unsigned n3f = 3 * f + 1;
        const auto pcs_2f1 = analysis::pcs_expected_steps(n2f, f, n2f, f);
        const auto plcs_2f1 = analysis::pt_exact(n2f, f, f);
        const auto pcs_3f1 = analysis::pcs_expected_steps(n3f, f, n3f, f);
        const auto plcs_3f1 = analysis::pt_exact(n3f, f, f);
        os << f << ',' << analysis::to_decimal_string(pcs_2f1) << ','
           << analysis::to_decimal_string(plcs_2f1) << ','
           << analysis::to_decimal_string(pcs_3f1) << ','
           << analysis::to_decimal_string(plcs_3f1) << ','
           << analysis::to_decimal_string(pcs_3f1 * 2) << ','
           << analysis::to_decimal_string(plcs_3f1 * 2) << ',' << (2 * f + 1) << ',' << (f + 1)
           << ',' << (static_cast<std::uint64_t>(n3f) * n3f) << '\n';
    }
}

namespace {

// Distribution of the faulty count among `picked` members when f of n fault
// slots are placed uniformly: P(t) = C(picked,t) C(n-picked,f-t) / C(n,f).
std::vector<std::pair<unsigned, analysis::Rational>> hypergeometric(std::uint32_t n,
                                                                    std::uint32_t f,
                                                                    std::uint32_t picked) {
    const analysis::BigInt denom = analysis::binomial(n, f);
    std::vector<std::pair<unsigned, analysis::Rational>> out;
    for (std::uint32_t t = 0; t <= std::min(f, picked); ++t) {
        if (f - t > n - picked) continue;
        const analysis::BigInt ways =
            analysis::binomial(picked, t) * analysis::binomial(n - picked, f - t);
        if (ways != 0) out.emplace_back(t, analysis::Rational(ways, denom));
    }
    return out;
}

// Exact expected scan length for the list protocols with uniformly random
// fault placement. A list of length len cycles cluster members, so a member
// appears floor(len/n)+1 times when its index is below len % n. The faulty
// count per list is then q*f plus a hypergeometric term over the first
// len % n indices.
analysis::Rational placement_averaged_scan(std::uint32_t len, std::uint32_t n1, std::uint32_t f1,
                                           std::uint32_t n2, std::uint32_t f2) {
    const auto side = [len](std::uint32_t n, std::uint32_t f) {
        const std::uint32_t q = len / n;
        const std::uint32_t r = len % n;
        auto dist = hypergeometric(n, f, std::min(r, n));
        for (auto& [t, p] : dist) t += q * f;
        return dist;
    };
    const auto d1 = side(n1, f1);
    const auto d2 = side(n2, f2);
    analysis::Rational out = 0;
    for (const auto& [m1, p1] : d1) {
        for (const auto& [m2, p2] : d2) {
            out += p1 * p2 * analysis::scan_expected_steps(len, m1, m2);
        }
    }
    return out;
}

}  // namespace

SweepRow sweep_point(proto::ProtocolKind kind, std::uint32_t n1, std::uint32_t f1,
                     std::uint32_t n2, std::uint32_t f2, std::uint64_t trials, std::uint64_t seed,
                     unsigned jobs) {
    using analysis::Rational;
    RunSpec spec;
    spec.protocol = kind;
    spec.n1 = n1;
    spec.f1 = f1;
    spec.n2 = n2;
    spec.f2 = f2;
    spec.network.mode = sim::NetworkConfig::Mode::Sync;
    spec.adversary.kind = sim::AdversaryKind::WorstCase;
    spec.trials = trials;
    spec.seed = seed;
    const auto campaign = run_campaign(spec, jobs);

    SweepRow row;
    row.protocol = kind;
    row.n1 = n1;
    row.f1 = f1;
    row.n2 = n2;
    row.f2 = f2;
    row.trials = trials;
    switch (kind) {
        case proto::ProtocolKind::Pcs:
        // For the pruning variant this is the with-replacement reference from
        // above, not the exact mean, so its ok flag reads conservative.
        case proto::ProtocolKind::Ppcs:
            row.analytic = analysis::pcs_expected_steps(n1, f1, n2, f2);
            break;
        case proto::ProtocolKind::PlcsMin:
            row.analytic = placement_averaged_scan(std::min(n1, n2), n1, f1, n2, f2);
            break;
        case proto::ProtocolKind::PlcsMax:
            row.analytic = placement_averaged_scan(std::max(n1, n2), n1, f1, n2, f2);
            break;
    }

    analysis::BigInt total = 0;
    analysis::BigInt total_sq = 0;
    for (const auto& t : campaign.trials) {
        total += t.stats.cs_steps;
        total_sq += analysis::BigInt(t.stats.cs_steps) * t.stats.cs_steps;
        row.empirical_max = std::max(row.empirical_max, t.stats.cs_steps);
    }
    row.empirical_mean = Rational(total, trials);
    if (trials > 1) {
        // Sample variance: (sum_sq - n mean^2) / (n - 1), exact until the
        // final square root.
        const Rational var =
            (Rational(total_sq) - Rational(total * total, trials)) / (trials - 1);
        const double sd = std::sqrt(static_cast<double>(var));
        row.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(trials));
    }
    const Rational diff = row.empirical_mean - row.analytic;
    const double err = std::abs(static_cast<double>(diff));
    row.ok = err <= row.ci95 || diff == 0;
    return row;
}

void write_empirical_sweep_csv(std::ostream& os, unsigned f_max, std::uint64_t trials,
                               std::uint64_t seed, unsigned jobs) {
    os << "protocol,n1,f1,n2,f2,analytic_expected,empirical_mean,empirical_max,trials,ci95,ok\n";
    for (unsigned f = 0; f <= f_max; ++f) {
        const std::uint32_t sizes[2] = {2 * f + 1, 3 * f + 1};
        for (const auto n : sizes) {
            for (const auto kind : {proto::ProtocolKind::Pcs, proto::ProtocolKind::PlcsMin}) {
                const auto row = sweep_point(kind, n, f, n, f, trials, seed, jobs);
                char ci[32];
                std::snprintf(ci, sizeof(ci), "%.6g", row.ci95);
                os << proto::to_string(row.protocol) << ',' << row.n1 << ',' << row.f1 << ','
                   << row.n2 << ',' << row.f2 << ','
                   << analysis::to_decimal_string(row.analytic) << ','
                   << analysis::to_decimal_string(row.empirical_mean) << ',' << row.empirical_max
                   << ',' << row.trials << ',' << ci << ',' << (row.ok ? "true" : "false")
                   << '\n';
            }
        }
    }
}

}  // namespace csend::cli
