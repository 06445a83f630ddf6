#include "csend/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csend/analysis.hpp"
#include "csend/core.hpp"
#include "csend/protocols.hpp"
#include "csend/runspec.hpp"
#include "csend/simnet.hpp"

namespace csend::verify {
namespace {

using analysis::BigInt;
using analysis::Rational;

struct Checker {
    std::uint64_t checks = 0;
    std::uint64_t failures = 0;
    std::string first_failure;

    void pass() { ++checks; }
    void fail(const std::string& msg) {
        ++checks;
        ++failures;
        if (first_failure.empty()) first_failure = msg;
    }
    void expect(bool cond, const std::string& msg) {
        if (cond) {
            pass();
        } else {
            fail(msg);
        }
    }
};

std::string dec(const Rational& r, unsigned sig = 6) { return analysis::to_decimal_string(r, sig); }

// All size-f subsets of {0..n-1}, in lexicographic order.
void for_each_placement(std::uint32_t n, std::uint32_t f,
                        const std::function<void(const std::set<std::uint32_t>&)>& fn) {
    if (f == 0) {
        fn({});
        return;
    }
    std::vector<std::uint32_t> idx(f);
    std::iota(idx.begin(), idx.end(), 0u);
    while (true) {
        fn(std::set<std::uint32_t>(idx.begin(), idx.end()));
        std::uint32_t i = f;
        while (i > 0 && idx[i - 1] == n - f + (i - 1)) --i;
        if (i == 0) break;
        ++idx[i - 1];
        for (std::uint32_t j = i; j < f; ++j) idx[j] = idx[j - 1] + 1;
    }
}

std::set<std::uint32_t> random_placement(sim::DetRng& rng, std::uint32_t n, std::uint32_t f) {
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::uint32_t i = 0; i < f; ++i) {
        const auto j = i + static_cast<std::uint32_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    return {idx.begin(), idx.begin() + f};
}

// ---------------------------------------------------------------------------
// Fault-pattern counts: three formula routes agree and rows sum to n!^2.

void suite_fc_equivalence(Checker& ck, std::string& summary, const SuiteOptions& options) {
    std::uint64_t rows = 0;
    const unsigned max_n = options.fc_max_n;
    for (unsigned n = 0; n <= max_n; ++n) {
        const BigInt square = analysis::factorial(n) * analysis::factorial(n);
        for (unsigned m1 = 0; m1 <= n; ++m1) {
            for (unsigned m2 = 0; m2 <= n; ++m2) {
                const unsigned lo = std::max(m1, m2);
                const unsigned hi = std::min(n, m1 + m2);
                BigInt row_sum = 0;
                for (unsigned k = 0; k <= n; ++k) {
                    const BigInt r = analysis::fc_recursive(n, m1, m2, k);
                    const auto where = [&] {
                        std::ostringstream os;
                        os << " at (n=" << n << ",m1=" << m1 << ",m2=" << m2 << ",k=" << k << ")";
                        return os.str();
                    };
                    if (k >= lo && k <= hi) {
                        if (r == analysis::fc_closed(n, m1, m2, k) &&
                            r == analysis::fc_product(n, m1, m2, k)) {
                            ck.pass();
                        } else {
                            ck.fail("formula routes disagree" + where());
                        }
                    } else {
                        ck.expect(r == 0, "nonzero count outside the feasible band" + where());
                    }
                    row_sum += r;
                }
                std::ostringstream os;
                os << "row sum != n!^2 at (n=" << n << ",m1=" << m1 << ",m2=" << m2 << ")";
                ck.expect(row_sum == square, os.str());
                ++rows;
            }
        }
    }
    summary = std::to_string(rows) + " (n,m1,m2) rows over n <= " + std::to_string(max_n) +
              ": recursive = closed = product, rows sum to n!^2";
}

// ---------------------------------------------------------------------------
// Expected-position formulas equal their n!^2 enumeration oracles.

void suite_pt_oracle(Checker& ck, std::string& summary, const SuiteOptions&) {
    std::uint64_t cells = 0;
    for (unsigned n = 1; n <= 6; ++n) {
        for (unsigned m1 = 0; m1 < n; ++m1) {
            for (unsigned m2 = 0; m1 + m2 < n; ++m2) {
                const auto where = [&] {
                    std::ostringstream os;
                    os << " at (n=" << n << ",m1=" << m1 << ",m2=" << m2 << ")";
                    return os.str();
                };
                ck.expect(analysis::pt_exact(n, m1, m2) == analysis::pt_bruteforce(n, m1, m2),
                          "pt_exact != enumeration" + where());
                ck.expect(analysis::scan_expected_steps(n, m1, m2) ==
                              analysis::scan_expected_bruteforce(n, m1, m2),
                          "scan expectation != enumeration" + where());
                ++cells;
            }
        }
    }
    ck.expect(analysis::pt_exact(3, 1, 1) == Rational(5, 2), "PT(3,1,1) != 5/2");
    ck.expect(analysis::pt_exact(5, 2, 2) == Rational(19, 6), "PT(5,2,2) != 19/6");
    summary = std::to_string(cells) +
              " (n,m1,m2) cells over n <= 6: exact rationals equal the permutation enumeration";
}

// ---------------------------------------------------------------------------
// Closed form of the half-faulty diagonal: PT(2f+1,f,f) = 4 - 2/(f+1) - f!^2/(2f)!.

void suite_equal_half_identity(Checker& ck, std::string& summary, const SuiteOptions&) {
    for (unsigned f = 0; f <= 12; ++f) {
        const BigInt ff = analysis::factorial(f);
        const Rational closed =
            Rational(4) - Rational(2, f + 1) - Rational(ff * ff, analysis::factorial(2 * f));
        const Rational exact = analysis::pt_exact(2 * f + 1, f, f);
        ck.expect(exact == closed, "diagonal closed form mismatch at f=" + std::to_string(f));
        ck.expect(analysis::pt_equal_half(f) == closed,
                  "pt_equal_half mismatch at f=" + std::to_string(f));
    }
    ck.expect(analysis::pt_bruteforce(3, 1, 1) == Rational(5, 2),
              "enumeration disagrees with PT(3,1,1)=5/2");
    ck.expect(analysis::pt_bruteforce(5, 2, 2) == Rational(19, 6),
              "enumeration disagrees with PT(5,2,2)=19/6");
    summary = "PT(2f+1,f,f) = 4 - 2/(f+1) - f!^2/(2f)! exactly for f <= 12; "
              "spot values 5/2 and 19/6 confirmed by enumeration";
}

// ---------------------------------------------------------------------------
// Monte Carlo mean of the probing protocol matches n1 n2 / (nf1 nf2).

void suite_pcs_expectation(Checker& ck, std::string& summary, const SuiteOptions&) {
    struct Cell {
        std::uint32_t n, f;
        bool half;  // n == 2f+1, else n == 3f+1
        std::uint64_t seed;
    };
    const Cell cells[] = {
        {3, 1, true, 401}, {7, 3, true, 402}, {4, 1, false, 403},
        {7, 2, false, 404}, {10, 3, false, 405},
    };
    constexpr std::uint64_t kTrials = 100000;
    std::ostringstream sum;
    for (const auto& cell : cells) {
        cli::RunSpec spec;
        spec.protocol = proto::ProtocolKind::Pcs;
        spec.n1 = spec.n2 = cell.n;
        spec.f1 = spec.f2 = cell.f;
        spec.adversary.kind = sim::AdversaryKind::WorstCase;
        spec.trials = kTrials;
        spec.seed = cell.seed;
        const auto campaign = cli::run_campaign(spec);

        BigInt total = 0;
        BigInt total_sq = 0;
        std::uint64_t confirmed = 0;
        for (const auto& t : campaign.trials) {
            total += t.stats.cs_steps;
            total_sq += BigInt(t.stats.cs_steps) * t.stats.cs_steps;
            confirmed += t.stats.confirmed ? 1 : 0;
        }
        const std::string at = " at n=" + std::to_string(cell.n) + " f=" + std::to_string(cell.f);
        ck.expect(confirmed == kTrials, "unconfirmed trials" + at);
        ck.expect(!campaign.any_violation(), "invariant violation" + at);

        const Rational mean(total, kTrials);
        const Rational analytic =
            analysis::pcs_expected_steps(cell.n, cell.f, cell.n, cell.f);
        const Rational var =
            (Rational(total_sq) - Rational(total * total, kTrials)) / (kTrials - 1);
        const double band = 3.0 * std::sqrt(static_cast<double>(var)) /
                            std::sqrt(static_cast<double>(kTrials));
        const double err = std::abs(static_cast<double>(mean - analytic));
        ck.expect(err <= band, "mean " + dec(mean) + " further than 3 sigma (" +
                                   std::to_string(band) + ") from " + dec(analytic) + at);
        ck.expect(err <= 0.02 * static_cast<double>(analytic),
                  "mean " + dec(mean) + " off " + dec(analytic) + " by more than 2%" + at);
        if (cell.half) {
            ck.expect(analytic < 4 && mean < 4, "half-faulty expectation not under 4" + at);
        } else {
            ck.expect(analytic < Rational(9, 4) && mean < Rational(9, 4),
                      "third-faulty expectation not under 9/4" + at);
        }
        sum << " n=" << cell.n << ":" << dec(mean) << "~" << dec(analytic);
    }
    summary = "100000 worst-case trials per size, means within 3 sigma and 2% of n1n2/(nf1 nf2):" +
              sum.str();
}

// ---------------------------------------------------------------------------
// Pruned probing: every placement of n1,n2 <= 5 confirms within
// (f1+1)(f2+1) steps, never excludes a non-faulty replica, and the bound is
// reached by some placement for every (f1,f2).

void suite_ppcs_worst_case(Checker& ck, std::string& summary, const SuiteOptions&) {
    const Value payload = make_value("payload");
    bool attained[3][3] = {};
    std::uint64_t runs = 0;
    std::uint64_t seed = 0;

    const auto one_run = [&](std::uint32_t n1, const std::set<std::uint32_t>& p1, std::uint32_t n2,
                             const std::set<std::uint32_t>& p2) {
        const ClusterConfig c1("c1", n1, p1);
        const ClusterConfig c2("c2", n2, p2);
        sim::SimConfig cfg;
        cfg.adversary.kind = sim::AdversaryKind::WorstCase;
        cfg.seed = ++seed * 0x9E3779B97F4A7C15ull;
        sim::Simulation s(cfg, {c1, c2});
        proto::PruneState prune;
        const auto stats = proto::ppcs(s, "c1", "c2", payload, 0, &prune);
        const std::uint64_t bound =
            static_cast<std::uint64_t>(c1.f() + 1) * (c2.f() + 1);
        const auto where = [&] {
            std::ostringstream os;
            os << " at n1=" << n1 << " f1=" << c1.f() << " n2=" << n2 << " f2=" << c2.f()
               << " seed#" << seed;
            return os.str();
        };
        if (stats.confirmed && stats.cs_steps <= bound) {
            ck.pass();
        } else {
            ck.fail("run missed confirmation within (f1+1)(f2+1)" + where());
        }
        bool clean = true;
        for (const auto& r : prune.excluded_first) clean = clean && c1.is_faulty(r);
        for (const auto& r : prune.excluded_second) clean = clean && c2.is_faulty(r);
        if (clean) {
            ck.pass();
        } else {
            ck.fail("a non-faulty replica was excluded" + where());
        }
        if (stats.cs_steps == bound) attained[c1.f()][c2.f()] = true;
        ++runs;
    };

    for (std::uint32_t n1 = 1; n1 <= 5; ++n1) {
        for (std::uint32_t f1 = 0; 2 * f1 < n1; ++f1) {
            for_each_placement(n1, f1, [&](const std::set<std::uint32_t>& p1) {
                for (std::uint32_t n2 = 1; n2 <= 5; ++n2) {
                    for (std::uint32_t f2 = 0; 2 * f2 < n2; ++f2) {
                        for_each_placement(n2, f2, [&](const std::set<std::uint32_t>& p2) {
                            for (int s = 0; s < 4; ++s) one_run(n1, p1, n2, p2);
                        });
                    }
                }
            });
        }
    }

    // The bound must actually be reachable: hunt remaining (f1,f2) classes on
    // the packed placement until a run spends all (f1+1)(f2+1) probes.
    for (std::uint32_t f1 = 0; f1 <= 2; ++f1) {
        for (std::uint32_t f2 = 0; f2 <= 2; ++f2) {
            std::set<std::uint32_t> p1;
            std::set<std::uint32_t> p2;
            for (std::uint32_t i = 0; i < f1; ++i) p1.insert(i);
            for (std::uint32_t i = 0; i < f2; ++i) p2.insert(i);
            for (int s = 0; s < 20000 && !attained[f1][f2]; ++s) {
                one_run(2 * f1 + 1, p1, 2 * f2 + 1, p2);
            }
            ck.expect(attained[f1][f2], "bound (f1+1)(f2+1) never attained for f1=" +
                                            std::to_string(f1) + " f2=" + std::to_string(f2));
        }
    }
    summary = std::to_string(runs) +
              " adversarial runs over every fault placement with n1,n2 <= 5: all confirmed "
              "within (f1+1)(f2+1) steps, exclusions only ever named faulty replicas, and "
              "every (f1,f2) class attained its bound";
}

// ---------------------------------------------------------------------------
// List protocol: per-run worst case f(S1)+f(S2)+1 with the truncating
// selection, mean under 3 with the cycling selection, and the analytic
// expectation under each robustness regime (4, 9/4, 3).

void suite_plcs_bounds(Checker& ck, std::string& summary, const SuiteOptions&) {
    const Value payload = make_value("payload");
    std::uint64_t seed = 0;

    // Truncating lists: every run beats the per-list fault budget.
    struct MinCfg {
        std::uint32_t n1, f1, n2, f2;
    };
    const MinCfg mincfgs[] = {{3, 1, 3, 1}, {4, 1, 4, 1}, {5, 2, 5, 2}, {5, 1, 4, 1}};
    std::uint64_t runs_a = 0;
    for (const auto& mc : mincfgs) {
        ck.expect(std::min(mc.n1, mc.n2) > mc.f1 + mc.f2,
                  "list length does not clear the combined fault budget");
        for_each_placement(mc.n1, mc.f1, [&](const std::set<std::uint32_t>& p1) {
            for_each_placement(mc.n2, mc.f2, [&](const std::set<std::uint32_t>& p2) {
                for (int s = 0; s < 12; ++s) {
                    sim::SimConfig cfg;
                    cfg.adversary.kind = sim::AdversaryKind::WorstCase;
                    cfg.seed = ++seed * 0x9E3779B97F4A7C15ull;
                    sim::Simulation sm(cfg, {ClusterConfig("c1", mc.n1, p1),
                                             ClusterConfig("c2", mc.n2, p2)});
                    analysis::ListPair lists;
                    const auto stats =
                        proto::plcs(sm, "c1", "c2", payload, proto::SelectFunction::Min, &lists);
                    const std::uint64_t budget =
                        lists.fault_count_first() + lists.fault_count_second() + 1;
                    if (stats.confirmed && stats.cs_steps <= budget) {
                        ck.pass();
                    } else {
                        std::ostringstream os;
                        os << "run exceeded f(S1)+f(S2)+1 at n1=" << mc.n1 << " f1=" << mc.f1
                           << " n2=" << mc.n2 << " f2=" << mc.f2 << " seed#" << seed;
                        ck.fail(os.str());
                    }
                    ++runs_a;
                }
            });
        });
    }

    // Empirical means against the exact scan expectation, one row per
    // robustness regime; the regime's step bound must hold analytically.
    struct Row {
        proto::ProtocolKind kind;
        std::uint32_t n1, f1, n2, f2;
        Rational bound;
        std::uint64_t seed;
    };
    const Row rows[] = {
        {proto::ProtocolKind::PlcsMin, 3, 1, 3, 1, Rational(4), 601},
        {proto::ProtocolKind::PlcsMin, 5, 2, 5, 2, Rational(4), 602},
        {proto::ProtocolKind::PlcsMin, 4, 1, 4, 1, Rational(9, 4), 603},
        {proto::ProtocolKind::PlcsMin, 7, 2, 7, 2, Rational(9, 4), 604},
        {proto::ProtocolKind::PlcsMax, 4, 1, 4, 1, Rational(3), 605},
        {proto::ProtocolKind::PlcsMax, 7, 2, 7, 2, Rational(3), 606},
        {proto::ProtocolKind::PlcsMax, 7, 2, 4, 1, Rational(3), 607},
        {proto::ProtocolKind::PlcsMax, 9, 2, 4, 1, Rational(3), 608},
    };
    std::ostringstream rowsum;
    for (const auto& row : rows) {
        const std::uint32_t fmax = std::max(row.f1, row.f2);
        if (row.bound == Rational(4)) {
            ck.expect(std::min(row.n1, row.n2) > 2 * fmax, "row outside the bound-4 regime");
        } else if (row.bound == Rational(9, 4)) {
            ck.expect(std::min(row.n1, row.n2) > 3 * fmax, "row outside the bound-9/4 regime");
        } else {
            ck.expect(row.n1 > 3 * row.f1 && row.n2 > 3 * row.f2,
                      "row outside the bound-3 regime");
        }
        const auto cell =
            cli::sweep_point(row.kind, row.n1, row.f1, row.n2, row.f2, 20000, row.seed);
        const double band3 = cell.ci95 * (3.0 / 1.96);
        const double err = std::abs(static_cast<double>(cell.empirical_mean - cell.analytic));
        const std::string at = std::string(" at ") + proto::to_string(row.kind) + " n1=" +
                               std::to_string(row.n1) + " f1=" + std::to_string(row.f1) +
                               " n2=" + std::to_string(row.n2) + " f2=" + std::to_string(row.f2);
        ck.expect(err <= band3, "mean " + dec(cell.empirical_mean) +
                                    " further than 3 sigma from exact " + dec(cell.analytic) + at);
        ck.expect(cell.analytic < row.bound,
                  "exact expectation " + dec(cell.analytic) + " not under " + dec(row.bound) + at);
        ck.expect(static_cast<double>(cell.empirical_mean) <
                      static_cast<double>(row.bound) + band3,
                  "mean " + dec(cell.empirical_mean) + " not under " + dec(row.bound) + at);
        rowsum << ' ' << dec(cell.empirical_mean) << '~' << dec(cell.analytic) << '<'
               << dec(row.bound);
    }

    // The analytic curves behind the three regimes, checked across the grid.
    std::uint64_t cells = 0;
    for (unsigned n = 1; n <= 14; ++n) {
        for (unsigned m1 = 0; 2 * m1 < n; ++m1) {
            for (unsigned m2 = 0; 2 * m2 < n; ++m2) {
                ck.expect(analysis::pt_exact(n, m1, m2) < 4,
                          "PT not under 4 with both minorities at n=" + std::to_string(n));
                ++cells;
            }
        }
    }
    for (unsigned n = 1; n <= 15; ++n) {
        for (unsigned m1 = 0; 3 * m1 < n; ++m1) {
            for (unsigned m2 = 0; 3 * m2 < n; ++m2) {
                ck.expect(analysis::pt_exact(n, m1, m2) < Rational(9, 4),
                          "PT not under 9/4 with both thirds at n=" + std::to_string(n));
                ++cells;
            }
        }
    }
    // Cycled lists: a member appears floor(len/n)+1 times when its index is
    // under len % n, so packing faults onto the low indices is worst.
    const auto worst_cycled_faults = [](std::uint32_t len, std::uint32_t n, std::uint32_t f) {
        std::uint32_t m = 0;
        for (std::uint32_t j = 0; j < f; ++j) m += len / n + (j < len % n ? 1 : 0);
        return m;
    };
    std::uint64_t scan_fallbacks = 0;
    for (std::uint32_t n1 = 1; n1 <= 10; ++n1) {
        for (std::uint32_t f1 = 0; 3 * f1 < n1; ++f1) {
            for (std::uint32_t n2 = 1; n2 <= 10; ++n2) {
                for (std::uint32_t f2 = 0; 3 * f2 < n2; ++f2) {
                    const std::uint32_t len = std::max(n1, n2);
                    const auto m1 = worst_cycled_faults(len, n1, f1);
                    const auto m2 = worst_cycled_faults(len, n2, f2);
                    const auto where = [&] {
                        std::ostringstream os;
                        os << " at n1=" << n1 << " f1=" << f1 << " n2=" << n2 << " f2=" << f2;
                        return os.str();
                    };
                    if (m1 + m2 >= len) {
                        ck.fail("worst cycled placement leaves no good position" + where());
                        continue;
                    }
                    if (analysis::pt_exact(len, m1, m2) < 3) {
                        ck.pass();
                    } else {
                        // The scan mean is the protocol's true expectation; the
                        // with-replacement curve is only its upper envelope.
                        ck.expect(analysis::scan_expected_steps(len, m1, m2) < 3,
                                  "cycled-list expectation not under 3" + where());
                        ++scan_fallbacks;
                    }
                    ++cells;
                }
            }
        }
    }

    // Truncation can pack nearly half a large cluster's faults into a short
    // list: a 21-replica cluster with 10 faults cut to 11 slots yields
    // PT(11,10,0) = 11, so no bound survives outside its regime.
    const Rational probe = analysis::pt_exact(11, 10, 0);
    ck.expect(probe == Rational(11), "truncation probe changed value");

    std::ostringstream sum;
    sum << runs_a << " truncating-list runs within f(S1)+f(S2)+1; regime rows mean~exact<bound:"
        << rowsum.str() << "; " << cells << " analytic grid cells hold (scan fallback on "
        << scan_fallbacks << "); truncation outside the regimes can reach PT " << dec(probe);
    summary = sum.str();
}

// ---------------------------------------------------------------------------
// Randomized async traces: consensus decisions stay consistent under drops,
// duplication, delays, and every adversary.

void suite_safety_fuzz(Checker& ck, std::string& summary, const SuiteOptions& options) {
    const Value payload = make_value("payload");
    sim::DetRng fuzz(sim::mix_seed(0xF022, "fuzz"));
    const std::uint64_t goal = options.fuzz_traces;
    std::uint64_t traces = 0;
    std::uint64_t confirmed = 0;
    std::uint64_t refused = 0;
    std::uint64_t attempts = 0;

    while (traces < goal && attempts < 4 * goal) {
        ++attempts;
        const auto n1 = 1 + static_cast<std::uint32_t>(fuzz.below(7));
        const auto f1 = static_cast<std::uint32_t>(fuzz.below((n1 - 1) / 2 + 1));
        const auto n2 = 1 + static_cast<std::uint32_t>(fuzz.below(7));
        const auto f2 = static_cast<std::uint32_t>(fuzz.below((n2 - 1) / 2 + 1));
        const ClusterConfig c1("c1", n1, random_placement(fuzz, n1, f1));
        const ClusterConfig c2("c2", n2, random_placement(fuzz, n2, f2));

        sim::SimConfig cfg;
        cfg.network.mode = sim::NetworkConfig::Mode::Async;
        cfg.network.drop_prob = 0.5 * fuzz.unit();
        cfg.network.dup_prob = 0.5 * fuzz.unit();
        cfg.network.delay_max = static_cast<std::uint32_t>(fuzz.below(9));
        if (fuzz.below(4) == 0) {
            cfg.network.reliability_schedule = {
                {1 + fuzz.below(32), 0.5 * fuzz.unit()},
                {1 + fuzz.below(32), 0.5 * fuzz.unit()},
            };
        }
        cfg.adversary.kind = static_cast<sim::AdversaryKind>(fuzz.below(5));
        cfg.adversary.seed = fuzz.next();
        cfg.seed = fuzz.next();
        cfg.max_pulses = 2000;

        const auto kind = static_cast<proto::ProtocolKind>(fuzz.below(4));
        proto::AsyncOptions opts;
        opts.delta = 1 + fuzz.below(8);
        opts.parallel_rounds = 1 + static_cast<std::uint32_t>(fuzz.below(4));

        sim::Simulation sm(cfg, {c1, c2});
        proto::TrialStats stats;
        try {
            stats = proto::async_drive(sm, "c1", "c2", payload, kind, opts);
        } catch (const config_error&) {
            ++refused;  // a list shorter than its fault budget refuses upfront
            continue;
        } catch (const std::exception& e) {
            ck.fail(std::string("internal invariant broke: ") + e.what() + " on trace " +
                    std::to_string(attempts));
            ++traces;
            continue;
        }

        using Slot = DecisionState::Slot;
        const bool all_agreed = sm.all_non_faulty_hold("c1", Slot::Agreed, payload);
        const bool all_received = sm.all_non_faulty_hold("c2", Slot::Received, payload);
        const bool all_confirmed = sm.all_non_faulty_hold("c1", Slot::Confirmed, payload);
        bool any_received = false;
        for (const auto& r : c2.non_faulty()) {
            any_received = any_received || sm.decisions(r).has(Slot::Received, payload);
        }
        bool any_confirmed = false;
        for (const auto& r : c1.non_faulty()) {
            any_confirmed = any_confirmed || sm.decisions(r).has(Slot::Confirmed, payload);
        }
        bool foreign_value = false;
        for (const auto& cc : {std::cref(c1), std::cref(c2)}) {
            for (const auto& r : cc.get().members()) {
                for (const auto slot : {Slot::Agreed, Slot::Received, Slot::Confirmed}) {
                    const auto& held = sm.decisions(r).get(slot);
                    foreign_value = foreign_value || (held && *held != payload);
                }
            }
        }
        const std::string at = " on trace " + std::to_string(attempts);
        if (!all_agreed) ck.fail("agreement consensus did not install everywhere" + at);
        if (any_received && !all_received) ck.fail("partial receive consensus" + at);
        if (any_received && !all_agreed) ck.fail("receive without sender agreement" + at);
        if (any_confirmed && !(all_confirmed && all_received)) {
            ck.fail("confirmation without full receipt" + at);
        }
        if (stats.confirmed != all_confirmed) ck.fail("confirmed flag disagrees" + at);
        if (foreign_value) ck.fail("a replica decided a value never sent" + at);
        if (!foreign_value && all_agreed && (!any_received || all_received) &&
            (!any_confirmed || (all_confirmed && all_received)) &&
            stats.confirmed == all_confirmed) {
            ck.pass();
        }
        confirmed += stats.confirmed ? 1 : 0;
        ++traces;
    }
    ck.expect(traces == goal,
              "fewer than " + std::to_string(goal) + " traces executed");
    std::ostringstream sum;
    sum << traces << " randomized async traces (sizes <= 7, 5 adversaries, 4 protocols, drop/dup"
        << " <= 0.5, delays <= 8): zero decision or certificate violations; " << confirmed
        << " confirmed within the pulse cap, " << refused << " infeasible list specs refused";
    summary = sum.str();
}

// ---------------------------------------------------------------------------
// Liveness through a blackout: every protocol confirms once the network
// recovers, with exponentially backed-off step deadlines.

void suite_async_liveness(Checker& ck, std::string& summary, const SuiteOptions&) {
    const proto::ProtocolKind kinds[] = {
        proto::ProtocolKind::Pcs,
        proto::ProtocolKind::Ppcs,
        proto::ProtocolKind::PlcsMin,
        proto::ProtocolKind::PlcsMax,
    };
    std::ostringstream sum;
    for (const auto kind : kinds) {
        cli::RunSpec spec;
        spec.protocol = kind;
        spec.n1 = spec.n2 = 4;
        spec.f1 = spec.f2 = 1;
        spec.network.mode = sim::NetworkConfig::Mode::Async;
        spec.network.reliability_schedule = {{50, 1.0}};  // total loss, then clean
        spec.adversary.kind = sim::AdversaryKind::WorstCase;
        spec.trials = 100;
        spec.seed = 800 + static_cast<std::uint64_t>(kind);
        spec.delta = 4;
        spec.parallel_rounds = 4;
        spec.max_pulses = 1000000;

        const auto campaign = cli::run_campaign(spec);
        std::uint64_t ok = 0;
        for (const auto& t : campaign.trials) ok += (t.stats.confirmed && !t.violation) ? 1 : 0;
        const std::string at = std::string(" for ") + proto::to_string(kind);
        ck.expect(ok == 100, std::to_string(ok) + "/100 trials confirmed" + at);

        sim::Trace trace;
        const auto t0res = cli::run_single_trial(spec, 0, &trace);
        std::uint64_t begins = 0;
        std::uint64_t t0 = 0;
        bool deadlines_ok = true;
        for (const auto& ev : trace.events) {
            if (ev.kind != sim::EventKind::StepBegin) continue;
            if (begins == 0) {
                if (ev.a != 0) deadlines_ok = false;
                t0 = ev.b - spec.delta;  // deadline of step 0 is t0 + delta
            }
            const std::uint64_t expected =
                t0 + spec.delta * (std::uint64_t{1} << std::min<std::uint64_t>(ev.a, 62));
            deadlines_ok = deadlines_ok && ev.b == expected;
            ++begins;
        }
        ck.expect(deadlines_ok && begins == t0res.stats.cs_steps,
                  "step deadlines deviate from delta * 2^i" + at);
        ck.expect(t0res.stats.pulses > 50, "confirmation predates the blackout's end" + at);
        ck.expect(t0res.stats.cs_steps >= 2, "blackout did not force a retry" + at);
        sum << ' ' << proto::to_string(kind) << ":100/100";
    }
    summary = "50-pulse blackout then clean network:" + sum.str() +
              "; step deadlines follow delta * 2^i in traces";
}

// ---------------------------------------------------------------------------
// The analytic sweep table reproduces the closed forms at 12 digits.

void suite_sweep_formulas(Checker& ck, std::string& summary, const SuiteOptions&) {
    std::ostringstream ss;
    cli::write_sweep_csv(ss, 20);
    std::istringstream in(ss.str());
    std::string line;
    std::getline(in, line);
    ck.expect(line ==
                  "f,pcs_expected_2f1,plcs_expected_2f1,pcs_expected_3f1,plcs_expected_3f1,"
                  "pcs_messages_3f1,plcs_messages_3f1,pbs_cs_steps,geobft_messages,"
                  "chainspace_messages",
              "sweep header changed");

    unsigned rows = 0;
    for (unsigned f = 0; f <= 20; ++f) {
        if (!std::getline(in, line)) {
            ck.fail("sweep ended early at f=" + std::to_string(f));
            break;
        }
        std::vector<std::string> col;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) col.push_back(cell);
        if (col.size() != 10) {
            ck.fail("sweep row has wrong arity at f=" + std::to_string(f));
            continue;
        }
        const std::string at = " at f=" + std::to_string(f);

        const Rational probing = Rational(4) - Rational(4 * f + 3, (f + 1) * (f + 1));
        const BigInt ff = analysis::factorial(f);
        const Rational listed =
            Rational(4) - Rational(2, f + 1) - Rational(ff * ff, analysis::factorial(2 * f));
        const Rational ratio(BigInt(2 * f + 1) * (2 * f + 1), BigInt(f + 1) * (f + 1));
        ck.expect(probing == ratio, "4-(4f+3)/(f+1)^2 != (2f+1)^2/(f+1)^2" + at);

        ck.expect(col[0] == std::to_string(f), "f column off" + at);
        ck.expect(col[1] == analysis::to_decimal_string(probing),
                  "probing expectation column off" + at);
        ck.expect(col[2] == analysis::to_decimal_string(listed),
                  "listed expectation column off" + at);
        ck.expect(col[7] == std::to_string(2 * f + 1), "f1+f2+1 column off" + at);
        ck.expect(col[8] == std::to_string(f + 1), "f+1 column off" + at);
        ck.expect(col[9] == std::to_string(static_cast<std::uint64_t>(3 * f + 1) * (3 * f + 1)),
                  "(3f+1)^2 column off" + at);
        ++rows;
    }
    summary = std::to_string(rows) +
              " sweep rows, f <= 20: columns equal 4-(4f+3)/(f+1)^2, 4-2/(f+1)-f!^2/(2f)!, "
              "2f+1, f+1, (3f+1)^2 at 12 significant digits";
}

// ---------------------------------------------------------------------------
// Same spec, same seed: byte-identical CSV, at any worker count.

void suite_csv_determinism(Checker& ck, std::string& summary, const SuiteOptions&) {
    const auto render = [](const cli::RunSpec& spec, unsigned jobs) {
        const auto campaign = cli::run_campaign(spec, jobs);
        std::ostringstream os;
        cli::write_csv(os, spec, campaign);
        return os.str();
    };

    cli::RunSpec sync;
    sync.protocol = proto::ProtocolKind::Pcs;
    sync.n1 = sync.n2 = 5;
    sync.f1 = sync.f2 = 1;
    sync.adversary.kind = sim::AdversaryKind::WorstCase;
    sync.trials = 300;
    sync.seed = 7701;
    const auto s1 = render(sync, 1);
    ck.expect(s1 == render(sync, 1), "sync spec replay diverged");
    ck.expect(s1 == render(sync, 3), "worker count changed sync CSV bytes");

    cli::RunSpec async;
    async.protocol = proto::ProtocolKind::Ppcs;
    async.n1 = async.n2 = 4;
    async.f1 = async.f2 = 1;
    async.network.mode = sim::NetworkConfig::Mode::Async;
    async.network.drop_prob = 0.25;
    async.network.dup_prob = 0.1;
    async.network.delay_max = 3;
    async.adversary.kind = sim::AdversaryKind::Randomized;
    async.adversary.seed = 5;
    async.trials = 150;
    async.seed = 9911;
    async.delta = 3;
    async.parallel_rounds = 2;
    const auto a1 = render(async, 1);
    ck.expect(a1 == render(async, 2), "worker count changed async CSV bytes");
    ck.expect(a1 == render(async, 1), "async spec replay diverged");

    auto reseeded = sync;
    reseeded.seed = 7702;
    ck.expect(render(reseeded, 1) != s1, "distinct seeds produced identical CSV");

    summary = "byte-identical CSV across replays and worker counts (sync and lossy async specs); "
              "a different seed diverges";
}

using SuiteFn = void (*)(Checker&, std::string&, const SuiteOptions&);

struct Entry {
    const char* name;
    SuiteFn fn;
};

constexpr Entry kSuites[] = {
    {"fc_equivalence", suite_fc_equivalence},
    {"pt_oracle", suite_pt_oracle},
    {"equal_half_identity", suite_equal_half_identity},
    {"pcs_expectation", suite_pcs_expectation},
    {"ppcs_worst_case", suite_ppcs_worst_case},
    {"plcs_bounds", suite_plcs_bounds},
    {"safety_fuzz", suite_safety_fuzz},
    {"async_liveness", suite_async_liveness},
    {"sweep_formulas", suite_sweep_formulas},
    {"csv_determinism", suite_csv_determinism},
};

SuiteResult run_entry(const Entry& entry, const SuiteOptions& options) {
    SuiteResult out;
    out.name = entry.name;
    Checker ck;
    std::string summary;
    const auto start = std::chrono::steady_clock::now();
    try {
        entry.fn(ck, summary, options);
    } catch (const std::exception& e) {
        ck.fail(std::string("unhandled exception: ") + e.what());
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.passed = ck.failures == 0;
    if (out.passed) {
        out.detail = summary;
    } else {
        out.detail = std::to_string(ck.failures) + " of " + std::to_string(ck.checks) +
                     " checks failed; first: " + ck.first_failure;
    }
    return out;
}

}  // namespace

std::vector<std::string> suite_names() {
    std::vector<std::string> out;
    for (const auto& entry : kSuites) out.emplace_back(entry.name);
    return out;
}

SuiteResult run_suite(const std::string& name, const SuiteOptions& options) {
    for (const auto& entry : kSuites) {
        if (name == entry.name) return run_entry(entry, options);
    }
    throw std::invalid_argument("unknown suite: " + name);
}

std::vector<SuiteResult> run_all(const SuiteOptions& options) {
    std::vector<SuiteResult> out;
    for (const auto& entry : kSuites) out.push_back(run_entry(entry, options));
    return out;
}

}  // namespace csend::verify
