#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "csend/runspec.hpp"

using namespace csend;
using namespace csend::cli;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

std::string render(const RunSpec& spec, unsigned jobs) {
    std::ostringstream os;
    write_csv(os, spec, run_campaign(spec, jobs));
    return os.str();
}

}  // namespace

TEST_CASE("csv header names the per-trial schema") {
    CHECK(std::string(csv_header()) ==
          "protocol,n1,f1,n2,f2,network,trial,steps,inter_cluster_msgs,consensus_c1,"
          "consensus_c2,pulses,confirmed");
}

TEST_CASE("validation rejects contradictions and keeps defeatable lists runnable") {
    RunSpec spec;
    CHECK(spec.validate().empty());

    RunSpec thin = spec;
    thin.n1 = 4;
    thin.f1 = 2;
    CHECK_THROWS_AS(thin.validate(), config_error);

    RunSpec none = spec;
    none.trials = 0;
    CHECK_THROWS_AS(none.validate(), config_error);

    RunSpec stalled = spec;
    stalled.delta = 0;
    CHECK_THROWS_AS(stalled.validate(), config_error);

    RunSpec bad_net = spec;
    bad_net.network.drop_prob = 1.5;
    CHECK_THROWS_AS(bad_net.validate(), config_error);

    // min(n1, n2) == f1 + f2: a placement can leave the short list without a
    // good position, so validate() warns and the run stays runnable.
    RunSpec defeatable = spec;
    defeatable.protocol = proto::ProtocolKind::PlcsMin;
    defeatable.n1 = 3;
    defeatable.f1 = 1;
    defeatable.n2 = 5;
    defeatable.f2 = 2;
    CHECK(defeatable.validate().size() == 1);

    RunSpec thin_max = spec;
    thin_max.protocol = proto::ProtocolKind::PlcsMax;
    thin_max.n1 = 3;
    thin_max.f1 = 1;
    CHECK(thin_max.validate().size() == 1);
}

TEST_CASE("single trials replay deterministically and can record a trace") {
    RunSpec spec;
    spec.protocol = proto::ProtocolKind::Ppcs;
    spec.n1 = 5;
    spec.f1 = 2;
    spec.n2 = 5;
    spec.f2 = 2;
    spec.seed = 314;

    const auto once = run_single_trial(spec, 3);
    const auto again = run_single_trial(spec, 3);
    CHECK(once.stats.cs_steps == again.stats.cs_steps);
    CHECK(once.stats.pulses == again.stats.pulses);
    CHECK(once.stats.inter_cluster_msgs == again.stats.inter_cluster_msgs);
    CHECK(once.stats.confirmed);
    CHECK_FALSE(once.violation);

    sim::Trace trace;
    const auto traced = run_single_trial(spec, 3, &trace);
    CHECK(traced.stats.cs_steps == once.stats.cs_steps);
    CHECK_FALSE(trace.events.empty());

    const auto sibling = run_single_trial(spec, 4);
    // Neighbouring trials draw independent randomness; equal whole-stat rows
    // would mean the per-trial seed derivation collapsed.
    const bool differs = sibling.stats.pulses != once.stats.pulses ||
                         sibling.stats.cs_steps != once.stats.cs_steps ||
                         sibling.stats.inter_cluster_msgs != once.stats.inter_cluster_msgs;
    CHECK(differs);
}

TEST_CASE("campaign csv is byte-stable across worker counts and tracks the seed") {
    RunSpec spec;
    spec.protocol = proto::ProtocolKind::Ppcs;
    spec.network.mode = sim::NetworkConfig::Mode::Async;
    spec.network.drop_prob = 0.2;
    spec.network.dup_prob = 0.1;
    spec.adversary.kind = sim::AdversaryKind::Randomized;
    spec.adversary.seed = 8;
    spec.trials = 60;
    spec.seed = 2024;

    const auto serial = render(spec, 1);
    CHECK(render(spec, 4) == serial);
    CHECK(render(spec, 7) == serial);

    const auto rows = lines_of(serial);
    REQUIRE(rows.size() == 61);
    CHECK(rows[0] == csv_header());
    CHECK(rows[1].rfind("ppcs,4,1,4,1,async,0,", 0) == 0);
    CHECK(rows[60].find(",59,") != std::string::npos);

    RunSpec reseeded = spec;
    reseeded.seed = 2025;
    CHECK(render(reseeded, 1) != serial);
}

TEST_CASE("exhausting the probing cap reports confirmed=false without a violation") {
    RunSpec spec;
    spec.protocol = proto::ProtocolKind::Pcs;
    spec.n1 = 3;
    spec.f1 = 1;
    spec.n2 = 3;
    spec.f2 = 1;
    spec.max_iters = 1;
    spec.trials = 200;
    spec.seed = 99;

    const auto campaign = run_campaign(spec, 0);
    CHECK_FALSE(campaign.any_violation());
    std::size_t confirmed = 0;
    for (const auto& trial : campaign.trials) {
        confirmed += trial.stats.confirmed ? 1 : 0;
        CHECK(trial.stats.cs_steps <= 1);
    }
    // One uniform pair draw succeeds with probability (2/3)^2; 200 trials
    // cannot all land on a good pair.
    CHECK(confirmed > 0);
    CHECK(confirmed < 200);

    std::ostringstream os;
    write_csv(os, spec, campaign);
    CHECK(os.str().find(",false") != std::string::npos);
}

TEST_CASE("analytic sweep table starts with the hand-checked rows") {
    std::ostringstream os;
    write_sweep_csv(os, 1);
    const auto rows = lines_of(os.str());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] ==
          "f,pcs_expected_2f1,plcs_expected_2f1,pcs_expected_3f1,plcs_expected_3f1,"
          "pcs_messages_3f1,plcs_messages_3f1,pbs_cs_steps,geobft_messages,chainspace_messages");
    CHECK(rows[1] == "0,1,1,1,1,2,2,1,1,1");
    CHECK(rows[2].rfind("1,2.25,2.5,", 0) == 0);
    CHECK(rows[2].substr(rows[2].size() - 7) == ",3,2,16");
}

TEST_CASE("sweep points agree with their analytic expectation") {
    const auto probing = sweep_point(proto::ProtocolKind::Pcs, 3, 1, 3, 1, 4000, 11);
    CHECK(probing.analytic == analysis::Rational(9, 4));
    CHECK(probing.ok);
    CHECK(probing.trials == 4000);

    // Lists of length min(n1, n2) = 3 cycle each cluster exactly once, so the
    // fault multiset is pinned and the expectation is the scan value.
    const auto listed = sweep_point(proto::ProtocolKind::PlcsMin, 3, 1, 3, 1, 4000, 12);
    CHECK(listed.analytic == analysis::scan_expected_steps(3, 1, 1));
    CHECK(listed.ok);
    CHECK(listed.empirical_max <= 3);
}

TEST_CASE("empirical sweep renders deterministic validated cells") {
    std::ostringstream once;
    write_empirical_sweep_csv(once, 1, 500, 1);
    std::ostringstream again;
    write_empirical_sweep_csv(again, 1, 500, 1);
    CHECK(once.str() == again.str());

    const auto rows = lines_of(once.str());
    REQUIRE(rows.size() == 9);  // header + 2 sizes x 2 protocols per f
    CHECK(rows[0] ==
          "protocol,n1,f1,n2,f2,analytic_expected,empirical_mean,empirical_max,trials,ci95,ok");
    CHECK(rows[1].rfind("pcs,1,0,1,0,1,1,1,500,", 0) == 0);
    // ok is a 95% interval check, so a twentieth of nontrivial cells fail per
    // seed on average; this seed keeps every cell inside the interval.
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].substr(rows[i].size() - 5) == ",true");
    }
}
