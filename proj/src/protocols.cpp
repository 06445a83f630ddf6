#include "csend/protocols.hpp"

#include <algorithm>
#include <numeric>

namespace csend::proto {

namespace {

void require_mode(const sim::Simulation& sim, sim::NetworkConfig::Mode mode, const char* what) {
    if (sim.config().network.mode != mode) {
        throw config_error(std::string(what) + " requires a " +
                           sim::to_string(mode) + " network");
    }
}

// Counter snapshot so one protocol run reports only its own share.
struct Baseline {
    std::uint64_t msgs;
    std::uint64_t cons1;
    std::uint64_t cons2;
    std::uint64_t pulse;
};

Baseline snapshot(const sim::Simulation& sim, const std::string& c1, const std::string& c2) {
    return {sim.inter_cluster_messages(), sim.consensus_steps(c1), sim.consensus_steps(c2),
            sim.pulse()};
}

void finish(TrialStats& stats, const sim::Simulation& sim, const std::string& c1,
            const std::string& c2, const Baseline& base) {
    stats.inter_cluster_msgs = sim.inter_cluster_messages() - base.msgs;
    stats.consensus_c1 = sim.consensus_steps(c1) - base.cons1;
    stats.consensus_c2 = sim.consensus_steps(c2) - base.cons2;
    stats.pulses = sim.pulse() - base.pulse;
}

std::vector<ReplicaId> repeat_to(const std::vector<ReplicaId>& members, std::size_t len) {
    std::vector<ReplicaId> out;
    out.reserve(len);
    for (std::size_t i = 0; i < len; ++i) out.push_back(members[i % members.size()]);
    return out;
}

// Draws `count` distinct members of the cluster through the coin (partial
// Fisher-Yates over the index list).
std::vector<ReplicaId> draw_subset(sim::Simulation& sim, const std::string& coin_cluster,
                                   const ClusterConfig& cfg, std::uint32_t count) {
    std::vector<std::uint32_t> idx(cfg.n());
    std::iota(idx.begin(), idx.end(), 0u);
    std::vector<ReplicaId> out;
    out.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto j = k + sim.coin_draw(coin_cluster, idx.size() - k);
        std::swap(idx[k], idx[j]);
        out.push_back(cfg.replica(idx[k]));
    }
    return out;
}

}  // namespace

void begin_cs_step(sim::Simulation& sim, const ReplicaId& r1, const ReplicaId& r2,
                   const Value& v) {
    if (!sim.all_non_faulty_hold(r1.cluster, DecisionState::Slot::Agreed, v)) {
        throw protocol_error("cs step started before cluster " + r1.cluster + " agreed");
    }
    const auto subject = encode_send_subject(v, r2.cluster);
    SendMessage msg{v, r2.cluster, sim.make_certificate(r1.cluster, subject)};
    sim.instruct_send(r1, r2, msg);
}

CsStepOutcome cs_step(sim::Simulation& sim, const ReplicaId& r1, const ReplicaId& r2,
                      const Value& v) {
    const auto msgs_before = sim.inter_cluster_messages();
    begin_cs_step(sim, r1, r2, v);
    sim.advance_pulse();
    sim.advance_pulse();
    sim.advance_pulse();
    CsStepOutcome out;
    out.r1 = r1;
    out.r2 = r2;
    out.messages_sent = sim.inter_cluster_messages() - msgs_before;
    out.success = sim.consensus_done(r1.cluster, encode_proof_subject(v, r2.cluster));
    return out;
}

TrialStats pcs(sim::Simulation& sim, const std::string& c1, const std::string& c2, const Value& v,
               std::uint64_t max_iters) {
    require_mode(sim, sim::NetworkConfig::Mode::Sync, "pcs");
    const auto& cfg1 = sim.cluster(c1);
    const auto& cfg2 = sim.cluster(c2);
    if (max_iters == 0) {
        max_iters = 10ull * (cfg1.f() + 1) * (cfg2.f() + 1);
    }

    const auto base = snapshot(sim, c1, c2);
    TrialStats stats;
    sim.local_consensus(c1, encode_send_subject(v, c2));

    for (std::uint64_t iter = 0; iter < max_iters; ++iter) {
        const auto r1 = cfg1.replica(static_cast<std::uint32_t>(sim.coin_draw(c1, cfg1.n())));
        const auto r2 = cfg2.replica(static_cast<std::uint32_t>(sim.coin_draw(c1, cfg2.n())));
        sim.record_event({sim.pulse(), sim::EventKind::StepBegin, r1, r2, 0, iter, 0});
        const auto out = cs_step(sim, r1, r2, v);
        sim.record_event({sim.pulse(), sim::EventKind::StepEnd, r1, r2, 0, iter,
                          out.success ? 1ull : 0ull});
        stats.cs_steps += 1;
        if (out.success) {
            stats.confirmed = true;
            break;
        }
    }

    finish(stats, sim, c1, c2, base);
    return stats;
}

PruneState PruneState::make(sim::Simulation& sim, const ClusterConfig& c1,
                            const ClusterConfig& c2) {
    PruneState state;
    state.coin_cluster = c1.id();
    state.active_first = draw_subset(sim, c1.id(), c1, c1.f() + 1);
    state.active_second = draw_subset(sim, c1.id(), c2, c2.f() + 1);
    return state;
}

std::uint64_t PruneState::capacity() const {
    return static_cast<std::uint64_t>(active_first.size()) * active_second.size();
}

std::optional<std::pair<ReplicaId, ReplicaId>> PruneState::select(sim::Simulation& sim) {
    std::vector<std::pair<ReplicaId, ReplicaId>> candidates;
    for (const auto& a : active_first) {
        for (const auto& b : active_second) {
            if (tried.count({a, b}) == 0) candidates.emplace_back(a, b);
        }
    }
    if (candidates.empty()) return std::nullopt;
    return candidates[sim.coin_draw(coin_cluster, candidates.size())];
}

void PruneState::record_failure(const ReplicaId& r1, const ReplicaId& r2) {
    tried.insert({r1, r2});
    failed_partners_first[r1].insert(r2);
    failed_partners_second[r2].insert(r1);

    // A candidate that failed against every active partner is provably
    // faulty: a step between two non-faulty replicas cannot fail under
    // reliable delivery. Exclusions shrink the partner sets, so rescan until
    // nothing moves.
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = active_first.begin(); it != active_first.end();) {
            const auto& failed = failed_partners_first[*it];
            const bool all_failed =
                !active_second.empty() &&
                std::all_of(active_second.begin(), active_second.end(),
                            [&](const ReplicaId& b) { return failed.count(b) != 0; });
            if (all_failed) {
                excluded_first.insert(*it);
                it = active_first.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
        for (auto it = active_second.begin(); it != active_second.end();) {
            const auto& failed = failed_partners_second[*it];
            const bool all_failed =
                !active_first.empty() &&
                std::all_of(active_first.begin(), active_first.end(),
                            [&](const ReplicaId& a) { return failed.count(a) != 0; });
            if (all_failed) {
                excluded_second.insert(*it);
                it = active_second.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }
}

TrialStats ppcs(sim::Simulation& sim, const std::string& c1, const std::string& c2, const Value& v,
                std::uint64_t max_iters, PruneState* state_out) {
    require_mode(sim, sim::NetworkConfig::Mode::Sync, "ppcs");
    const auto& cfg1 = sim.cluster(c1);
    const auto& cfg2 = sim.cluster(c2);
    if (max_iters == 0) {
        max_iters = static_cast<std::uint64_t>(cfg1.f() + 1) * (cfg2.f() + 1);
    }

    const auto base = snapshot(sim, c1, c2);
    TrialStats stats;
    sim.local_consensus(c1, encode_send_subject(v, c2));
    auto prune = PruneState::make(sim, cfg1, cfg2);

    for (std::uint64_t iter = 0; iter < max_iters; ++iter) {
        const auto pick = prune.select(sim);
        if (!pick) {
            throw invariant_error("pruned candidate set ran dry before confirmation");
        }
        const auto& [r1, r2] = *pick;
        sim.record_event({sim.pulse(), sim::EventKind::StepBegin, r1, r2, 0, iter, 0});
        const auto out = cs_step(sim, r1, r2, v);
        sim.record_event({sim.pulse(), sim::EventKind::StepEnd, r1, r2, 0, iter,
                          out.success ? 1ull : 0ull});
        stats.cs_steps += 1;
        if (out.success) {
            stats.confirmed = true;
            break;
        }
        prune.record_failure(r1, r2);
    }

    if (state_out) *state_out = prune;
    finish(stats, sim, c1, c2, base);
    return stats;
}

std::pair<std::vector<ReplicaId>, std::vector<ReplicaId>> sf_min(const ClusterConfig& c1,
                                                                 const ClusterConfig& c2) {
    const auto len = std::min(c1.n(), c2.n());
    return {repeat_to(c1.members(), len), repeat_to(c2.members(), len)};
}

std::pair<std::vector<ReplicaId>, std::vector<ReplicaId>> sf_max(const ClusterConfig& c1,
                                                                 const ClusterConfig& c2) {
    const auto len = std::max(c1.n(), c2.n());
    return {repeat_to(c1.members(), len), repeat_to(c2.members(), len)};
}

const char* to_string(SelectFunction sf) {
    return sf == SelectFunction::Min ? "min" : "max";
}

analysis::ListPair make_list_pair(const ClusterConfig& c1, const ClusterConfig& c2,
                                  std::vector<ReplicaId> s1, std::vector<ReplicaId> s2) {
    if (s1.size() != s2.size()) throw config_error("list pair lengths differ");
    analysis::ListPair lp;
    lp.first_faulty.reserve(s1.size());
    lp.second_faulty.reserve(s2.size());
    for (const auto& r : s1) {
        if (r.cluster != c1.id() || r.index >= c1.n()) {
            throw config_error("first list entry outside cluster " + c1.id());
        }
        lp.first_faulty.push_back(c1.is_faulty(r.index));
    }
    for (const auto& r : s2) {
        if (r.cluster != c2.id() || r.index >= c2.n()) {
            throw config_error("second list entry outside cluster " + c2.id());
        }
        lp.second_faulty.push_back(c2.is_faulty(r.index));
    }
    lp.first = std::move(s1);
    lp.second = std::move(s2);
    return lp;
}

analysis::ListPair random_permutation_pair(analysis::ListPair lists, sim::SharedCoin& coin) {
    auto shuffle = [&coin](std::vector<ReplicaId>& entries, std::vector<bool>& flags) {
        for (std::size_t j = entries.size(); j > 1; --j) {
            const auto i = static_cast<std::size_t>(coin.draw(j));
            std::swap(entries[i], entries[j - 1]);
            std::vector<bool>::swap(flags[i], flags[j - 1]);
        }
    };
    shuffle(lists.first, lists.first_faulty);
    shuffle(lists.second, lists.second_faulty);
    return lists;
}

TrialStats plcs(sim::Simulation& sim, const std::string& c1, const std::string& c2, const Value& v,
                SelectFunction sf, analysis::ListPair* lists_out) {
    require_mode(sim, sim::NetworkConfig::Mode::Sync, "plcs");
    const auto& cfg1 = sim.cluster(c1);
    const auto& cfg2 = sim.cluster(c2);
    auto [s1, s2] = (sf == SelectFunction::Min) ? sf_min(cfg1, cfg2) : sf_max(cfg1, cfg2);
    auto lp = make_list_pair(cfg1, cfg2, std::move(s1), std::move(s2));
    const unsigned faults = lp.fault_count_first() + lp.fault_count_second();
    if (lp.size() <= faults) {
        throw config_error("list protocol needs list length above the faulty entry count");
    }

    const auto base = snapshot(sim, c1, c2);
    TrialStats stats;
    sim.local_consensus(c1, encode_send_subject(v, c2));
    auto perm = random_permutation_pair(std::move(lp), sim.coin(c1));
    if (lists_out) *lists_out = perm;

    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
        const auto& r1 = perm.first[pos];
        const auto& r2 = perm.second[pos];
        sim.record_event({sim.pulse(), sim::EventKind::StepBegin, r1, r2, 0, pos, 0});
        const auto out = cs_step(sim, r1, r2, v);
        sim.record_event({sim.pulse(), sim::EventKind::StepEnd, r1, r2, 0, pos,
                          out.success ? 1ull : 0ull});
        stats.cs_steps += 1;
        if (out.success) {
            stats.confirmed = true;
            break;
        }
    }

    if (!stats.confirmed) {
        throw invariant_error("list positions exhausted without confirmation");
    }
    finish(stats, sim, c1, c2, base);
    return stats;
}

const char* to_string(ProtocolKind kind) {
    switch (kind) {
        case ProtocolKind::Pcs: return "pcs";
        case ProtocolKind::Ppcs: return "ppcs";
        case ProtocolKind::PlcsMin: return "plcs_min";
        case ProtocolKind::PlcsMax: return "plcs_max";
    }
    return "?";
}

namespace {

// Supplies the next (r1, r2) pair for the async driver, per protocol.
class PairSource {
public:
    PairSource(sim::Simulation& sim, ProtocolKind kind, const ClusterConfig& cfg1,
               const ClusterConfig& cfg2)
        : sim_(sim), kind_(kind), cfg1_(cfg1), cfg2_(cfg2) {
        switch (kind_) {
            case ProtocolKind::Pcs: break;
            case ProtocolKind::Ppcs: prune_ = PruneState::make(sim_, cfg1_, cfg2_); break;
            case ProtocolKind::PlcsMin:
            case ProtocolKind::PlcsMax: {
                auto [s1, s2] = (kind_ == ProtocolKind::PlcsMin) ? sf_min(cfg1_, cfg2_)
                                                                 : sf_max(cfg1_, cfg2_);
                base_lists_ = make_list_pair(cfg1_, cfg2_, std::move(s1), std::move(s2));
                const unsigned faults =
                    base_lists_->fault_count_first() + base_lists_->fault_count_second();
                if (base_lists_->size() <= faults) {
                    throw config_error(
                        "list protocol needs list length above the faulty entry count");
                }
                perm_ = random_permutation_pair(*base_lists_, sim_.coin(cfg1_.id()));
                break;
            }
        }
    }

    std::pair<ReplicaId, ReplicaId> next() {
        switch (kind_) {
            case ProtocolKind::Pcs: {
                const auto i = static_cast<std::uint32_t>(sim_.coin_draw(cfg1_.id(), cfg1_.n()));
                const auto j = static_cast<std::uint32_t>(sim_.coin_draw(cfg1_.id(), cfg2_.n()));
                return {cfg1_.replica(i), cfg2_.replica(j)};
            }
            case ProtocolKind::Ppcs: {
                auto pick = prune_->select(sim_);
                if (!pick) {
                    // All candidates spent (deadline misses can evict good
                    // pairs); start over with freshly drawn working sets.
                    prune_ = PruneState::make(sim_, cfg1_, cfg2_);
                    pick = prune_->select(sim_);
                    if (!pick) throw invariant_error("fresh candidate set empty");
                }
                return *pick;
            }
            case ProtocolKind::PlcsMin:
            case ProtocolKind::PlcsMax: break;
        }
        if (pos_ == perm_->size()) {
            perm_ = random_permutation_pair(*base_lists_, sim_.coin(cfg1_.id()));
            pos_ = 0;
        }
        const auto idx = pos_++;
        return {perm_->first[idx], perm_->second[idx]};
    }

    void report_failure(const std::pair<ReplicaId, ReplicaId>& pair) {
        if (kind_ == ProtocolKind::Ppcs) prune_->record_failure(pair.first, pair.second);
    }

private:
    sim::Simulation& sim_;
    ProtocolKind kind_;
    const ClusterConfig& cfg1_;
    const ClusterConfig& cfg2_;
    std::optional<PruneState> prune_;
    std::optional<analysis::ListPair> base_lists_;
    std::optional<analysis::ListPair> perm_;
    std::size_t pos_ = 0;
};

}  // namespace

TrialStats async_drive(sim::Simulation& sim, const std::string& c1, const std::string& c2,
                       const Value& v, ProtocolKind kind, const AsyncOptions& options) {
    require_mode(sim, sim::NetworkConfig::Mode::Async, "async_drive");
    if (options.delta == 0) throw config_error("async backoff unit must be positive");
    if (options.parallel_rounds == 0) throw config_error("parallel_rounds must be positive");
    const auto& cfg1 = sim.cluster(c1);
    const auto& cfg2 = sim.cluster(c2);
    PairSource source(sim, kind, cfg1, cfg2);

    const auto base = snapshot(sim, c1, c2);
    TrialStats stats;
    sim.local_consensus(c1, encode_send_subject(v, c2));
    const auto proof_subject = encode_proof_subject(v, c2);
    const auto t0 = sim.pulse();

    // deadline(i) = t0 + delta * 2^i, capped so it never wraps.
    auto deadline = [&](std::uint64_t i) {
        const auto shift = std::min<std::uint64_t>(i, 62);
        return t0 + options.delta * (1ull << shift);
    };

    struct Launched {
        std::uint64_t index;
        std::uint64_t deadline;
        std::pair<ReplicaId, ReplicaId> pair;
        bool expired = false;
    };
    std::vector<Launched> launched;

    auto launch = [&]() {
        const auto index = static_cast<std::uint64_t>(launched.size());
        const auto pair = source.next();
        sim.record_event({sim.pulse(), sim::EventKind::StepBegin, pair.first, pair.second, 0,
                          index, deadline(index)});
        begin_cs_step(sim, pair.first, pair.second, v);
        launched.push_back({index, deadline(index), pair, false});
        stats.cs_steps += 1;
    };

    for (std::uint32_t i = 0; i < options.parallel_rounds; ++i) launch();

    while (!sim.consensus_done(c1, proof_subject)) {
        if (sim.pulse() >= sim.config().max_pulses) break;
        sim.advance_pulse();
        if (sim.consensus_done(c1, proof_subject)) break;
        // Indexed loop: launch() may grow the vector while we walk it.
        for (std::size_t k = 0; k < launched.size(); ++k) {
            if (launched[k].expired || sim.pulse() < launched[k].deadline) continue;
            launched[k].expired = true;
            sim.record_event({sim.pulse(), sim::EventKind::StepEnd, launched[k].pair.first,
                              launched[k].pair.second, 0, launched[k].index, 0});
            source.report_failure(launched[k].pair);
            if (k + 1 == launched.size()) launch();
        }
    }

    stats.confirmed = sim.consensus_done(c1, proof_subject);
    finish(stats, sim, c1, c2, base);
    return stats;
}

}  // namespace csend::proto
