#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "csend/analysis.hpp"
#include "csend/core.hpp"
#include "csend/simnet.hpp"

// The cluster-sending protocols: one probing step (cs_step), the
// with-replacement randomized protocol (pcs), its pruned variant (ppcs), the
// list protocol (plcs) with its list-selection functions, and the
// asynchronous driver with exponential backoff.
namespace csend::proto {

struct CsStepOutcome {
    bool success = false;
    std::uint64_t messages_sent = 0;
    ReplicaId r1;
    ReplicaId r2;
};

// Transmit-only half of a step: checks the agreement precondition and
// instructs r1 to send; no pulses elapse. The async driver uses this.
void begin_cs_step(sim::Simulation& sim, const ReplicaId& r1, const ReplicaId& r2, const Value& v);

// One full probing step: r1 sends the certified value to r2, r2's cluster
// decides receive and answers with a certified proof, r1's cluster decides
// confirm; three pulses elapse. success reflects whether the initiating
// cluster reached consensus on the proof within the step's window. Throws
// protocol_error unless every non-faulty replica of r1's cluster has already
// agreed on v.
CsStepOutcome cs_step(sim::Simulation& sim, const ReplicaId& r1, const ReplicaId& r2,
                      const Value& v);

struct TrialStats {
    std::uint64_t cs_steps = 0;
    std::uint64_t inter_cluster_msgs = 0;
    std::uint64_t consensus_c1 = 0;
    std::uint64_t consensus_c2 = 0;
    std::uint64_t pulses = 0;
    bool confirmed = false;
};

// Randomized cluster-sending: agree on v, then probe uniformly random pairs
// (with replacement) until the proof consensus lands. max_iters == 0 means
// the default 10 * (f1+1) * (f2+1); exhausting it stops with
// confirmed == false. Requires SYNC mode (the async driver wraps it
// otherwise).
TrialStats pcs(sim::Simulation& sim, const std::string& c1, const std::string& c2, const Value& v,
               std::uint64_t max_iters = 0);

// Bookkeeping for the pruned protocol. The initiating cluster's coin draws
// working subsets of f1+1 and f2+1 candidates; pairs are probed uniformly
// without replacement inside them; a candidate that failed against every
// active partner is provably faulty and leaves its working set. Every pair
// ever probed lies in the initial subsets, so a run makes at most
// (f1+1)*(f2+1) steps, and each working set always retains a non-faulty
// member, so a fresh good pair always exists.
struct PruneState {
    std::set<std::pair<ReplicaId, ReplicaId>> tried;
    std::map<ReplicaId, std::set<ReplicaId>> failed_partners_first;   // r1 -> distinct failed r2s
    std::map<ReplicaId, std::set<ReplicaId>> failed_partners_second;  // r2 -> distinct failed r1s
    std::set<ReplicaId> excluded_first;
    std::set<ReplicaId> excluded_second;
    std::vector<ReplicaId> active_first;   // working subset, shrinks on exclusion
    std::vector<ReplicaId> active_second;
    std::string coin_cluster;

    static PruneState make(sim::Simulation& sim, const ClusterConfig& c1, const ClusterConfig& c2);

    std::uint64_t capacity() const;  // |active_first| * |active_second|
    std::optional<std::pair<ReplicaId, ReplicaId>> select(sim::Simulation& sim);
    void record_failure(const ReplicaId& r1, const ReplicaId& r2);
};

// pcs plus pruning. Under SYNC it terminates confirmed within
// (f1+1)*(f2+1) steps; an empty candidate set before success signals a model
// bug and raises invariant_error. state_out, when given, receives the final
// prune bookkeeping for inspection.
TrialStats ppcs(sim::Simulation& sim, const std::string& c1, const std::string& c2, const Value& v,
                std::uint64_t max_iters = 0, PruneState* state_out = nullptr);

// List-selection functions: both clusters' member lists brought to a common
// length; the shorter of the two bounds (truncates) for Min, the longer
// bounds (cycles the shorter list) for Max.
std::pair<std::vector<ReplicaId>, std::vector<ReplicaId>> sf_min(const ClusterConfig& c1,
                                                                 const ClusterConfig& c2);
std::pair<std::vector<ReplicaId>, std::vector<ReplicaId>> sf_max(const ClusterConfig& c1,
                                                                 const ClusterConfig& c2);

enum class SelectFunction { Min, Max };

const char* to_string(SelectFunction sf);

// Equal-length lists with per-position fault flags taken from the configs.
analysis::ListPair make_list_pair(const ClusterConfig& c1, const ClusterConfig& c2,
                                  std::vector<ReplicaId> s1, std::vector<ReplicaId> s2);

// Independent uniform shuffles of both lists (flags travel with entries),
// consuming only the given coin.
analysis::ListPair random_permutation_pair(analysis::ListPair lists, sim::SharedCoin& coin);

// List cluster-sending: agree on v, pick a random permutation pair through
// the initiating cluster's coin, then walk the positions with cs_step until
// confirmation. Succeeds within f(S1)+f(S2)+1 steps whenever the list length
// exceeds f(S1)+f(S2) (throws config_error otherwise, before any step).
// Requires SYNC mode; exhausting all positions raises invariant_error.
// lists_out, when given, receives the permuted lists of the run.
TrialStats plcs(sim::Simulation& sim, const std::string& c1, const std::string& c2, const Value& v,
                SelectFunction sf, analysis::ListPair* lists_out = nullptr);

enum class ProtocolKind { Pcs, Ppcs, PlcsMin, PlcsMax };

const char* to_string(ProtocolKind kind);

struct AsyncOptions {
    std::uint64_t delta = 4;          // backoff unit, in pulses
    std::uint32_t parallel_rounds = 1;  // steps launched immediately
};

// Drives any of the protocols over an unreliable network: step i must finish
// by delta * 2^i pulses after agreement, the first parallel_rounds steps
// start immediately, and further steps launch as deadlines expire. Late
// proofs still confirm. Pair sources that run dry (pruned set exhausted, all
// list positions spent) are redrawn, so the run keeps probing until the
// proof consensus lands or the global pulse cap stops it. Requires ASYNC
// mode.
TrialStats async_drive(sim::Simulation& sim, const std::string& c1, const std::string& c2,
                       const Value& v, ProtocolKind kind, const AsyncOptions& options = {});

}  // namespace csend::proto
