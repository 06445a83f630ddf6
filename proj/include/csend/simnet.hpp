#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "csend/core.hpp"

// Deterministic discrete-event simulation of two (or more) clusters
// exchanging cluster-sending messages in global pulses. All randomness flows
// from the run seed through named streams, so equal seeds replay equal runs
// bit for bit.
namespace csend::sim {

// Stable seed derivation: run seed + stream label (+ index) -> engine seed.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

// mt19937_64 with rejection-sampled bounded draws; std distributions are not
// portable across standard libraries, these draws are.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    std::uint64_t below(std::uint64_t bound);  // uniform [0, bound), bound > 0
    double unit();                             // uniform [0, 1), 53-bit

private:
    std::mt19937_64 engine_;
};

// The per-cluster random beacon: every non-faulty replica of a cluster
// observes the same draw sequence. Selection logic of the initiating cluster
// consumes it.
class SharedCoin {
public:
    SharedCoin(std::uint64_t run_seed, const std::string& cluster_id);

    std::uint64_t draw(std::uint64_t range);  // uniform [0, range)
    std::uint64_t draws_consumed() const { return draws_; }

private:
    DetRng rng_;
    std::uint64_t draws_ = 0;
};

// One phase of a reliability schedule: drop probability for a pulse span.
// pulses == 0 means "for the rest of the run".
struct NetworkPhase {
    std::uint64_t pulses = 0;
    double drop_prob = 0.0;
};

struct NetworkConfig {
    enum class Mode { Sync, Async };

    Mode mode = Mode::Sync;
    double drop_prob = 0.0;
    double dup_prob = 0.0;
    std::uint32_t delay_max = 4;  // extra delivery delay bound; unused in SYNC
    std::vector<NetworkPhase> reliability_schedule;  // overrides drop_prob while it lasts

    void validate() const;  // throws config_error; SYNC admits no loss/dup/schedule
    double drop_at(std::uint64_t pulse) const;
};

const char* to_string(NetworkConfig::Mode mode);

// What a faulty replica does. Non-faulty replicas always follow the protocol.
//  Silent        never transmits, never processes inbound
//  DropOutbound  processes inbound honestly but transmits nothing
//  DropInbound   transmits when instructed but ignores everything inbound
//  WorstCase     alias for Silent: guarantees any step touching a faulty
//                endpoint fails, maximizing step counts
//  Randomized    picks one of {honest, silent, drop outbound, drop inbound}
//                per decision point from a dedicated stream
enum class AdversaryKind { Silent, DropOutbound, DropInbound, WorstCase, Randomized };

struct AdversaryStrategy {
    AdversaryKind kind = AdversaryKind::WorstCase;
    std::uint64_t seed = 0;  // folded into the adversary stream (Randomized)
};

const char* to_string(AdversaryKind kind);

enum class EventKind {
    Transmit,   // from, to, digest: message handed to the network
    Drop,       // network lost it
    Deliver,    // handler ran at `to` this pulse
    Consensus,  // from = cluster marker, digest = subject
    Decide,     // from = replica, a = slot, digest = value
    StepBegin,  // a = step index, b = deadline pulse (0 if none)
    StepEnd     // a = step index, b = 1 on success
};

const char* to_string(EventKind kind);

struct TraceEvent {
    std::uint64_t pulse = 0;
    EventKind kind = EventKind::Transmit;
    ReplicaId from;
    ReplicaId to;
    std::uint64_t payload_digest = 0;
    std::uint64_t a = 0;
    std::uint64_t b = 0;

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

// Line-delimited debugging record of one run. Schema (documented, not
// stability-guaranteed): pulse kind from to digest a b
struct Trace {
    std::vector<TraceEvent> events;

    void write(std::ostream& os) const;
};

struct SimConfig {
    NetworkConfig network;
    AdversaryStrategy adversary;
    std::uint64_t seed = 0;
    std::uint64_t max_pulses = 100000;  // global cap consulted by drivers
    bool record_events = false;
};

// Owns cluster state, per-replica decisions, the message queue, counters,
// coins, and the trace. Time advances only through advance_pulse().
class Simulation {
public:
    Simulation(SimConfig config, std::vector<ClusterConfig> clusters);

    const SimConfig& config() const { return config_; }
    std::uint64_t pulse() const { return pulse_; }
    const ClusterConfig& cluster(const std::string& id) const;

    DecisionState& decisions(const ReplicaId& r);
    const DecisionState& decisions(const ReplicaId& r) const;
    bool all_non_faulty_hold(const std::string& cluster_id, DecisionState::Slot slot,
                             const Value& v) const;

    // Runs one atomic consensus step on a canonical subject: installs the
    // subject's decision at every non-faulty replica, bumps the cluster's
    // consensus counter, returns the certificate signed by all non-faulty
    // replicas. Idempotent: repeats return the stored certificate for free.
    Certificate local_consensus(const std::string& cluster_id, const Value& subject);

    bool consensus_done(const std::string& cluster_id, const Value& subject) const;
    std::uint64_t consensus_steps(const std::string& cluster_id) const;

    // Certificate minting with provenance: refuses payloads the cluster never
    // reached consensus on, so forged certificates are unrepresentable.
    Certificate make_certificate(const std::string& cluster_id, const Value& payload);
    bool payload_certifiable(const std::string& cluster_id, const Value& payload) const;

    // Hands a message to the network. Counts one inter-cluster message, then
    // applies drop/duplicate/delay per the network config. Throws
    // config_error on same-cluster targets or unknown endpoints.
    void send_inter_cluster(const ReplicaId& from, const ReplicaId& to, ProtocolMessage msg);

    // Instructs r1 to transmit the step's send message to r2; faulty senders
    // consult the adversary. Returns true if a transmission happened.
    bool instruct_send(const ReplicaId& r1, const ReplicaId& r2, const SendMessage& msg);

    // Executes one pulse: delivers due messages in deterministic order, runs
    // the receiving replicas' handlers (which may transmit replies due next
    // pulse), and returns the new pulse number.
    std::uint64_t advance_pulse();

    SharedCoin& coin(const std::string& cluster_id);
    std::uint64_t coin_draw(const std::string& cluster_id, std::uint64_t range);
    DetRng& adversary_rng() { return adversary_rng_; }

    std::uint64_t inter_cluster_messages() const { return inter_cluster_messages_; }

    const Trace& trace() const { return trace_; }
    void record_event(TraceEvent ev);  // protocols add step markers through this

private:
    struct Pending {
        std::uint64_t deliver_pulse;
        std::uint64_t seq;
        ReplicaId from;
        ReplicaId to;
        ProtocolMessage msg;
    };
    struct PendingLater {
        bool operator()(const Pending& a, const Pending& b) const {
            if (a.deliver_pulse != b.deliver_pulse) return a.deliver_pulse > b.deliver_pulse;
            return a.seq > b.seq;
        }
    };
    struct ClusterState {
        ClusterConfig config;
        std::vector<DecisionState> decisions;
        std::map<Value, Certificate> consensus_certificates;  // subject -> certificate
        std::set<Value> certifiable;                          // payloads non-faulty replicas sign
        std::uint64_t consensus_steps = 0;
        std::optional<SharedCoin> coin;
    };

    enum class Action { Honest, Silent, DropOutbound, DropInbound };

    ClusterState& state(const std::string& cluster_id);
    const ClusterState& state(const std::string& cluster_id) const;
    Action faulty_action(const ReplicaId& r);
    void enqueue(const ReplicaId& from, const ReplicaId& to, const ProtocolMessage& msg);
    void handle_delivery(const Pending& p);
    void handle_send(const ReplicaId& at, const ReplicaId& from, const SendMessage& msg,
                     bool outbound_allowed);
    void handle_proof(const ReplicaId& at, const SendMessage& inner, const Certificate& proof_cert);
    std::uint64_t message_digest(const ProtocolMessage& msg) const;

    SimConfig config_;
    std::map<std::string, ClusterState> clusters_;
    std::priority_queue<Pending, std::vector<Pending>, PendingLater> queue_;
    std::uint64_t pulse_ = 0;
    std::uint64_t seq_ = 0;
    std::uint64_t inter_cluster_messages_ = 0;
    DetRng net_rng_;
    DetRng adversary_rng_;
    Trace trace_;
};

}  // namespace csend::sim
