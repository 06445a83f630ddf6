#include "csend/simnet.hpp"

#include <algorithm>
#include <ostream>

namespace csend::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
    std::uint64_t h = splitmix64(seed ^ fnv1a(stream));
    return splitmix64(h ^ splitmix64(index));
}

std::uint64_t DetRng::below(std::uint64_t bound) {
    if (bound == 0) throw config_error("bounded draw needs a positive bound");
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
        const std::uint64_t r = next();
        if (r >= threshold) return r % bound;
    }
}

double DetRng::unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

SharedCoin::SharedCoin(std::uint64_t run_seed, const std::string& cluster_id)
    : rng_(mix_seed(run_seed, "coin:" + cluster_id)) {}

std::uint64_t SharedCoin::draw(std::uint64_t range) {
    ++draws_;
    return rng_.below(range);
}

void NetworkConfig::validate() const {
    auto check_prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw config_error(std::string(name) + " must lie in [0, 1]");
        }
    };
    check_prob(drop_prob, "drop_prob");
    check_prob(dup_prob, "dup_prob");
    for (const auto& phase : reliability_schedule) check_prob(phase.drop_prob, "phase drop_prob");
    if (mode == Mode::Sync) {
        if (drop_prob != 0.0 || dup_prob != 0.0 || !reliability_schedule.empty()) {
            throw config_error("sync networks admit no loss, duplication, or reliability phases");
        }
    }
}

double NetworkConfig::drop_at(std::uint64_t pulse) const {
    std::uint64_t start = 0;
    for (const auto& phase : reliability_schedule) {
        if (phase.pulses == 0) return phase.drop_prob;  // holds for the rest of the run
        if (pulse < start + phase.pulses) return phase.drop_prob;
        start += phase.pulses;
    }
    return drop_prob;
}

const char* to_string(NetworkConfig::Mode mode) {
    return mode == NetworkConfig::Mode::Sync ? "sync" : "async";
}

const char* to_string(AdversaryKind kind) {
    switch (kind) {
        case AdversaryKind::Silent: return "silent";
        case AdversaryKind::DropOutbound: return "drop-outbound";
        case AdversaryKind::DropInbound: return "drop-inbound";
        case AdversaryKind::WorstCase: return "worst-case";
        case AdversaryKind::Randomized: return "randomized";
    }
    return "?";
}

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Transmit: return "transmit";
        case EventKind::Drop: return "drop";
        case EventKind::Deliver: return "deliver";
        case EventKind::Consensus: return "consensus";
        case EventKind::Decide: return "decide";
        case EventKind::StepBegin: return "step-begin";
        case EventKind::StepEnd: return "step-end";
    }
    return "?";
}

namespace {

void write_endpoint(std::ostream& os, const ReplicaId& r) {
    if (r.cluster.empty()) {
        os << '-';
    } else if (r.index == UINT32_MAX) {
        os << r.cluster << ":*";
    } else {
        os << r.cluster << ':' << r.index;
    }
}

}  // namespace

void Trace::write(std::ostream& os) const {
    for (const auto& ev : events) {
        os << ev.pulse << ' ' << to_string(ev.kind) << ' ';
        write_endpoint(os, ev.from);
        os << ' ';
        write_endpoint(os, ev.to);
        os << ' ' << ev.payload_digest << ' ' << ev.a << ' ' << ev.b << '\n';
    }
}

Simulation::Simulation(SimConfig config, std::vector<ClusterConfig> clusters)
    : config_(std::move(config)),
      net_rng_(mix_seed(config_.seed, "net")),
      adversary_rng_(mix_seed(config_.seed, "adversary", config_.adversary.seed)) {
    config_.network.validate();
    if (clusters.empty()) throw config_error("simulation needs at least one cluster");
    for (auto& c : clusters) {
        const auto id = c.id();
        ClusterState st{std::move(c), {}, {}, {}, 0, std::nullopt};
        st.decisions.resize(st.config.n());
        st.coin.emplace(config_.seed, id);
        if (!clusters_.emplace(id, std::move(st)).second) {
            throw config_error("duplicate cluster id " + id);
        }
    }
}

const ClusterConfig& Simulation::cluster(const std::string& id) const {
    return state(id).config;
}

Simulation::ClusterState& Simulation::state(const std::string& cluster_id) {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) throw config_error("unknown cluster " + cluster_id);
    return it->second;
}

const Simulation::ClusterState& Simulation::state(const std::string& cluster_id) const {
    auto it = clusters_.find(cluster_id);
    if (it == clusters_.end()) throw config_error("unknown cluster " + cluster_id);
    return it->second;
}

DecisionState& Simulation::decisions(const ReplicaId& r) {
    auto& st = state(r.cluster);
    if (r.index >= st.config.n()) throw config_error("replica index out of range");
    return st.decisions[r.index];
}

const DecisionState& Simulation::decisions(const ReplicaId& r) const {
    const auto& st = state(r.cluster);
    if (r.index >= st.config.n()) throw config_error("replica index out of range");
    return st.decisions[r.index];
}

bool Simulation::all_non_faulty_hold(const std::string& cluster_id, DecisionState::Slot slot,
                                     const Value& v) const {
    const auto& st = state(cluster_id);
    for (std::uint32_t i = 0; i < st.config.n(); ++i) {
        if (st.config.is_faulty(i)) continue;
        if (!st.decisions[i].has(slot, v)) return false;
    }
    return true;
}

Certificate Simulation::local_consensus(const std::string& cluster_id, const Value& subject) {
    auto& st = state(cluster_id);
    if (auto it = st.consensus_certificates.find(subject); it != st.consensus_certificates.end()) {
        return it->second;  // idempotent repeat, no counter change
    }
    const auto view = decode_subject(subject);
    DecisionState::Slot slot;
    if (view.kind == SubjectView::Kind::Send) {
        slot = (view.target_cluster == cluster_id) ? DecisionState::Slot::Received
                                                   : DecisionState::Slot::Agreed;
    } else {
        slot = DecisionState::Slot::Confirmed;
    }

    st.consensus_steps += 1;
    std::set<ReplicaId> signers;
    for (std::uint32_t i = 0; i < st.config.n(); ++i) {
        if (st.config.is_faulty(i)) continue;
        st.decisions[i].set(slot, view.value);
        signers.insert(ReplicaId{cluster_id, i});
        record_event({pulse_, EventKind::Decide, ReplicaId{cluster_id, i}, {},
                      digest(view.value), static_cast<std::uint64_t>(slot), 0});
    }
    st.certifiable.insert(subject);
    if (slot == DecisionState::Slot::Received) {
        st.certifiable.insert(encode_proof_subject(view.value, view.target_cluster));
    }
    auto cert = certify(st.config, subject, std::move(signers));
    st.consensus_certificates.emplace(subject, cert);
    record_event({pulse_, EventKind::Consensus, ReplicaId{cluster_id, UINT32_MAX}, {},
                  digest(subject), 0, 0});
    return cert;
}

bool Simulation::consensus_done(const std::string& cluster_id, const Value& subject) const {
    const auto& st = state(cluster_id);
    return st.consensus_certificates.count(subject) != 0;
}

std::uint64_t Simulation::consensus_steps(const std::string& cluster_id) const {
    return state(cluster_id).consensus_steps;
}

Certificate Simulation::make_certificate(const std::string& cluster_id, const Value& payload) {
    auto& st = state(cluster_id);
    if (st.certifiable.count(payload) == 0) {
        throw invariant_error("cluster " + cluster_id +
                              " asked to certify a payload it never agreed on");
    }
    std::set<ReplicaId> signers;
    for (std::uint32_t i = 0; i < st.config.n(); ++i) {
        if (!st.config.is_faulty(i)) signers.insert(ReplicaId{cluster_id, i});
    }
    return certify(st.config, payload, std::move(signers));
}

bool Simulation::payload_certifiable(const std::string& cluster_id, const Value& payload) const {
    return state(cluster_id).certifiable.count(payload) != 0;
}

std::uint64_t Simulation::message_digest(const ProtocolMessage& msg) const {
    if (const auto* send = std::get_if<SendMessage>(&msg)) {
        return digest(encode_send_subject(send->value, send->target_cluster));
    }
    const auto& proof = std::get<ProofMessage>(msg);
    return digest(encode_proof_subject(proof.inner.value, proof.inner.target_cluster));
}

void Simulation::enqueue(const ReplicaId& from, const ReplicaId& to, const ProtocolMessage& msg) {
    std::uint64_t delay = 0;
    if (config_.network.mode == NetworkConfig::Mode::Async && config_.network.delay_max > 0) {
        delay = net_rng_.below(static_cast<std::uint64_t>(config_.network.delay_max) + 1);
    }
    queue_.push(Pending{pulse_ + 1 + delay, seq_++, from, to, msg});
}

void Simulation::send_inter_cluster(const ReplicaId& from, const ReplicaId& to,
                                    ProtocolMessage msg) {
    const auto& from_cfg = cluster(from.cluster);
    const auto& to_cfg = cluster(to.cluster);
    if (from.cluster == to.cluster) {
        throw config_error("inter-cluster send within cluster " + from.cluster);
    }
    if (from.index >= from_cfg.n() || to.index >= to_cfg.n()) {
        throw config_error("inter-cluster send with out-of-range replica index");
    }

    inter_cluster_messages_ += 1;
    const auto dg = message_digest(msg);
    record_event({pulse_, EventKind::Transmit, from, to, dg, 0, 0});

    if (config_.network.mode == NetworkConfig::Mode::Async) {
        if (net_rng_.unit() < config_.network.drop_at(pulse_)) {
            record_event({pulse_, EventKind::Drop, from, to, dg, 0, 0});
            return;
        }
        enqueue(from, to, msg);
        if (net_rng_.unit() < config_.network.dup_prob) {
            enqueue(from, to, msg);
        }
    } else {
        enqueue(from, to, msg);
    }
}

bool Simulation::instruct_send(const ReplicaId& r1, const ReplicaId& r2, const SendMessage& msg) {
    const auto& cfg = cluster(r1.cluster);
    if (cfg.is_faulty(r1.index)) {
        const auto action = faulty_action(r1);
        if (action == Action::Silent || action == Action::DropOutbound) return false;
    }
    send_inter_cluster(r1, r2, msg);
    return true;
}

Simulation::Action Simulation::faulty_action(const ReplicaId&) {
    switch (config_.adversary.kind) {
        case AdversaryKind::Silent:
        case AdversaryKind::WorstCase: return Action::Silent;
        case AdversaryKind::DropOutbound: return Action::DropOutbound;
        case AdversaryKind::DropInbound: return Action::DropInbound;
        case AdversaryKind::Randomized: break;
    }
    switch (adversary_rng_.below(4)) {
        case 0: return Action::Honest;
        case 1: return Action::Silent;
        case 2: return Action::DropOutbound;
        default: return Action::DropInbound;
    }
}

std::uint64_t Simulation::advance_pulse() {
    pulse_ += 1;
    while (!queue_.empty() && queue_.top().deliver_pulse <= pulse_) {
        Pending p = queue_.top();
        queue_.pop();
        record_event({pulse_, EventKind::Deliver, p.from, p.to, message_digest(p.msg), 0, 0});
        handle_delivery(p);
    }
    return pulse_;
}

void Simulation::handle_delivery(const Pending& p) {
    const auto& cfg = cluster(p.to.cluster);
    bool outbound_allowed = true;
    if (cfg.is_faulty(p.to.index)) {
        switch (faulty_action(p.to)) {
            case Action::Silent:
            case Action::DropInbound: return;  // inbound ignored
            case Action::DropOutbound: outbound_allowed = false; break;
            case Action::Honest: break;
        }
    }
    if (const auto* send = std::get_if<SendMessage>(&p.msg)) {
        handle_send(p.to, p.from, *send, outbound_allowed);
    } else {
        const auto& proof = std::get<ProofMessage>(p.msg);
        handle_proof(p.to, proof.inner, proof.cert);
    }
}

void Simulation::handle_send(const ReplicaId& at, const ReplicaId& from, const SendMessage& msg,
                             bool outbound_allowed) {
    if (msg.target_cluster != at.cluster) return;  // misrouted
    auto origin_it = clusters_.find(msg.cert.cluster);
    if (origin_it == clusters_.end()) return;
    const auto subject = encode_send_subject(msg.value, msg.target_cluster);
    if (msg.cert.payload != subject) return;
    if (!verify_certificate(origin_it->second.config, msg.cert)) return;
    if (origin_it->second.certifiable.count(subject) == 0) {
        throw invariant_error("send certificate verified without consensus provenance");
    }

    if (!consensus_done(at.cluster, subject)) {
        local_consensus(at.cluster, subject);
    }
    if (outbound_allowed) {
        const auto proof_payload = encode_proof_subject(msg.value, msg.target_cluster);
        ProofMessage reply{msg, make_certificate(at.cluster, proof_payload)};
        send_inter_cluster(at, from, reply);
    }
}

void Simulation::handle_proof(const ReplicaId& at, const SendMessage& inner,
                              const Certificate& proof_cert) {
    if (proof_cert.cluster != inner.target_cluster) return;
    auto target_it = clusters_.find(proof_cert.cluster);
    if (target_it == clusters_.end()) return;
    const auto proof_payload = encode_proof_subject(inner.value, inner.target_cluster);
    if (proof_cert.payload != proof_payload) return;
    if (!verify_certificate(target_it->second.config, proof_cert)) return;
    if (target_it->second.certifiable.count(proof_payload) == 0) {
        throw invariant_error("proof certificate verified without consensus provenance");
    }

    // The wrapped send message must be this cluster's own certified send.
    if (inner.cert.cluster != at.cluster) return;
    const auto send_subject = encode_send_subject(inner.value, inner.target_cluster);
    if (inner.cert.payload != send_subject) return;
    const auto& own = state(at.cluster);
    if (!verify_certificate(own.config, inner.cert)) return;
    if (own.certifiable.count(send_subject) == 0) {
        throw invariant_error("wrapped send certificate verified without consensus provenance");
    }

    if (!consensus_done(at.cluster, proof_payload)) {
        local_consensus(at.cluster, proof_payload);
    }
}

SharedCoin& Simulation::coin(const std::string& cluster_id) {
    return *state(cluster_id).coin;
}

std::uint64_t Simulation::coin_draw(const std::string& cluster_id, std::uint64_t range) {
    return coin(cluster_id).draw(range);
}

void Simulation::record_event(TraceEvent ev) {
    if (config_.record_events) trace_.events.push_back(std::move(ev));
}

}  // namespace csend::sim
