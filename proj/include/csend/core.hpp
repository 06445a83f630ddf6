#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// Core vocabulary for cluster-sending: replicas, clusters, certificates,
// protocol messages, and per-replica decision slots. Everything here is
// plain data; the simulation (simnet.hpp) gives it behavior.
namespace csend {

// Opaque protocol value. Equality is bytewise.
using Value = std::vector<std::uint8_t>;

inline Value make_value(std::string_view s) {
    return Value(s.begin(), s.end());
}

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct protocol_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invariant_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReplicaId {
    std::string cluster;
    std::uint32_t index = 0;

    friend auto operator<=>(const ReplicaId&, const ReplicaId&) = default;
};

// Static description of one cluster: size n, and which replica indices are
// faulty for the current run. Requires n > 2f so that the non-faulty replicas
// always outnumber the faulty ones and f+1 signatures pin a non-faulty signer.
class ClusterConfig {
public:
    ClusterConfig(std::string id, std::uint32_t n, std::set<std::uint32_t> faulty_indices);

    const std::string& id() const { return id_; }
    std::uint32_t n() const { return n_; }
    std::uint32_t f() const { return static_cast<std::uint32_t>(faulty_.size()); }
    std::uint32_t nf() const { return n_ - f(); }

    bool is_faulty(std::uint32_t index) const { return faulty_.count(index) != 0; }
    bool is_faulty(const ReplicaId& r) const { return r.cluster == id_ && is_faulty(r.index); }
    const std::set<std::uint32_t>& faulty_indices() const { return faulty_; }

    ReplicaId replica(std::uint32_t index) const;

    // Replicas in index order; the deterministic List(C) used by the
    // list-based protocols.
    std::vector<ReplicaId> members() const;
    std::vector<ReplicaId> non_faulty() const;

private:
    std::string id_;
    std::uint32_t n_;
    std::set<std::uint32_t> faulty_;
};

// A payload plus at least f+1 signatures from one cluster. No real
// cryptography: a signer set stands in for signatures, and validity is a
// counting argument (f+1 distinct members always include a non-faulty one).
struct Certificate {
    Value payload;
    std::string cluster;
    std::set<ReplicaId> signers;

    friend bool operator==(const Certificate&, const Certificate&) = default;
};

// Builds a certificate; validity is judged by verify_certificate, not here.
// Throws config_error if a signer does not belong to the cluster.
Certificate certify(const ClusterConfig& cluster, Value payload, std::set<ReplicaId> signers);

// True iff the certificate names this cluster, every signer is a member, and
// there are at least f+1 distinct signers.
bool verify_certificate(const ClusterConfig& cluster, const Certificate& cert);

// Inter-cluster messages. A send message carries the value, the destination
// cluster, and the origin cluster's certificate over (send, value, target).
// A proof message wraps the send message it answers plus the destination
// cluster's certificate over (proof, value, target).
struct SendMessage {
    Value value;
    std::string target_cluster;
    Certificate cert;

    friend bool operator==(const SendMessage&, const SendMessage&) = default;
};

struct ProofMessage {
    SendMessage inner;
    Certificate cert;

    friend bool operator==(const ProofMessage&, const ProofMessage&) = default;
};

using ProtocolMessage = std::variant<SendMessage, ProofMessage>;

// Canonical byte encodings of the two consensus subjects. These are the
// certificate payloads and the keys for consensus idempotence; they cover the
// logical message content, never signer sets, so equal decisions encode
// equally no matter which replicas signed.
Value encode_send_subject(const Value& value, const std::string& target_cluster);
Value encode_proof_subject(const Value& value, const std::string& target_cluster);

// Decoded view of a consensus subject.
struct SubjectView {
    enum class Kind { Send, Proof } kind;
    Value value;
    std::string target_cluster;
};

// Throws invariant_error on malformed bytes (only simulator-encoded subjects
// circulate, so malformed input signals a model bug).
SubjectView decode_subject(const Value& subject);

// FNV-1a over bytes; used for trace payload digests.
std::uint64_t digest(const Value& bytes);

const char* to_string(SubjectView::Kind kind);

// One replica's monotone decision slots. A slot is set at most once per run;
// conflicting re-assignment throws invariant_error (decisions are final).
class DecisionState {
public:
    enum class Slot { Agreed, Received, Confirmed };

    const std::optional<Value>& get(Slot slot) const;
    bool has(Slot slot, const Value& v) const;
    void set(Slot slot, const Value& v);

private:
    std::optional<Value>& slot_ref(Slot slot);

    std::optional<Value> agreed_;
    std::optional<Value> received_;
    std::optional<Value> confirmed_;
};

const char* to_string(DecisionState::Slot slot);

}  // namespace csend
