#include "csend/core.hpp"

#include <algorithm>

namespace csend {

ClusterConfig::ClusterConfig(std::string id, std::uint32_t n, std::set<std::uint32_t> faulty_indices)
    : id_(std::move(id)), n_(n), faulty_(std::move(faulty_indices)) {
    if (id_.empty()) throw config_error("cluster id must be non-empty");
    if (n_ == 0) throw config_error("cluster must have at least one replica");
    for (auto idx : faulty_) {
        if (idx >= n_) {
            throw config_error("faulty index " + std::to_string(idx) + " out of range for cluster " +
                               id_ + " of size " + std::to_string(n_));
        }
    }
    if (n_ <= 2 * faulty_.size()) {
        throw config_error("cluster " + id_ + " needs n > 2f, got n=" + std::to_string(n_) +
                           " f=" + std::to_string(faulty_.size()));
    }
}

ReplicaId ClusterConfig::replica(std::uint32_t index) const {
    if (index >= n_) throw config_error("replica index out of range for cluster " + id_);
    return ReplicaId{id_, index};
}

std::vector<ReplicaId> ClusterConfig::members() const {
    std::vector<ReplicaId> out;
    out.reserve(n_);
    for (std::uint32_t i = 0; i < n_; ++i) out.push_back(ReplicaId{id_, i});
    return out;
}

std::vector<ReplicaId> ClusterConfig::non_faulty() const {
    std::vector<ReplicaId> out;
    out.reserve(nf());
    for (std::uint32_t i = 0; i < n_; ++i) {
        if (!is_faulty(i)) out.push_back(ReplicaId{id_, i});
    }
    return out;
}

Certificate certify(const ClusterConfig& cluster, Value payload, std::set<ReplicaId> signers) {
    for (const auto& s : signers) {
        if (s.cluster != cluster.id() || s.index >= cluster.n()) {
            throw config_error("certificate signer " + s.cluster + ":" + std::to_string(s.index) +
                               " does not belong to cluster " + cluster.id());
        }
    }
    return Certificate{std::move(payload), cluster.id(), std::move(signers)};
}

bool verify_certificate(const ClusterConfig& cluster, const Certificate& cert) {
    if (cert.cluster != cluster.id()) return false;
    if (cert.signers.size() < static_cast<std::size_t>(cluster.f()) + 1) return false;
    for (const auto& s : cert.signers) {
        if (s.cluster != cluster.id() || s.index >= cluster.n()) return false;
    }
    return true;
}

namespace {

void append_u32(Value& out, std::uint32_t x) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<std::uint8_t>((x >> shift) & 0xff));
    }
}

std::uint32_t read_u32(const Value& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw invariant_error("truncated consensus subject");
    std::uint32_t x = 0;
    for (int shift = 0; shift < 32; shift += 8) {
        x |= static_cast<std::uint32_t>(in[pos++]) << shift;
    }
    return x;
}

Value encode_subject(char tag, const Value& value, const std::string& target) {
    Value out;
    out.reserve(1 + 8 + value.size() + target.size());
    out.push_back(static_cast<std::uint8_t>(tag));
    append_u32(out, static_cast<std::uint32_t>(target.size()));
    out.insert(out.end(), target.begin(), target.end());
    append_u32(out, static_cast<std::uint32_t>(value.size()));
    out.insert(out.end(), value.begin(), value.end());
    return out;
}

}  // namespace

Value encode_send_subject(const Value& value, const std::string& target_cluster) {
    return encode_subject('S', value, target_cluster);
}

Value encode_proof_subject(const Value& value, const std::string& target_cluster) {
    return encode_subject('P', value, target_cluster);
}

SubjectView decode_subject(const Value& subject) {
    if (subject.empty()) throw invariant_error("empty consensus subject");
    SubjectView view;
    switch (subject[0]) {
        case 'S': view.kind = SubjectView::Kind::Send; break;
        case 'P': view.kind = SubjectView::Kind::Proof; break;
        default: throw invariant_error("unknown consensus subject tag");
    }
    std::size_t pos = 1;
    auto target_len = read_u32(subject, pos);
    if (pos + target_len > subject.size()) throw invariant_error("truncated consensus subject");
    view.target_cluster.assign(subject.begin() + pos, subject.begin() + pos + target_len);
    pos += target_len;
    auto value_len = read_u32(subject, pos);
    if (pos + value_len != subject.size()) throw invariant_error("truncated consensus subject");
    view.value.assign(subject.begin() + pos, subject.begin() + pos + value_len);
    return view;
}

std::uint64_t digest(const Value& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (auto b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

const char* to_string(SubjectView::Kind kind) {
    return kind == SubjectView::Kind::Send ? "send" : "proof";
}

const std::optional<Value>& DecisionState::get(Slot slot) const {
    return const_cast<DecisionState*>(this)->slot_ref(slot);
}

bool DecisionState::has(Slot slot, const Value& v) const {
    const auto& cur = get(slot);
    return cur.has_value() && *cur == v;
}

void DecisionState::set(Slot slot, const Value& v) {
    auto& cur = slot_ref(slot);
    if (cur.has_value()) {
        if (*cur != v) {
            throw invariant_error(std::string("decision slot ") + to_string(slot) +
                                  " already holds a different value");
        }
        return;
    }
    cur = v;
}

std::optional<Value>& DecisionState::slot_ref(Slot slot) {
    switch (slot) {
        case Slot::Agreed: return agreed_;
        case Slot::Received: return received_;
        case Slot::Confirmed: return confirmed_;
    }
    throw std::logic_error("bad decision slot");
}

const char* to_string(DecisionState::Slot slot) {
    switch (slot) {
        case DecisionState::Slot::Agreed: return "agreed";
        case DecisionState::Slot::Received: return "received";
        case DecisionState::Slot::Confirmed: return "confirmed";
    }
    return "?";
}

}  // namespace csend
