#include <doctest.h>

#include "csend/core.hpp"

using namespace csend;

TEST_CASE("cluster config validation") {
    CHECK_THROWS_AS(ClusterConfig("", 3, {}), config_error);
    CHECK_THROWS_AS(ClusterConfig("c", 0, {}), config_error);
    CHECK_THROWS_AS(ClusterConfig("c", 3, {3}), config_error);   // index out of range
    CHECK_THROWS_AS(ClusterConfig("c", 2, {0}), config_error);   // n = 2f
    CHECK_THROWS_AS(ClusterConfig("c", 4, {0, 1}), config_error);  // n = 2f
    CHECK_NOTHROW(ClusterConfig("c", 3, {0}));
    CHECK_NOTHROW(ClusterConfig("c", 1, {}));

    ClusterConfig c("c1", 4, {2});
    CHECK(c.n() == 4);
    CHECK(c.f() == 1);
    CHECK(c.nf() == 3);
    CHECK(c.is_faulty(2));
    CHECK_FALSE(c.is_faulty(0));
    CHECK(c.members().size() == 4);
    CHECK(c.non_faulty().size() == 3);
    CHECK(c.members()[1] == ReplicaId{"c1", 1});
    CHECK_THROWS_AS(c.replica(4), config_error);
}

TEST_CASE("certificate verification is a counting argument") {
    ClusterConfig c("c1", 4, {0});
    const auto payload = make_value("x");

    auto cert = certify(c, payload, {{"c1", 1}, {"c1", 2}});
    CHECK(verify_certificate(c, cert));  // f+1 = 2 signers

    auto thin = certify(c, payload, {{"c1", 1}});
    CHECK_FALSE(verify_certificate(c, thin));

    auto foreign = cert;
    foreign.cluster = "c2";
    CHECK_FALSE(verify_certificate(c, foreign));

    CHECK_THROWS_AS(certify(c, payload, {{"c2", 1}, {"c1", 2}}), config_error);
    CHECK_THROWS_AS(certify(c, payload, {{"c1", 9}, {"c1", 2}}), config_error);
}

TEST_CASE("subject encodings round-trip and stay distinct") {
    const auto v = make_value("payload");
    const auto send = encode_send_subject(v, "c2");
    const auto proof = encode_proof_subject(v, "c2");
    CHECK(send != proof);
    CHECK(send != encode_send_subject(v, "c3"));
    CHECK(send != encode_send_subject(make_value("other"), "c2"));

    const auto sv = decode_subject(send);
    CHECK(sv.kind == SubjectView::Kind::Send);
    CHECK(sv.value == v);
    CHECK(sv.target_cluster == "c2");

    const auto pv = decode_subject(proof);
    CHECK(pv.kind == SubjectView::Kind::Proof);
    CHECK(pv.value == v);
    CHECK(pv.target_cluster == "c2");

    CHECK_THROWS_AS(decode_subject(make_value("Zjunk")), invariant_error);
    CHECK_THROWS_AS(decode_subject(Value{}), invariant_error);
    auto truncated = send;
    truncated.resize(truncated.size() - 1);
    CHECK_THROWS_AS(decode_subject(truncated), invariant_error);
}

TEST_CASE("decision slots are set once") {
    DecisionState d;
    const auto v = make_value("v");
    CHECK_FALSE(d.get(DecisionState::Slot::Agreed).has_value());
    CHECK_FALSE(d.has(DecisionState::Slot::Agreed, v));

    d.set(DecisionState::Slot::Agreed, v);
    CHECK(d.has(DecisionState::Slot::Agreed, v));
    CHECK_NOTHROW(d.set(DecisionState::Slot::Agreed, v));  // same value, idempotent
    CHECK_THROWS_AS(d.set(DecisionState::Slot::Agreed, make_value("w")), invariant_error);

    d.set(DecisionState::Slot::Confirmed, v);
    CHECK(d.has(DecisionState::Slot::Confirmed, v));
    CHECK_FALSE(d.has(DecisionState::Slot::Received, v));
}

TEST_CASE("digest is stable") {
    CHECK(digest(Value{}) == 14695981039346656037ull);  // offset basis
    // One-byte probe pinned against the reference constants.
    CHECK(digest(make_value("a")) == (14695981039346656037ull ^ 'a') * 1099511628211ull);
    CHECK(digest(make_value("a")) != digest(make_value("b")));
    CHECK(digest(make_value("abc")) == digest(make_value("abc")));
}
