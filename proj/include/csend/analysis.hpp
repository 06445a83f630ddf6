#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "csend/core.hpp"

// Exact combinatorics for the expected-step analysis of the randomized
// cluster-sending protocols. Everything is unbounded-integer / exact-rational
// arithmetic; decimal output happens only at formatting time.
namespace csend::analysis {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

BigInt factorial(unsigned n);
BigInt binomial(unsigned n, unsigned k);  // 0 when k > n

// Number of order-preserving merges of two sequences of lengths v and w:
// (v+w)! / (v! w!).
BigInt list_merge_count(unsigned v, unsigned w);

// How the n positions of a permutation pair split by fault pattern when the
// first list has m1 faulty entries, the second m2, and k positions carry at
// least one fault: only_first = k - m2, only_second = k - m1, both = m1+m2-k,
// good = n - k. Throws std::domain_error when any count would be negative.
struct PairTypeCounts {
    unsigned only_first = 0;
    unsigned only_second = 0;
    unsigned both = 0;
    unsigned good = 0;

    friend bool operator==(const PairTypeCounts&, const PairTypeCounts&) = default;
};

PairTypeCounts pair_type_counts(unsigned n, unsigned m1, unsigned m2, unsigned k);

// FC(n, m1, m2, k): the number of permutation pairs of two n-element lists
// (m1 and m2 faulty entries respectively) with exactly k positions holding at
// least one faulty entry. Three independent routes to the same function:
//
//   fc_recursive  last-position case split; returns 0 outside the feasible
//                 band max(m1,m2) <= k <= min(n, m1+m2); memoized.
//   fc_closed     m1! m2! (n-m1)! (n-m2)! n! / ((k-m2)! (k-m1)! (m1+m2-k)! (n-k)!),
//                 throws std::domain_error outside the feasible band.
//   fc_product    the unsimplified placement-count product built from
//                 binomials and list_merge_count; same domain as fc_closed.
BigInt fc_recursive(unsigned n, unsigned m1, unsigned m2, unsigned k);
BigInt fc_closed(unsigned n, unsigned m1, unsigned m2, unsigned k);
BigInt fc_product(unsigned n, unsigned m1, unsigned m2, unsigned k);

// Brute-force oracle: enumerates all n!^2 permutation pairs and histograms
// them by the number of positions with at least one faulty entry. Refuses
// n > 6 (resource guard). Keys cover exactly the k values that occur.
std::map<unsigned, BigInt> fc_enumerate(unsigned n, unsigned m1, unsigned m2);

// A concrete pair of equal-length replica lists with per-position fault
// flags; the object the list protocols iterate over.
struct ListPair {
    std::vector<ReplicaId> first;
    std::vector<ReplicaId> second;
    std::vector<bool> first_faulty;
    std::vector<bool> second_faulty;

    std::size_t size() const { return first.size(); }
    unsigned fault_count_first() const;
    unsigned fault_count_second() const;
};

// Number of positions where at least one side is flagged faulty. Throws
// std::domain_error on length mismatch.
unsigned faulty_positions(const ListPair& lists);

// PT(n, m1, m2): expected number of attempts until a position with two
// non-faulty entries is reached, scanning a uniformly random permutation pair
// front to back; equals (1/n!^2) * sum_k (n/(n-k)) FC(n, m1, m2, k).
// Requires m1 + m2 < n (otherwise some pair has no good position).
Rational pt_exact(unsigned n, unsigned m1, unsigned m2);

// Same quantity by enumerating all n!^2 permutation pairs; n <= 6 (resource
// guard). Independent of the FC formulas.
Rational pt_bruteforce(unsigned n, unsigned m1, unsigned m2);

// Closed form of PT(2f+1, f, f): 4 - 2/(f+1) - f!^2/(2f)!.
Rational pt_equal_half(unsigned f);

// Exact expected number of positions inspected when a uniformly random
// permutation pair is scanned front to back (without replacement) until the
// first all-good position: sum_k (FC(n,m1,m2,k)/n!^2) * (n+1)/(n-k+1).
// Strictly below pt_exact for m1+m2 > 0; requires m1 + m2 < n.
Rational scan_expected_steps(unsigned n, unsigned m1, unsigned m2);

// Same quantity by enumerating all n!^2 permutation pairs; n <= 6.
Rational scan_expected_bruteforce(unsigned n, unsigned m1, unsigned m2);

// Expected cs-steps of the with-replacement pair protocol:
// (n1 n2) / ((n1-f1)(n2-f2)).
Rational pcs_expected_steps(unsigned n1, unsigned f1, unsigned n2, unsigned f2);

// Step/message counts of the protocols this library is compared against,
// plus this library's analytic expectations, for one (n1,f1,n2,f2) cell.
struct ReferenceCurves {
    BigInt pbs_cs_steps;                          // f1 + f2 + 1
    BigInt pbs_cs_steps_3f;                       // max(n1, n2), variant for n > 3f
    BigInt geobft_messages_optimistic;            // f2 + 1
    BigInt chainspace_messages;                   // n1 * n2
    Rational pcs_expected;                        // pcs_expected_steps
    std::optional<Rational> plcs_expected_equal_half;  // PT(2f+1, f, f) when n1=n2=2f+1, f1=f2
};

ReferenceCurves reference_curves(unsigned n1, unsigned f1, unsigned n2, unsigned f2);

// Shortest decimal form of x rounded to sig significant digits (round half to
// even). Plain notation, no exponent; trailing fractional zeros trimmed.
std::string to_decimal_string(const Rational& x, unsigned sig = 12);

}  // namespace csend::analysis
