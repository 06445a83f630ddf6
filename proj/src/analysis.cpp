#include "csend/analysis.hpp"

#include <algorithm>
#include <array>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace csend::analysis {

BigInt factorial(unsigned n) {
    BigInt out = 1;
    for (unsigned i = 2; i <= n; ++i) out *= i;
    return out;
}

BigInt binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    BigInt out = 1;
    for (unsigned i = 1; i <= k; ++i) {
        out *= n - k + i;
        out /= i;  // exact: out is always a binomial prefix
    }
    return out;
}

BigInt list_merge_count(unsigned v, unsigned w) {
    return binomial(v + w, v);
}

PairTypeCounts pair_type_counts(unsigned n, unsigned m1, unsigned m2, unsigned k) {
    if (m1 > n || m2 > n || k > n) {
        throw std::domain_error("pair_type_counts: arguments exceed list length");
    }
    if (k < std::max(m1, m2) || k > m1 + m2) {
        throw std::domain_error("pair_type_counts: k outside [max(m1,m2), min(n, m1+m2)]");
    }
    PairTypeCounts c;
    c.only_first = k - m2;
    c.only_second = k - m1;
    c.both = m1 + m2 - k;
    c.good = n - k;
    return c;
}

BigInt fc_recursive(unsigned n, unsigned m1, unsigned m2, unsigned k) {
    if (m1 > n || m2 > n) return 0;
    if (k < std::max(m1, m2) || k > std::min(n, m1 + m2)) return 0;
    if (n == 0) return 1;  // reachable only with m1 = m2 = k = 0

    static std::map<std::array<unsigned, 4>, BigInt> memo;
    static std::mutex memo_mutex;
    const std::array<unsigned, 4> key{n, m1, m2, k};
    {
        std::lock_guard<std::mutex> lock(memo_mutex);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
    }

    // Case split on the fault pattern of the last position: good/good,
    // faulty/good, good/faulty, faulty/faulty.
    BigInt out = BigInt(n - m1) * (n - m2) * fc_recursive(n - 1, m1, m2, k);
    if (m1 > 0) out += BigInt(m1) * (n - m2) * fc_recursive(n - 1, m1 - 1, m2, k - 1);
    if (m2 > 0) out += BigInt(n - m1) * m2 * fc_recursive(n - 1, m1, m2 - 1, k - 1);
    if (m1 > 0 && m2 > 0) out += BigInt(m1) * m2 * fc_recursive(n - 1, m1 - 1, m2 - 1, k - 1);

    std::lock_guard<std::mutex> lock(memo_mutex);
    return memo.emplace(key, std::move(out)).first->second;
}

BigInt fc_closed(unsigned n, unsigned m1, unsigned m2, unsigned k) {
    const auto c = pair_type_counts(n, m1, m2, k);
    BigInt num = factorial(m1) * factorial(m2) * factorial(n - m1) * factorial(n - m2) * factorial(n);
    BigInt den =
        factorial(c.only_first) * factorial(c.only_second) * factorial(c.both) * factorial(c.good);
    return num / den;  // exact: den divides num
}

BigInt fc_product(unsigned n, unsigned m1, unsigned m2, unsigned k) {
    const auto c = pair_type_counts(n, m1, m2, k);
    const unsigned b1 = c.only_first;
    const unsigned b2 = c.only_second;
    const unsigned b12 = c.both;
    const unsigned good = c.good;

    // Count placements type by type, then interleave: positions holding only
    // a first-list fault, only a second-list fault, both, and none.
    BigInt out = factorial(b1) * factorial(b1) * binomial(m1, b1) * binomial(n - m2, b1);
    out *= factorial(b2) * factorial(b2) * binomial(n - m1, b2) * binomial(m2, b2);
    out *= list_merge_count(b1, b2);
    out *= factorial(b12) * factorial(b12);
    out *= list_merge_count(b1 + b2, b12);
    out *= factorial(good) * factorial(good);
    out *= list_merge_count(k, good);
    return out;
}

std::map<unsigned, BigInt> fc_enumerate(unsigned n, unsigned m1, unsigned m2) {
    if (n > 6) throw std::domain_error("fc_enumerate: n > 6 refused (n!^2 enumeration)");
    if (m1 > n || m2 > n) throw std::domain_error("fc_enumerate: fault count exceeds list length");

    // Entity i of a list is faulty iff i < m; a position is faulty iff either
    // side holds a faulty entity. Bitmask per permutation, popcount per pair.
    std::vector<unsigned> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::vector<std::uint32_t> masks1;
    std::vector<std::uint32_t> masks2;
    do {
        std::uint32_t mask1 = 0;
        std::uint32_t mask2 = 0;
        for (unsigned i = 0; i < n; ++i) {
            if (perm[i] < m1) mask1 |= 1u << i;
            if (perm[i] < m2) mask2 |= 1u << i;
        }
        masks1.push_back(mask1);
        masks2.push_back(mask2);
    } while (std::next_permutation(perm.begin(), perm.end()));

    std::vector<std::uint64_t> histogram(n + 1, 0);
    for (auto a : masks1) {
        for (auto b : masks2) {
            histogram[static_cast<unsigned>(__builtin_popcount(a | b))] += 1;
        }
    }
    std::map<unsigned, BigInt> out;
    for (unsigned k = 0; k <= n; ++k) {
        if (histogram[k] != 0) out[k] = histogram[k];
    }
    return out;
}

unsigned ListPair::fault_count_first() const {
    return static_cast<unsigned>(std::count(first_faulty.begin(), first_faulty.end(), true));
}

unsigned ListPair::fault_count_second() const {
    return static_cast<unsigned>(std::count(second_faulty.begin(), second_faulty.end(), true));
}

unsigned faulty_positions(const ListPair& lists) {
    const auto n = lists.first.size();
    if (lists.second.size() != n || lists.first_faulty.size() != n || lists.second_faulty.size() != n) {
        throw std::domain_error("faulty_positions: mismatched list lengths");
    }
    unsigned k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (lists.first_faulty[i] || lists.second_faulty[i]) ++k;
    }
    return k;
}

Rational pt_exact(unsigned n, unsigned m1, unsigned m2) {
    if (m1 + m2 >= n) {
        throw std::domain_error("pt_exact: requires m1 + m2 < n (some pair has no good position)");
    }
    Rational sum = 0;
    for (unsigned k = std::max(m1, m2); k <= m1 + m2; ++k) {
        sum += Rational(BigInt(n) * fc_closed(n, m1, m2, k), BigInt(n - k));
    }
    const BigInt total = factorial(n);
    return sum / Rational(total * total);
}

Rational pt_bruteforce(unsigned n, unsigned m1, unsigned m2) {
    if (m1 + m2 >= n) {
        throw std::domain_error("pt_bruteforce: requires m1 + m2 < n");
    }
    const auto histogram = fc_enumerate(n, m1, m2);  // refuses n > 6
    Rational sum = 0;
    for (const auto& [k, count] : histogram) {
        sum += Rational(BigInt(n) * count, BigInt(n - k));
    }
    const BigInt total = factorial(n);
    return sum / Rational(total * total);
}

Rational pt_equal_half(unsigned f) {
    Rational out = 4;
    out -= Rational(2, f + 1);
    const BigInt ff = factorial(f);
    out -= Rational(ff * ff, factorial(2 * f));
    return out;
}

Rational scan_expected_steps(unsigned n, unsigned m1, unsigned m2) {
    if (m1 + m2 >= n) {
        throw std::domain_error("scan_expected_steps: requires m1 + m2 < n");
    }
    // Conditioned on k faulty positions, positions are exchangeable, so the
    // first good index is the minimum of n-k uniform draws: E = (n+1)/(n-k+1).
    Rational sum = 0;
    for (unsigned k = std::max(m1, m2); k <= m1 + m2; ++k) {
        sum += Rational(BigInt(n + 1) * fc_closed(n, m1, m2, k), BigInt(n - k + 1));
    }
    const BigInt total = factorial(n);
    return sum / Rational(total * total);
}

Rational scan_expected_bruteforce(unsigned n, unsigned m1, unsigned m2) {
    if (m1 + m2 >= n) {
        throw std::domain_error("scan_expected_bruteforce: requires m1 + m2 < n");
    }
    if (n > 6) throw std::domain_error("scan_expected_bruteforce: n > 6 refused");

    std::vector<unsigned> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::vector<std::uint32_t> masks1;
    std::vector<std::uint32_t> masks2;
    do {
        std::uint32_t mask1 = 0;
        std::uint32_t mask2 = 0;
        for (unsigned i = 0; i < n; ++i) {
            if (perm[i] < m1) mask1 |= 1u << i;
            if (perm[i] < m2) mask2 |= 1u << i;
        }
        masks1.push_back(mask1);
        masks2.push_back(mask2);
    } while (std::next_permutation(perm.begin(), perm.end()));

    BigInt steps_total = 0;
    for (auto a : masks1) {
        for (auto b : masks2) {
            const std::uint32_t bad = a | b;
            unsigned i = 0;
            while (bad & (1u << i)) ++i;  // m1 + m2 < n guarantees a good slot
            steps_total += i + 1;
        }
    }
    const BigInt total = factorial(n);
    return Rational(steps_total, total * total);
}

Rational pcs_expected_steps(unsigned n1, unsigned f1, unsigned n2, unsigned f2) {
    if (n1 <= 2 * f1 || n2 <= 2 * f2) {
        throw std::domain_error("pcs_expected_steps: requires n > 2f on both clusters");
    }
    return Rational(BigInt(n1) * n2, BigInt(n1 - f1) * (n2 - f2));
}

ReferenceCurves reference_curves(unsigned n1, unsigned f1, unsigned n2, unsigned f2) {
    ReferenceCurves out;
    out.pbs_cs_steps = BigInt(f1) + f2 + 1;
    out.pbs_cs_steps_3f = std::max(n1, n2);
    out.geobft_messages_optimistic = BigInt(f2) + 1;
    out.chainspace_messages = BigInt(n1) * n2;
    out.pcs_expected = pcs_expected_steps(n1, f1, n2, f2);
    if (n1 == n2 && f1 == f2 && n1 == 2 * f1 + 1) {
        out.plcs_expected_equal_half = pt_equal_half(f1);
    }
    return out;
}

namespace {

// floor(a/b) with the division rounded half to even; a, b > 0.
BigInt divide_round_half_even(const BigInt& a, const BigInt& b) {
    BigInt q = a / b;
    const BigInt r = a % b;
    const BigInt twice = r * 2;
    if (twice > b || (twice == b && (q & 1) != 0)) ++q;
    return q;
}

}  // namespace

std::string to_decimal_string(const Rational& x, unsigned sig) {
    if (sig == 0) throw std::domain_error("to_decimal_string: need at least one digit");
    if (x == 0) return "0";

    BigInt p = boost::multiprecision::numerator(x);
    const BigInt q = boost::multiprecision::denominator(x);
    const bool negative = p < 0;
    if (negative) p = -p;

    // Decimal exponent e: the value lies in [10^e, 10^(e+1)).
    long long e = 0;
    if (p >= q) {
        BigInt scaled = q;
        while (scaled * 10 <= p) {
            scaled *= 10;
            ++e;
        }
    } else {
        BigInt scaled = p * 10;
        e = -1;
        while (scaled < q) {
            scaled *= 10;
            --e;
        }
    }

    const long long scale = static_cast<long long>(sig) - 1 - e;
    BigInt mantissa;
    if (scale >= 0) {
        BigInt num = p;
        for (long long i = 0; i < scale; ++i) num *= 10;
        mantissa = divide_round_half_even(num, q);
    } else {
        BigInt den = q;
        for (long long i = 0; i < -scale; ++i) den *= 10;
        mantissa = divide_round_half_even(p, den);
    }
    std::string digits = mantissa.str();
    if (digits.size() > sig) {  // rounding carried into a new leading digit
        digits.pop_back();
        ++e;
    }

    std::string out;
    if (e >= 0) {
        const std::size_t int_len = static_cast<std::size_t>(e) + 1;
        if (int_len >= digits.size()) {
            out = digits + std::string(int_len - digits.size(), '0');
        } else {
            out = digits.substr(0, int_len) + "." + digits.substr(int_len);
        }
    } else {
        out = "0." + std::string(static_cast<std::size_t>(-e) - 1, '0') + digits;
    }
    if (out.find('.') != std::string::npos) {
        while (out.back() == '0') out.pop_back();
        if (out.back() == '.') out.pop_back();
    }
    return negative ? "-" + out : out;
}

}  // namespace csend::analysis
