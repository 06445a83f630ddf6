#include <doctest.h>

#include <map>

#include "csend/analysis.hpp"

using namespace csend::analysis;

// Values in this file were computed by hand or by independent enumeration
// before the formula code existed; they pin the formulas, not the other way
// around.

TEST_CASE("factorial and binomial basics") {
    CHECK(factorial(0) == 1);
    CHECK(factorial(1) == 1);
    CHECK(factorial(5) == 120);
    CHECK(factorial(20) == BigInt("2432902008176640000"));
    CHECK(binomial(5, 2) == 10);
    CHECK(binomial(5, 0) == 1);
    CHECK(binomial(5, 5) == 1);
    CHECK(binomial(5, 6) == 0);
    CHECK(binomial(0, 0) == 1);
}

TEST_CASE("list merge count") {
    CHECK(list_merge_count(0, 0) == 1);
    CHECK(list_merge_count(1, 0) == 1);
    CHECK(list_merge_count(0, 3) == 1);
    CHECK(list_merge_count(2, 3) == 10);
    CHECK(list_merge_count(3, 3) == 20);
}

TEST_CASE("pair type counts") {
    CHECK(pair_type_counts(5, 3, 1, 3) == PairTypeCounts{2, 0, 1, 2});
    CHECK(pair_type_counts(5, 2, 2, 2) == PairTypeCounts{0, 0, 2, 3});
    CHECK(pair_type_counts(5, 2, 2, 4) == PairTypeCounts{2, 2, 0, 1});
    CHECK_THROWS_AS(pair_type_counts(5, 3, 1, 2), std::domain_error);  // k < max(m1, m2)
    CHECK_THROWS_AS(pair_type_counts(5, 3, 3, 7), std::domain_error);  // k > min(n, m1+m2)
}

TEST_CASE("fault pattern counts, hand-checked values") {
    // n=3, one faulty entry per list: 12 pairs align the faults, 24 do not.
    CHECK(fc_recursive(3, 1, 1, 1) == 12);
    CHECK(fc_recursive(3, 1, 1, 2) == 24);
    // n=5, m1=3, m2=1.
    CHECK(fc_recursive(5, 3, 1, 3) == 8640);
    CHECK(fc_recursive(5, 3, 1, 4) == 5760);
    CHECK(fc_recursive(5, 3, 1, 3) + fc_recursive(5, 3, 1, 4) == factorial(5) * factorial(5));
    // No faults: every pair has zero affected positions.
    CHECK(fc_recursive(4, 0, 0, 0) == factorial(4) * factorial(4));
    CHECK(fc_closed(4, 0, 0, 0) == factorial(4) * factorial(4));
    CHECK(fc_product(4, 0, 0, 0) == factorial(4) * factorial(4));
}

TEST_CASE("fault pattern counts outside the feasible band") {
    CHECK(fc_recursive(5, 3, 1, 2) == 0);
    CHECK(fc_recursive(5, 3, 1, 5) == 0);
    CHECK_THROWS_AS(fc_closed(5, 3, 1, 2), std::domain_error);
    CHECK_THROWS_AS(fc_product(5, 3, 1, 5), std::domain_error);
}

TEST_CASE("three formula routes agree with enumeration") {
    for (unsigned n = 1; n <= 5; ++n) {
        for (unsigned m1 = 0; m1 <= n; ++m1) {
            for (unsigned m2 = 0; m2 <= n; ++m2) {
                const auto hist = fc_enumerate(n, m1, m2);
                BigInt total = 0;
                for (unsigned k = 0; k <= n; ++k) {
                    const auto rec = fc_recursive(n, m1, m2, k);
                    total += rec;
                    auto it = hist.find(k);
                    const BigInt expect = (it == hist.end()) ? BigInt(0) : it->second;
                    CHECK(rec == expect);
                    const bool feasible =
                        k >= m1 && k >= m2 && k <= n && m1 + m2 >= k;
                    if (feasible) {
                        CHECK(fc_closed(n, m1, m2, k) == expect);
                        CHECK(fc_product(n, m1, m2, k) == expect);
                    }
                }
                CHECK(total == factorial(n) * factorial(n));
            }
        }
    }
}

TEST_CASE("expected first good position, hand-checked values") {
    CHECK(pt_exact(3, 1, 1) == Rational(5, 2));
    CHECK(pt_exact(5, 2, 2) == Rational(19, 6));
    CHECK(pt_exact(7, 2, 3) == Rational(31, 12));
    CHECK(pt_exact(5, 2, 0) == Rational(5, 3));
    CHECK(pt_exact(11, 9, 1) == Rational(13, 2));
    CHECK(pt_exact(4, 0, 0) == 1);
}

TEST_CASE("expected first good position matches enumeration") {
    for (unsigned n = 1; n <= 5; ++n) {
        for (unsigned m1 = 0; m1 < n; ++m1) {
            for (unsigned m2 = 0; m1 + m2 < n; ++m2) {
                CHECK(pt_exact(n, m1, m2) == pt_bruteforce(n, m1, m2));
            }
        }
    }
    CHECK(pt_bruteforce(2, 0, 1) == 2);
}

TEST_CASE("equal half closed form") {
    CHECK(pt_equal_half(0) == 1);
    CHECK(pt_equal_half(1) == Rational(5, 2));
    CHECK(pt_equal_half(2) == Rational(19, 6));
    CHECK(pt_equal_half(3) == Rational(69, 20));
    for (unsigned f = 0; f <= 8; ++f) {
        CHECK(pt_equal_half(f) == pt_exact(2 * f + 1, f, f));
        // 4 - 2/(f+1) - f!^2/(2f)!
        const Rational closed = Rational(4) - Rational(2, f + 1) -
                                Rational(factorial(f) * factorial(f), factorial(2 * f));
        CHECK(pt_equal_half(f) == closed);
    }
}

TEST_CASE("exact scan expectation without replacement") {
    // Lists [good, faulty] x [good, good]: first slot good half the time.
    CHECK(scan_expected_steps(2, 1, 0) == Rational(3, 2));
    CHECK(scan_expected_steps(3, 1, 1) == Rational(16, 9));
    CHECK(scan_expected_steps(4, 0, 0) == 1);
    CHECK_THROWS_AS(scan_expected_steps(4, 2, 2), std::domain_error);

    for (unsigned n = 1; n <= 5; ++n) {
        for (unsigned m1 = 0; m1 < n; ++m1) {
            for (unsigned m2 = 0; m1 + m2 < n; ++m2) {
                CHECK(scan_expected_steps(n, m1, m2) == scan_expected_bruteforce(n, m1, m2));
                // Scanning without replacement beats independent probing.
                if (m1 + m2 > 0) {
                    CHECK(scan_expected_steps(n, m1, m2) < pt_exact(n, m1, m2));
                } else {
                    CHECK(scan_expected_steps(n, m1, m2) == 1);
                }
            }
        }
    }
}

TEST_CASE("expected probing steps of the with-replacement protocol") {
    CHECK(pcs_expected_steps(3, 1, 3, 1) == Rational(9, 4));
    CHECK(pcs_expected_steps(4, 1, 4, 1) == Rational(16, 9));
    CHECK(pcs_expected_steps(7, 2, 7, 2) == Rational(49, 25));
    CHECK(pcs_expected_steps(3, 0, 5, 2) == Rational(5, 3));
    // n = 2f+1 on both sides approaches 4 from below.
    for (unsigned f = 1; f <= 10; ++f) {
        const auto e = pcs_expected_steps(2 * f + 1, f, 2 * f + 1, f);
        CHECK(e < 4);
        // 4 - (4f+3)/(f+1)^2
        CHECK(e == Rational(4) - Rational(4 * f + 3, (f + 1) * (f + 1)));
    }
    // n = 3f+1 on both sides stays at or below 9/4.
    for (unsigned f = 1; f <= 10; ++f) {
        CHECK(pcs_expected_steps(3 * f + 1, f, 3 * f + 1, f) <= Rational(9, 4));
    }
    CHECK_THROWS_AS(pcs_expected_steps(2, 1, 3, 1), std::domain_error);
}

TEST_CASE("reference step and message curves") {
    // Equal clusters at the n = 2f+1 bound: the list expectation applies.
    const auto r = reference_curves(5, 2, 5, 2);
    CHECK(r.pbs_cs_steps == 5);
    CHECK(r.pbs_cs_steps_3f == 5);
    CHECK(r.geobft_messages_optimistic == 3);
    CHECK(r.chainspace_messages == 25);
    CHECK(r.pcs_expected == Rational(25, 9));
    REQUIRE(r.plcs_expected_equal_half.has_value());
    CHECK(*r.plcs_expected_equal_half == pt_equal_half(2));
    // Away from that bound the optional stays empty.
    CHECK_FALSE(reference_curves(7, 2, 7, 2).plcs_expected_equal_half.has_value());
    const auto uneven = reference_curves(7, 2, 4, 1);
    CHECK_FALSE(uneven.plcs_expected_equal_half.has_value());
    CHECK(uneven.pbs_cs_steps == 4);
    CHECK(uneven.geobft_messages_optimistic == 2);
    CHECK(uneven.chainspace_messages == 28);
}

TEST_CASE("decimal rendering of exact rationals") {
    CHECK(to_decimal_string(Rational(9, 4)) == "2.25");
    CHECK(to_decimal_string(Rational(1, 3), 5) == "0.33333");
    CHECK(to_decimal_string(Rational(2, 3), 5) == "0.66667");
    CHECK(to_decimal_string(Rational(0)) == "0");
    CHECK(to_decimal_string(Rational(-9, 4)) == "-2.25");
    CHECK(to_decimal_string(Rational(4)) == "4");
    CHECK(to_decimal_string(Rational(1, 8), 3) == "0.125");
    CHECK(to_decimal_string(Rational(1, 800), 3) == "0.00125");
    CHECK(to_decimal_string(Rational(12345, 10), 4) == "1234");  // half-even at the cut
    CHECK(to_decimal_string(Rational(12355, 10), 4) == "1236");
    CHECK(to_decimal_string(Rational(100), 2) == "100");
    CHECK(to_decimal_string(Rational(19, 6), 12) == "3.16666666667");
}

TEST_CASE("list pair fault accounting") {
    ListPair lp;
    lp.first = {{"a", 0}, {"a", 1}, {"a", 2}};
    lp.second = {{"b", 0}, {"b", 1}, {"b", 2}};
    lp.first_faulty = {true, false, false};
    lp.second_faulty = {false, false, true};
    CHECK(lp.size() == 3);
    CHECK(lp.fault_count_first() == 1);
    CHECK(lp.fault_count_second() == 1);
    CHECK(faulty_positions(lp) == 2);
    lp.second_faulty = {true, false, false};
    CHECK(faulty_positions(lp) == 1);
    lp.second_faulty = {true, false};
    CHECK_THROWS_AS(faulty_positions(lp), std::domain_error);
}
