// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sepkit/bounds.hpp"

namespace sb = sepkit::bounds;

TEST_CASE("harmonic dimension exact values", "[bounds]") {
    for (int d = 3; d <= 20; ++d) CHECK(sb::harmonic_dim(d, 1) == d);
    CHECK(sb::harmonic_dim(4, 2) == 9);    // (m+1)^2 rule for d = 4
    CHECK(sb::harmonic_dim(3, 5) == 11);   // 2m+1 rule for d = 3
    CHECK(sb::harmonic_dim(4, 3) == 16);
    CHECK_THROWS_AS(sb::harmonic_dim(2, 1), std::domain_error);
    CHECK_THROWS_AS(sb::harmonic_dim(5, 0), std::domain_error);

    // no overflow by construction
    const auto big = sb::harmonic_dim(50, 200);
    CHECK(big.str().size() > 40);
    CHECK(std::fabs(sb::harmonic_dim_log10(50, 200) -
                    static_cast<double>(big.str().size() - 1)) <= 1.0);
}

TEST_CASE("harmonic dimension recurrence", "[bounds]") {
    // N_{d,m} (2m+d-4) m == N_{d,m-1} (2m+d-2) (m+d-3), cross-multiplied to
    // stay in exact integers
    for (int d = 3; d <= 20; ++d) {
        for (int m = 2; m <= 20; ++m) {
            const auto cur = sb::harmonic_dim(d, m);
            const auto prev = sb::harmonic_dim(d, m - 1);
            CHECK(cur * (2 * m + d - 4) * m == prev * (2 * m + d - 2) * (m + d - 3));
        }
    }
}

TEST_CASE("separation lower bound", "[bounds]") {
    // the min's branches swap under (d, m) exchange
    for (int d : {3, 10, 64})
        for (int m : {1, 7, 40})
            CHECK(sb::sep_lower_bound_log10(d, m, 1.0, 1.0) ==
                  sb::sep_lower_bound_log10(m, d, 1.0, 1.0));

    // equal branches at m = d
    const double at_d = sb::sep_lower_bound_log10(17, 17, 1.0, 1.0);
    CHECK(std::fabs(at_d - 17.0 * std::log(3.0) / std::log(10.0)) < 1e-12);

    // frozen arithmetic: d=100, m=10 branch is 10 ln 12
    CHECK(std::fabs(sb::sep_lower_bound_log10(100, 10, 1.0, 1.0) -
                    10.0 * std::log(12.0) / std::log(10.0)) < 1e-12);

    // monotone nondecreasing in both arguments
    for (int d = 2; d < 40; ++d) {
        CHECK(sb::sep_lower_bound_log10(d + 1, 9, 1.0, 1.0) >=
              sb::sep_lower_bound_log10(d, 9, 1.0, 1.0) - 1e-12);
        CHECK(sb::sep_lower_bound_log10(9, d + 1, 1.0, 1.0) >=
              sb::sep_lower_bound_log10(9, d, 1.0, 1.0) - 1e-12);
    }
}

TEST_CASE("accuracy to oscillation count", "[bounds]") {
    // exact search: at eps = 1/400, even m = 1 fails 196*4/400 = 1.96 > 1
    CHECK(sb::accuracy_to_oscillation(1.0 / 400.0) == 0);
    // equality case: eps = 1/(196*16) admits exactly m+1 = 4
    CHECK(sb::accuracy_to_oscillation(1.0 / (196.0 * 16.0)) == 3);
    CHECK_THROWS_AS(sb::accuracy_to_oscillation(1.0 / 399.0), std::domain_error);

    // monotone: smaller eps, larger m; and agreement with exhaustive search
    long prev = -1;
    for (double eps : {2.5e-3, 1e-3, 1e-4, 1e-5, 3.3e-7}) {
        const long m = sb::accuracy_to_oscillation(eps);
        CHECK(m >= prev);
        prev = m;
        long brute = 0;
        for (long k = 0; k <= 2000000; ++k) {
            if (196.0 * (k + 1.0) * (k + 1.0) * eps <= 1.0)
                brute = k;
            else if (k > brute + 2)
                break;
        }
        CHECK(m == brute);
    }
}

TEST_CASE("growth bound log", "[bounds]") {
    CHECK(sb::growth_bound_log(100, 5, 0) == 0.0);
    CHECK(std::fabs(sb::growth_bound_log(100, 2, 1) - 3.0 * std::log(100.0)) < 1e-12);
    CHECK_THROWS_AS(sb::growth_bound_log(10, 10, 1), std::domain_error);
    CHECK(sb::growth_bound_log(1000, 4, 3) > sb::growth_bound_log(999, 4, 3));
    CHECK(sb::growth_bound_log(1000, 5, 3) > sb::growth_bound_log(1000, 4, 3));
    CHECK(sb::growth_bound_log(1000, 4, 4) > sb::growth_bound_log(1000, 4, 3));
}

TEST_CASE("generalization bound formula", "[bounds]") {
    const double v = sb::generalization_bound(100, 10000, 0.05);
    CHECK(std::fabs(v - (0.4 + 4.0 * std::sqrt(2.0 * std::log(80.0) / 1e4))) < 1e-12);
    CHECK(std::fabs(v - 0.5184) < 5e-4);
    CHECK(sb::generalization_bound(100, 100000000, 0.05) < 0.05);
    // doubling r scales the first term by sqrt(2)
    const double a = sb::generalization_bound(50, 10000, 0.5);
    const double b = sb::generalization_bound(100, 10000, 0.5);
    const double tail = 4.0 * std::sqrt(2.0 * std::log(8.0) / 1e4);
    CHECK(std::fabs((b - tail) / (a - tail) - std::sqrt(2.0)) < 1e-9);
}

TEST_CASE("generalization gap checker", "[bounds]") {
    const int r = 16;
    const auto layer = sepkit::feat::init_hidden(4, r, 77);
    const auto spec = sepkit::dist::DistributionSpec::sphere_sum_spec(4);
    const auto rep = sb::check_generalization_gap(layer, spec, 1.3, r, 2000, 0.1, 20, 5);
    CHECK(rep.trials == 20);
    CHECK(rep.violation_rate <= 0.1 + 0.05);
    // the internal bound is an independent reimplementation of the formula
    CHECK(rep.bound == sb::generalization_bound(r, 2000, 0.1));

    // determinism
    const auto rep2 = sb::check_generalization_gap(layer, spec, 1.3, r, 2000, 0.1, 20, 5);
    CHECK(rep.violation_rate == rep2.violation_rate);
    CHECK(rep.worst_gap == rep2.worst_gap);

    CHECK_THROWS_AS(sb::check_generalization_gap(layer, spec, 1.3, r + 1, 2000, 0.1, 5, 1),
                    std::invalid_argument);
}

TEST_CASE("standard bound rows", "[bounds]") {
    const auto rows = sb::standard_bound_rows();
    CHECK(rows.size() >= 4);
    for (const auto& row : rows) {
        CHECK(!row.name.empty());
        CHECK(std::isfinite(row.log10_value));
    }
}
