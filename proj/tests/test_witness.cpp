// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sepkit/oracles.hpp"
#include "sepkit/witness.hpp"

namespace sw = sepkit::wit;
namespace sfe = sepkit::feat;
namespace sf = sepkit::specfun;
namespace orc = sepkit::oracles;

namespace {

const std::vector<double> xi_grid{0.45, 0.455, 0.461, 0.468, 0.472};

// truncated-normal bias via inverse CDF, then erf feature at ||x|| = znorm
double mc_truncated_expectation(double znorm, double threshold, double sigma,
                                double upper, int n, std::uint64_t seed, double* se) {
    const double lo_e = sf::erf(threshold / (std::sqrt(2.0) * sigma));
    const double hi_e =
        std::isfinite(upper) ? sf::erf(upper / (std::sqrt(2.0) * sigma)) : 1.0;
    std::vector<double> vals(static_cast<std::size_t>(n));
    const int d = 5;
    #pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        sepkit::Rng g(seed, static_cast<std::uint64_t>(i));
        double u = lo_e + g.uniform_open() * (hi_e - lo_e);
        if (u >= 1.0) u = std::nextafter(1.0, 0.0);
        const double bias = std::sqrt(2.0) * sigma * sf::erf_inv(u);
        // rotation invariance: x = znorm * e_1
        double pre = bias + sigma * g.normal() / 0.5 * 0.5 * znorm;
        (void)d;
        vals[static_cast<std::size_t>(i)] = std::erf(pre);
    }
    const auto stats = orc::mean_se(vals);
    if (se) *se = stats.se;
    return stats.mean;
}

}  // namespace

TEST_CASE("f_xi limits and zero placement", "[witness]") {
    for (double xi : xi_grid) CHECK(std::fabs(sw::f_xi(1e6, xi)) < 1e-5);

    for (int k = 0; k < 50; ++k) {
        const double lambda = 1.0 + k / 49.0;
        const double xi = sw::xi_for_radius(lambda);
        CHECK(xi >= sw::xi_lo);
        CHECK(xi <= sw::xi_hi);
        CHECK(std::fabs(sw::f_xi(lambda, xi)) < 1e-10);
    }

    for (double z : {10.0, 30.0, 100.0})
        for (double xi : {0.45, 0.46, 0.472})
            CHECK(sw::f_xi(z, xi) <= -1.0 / (50.0 * z));

    // both terms of f_xi stay in [0, 0.5]
    for (double xi : xi_grid) {
        for (double z = 0.0; z <= 40.0; z += 0.25) {
            const double first = sw::expectation_bias_positive(z);
            const double second = xi * sw::expectation_bias_high(z);
            CHECK(first >= 0.0);
            CHECK(first <= 0.5);
            CHECK(second >= 0.0);
            CHECK(second <= 0.5);
        }
    }
}

TEST_CASE("f_xi derivative", "[witness]") {
    // matches central differences away from the minimizer
    for (double z : {0.5, 1.5, 3.0, 8.0}) {
        for (double xi : {0.45, 0.461, 0.472}) {
            const double fd =
                orc::central_diff([xi](double t) { return sw::f_xi(t, xi); }, z, 1e-5);
            const double an = sw::f_xi_derivative(z, xi);
            CHECK(std::fabs(fd - an) <= 1e-6 * std::max(1e-4, std::fabs(an)));
        }
    }
    // sign pattern around the global minimum
    CHECK(sw::f_xi_derivative(1.0, 0.46) < 0.0);
    CHECK(sw::f_xi_derivative(10.0, 0.46) > 0.0);

    // |f'| >= 1/600 on [0.9, 2.1]
    for (double xi : {0.45, 0.461, 0.472}) {
        for (int k = 0; k < 500; ++k) {
            const double z = 0.9 + 1.2 * k / 499.0;
            CHECK(std::fabs(sw::f_xi_derivative(z, xi)) >= 1.0 / 600.0);
        }
    }
    // monotone branches: no sign violation on dense grids
    for (double xi : {0.45, 0.472}) {
        const double zstar = sw::f_xi_argmin(xi);
        for (int k = 1; k <= 1000; ++k) {
            CHECK(sw::f_xi_derivative(zstar * k / 1001.0, xi) <= 0.0);
            CHECK(sw::f_xi_derivative(zstar + (40.0 - zstar) * k / 1000.0, xi) >= 0.0);
        }
    }
}

TEST_CASE("f_xi boundary values used by the interval construction", "[witness]") {
    for (double xi : xi_grid) {
        CHECK(sw::f_xi(0.9, xi) >= 1.0 / 6000.0);
        CHECK(sw::f_xi(2.05, xi) <= -1.0 / 12000.0);
    }
}

TEST_CASE("xi_for_radius endpoints and monotonicity", "[witness]") {
    const double g1 = sw::xi_for_radius(1.0);
    const double g2 = sw::xi_for_radius(2.0);
    CHECK(g1 >= 0.45);
    CHECK(g1 <= 0.472);
    CHECK(g2 >= 0.45);
    CHECK(g2 <= 0.472);
    double prev = g1;
    for (int k = 1; k < 50; ++k) {
        const double g = sw::xi_for_radius(1.0 + k / 49.0);
        CHECK(g <= prev + 1e-12);
        prev = g;
    }
    CHECK_THROWS_AS(sw::xi_for_radius(0.5), std::domain_error);
}

TEST_CASE("f_xi argmin", "[witness]") {
    for (double xi : xi_grid) {
        const double zstar = sw::f_xi_argmin(xi);
        CHECK(zstar >= 2.8);
        CHECK(zstar <= 4.2);
        CHECK(std::fabs(sw::f_xi_derivative(zstar, xi)) < 1e-8);
        CHECK(sw::f_xi_derivative(zstar - 0.01, xi) < 0.0);
        CHECK(sw::f_xi_derivative(zstar + 0.01, xi) > 0.0);
    }
}

TEST_CASE("f_xi inverse branches", "[witness]") {
    const double xi = 0.461;
    CHECK(std::fabs(sw::f_xi_inverse(sw::Branch::decreasing, sw::f_xi(1.5, xi), xi) - 1.5) <
          1e-9);
    CHECK(std::fabs(sw::f_xi_inverse(sw::Branch::increasing, sw::f_xi(10.0, xi), xi) -
                    10.0) < 1e-7);
    const double lambda = 1.3;
    const double g = sw::xi_for_radius(lambda);
    CHECK(std::fabs(sw::f_xi_inverse(sw::Branch::decreasing, 0.0, g) - lambda) < 1e-9);

    CHECK_THROWS_AS(sw::f_xi_inverse(sw::Branch::decreasing, 1.0, xi),
                    sw::out_of_image_error);
    CHECK_THROWS_AS(sw::f_xi_inverse(sw::Branch::increasing, 0.5, xi),
                    sw::out_of_image_error);
    try {
        sw::f_xi_inverse(sw::Branch::increasing, -1.0, xi);
        FAIL("expected out_of_image_error");
    } catch (const sw::out_of_image_error& e) {
        CHECK(e.image_hi == 0.0);
        CHECK(e.image_lo < 0.0);
    }
}

TEST_CASE("truncated expectation closed forms", "[witness]") {
    // frozen: (2/pi) atan(1/sqrt(2)) from direct evaluation
    CHECK(std::fabs(sw::truncated_expectation(0.0, 0.0, 0.5) - 0.391826552031) < 1e-10);
    // reduction to the two special-case formulas
    for (double z : {0.0, 0.7, 1.0, 3.0, 12.0}) {
        CHECK(std::fabs(sw::truncated_expectation(z, 0.0, 0.5) -
                        sw::expectation_bias_positive(z)) < 1e-13);
        CHECK(std::fabs(sw::truncated_expectation(z, sw::inv_sqrt2, 0.5) -
                        sw::expectation_bias_high(z)) < 1e-13);
    }
    // vanishing at infinity
    CHECK(std::fabs(sw::truncated_expectation(1e8, 0.0, 0.5)) < 1e-7);
    CHECK(std::fabs(sw::truncated_expectation(1e8, sw::inv_sqrt2, 0.5)) < 1e-7);

    CHECK_THROWS_AS(sw::truncated_expectation(1.0, 2.0, 0.5, 1.0), std::domain_error);
}

TEST_CASE("truncated expectation matches Monte Carlo", "[witness]") {
    struct Case {
        double z, threshold, sigma, upper;
    };
    const Case cases[] = {
        {1.0, sw::inv_sqrt2, 0.5, std::numeric_limits<double>::infinity()},
        {0.0, 0.0, 0.5, std::numeric_limits<double>::infinity()},
        {2.0, 0.0, 0.5, std::numeric_limits<double>::infinity()},
        {0.5, -0.3, 0.5, 0.9},
        {1.5, 0.2, 0.25, 1.1},
    };
    int idx = 0;
    for (const auto& c : cases) {
        double se = 0.0;
        const double mc = mc_truncated_expectation(c.z, c.threshold, c.sigma, c.upper,
                                                   200000, 1000 + idx++, &se);
        const double closed = sw::truncated_expectation(c.z, c.threshold, c.sigma, c.upper);
        CHECK(std::fabs(mc - closed) <= 4.0 * se);
    }
}

TEST_CASE("witness construction statistics", "[witness]") {
    const int r = 10000, d = 5;
    const int seeds = 20;
    double frac1 = 0.0, frac2 = 0.0;
    for (int s = 0; s < seeds; ++s) {
        const auto layer = sfe::init_hidden(d, r, 100 + s);
        const auto w0 = sfe::init_output(r, 5000 + s);
        const auto cert = sw::build_witness(layer, w0, 1.5, {});
        frac1 += static_cast<double>(cert.A1.size()) / (r / 2);
        frac2 += static_cast<double>(cert.A2.size()) / (r / 2);
        CHECK(cert.v_norm_sq <= 1.0 / std::sqrt(static_cast<double>(r)) * (1 + 1e-12));

        // v entries take exactly the three allowed values, on the right sets
        const double base = std::pow(static_cast<double>(r), -0.75);
        for (int j : cert.A1) {
            CHECK(cert.v[j] == base);
            CHECK(j < r / 2);
            CHECK(layer.b[j] >= 0.0);
            CHECK(w0.w[j] > 0.0);
        }
        for (int j : cert.A2) {
            CHECK(cert.v[j] == -cert.xi_hat * base);
            CHECK(j >= r / 2);
            CHECK(layer.b[j] >= sw::inv_sqrt2);
            CHECK(w0.w[j] < 0.0);
        }
    }
    frac1 /= seeds;
    frac2 /= seeds;
    const double p2 = 0.25 * (1.0 - sf::erf(1.0));
    const double se1 = std::sqrt(0.25 * 0.75 / (seeds * r / 2.0));
    const double se2 = std::sqrt(p2 * (1 - p2) / (seeds * r / 2.0));
    CHECK(std::fabs(frac1 - 0.25) < 5.0 * se1);
    CHECK(std::fabs(frac2 - p2) < 5.0 * se2);
}

TEST_CASE("witness degenerate cases", "[witness]") {
    const auto layer = sfe::init_hidden(3, 6, 1);
    const auto w0 = sfe::init_output(6, 2);
    // r = 6: group 2 keeps a neuron w.p. ~0.039, so most seeds throw
    int threw = 0;
    for (int s = 0; s < 30; ++s) {
        try {
            sw::build_witness(sfe::init_hidden(3, 6, s), sfe::init_output(6, 1000 + s), 1.2,
                              {});
        } catch (const sw::degenerate_witness_error&) {
            ++threw;
        }
    }
    CHECK(threw >= 25);

    const auto odd_layer = sfe::init_hidden(3, 7, 1);
    const auto odd_w0 = sfe::init_output(7, 2);
    CHECK_THROWS_AS(sw::build_witness(odd_layer, odd_w0, 1.5, {}), std::invalid_argument);
    CHECK_THROWS_AS(sw::build_witness(layer, w0, 2.5, {}), std::domain_error);
}

TEST_CASE("witness intervals at desk scale", "[witness]") {
    const int r = 2048;
    const auto layer = sfe::init_hidden(5, r, 5);
    const auto w0 = sfe::init_output(r, 6);
    const auto cert = sw::build_witness(layer, w0, 1.5, {});
    // at this width the I1 level 2 r^{-1/4} exceeds f(0): reported, not erased
    CHECK(cert.i1_degenerate);
    // the partition is ordered and covers [0, inf)
    CHECK(cert.intervals[0].lo == 0.0);
    for (int k = 0; k + 1 < 4; ++k) CHECK(cert.intervals[k].hi == cert.intervals[k + 1].lo);
    CHECK(std::isinf(cert.intervals[3].hi));
    const auto j = sw::certificate_to_json(cert);
    CHECK(j.at("i1_degenerate").get<bool>());
}

TEST_CASE("witness expectation curve", "[witness]") {
    const int r = 4096, d = 5;
    const auto layer = sfe::init_hidden(d, r, 11);
    const auto w0 = sfe::init_output(r, 12);
    const double lambda = 1.5;

    sw::WitnessOptions calibrated;
    calibrated.mode = sw::WitnessMode::calibrated;
    const auto cert = sw::build_witness(layer, w0, lambda, calibrated);

    // curve vanishes at infinity and crosses zero at lambda
    CHECK(std::fabs(sw::witness_expectation_curve(cert, 1e8)) < 1e-8);
    const auto zero = sw::witness_curve_zero(cert);
    REQUIRE(zero.has_value());
    CHECK(std::fabs(*zero - lambda) < 1e-6);

    // the asymptotic mode's curve stays positive at this width (the kept
    // group sizes enter the expectation with different coefficients)
    sw::WitnessOptions asym;
    asym.mode = sw::WitnessMode::asymptotic;
    const auto cert_asym = sw::build_witness(layer, w0, lambda, asym);
    CHECK(sw::witness_expectation_curve(cert_asym, lambda) > 0.0);

    // Monte Carlo check of the curve at three norms. The expectation is over
    // the (U, B) ensemble conditioned on the kept sets, so each sample draws
    // fresh neurons from the conditional laws; <u, x> collapses to one
    // normal by rotation invariance.
    const double base = std::pow(static_cast<double>(r), -0.75);
    const double erf_lo1 = 0.0;                   // bias >= 0
    const double erf_lo2 = sf::erf(1.0);          // bias >= 1/sqrt2, i.e. b/(0.5 sqrt2) >= 1
    for (double z : {0.5, lambda, 5.0}) {
        const int n = 100000;
        std::vector<double> vals(n);
        #pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            sepkit::Rng g(777, static_cast<std::uint64_t>(i));
            double margin = 0.0;
            const auto trunc_normal = [&g](double lo_e) {
                double q = lo_e + g.uniform_open() * (1.0 - lo_e);
                if (q >= 1.0) q = std::nextafter(1.0, 0.0);
                return 0.5 * std::sqrt(2.0) * sf::erf_inv(q);
            };
            for (std::size_t j = 0; j < cert.A1.size(); ++j)
                margin += base * std::erf(trunc_normal(erf_lo1) + 0.5 * z * g.normal());
            for (std::size_t j = 0; j < cert.A2.size(); ++j)
                margin -=
                    cert.xi_hat * base * std::erf(trunc_normal(erf_lo2) + 0.5 * z * g.normal());
            vals[i] = margin;
        }
        const auto stats = orc::mean_se(vals);
        CHECK(std::fabs(stats.mean - sw::witness_expectation_curve(cert, z)) <=
              4.0 * stats.se);
    }
}
