// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <omp.h>

#include "sepkit/distributions.hpp"
#include "sepkit/oracles.hpp"

namespace sd = sepkit::dist;
namespace orc = sepkit::oracles;
namespace sf = sepkit::specfun;

TEST_CASE("unit ball radius", "[distributions]") {
    CHECK(std::fabs(sd::unit_ball_radius(1) - 0.5) < 1e-14);
    CHECK(std::fabs(sd::unit_ball_radius(2) - 1.0 / std::sqrt(sf::pi)) < 1e-14);
    // frozen from the lgamma route, cross-checked by the volume formula below
    CHECK(std::fabs(sd::unit_ball_radius(10) - 0.910632588621403) < 1e-12);
    for (int d = 1; d <= 64; ++d) {
        const double r = sd::unit_ball_radius(d);
        const double log_volume = 0.5 * d * std::log(sf::pi) + d * std::log(r) -
                                  sf::log_gamma(0.5 * d + 1.0);
        CHECK(std::fabs(std::exp(log_volume) - 1.0) < 1e-10);
    }
}

TEST_CASE("shell norm density", "[distributions]") {
    // vanishes at a zero of J_{3/2}: tan(t) = t at t = 4.493409457909064
    const double t0 = 4.493409457909064;
    const double x0 = t0 / sd::shell_frequency(3, 1.0);
    CHECK(sd::shell_norm_density(x0, 3, 1.0) < 1e-20);

    // d=2, alpha=1, x=1 against the independent Bessel oracle
    const double arg = sd::shell_frequency(2, 1.0);
    const double oracle_j = orc::bessel_j_integral(1.0, arg);
    CHECK(std::fabs(sd::shell_norm_density(1.0, 2, 1.0) - 2.0 * oracle_j * oracle_j) <
          1e-10);

    CHECK(sd::shell_norm_density(0.0, 5, 1.0) == 0.0);

    // mass on [0, 50] accounts for everything except the heavy tail
    const double mass = orc::adaptive_simpson(
        [](double x) { return sd::shell_norm_density(x, 3, 1.0); }, 0.0, 50.0, 1e-9);
    CHECK(mass <= 1.0 + 1e-6);
    CHECK(mass >= 1.0 - 1.3 / 50.0);
}

TEST_CASE("chi component density", "[distributions]") {
    CHECK(sd::chi_component_density(0.0, 2) == 0.0);
    CHECK(sd::chi_component_density(0.0, 7) == 0.0);
    CHECK(std::fabs(sd::chi_component_density(1.0, 2) - 2.0 * std::exp(-1.0)) < 1e-14);

    for (int d : {2, 3, 10}) {
        const double mode = std::sqrt(1.0 - 1.0 / d);
        const double at_mode = sd::chi_component_density(mode, d);
        CHECK(at_mode > sd::chi_component_density(mode - 0.01, d));
        CHECK(at_mode > sd::chi_component_density(mode + 0.01, d));
        const double mass = orc::adaptive_simpson(
            [d](double x) { return sd::chi_component_density(x, d); }, 0.0, 12.0, 1e-11);
        CHECK(std::fabs(mass - 1.0) < 1e-9);
    }
}

TEST_CASE("mixture norm density", "[distributions]") {
    const auto spec = sd::DistributionSpec::bessel_mixture_spec(3);
    const double x = 1.0;
    CHECK(sd::mixture_norm_density(x, spec) ==
          0.5 * sd::shell_norm_density(x, 3, 1.0) + 0.5 * sd::chi_component_density(x, 3));

    const double mass_below_2 = orc::adaptive_simpson(
        [&spec](double t) { return sd::mixture_norm_density(t, spec); }, 1e-12, 2.0, 1e-10);
    CHECK(mass_below_2 >= 0.25);
}

TEST_CASE("sphere sum norm density", "[distributions]") {
    for (double x : {0.1, 0.5, 1.0, 1.7, 2.0})
        CHECK(std::fabs(sd::sphere_sum_norm_density(x, 3) - 0.5 * x) < 1e-14);
    CHECK(sd::sphere_sum_norm_density(2.5, 6) == 0.0);
    CHECK(sd::sphere_sum_norm_density(-0.5, 6) == 0.0);
    CHECK_THROWS_AS(sd::sphere_sum_norm_density(1.0, 2), std::domain_error);

    for (int d : {3, 4, 5, 10, 30}) {
        const double mass = orc::adaptive_simpson(
            [d](double x) { return sd::sphere_sum_norm_density(x, d); }, 0.0, 2.0, 1e-11);
        CHECK(std::fabs(mass - 1.0) < 1e-8);
        double sup = 0.0;
        for (double x = 0.0; x <= 2.0; x += 1e-3)
            sup = std::max(sup, sd::sphere_sum_norm_density(x, d));
        CHECK(sup <= std::sqrt(static_cast<double>(d)));
    }
}

TEST_CASE("oscillating target", "[distributions]") {
    const int d = 5, m = 3;
    CHECK(sd::oscillating_target(0.3, d, m) == 0);
    CHECK(sd::oscillating_target(1.2, d, m) == 0);  // z^2 = 1.44 < 2 - 1/sqrt(5)
    const double z = std::sqrt(2.0);
    const double s = std::sin(4.0 * sf::pi * m * std::sqrt(static_cast<double>(d)));
    CHECK(sd::oscillating_target(z, d, m) == (s >= 0.0 ? 1 : -1));
    CHECK_THROWS_AS(sd::oscillating_target(1.0, 3, 1), std::domain_error);
    CHECK_THROWS_AS(sd::oscillating_target(1.0, 5, 0), std::domain_error);

    // dense grid scan: the sign alternates at least 2m times on the annulus
    for (int mm : {1, 2, 5, 11}) {
        const double lo = std::sqrt(2.0 - 1.0 / std::sqrt(5.0));
        const double hi = std::sqrt(2.0);
        int flips = 0;
        int prev = 0;
        for (int k = 0; k <= 20000; ++k) {
            const int v = sd::oscillating_target(lo + (hi - lo) * k / 20000.0, 5, mm);
            if (v != 0 && prev != 0 && v != prev) ++flips;
            if (v != 0) prev = v;
        }
        CHECK(flips >= 2 * mm);
    }
}

TEST_CASE("shell table sanity", "[distributions]") {
    const sd::ShellNormTable table(3, 1.0, 1300.0, 4000);
    CHECK(table.total_mass() <= 1.0 + 1e-6);
    CHECK(table.total_mass() >= 1.0 - 1.3 / 1300.0 - 1e-6);
    // quantiles are monotone
    double prev = 0.0;
    for (double u = 0.01; u < table.total_mass(); u += 0.05) {
        const double q = table.quantile(u);
        CHECK(q >= prev);
        prev = q;
    }
    CHECK_THROWS_AS(table.quantile(1.5), std::domain_error);
}

TEST_CASE("mixture sampler statistics", "[distributions]") {
    const auto spec = sd::DistributionSpec::bessel_mixture_spec(3);
    const auto empty = sd::sample_mixture(spec, 0, 1.5, 7);
    CHECK(empty.n() == 0);

    const Eigen::Index n = 50000;
    const auto ds = sd::sample_mixture(spec, n, 1.5, 20260810);
    CHECK(ds.n() == n);

    // labels and cached norms are recomputable from X
    for (Eigen::Index i = 0; i < n; i += 997) {
        const double recomputed = ds.X.row(i).norm();
        CHECK(std::fabs(ds.norms[i] - recomputed) <= 1e-12 * std::max(1.0, recomputed));
        CHECK(ds.y[static_cast<std::size_t>(i)] == (ds.norms[i] <= 1.5 ? 1 : 0));
    }

    // coarse CDF comparison against quadrature of the closed-form density
    std::vector<double> grid, cdf_grid;
    double acc = 0.0;
    const int cells = 300;
    for (int k = 0; k <= cells; ++k) {
        grid.push_back(30.0 * k / cells);
        cdf_grid.push_back(acc);
        if (k < cells)
            acc += orc::adaptive_simpson(
                [&spec](double t) {
                    return t > 0 ? sd::mixture_norm_density(t, spec) : 0.0;
                },
                30.0 * k / cells, 30.0 * (k + 1) / cells, 1e-9);
    }
    double worst = 0.0;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        double empirical = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) empirical += ds.norms[i] <= grid[k];
        empirical /= static_cast<double>(n);
        worst = std::max(worst, std::fabs(empirical - cdf_grid[k]));
    }
    // beyond the grid there is ~ <= 1/30 tail mass the comparison misses
    CHECK(worst < 0.04);

    int below2 = 0;
    for (Eigen::Index i = 0; i < n; ++i) below2 += ds.norms[i] <= 2.0;
    CHECK(static_cast<double>(below2) / static_cast<double>(n) >= 0.24);
}

TEST_CASE("sampler determinism is thread-independent", "[distributions]") {
    const auto spec = sd::DistributionSpec::bessel_mixture_spec(4);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto a = sd::sample_mixture(spec, 2000, 1.2, 99);
    const auto c = sd::sample_sphere_sum(6, 2000, 1.2, 99);
    omp_set_num_threads(2);
    const auto b = sd::sample_mixture(spec, 2000, 1.2, 99);
    const auto d2 = sd::sample_sphere_sum(6, 2000, 1.2, 99);
    omp_set_num_threads(saved);
    CHECK(a.X == b.X);
    CHECK(c.X == d2.X);
    const auto e = sd::sample_mixture(spec, 2000, 1.2, 100);
    CHECK(a.X != e.X);
}

TEST_CASE("sphere sum sampler", "[distributions]") {
    const Eigen::Index n = 100000;
    const auto ds = sd::sample_sphere_sum(3, n, 1.0, 5);
    double max_norm = 0.0;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
    for (Eigen::Index i = 0; i < n; ++i) {
        max_norm = std::max(max_norm, ds.norms[i]);
        mean += ds.X.row(i).transpose();
    }
    CHECK(max_norm <= 2.0 + 1e-12);
    mean /= static_cast<double>(n);
    CHECK(mean.norm() < 4.0 * std::sqrt(3.0) / std::sqrt(static_cast<double>(n)));

    // d=3 norms have CDF x^2/4 on [0,2]
    std::vector<double> norms(ds.norms.data(), ds.norms.data() + n);
    const double ks = orc::ks_distance(norms, [](double x) {
        if (x <= 0) return 0.0;
        if (x >= 2) return 1.0;
        return 0.25 * x * x;
    });
    CHECK(ks < 0.02);
}

TEST_CASE("dataset csv round trip", "[distributions]") {
    const auto ds = sd::sample_sphere_sum(4, 257, 1.3, 31337);
    const std::string csv = "/tmp/sepkit_test_ds.csv";
    const std::string meta = "/tmp/sepkit_test_ds.json";
    sd::write_dataset_csv(ds, csv, meta);
    const auto back = sd::read_dataset_csv(csv, meta);
    REQUIRE(back.n() == ds.n());
    CHECK(back.X == ds.X);
    CHECK(back.y == ds.y);
    CHECK(back.lambda == ds.lambda);
    CHECK(back.seed == ds.seed);
    std::remove(csv.c_str());
    std::remove(meta.c_str());
}
