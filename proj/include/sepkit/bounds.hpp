// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepkit/distributions.hpp"
#include "sepkit/features.hpp"
#include "sepkit/rng.hpp"
#include "sepkit/training.hpp"

namespace sepkit::bounds {

using BigInt = boost::multiprecision::cpp_int;

struct BoundReport {
    std::string name;
    nlohmann::json inputs;
    double value = 0.0;       // +inf when it overflows double
    double log10_value = 0.0;
    std::string description;
};

/// Dimension of the degree-m spherical-harmonic space on S^{d-1}:
/// N_{d,m} = (2m + d - 2) (m + d - 3)! / (m! (d - 2)!), exact.
inline BigInt harmonic_dim(int d, int m) {
    if (d < 3) throw std::domain_error("harmonic_dim: d must be >= 3");
    if (m < 1) throw std::domain_error("harmonic_dim: m must be >= 1");
    // (m + d - 3)! / m! = product of (m+1) .. (m+d-3)
    BigInt numerator = 2 * m + d - 2;
    for (int k = m + 1; k <= m + d - 3; ++k) numerator *= k;
    BigInt denom = 1;
    for (int k = 2; k <= d - 2; ++k) denom *= k;
    const BigInt q = numerator / denom;
    if (q * denom != numerator)
        throw std::logic_error("harmonic_dim: non-exact division (bug)");
    return q;
}

inline double harmonic_dim_log10(int d, int m) {
    const double ln_n = std::log(2.0 * m + d - 2.0) + specfun::log_gamma(m + d - 2.0) -
                        specfun::log_gamma(m + 1.0) - specfun::log_gamma(d - 1.0);
    return ln_n / std::log(10.0);
}

/// Width / weight-norm threshold for depth-2 approximation of the
/// oscillating radial target: c1 exp(c2 min{m ln(d/m+2), d ln(m/d+2)}),
/// returned as log10 (the raw value overflows routinely).
inline double sep_lower_bound_log10(int d, int m, double c1, double c2) {
    if (d < 1 || m < 1) throw std::domain_error("sep_lower_bound: d, m must be >= 1");
    if (!(c1 > 0.0) || !(c2 > 0.0))
        throw std::domain_error("sep_lower_bound: constants must be positive");
    const double dd = d, mm = m;
    const double branch_m = mm * std::log(dd / mm + 2.0);
    const double branch_d = dd * std::log(mm / dd + 2.0);
    return (std::log(c1) + c2 * std::min(branch_m, branch_d)) / std::log(10.0);
}

namespace detail {

// exact predicate 196 (m+1)^2 eps <= 1 over the dyadic rational eps
inline bool oscillation_feasible(long m, double eps) {
    int exp2 = 0;
    const double mant = std::frexp(eps, &exp2);  // eps = mant * 2^exp2, mant in [0.5, 1)
    const BigInt m53 = static_cast<std::uint64_t>(std::ldexp(mant, 53));
    // eps = m53 * 2^(exp2 - 53); condition: K * m53 * 2^(exp2-53) <= 1
    const BigInt K = BigInt(196) * (m + 1) * (m + 1) * m53;
    const int shift = 53 - exp2;
    if (shift < 0) return false;  // eps >= 2^53 cannot satisfy anything
    return K <= (BigInt(1) << shift);
}

}  // namespace detail

/// Largest integer m with 196 (m+1)^2 eps <= 1, computed exactly on the
/// dyadic representation of eps. For eps in (1/1764, 1/400] this is below 2.
inline long accuracy_to_oscillation(double eps) {
    if (!(eps > 0.0) || eps > 1.0 / 400.0)
        throw std::domain_error("accuracy_to_oscillation: eps must be in (0, 1/400]");
    long m = std::max(0L, static_cast<long>(std::floor(1.0 / (14.0 * std::sqrt(eps)))) - 2);
    while (!detail::oscillation_feasible(m, eps)) --m;
    while (detail::oscillation_feasible(m + 1, eps)) ++m;
    return m;
}

/// Log growth-function bound for intersections of m halfspaces in R^r:
/// ln tau <= m (r+1) ln n, valid for n > r + 1.
inline double growth_bound_log(long n, int r, int m) {
    if (r < 2) throw std::domain_error("growth_bound_log: r must be >= 2");
    if (m < 0) throw std::domain_error("growth_bound_log: m must be >= 0");
    if (n <= r + 1) throw std::domain_error("growth_bound_log: requires n > r + 1");
    return static_cast<double>(m) * (r + 1.0) * std::log(static_cast<double>(n));
}

/// Uniform generalization gap for ||w|| <= 1 predictors:
/// 4 sqrt(r/n) + 4 sqrt(2 ln(4/delta) / n).
inline double generalization_bound(int r, long n, double delta) {
    if (r < 1 || n < 1) throw std::domain_error("generalization_bound: r, n must be >= 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::domain_error("generalization_bound: delta must be in (0,1)");
    return 4.0 * std::sqrt(static_cast<double>(r) / static_cast<double>(n)) +
           4.0 * std::sqrt(2.0 * std::log(4.0 / delta) / static_cast<double>(n));
}

struct GapCheckReport {
    double violation_rate = 0.0;
    int trials = 0;
    int violating_trials = 0;
    double bound = 0.0;           // recomputed inside the checker, not shared code
    double worst_gap = 0.0;       // max over (trial, w) of F - F^ - 3 SE
    long pop_sample_size = 0;
    std::uint64_t seed = 0;
};

/// Empirical check of the generalization bound: per trial, a fresh n-sample
/// and 100 random ||w|| <= 1 predictors; the population risk comes from one
/// shared 1e5-point sample (independent of every trial sample). A trial
/// violates when some w has F(w) > F^(w) + bound + 3 SE.
inline GapCheckReport check_generalization_gap(const feat::HiddenLayer& layer,
                                               const dist::DistributionSpec& spec,
                                               double lambda, int r, long n, double delta,
                                               int trials, std::uint64_t seed = 1) {
    if (trials < 1) throw std::invalid_argument("check_generalization_gap: trials >= 1");
    if (layer.r != r)
        throw std::invalid_argument("check_generalization_gap: layer width != r");

    // deliberately restate the bound formula; sharing generalization_bound's
    // code path here would make the cross-check in the tests vacuous
    const double nd = static_cast<double>(n);
    const double bound = 4.0 * std::sqrt(r / nd) + 4.0 * std::sqrt(2.0 * std::log(4.0 / delta) / nd);

    const long pop_n = 100000;
    const auto pop = dist::sample(spec, pop_n, lambda, Rng(seed, 0x9090909090ULL).next_u64());
    const auto pop_feats = feat::feature_map(layer, pop.X);
    const Eigen::VectorXd pop_y = train::real_labels(pop.y);

    GapCheckReport rep;
    rep.trials = trials;
    rep.bound = bound;
    rep.pop_sample_size = pop_n;
    rep.seed = seed;

    const int n_w = 100;
    std::vector<std::uint8_t> violated(static_cast<std::size_t>(trials), 0);
    std::vector<double> worst(static_cast<std::size_t>(trials), -1e300);

    for (int t = 0; t < trials; ++t) {
        const auto ds = dist::sample(spec, n, lambda, Rng(seed, 1000 + t).next_u64());
        const auto feats = feat::feature_map(layer, ds.X);
        const Eigen::VectorXd y = train::real_labels(ds.y);

        Rng wg(seed, 2000000 + t);
        for (int k = 0; k < n_w; ++k) {
            Eigen::VectorXd w(r);
            for (int j = 0; j < r; ++j) w[j] = wg.normal();
            const double radius = std::pow(wg.uniform_open(), 1.0 / r);
            w *= radius / w.norm();  // uniform in the unit ball

            const double emp = train::empirical_loss(w, feats, y);
            // population estimate and its standard error
            const Eigen::VectorXd margins = pop_feats.values * w;
            double s1 = 0.0, s2 = 0.0;
            for (Eigen::Index i = 0; i < pop_n; ++i) {
                const double e = train::crelu(margins[i]) - pop_y[i];
                const double sq = e * e;
                s1 += sq;
                s2 += sq * sq;
            }
            const double risk = s1 / pop_n;
            const double var = std::max(0.0, s2 / pop_n - risk * risk);
            const double se = std::sqrt(var / pop_n);
            const double gap = risk - emp - bound - 3.0 * se;
            worst[static_cast<std::size_t>(t)] =
                std::max(worst[static_cast<std::size_t>(t)], gap);
            if (gap > 0.0) violated[static_cast<std::size_t>(t)] = 1;
        }
    }
    for (int t = 0; t < trials; ++t) {
        rep.violating_trials += violated[static_cast<std::size_t>(t)];
        rep.worst_gap = std::max(rep.worst_gap, worst[static_cast<std::size_t>(t)]);
    }
    rep.violation_rate = static_cast<double>(rep.violating_trials) / trials;
    return rep;
}

/// The standard bound rows printed by the bounds CLI subcommand.
inline std::vector<BoundReport> standard_bound_rows() {
    std::vector<BoundReport> rows;
    {
        BoundReport row;
        row.name = "harmonic_dim";
        row.inputs = {{"d", 10}, {"m", 12}};
        const BigInt v = harmonic_dim(10, 12);
        row.value = static_cast<double>(v);
        row.log10_value = harmonic_dim_log10(10, 12);
        row.description = "(2m+d-2)(m+d-3)!/(m!(d-2)!)";
        rows.push_back(row);
    }
    {
        BoundReport row;
        row.name = "sep_lower_bound";
        row.inputs = {{"d", 100}, {"m", 10}, {"c1", 1.0}, {"c2", 1.0}};
        row.log10_value = sep_lower_bound_log10(100, 10, 1.0, 1.0);
        row.value = std::pow(10.0, row.log10_value);
        row.description = "c1 exp(c2 min{m ln(d/m+2), d ln(m/d+2)})";
        rows.push_back(row);
    }
    {
        BoundReport row;
        row.name = "generalization_bound";
        row.inputs = {{"r", 100}, {"n", 10000}, {"delta", 0.05}};
        row.value = generalization_bound(100, 10000, 0.05);
        row.log10_value = std::log10(row.value);
        row.description = "4 sqrt(r/n) + 4 sqrt(2 ln(4/delta)/n)";
        rows.push_back(row);
    }
    {
        BoundReport row;
        row.name = "growth_bound_log";
        row.inputs = {{"n", 100000}, {"r", 50}, {"m", 4}};
        row.value = growth_bound_log(100000, 50, 4);
        row.log10_value = std::log10(row.value);
        row.description = "m (r+1) ln n";
        rows.push_back(row);
    }
    return rows;
}

}  // namespace sepkit::bounds
