// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepkit/features.hpp"
#include "sepkit/specfun.hpp"

namespace sepkit::wit {

inline constexpr double xi_lo = 0.45;
inline constexpr double xi_hi = 0.472;
inline constexpr double inv_sqrt2 = 0.70710678118654752440;

inline double one_minus_erf1() { return 1.0 - specfun::erf(1.0); }

namespace detail {

inline void require_xi(double xi) {
    if (!(xi >= xi_lo - 1e-9) || !(xi <= xi_hi + 1e-9))
        throw std::domain_error("xi must lie in [0.45, 0.472]");
}

}  // namespace detail

/// Expectation of erf(<U, x> + B) with U ~ N(0, sigma^2 I), B ~ N(0, sigma^2)
/// truncated to [threshold, upper], as a function of ||x|| = znorm.
inline double truncated_expectation(double znorm, double threshold, double sigma,
                                    double upper = std::numeric_limits<double>::infinity()) {
    if (!(znorm >= 0.0)) throw std::domain_error("truncated_expectation: znorm < 0");
    if (!(sigma > 0.0)) throw std::domain_error("truncated_expectation: sigma <= 0");
    if (!(threshold < upper)) throw std::domain_error("truncated_expectation: empty interval");

    const double c =
        std::sqrt(2.0) * sigma / std::sqrt(1.0 + 2.0 * znorm * znorm * sigma * sigma);
    const double sqrt2_sigma = std::sqrt(2.0) * sigma;
    double numerator = specfun::owen_t(threshold / sigma, c);
    double denominator = 1.0 - specfun::erf(threshold / sqrt2_sigma);
    if (std::isfinite(upper)) {
        numerator -= specfun::owen_t(upper / sigma, c);
        denominator = specfun::erf(upper / sqrt2_sigma) - specfun::erf(threshold / sqrt2_sigma);
    }
    return 4.0 * numerator / denominator;
}

/// Expectation with the bias truncated below at 0: (2/pi) atan(1/sqrt(2+z^2)).
inline double expectation_bias_positive(double z) {
    return 2.0 / specfun::pi * std::atan(1.0 / std::sqrt(2.0 + z * z));
}

/// Expectation with the bias truncated below at 1/sqrt(2):
/// 4/(1 - erf(1)) * T(sqrt(2), 1/sqrt(2+z^2)).
inline double expectation_bias_high(double z) {
    return 4.0 / one_minus_erf1() *
           specfun::owen_t(std::sqrt(2.0), 1.0 / std::sqrt(2.0 + z * z));
}

/// f_xi(z) = E_0(z) - xi E_{1/sqrt2}(z); its zero placement drives the
/// witness interval construction.
inline double f_xi(double z, double xi) {
    if (!(z >= 0.0)) throw std::domain_error("f_xi: z must be >= 0");
    detail::require_xi(xi);
    return expectation_bias_positive(z) - xi * expectation_bias_high(z);
}

/// Closed-form derivative of f_xi.
inline double f_xi_derivative(double z, double xi) {
    if (!(z > 0.0)) throw std::domain_error("f_xi_derivative: z must be > 0");
    detail::require_xi(xi);
    const double z2 = z * z;
    const double lead = 2.0 * z /
                        (specfun::pi * one_minus_erf1() * (3.0 + z2) * std::sqrt(2.0 + z2));
    const double paren = xi * std::exp(-(1.0 + 1.0 / (2.0 + z2))) - one_minus_erf1();
    return lead * paren;
}

/// The xi that zeroes f_xi at a given ball radius:
/// g(lambda) = (1-erf(1))/(2 pi) * atan(c)/T(sqrt2, c), c = 1/sqrt(2+lambda^2).
inline double xi_for_radius(double lambda) {
    if (!(lambda >= 1.0 && lambda <= 2.0))
        throw std::domain_error("xi_for_radius: lambda must be in [1, 2]");
    const double c = 1.0 / std::sqrt(2.0 + lambda * lambda);
    const double g = one_minus_erf1() / specfun::two_pi * std::atan(c) /
                     specfun::owen_t(std::sqrt(2.0), c);
    if (g < xi_lo - 1e-9 || g > xi_hi + 1e-9)
        throw std::runtime_error("xi_for_radius: value " + std::to_string(g) +
                                 " left [0.45, 0.472]; special-function regression?");
    return std::clamp(g, xi_lo, xi_hi);
}

/// Global minimizer z* of f_xi; lies in [2.8, 4.2] for xi in I.
inline double f_xi_argmin(double xi) {
    detail::require_xi(xi);
    const double denom = std::log(xi / one_minus_erf1()) - 1.0;
    return std::sqrt(1.0 / denom - 2.0);
}

enum class Branch { decreasing, increasing };

struct out_of_image_error : std::domain_error {
    out_of_image_error(const std::string& msg, double lo, double hi)
        : std::domain_error(msg), image_lo(lo), image_hi(hi) {}
    double image_lo, image_hi;
};

/// Inverse of f_xi on one of its two monotone branches (bisection).
inline double f_xi_inverse(Branch branch, double y, double xi) {
    detail::require_xi(xi);
    const double zstar = f_xi_argmin(xi);
    const double fmin = f_xi(zstar, xi);

    double lo, hi;
    if (branch == Branch::decreasing) {
        const double f0 = f_xi(0.0, xi);
        if (y < fmin || y > f0)
            throw out_of_image_error("f_xi_inverse: value outside the decreasing branch image [" +
                                         std::to_string(fmin) + ", " + std::to_string(f0) + "]",
                                     fmin, f0);
        lo = 0.0;
        hi = zstar;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (f_xi(mid, xi) > y ? lo : hi) = mid;
        }
    } else {
        if (y < fmin || y >= 0.0)
            throw out_of_image_error("f_xi_inverse: value outside the increasing branch image [" +
                                         std::to_string(fmin) + ", 0)",
                                     fmin, 0.0);
        lo = zstar;
        hi = zstar + 1.0;
        while (f_xi(hi, xi) < y) {
            hi *= 2.0;
            if (hi > 1e12)
                throw out_of_image_error("f_xi_inverse: no bracket below 1e12", fmin, 0.0);
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (f_xi(mid, xi) < y ? lo : hi) = mid;
        }
    }
    return 0.5 * (lo + hi);
}

enum class WitnessMode { asymptotic, calibrated };

inline std::string mode_name(WitnessMode m) {
    return m == WitnessMode::asymptotic ? "asymptotic" : "calibrated";
}

struct degenerate_witness_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = true;
};

struct WitnessOptions {
    WitnessMode mode = WitnessMode::calibrated;
    double delta = 0.05;   // enters the default I3/I4 threshold
    double n = 50000.0;    // enters the default I3/I4 threshold
    // overrides for the f_xi levels that cut the intervals
    std::optional<double> level_i1;  // default  2 r^{-1/4}
    std::optional<double> level_i2;  // default -r^{-1/4}
    std::optional<double> level_i3;  // default -10 sqrt(ln(8n/delta)/r)
};

struct WitnessCertificate {
    Eigen::VectorXd v;
    std::vector<int> A1, A2;
    std::array<Interval, 4> intervals;
    double xi_hat = 0.0;
    double lambda = 0.0;
    WitnessMode mode = WitnessMode::calibrated;
    std::vector<std::int8_t> group;  // 1 for the first half, 2 for the second
    int r = 0;
    double v_norm_sq = 0.0;
    std::uint64_t layer_seed = 0;
    std::uint64_t w0_seed = 0;
    // degenerate interval construction is reported, never erased
    bool i1_degenerate = false;
    bool i3_degenerate = false;
};

/// Construct the explicit witness vector from a frozen layer and an output
/// initialization. Group 1 is the first r/2 neurons (kept when b_j >= 0 and
/// w0_j > 0, weight +r^{-3/4}); group 2 is the rest (kept when
/// b_j >= 1/sqrt2 and w0_j < 0, weight -xi_hat r^{-3/4}).
inline WitnessCertificate build_witness(const feat::HiddenLayer& layer,
                                        const feat::OutputWeights& w0, double lambda,
                                        const WitnessOptions& opts = {}) {
    if (layer.r % 2 != 0)
        throw std::invalid_argument("build_witness: layer width must be even");
    if (w0.w.size() != layer.r)
        throw std::invalid_argument("build_witness: output weight size mismatch");
    if (!(lambda >= 1.0 && lambda <= 2.0))
        throw std::domain_error("build_witness: lambda must be in [1, 2]");

    WitnessCertificate cert;
    cert.lambda = lambda;
    cert.mode = opts.mode;
    cert.r = layer.r;
    cert.layer_seed = layer.seed;
    cert.w0_seed = w0.seed;
    const int half = layer.r / 2;
    cert.group.resize(static_cast<std::size_t>(layer.r));
    for (int j = 0; j < layer.r; ++j)
        cert.group[static_cast<std::size_t>(j)] = j < half ? 1 : 2;

    for (int j = 0; j < half; ++j)
        if (layer.b[j] >= 0.0 && w0.w[j] > 0.0) cert.A1.push_back(j);
    for (int j = half; j < layer.r; ++j)
        if (layer.b[j] >= inv_sqrt2 && w0.w[j] < 0.0) cert.A2.push_back(j);
    if (cert.A1.empty() || cert.A2.empty())
        throw degenerate_witness_error("build_witness: an entire truncation group is empty");

    const double g = xi_for_radius(lambda);
    cert.xi_hat = opts.mode == WitnessMode::asymptotic
                      ? g
                      : g * static_cast<double>(cert.A1.size()) /
                            static_cast<double>(cert.A2.size());

    const double base = std::pow(static_cast<double>(layer.r), -0.75);
    cert.v = Eigen::VectorXd::Zero(layer.r);
    for (int j : cert.A1) cert.v[j] = base;
    for (int j : cert.A2) cert.v[j] = -cert.xi_hat * base;
    cert.v_norm_sq = cert.v.squaredNorm();
    const double cap = 1.0 / std::sqrt(static_cast<double>(layer.r));
    if (cert.v_norm_sq > cap * (1.0 + 1e-12))
        throw degenerate_witness_error(
            "build_witness: calibrated scaling breaks ||v||^2 <= 1/sqrt(r) (kept groups "
            "too lopsided)");

    // interval construction from the f_xi level sets
    const double rr = static_cast<double>(layer.r);
    const double level1 = opts.level_i1.value_or(2.0 * std::pow(rr, -0.25));
    const double level2 = opts.level_i2.value_or(-std::pow(rr, -0.25));
    const double level3 =
        opts.level_i3.value_or(-10.0 * std::sqrt(std::log(8.0 * opts.n / opts.delta) / rr));

    const double zstar = f_xi_argmin(g);
    const double fmin = f_xi(zstar, g);
    const double f0 = f_xi(0.0, g);

    double t1 = 0.0;
    if (level1 <= f0) {
        t1 = f_xi_inverse(Branch::decreasing, level1, g);
    } else {
        cert.i1_degenerate = true;  // f never reaches the I1 level at this r
    }
    const double t2 =
        level2 >= fmin ? f_xi_inverse(Branch::decreasing, level2, g) : zstar;
    double t3 = zstar;
    if (level3 >= fmin && level3 < 0.0) {
        t3 = f_xi_inverse(Branch::increasing, level3, g);
    } else {
        cert.i3_degenerate = true;  // the I3/I4 cut collapses onto z*
    }

    cert.intervals[0] = {0.0, t1, cert.i1_degenerate};
    cert.intervals[1] = {t1, t2, t1 >= t2};
    cert.intervals[2] = {t2, t3, cert.i3_degenerate && t2 >= t3};
    cert.intervals[3] = {t3, std::numeric_limits<double>::infinity(), false};
    return cert;
}

/// Exact conditional expectation E[v . x~ | ||x|| = z] of the witness margin.
inline double witness_expectation_curve(const WitnessCertificate& cert, double z) {
    const double base = std::pow(static_cast<double>(cert.r), -0.75);
    return base * (static_cast<double>(cert.A1.size()) * expectation_bias_positive(z) -
                   cert.xi_hat * static_cast<double>(cert.A2.size()) *
                       expectation_bias_high(z));
}

/// Zero crossing of the expectation curve (bisection on [0, hi]).
inline std::optional<double> witness_curve_zero(const WitnessCertificate& cert,
                                                double hi = 64.0) {
    double lo = 0.0;
    double flo = witness_expectation_curve(cert, lo);
    double fhi = witness_expectation_curve(cert, hi);
    if (flo == 0.0) return lo;
    if (flo * fhi > 0.0) return std::nullopt;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = witness_expectation_curve(cert, mid);
        if (fm == 0.0) return mid;
        if (fm * flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline nlohmann::json certificate_to_json(const WitnessCertificate& cert) {
    nlohmann::json j;
    j["lambda"] = cert.lambda;
    j["xi_hat"] = cert.xi_hat;
    j["mode"] = mode_name(cert.mode);
    j["r"] = cert.r;
    j["A1_size"] = cert.A1.size();
    j["A2_size"] = cert.A2.size();
    j["v_norm_sq"] = cert.v_norm_sq;
    j["layer_seed"] = cert.layer_seed;
    j["w0_seed"] = cert.w0_seed;
    nlohmann::json intervals = nlohmann::json::array();
    for (const auto& iv : cert.intervals)
        intervals.push_back({{"lo", iv.lo},
                             {"hi", std::isfinite(iv.hi) ? nlohmann::json(iv.hi)
                                                         : nlohmann::json("inf")},
                             {"empty", iv.empty}});
    j["intervals"] = intervals;
    j["i1_degenerate"] = cert.i1_degenerate;
    j["i3_degenerate"] = cert.i3_degenerate;
    return j;
}

}  // namespace sepkit::wit
