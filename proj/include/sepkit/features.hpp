// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "sepkit/distributions.hpp"
#include "sepkit/rng.hpp"
#include "sepkit/specfun.hpp"

namespace sepkit::feat {

/// Frozen first layer: U is r x d, b has r entries, all N(0, 1/4) draws.
struct HiddenLayer {
    RowMatrixXd U;
    Eigen::VectorXd b;
    int d = 0;
    int r = 0;
    std::uint64_t seed = 0;
};

/// Trainable output weights, N(0, 1/r^2) at initialization.
struct OutputWeights {
    Eigen::VectorXd w;
    std::uint64_t seed = 0;
};

struct FeatureMatrix {
    RowMatrixXd values;  // n x r, every entry strictly inside (-1, 1)
    Eigen::Index n() const { return values.rows(); }
    int r() const { return static_cast<int>(values.cols()); }
};

inline HiddenLayer init_hidden(int d, int r, std::uint64_t seed) {
    if (d < 2) throw std::invalid_argument("init_hidden: d must be >= 2");
    if (r < 1) throw std::invalid_argument("init_hidden: r must be >= 1");
    HiddenLayer layer;
    layer.d = d;
    layer.r = r;
    layer.seed = seed;
    layer.U.resize(r, d);
    layer.b.resize(r);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < r; ++j) {
        Rng g(seed, static_cast<std::uint64_t>(j));
        for (int k = 0; k < d; ++k) layer.U(j, k) = 0.5 * g.normal();
        layer.b[j] = 0.5 * g.normal();
    }
    return layer;
}

inline OutputWeights init_output(int r, std::uint64_t seed) {
    if (r < 1) throw std::invalid_argument("init_output: r must be >= 1");
    OutputWeights out;
    out.seed = seed;
    out.w.resize(r);
    // stream id outside the per-neuron range used by init_hidden, so a
    // shared seed cannot alias the two initializations
    Rng g(seed, 0xFFFFFFFF00000001ULL);
    for (int j = 0; j < r; ++j) out.w[j] = g.normal() / static_cast<double>(r);
    return out;
}

/// x~_j = erf(<u_j, x> + b_j), entrywise over the rows of X.
///
/// erf rounds to exactly +-1.0 in double for |pre-activation| >~ 5.86, so
/// entries are clamped to +-(1 - 2^-53) to keep the open-interval invariant
/// on heavy-tailed inputs.
inline FeatureMatrix feature_map(const HiddenLayer& layer, const RowMatrixXd& X) {
    if (X.cols() != layer.d)
        throw std::invalid_argument("feature_map: X has wrong column count");
    FeatureMatrix f;
    f.values.noalias() = X * layer.U.transpose();
    const double open_unit = std::nextafter(1.0, 0.0);
    const Eigen::Index n = f.values.rows();
    const int r = layer.r;
    #pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        double* row = f.values.row(i).data();
        for (int j = 0; j < r; ++j) {
            const double v = std::erf(row[j] + layer.b[j]);
            row[j] = std::clamp(v, -open_unit, open_unit);
        }
    }
    return f;
}

/// Density of a feature coordinate conditioned on the input norm:
/// f(z | x) = exp(erf_inv(z)^2 (1 - 2/(1+x^2))) / sqrt(2 + 2 x^2).
inline double conditional_feature_density(double z, double x) {
    if (!(std::fabs(z) < 1.0))
        throw std::domain_error("conditional_feature_density: |z| must be < 1");
    if (!(x >= 0.0)) throw std::domain_error("conditional_feature_density: x must be >= 0");
    const double t = specfun::erf_inv(z);
    return std::exp(t * t * (1.0 - 2.0 / (1.0 + x * x))) / std::sqrt(2.0 + 2.0 * x * x);
}

/// CDF of a feature coordinate conditioned on the input norm:
/// F(z | x) = 1/2 + 1/2 erf(erf_inv(z) / (0.5 sqrt(2 + 2 x^2))).
inline double conditional_feature_cdf(double z, double x) {
    if (!(std::fabs(z) < 1.0))
        throw std::domain_error("conditional_feature_cdf: |z| must be < 1");
    if (!(x >= 0.0)) throw std::domain_error("conditional_feature_cdf: x must be >= 0");
    const double t = specfun::erf_inv(z);
    return 0.5 + 0.5 * specfun::erf(t / (0.5 * std::sqrt(2.0 + 2.0 * x * x)));
}

struct MarginalDensityGrid {
    Eigen::MatrixXd density;        // bins x bins, integrates to ~1 over the square
    double grid_radius = 0.0;
    double disk_radius = 1.0 / 9.0;
    double min_density_in_disk = std::numeric_limits<double>::quiet_NaN();
    Eigen::Index points_in_grid = 0;
    Eigen::Index points_total = 0;
};

/// Normalized 2-D histogram of the features projected onto the span of
/// (w1, w2) (orthonormalized by Gram-Schmidt), with the minimum bin density
/// over cells whose centers lie inside the disk of radius 1/9.
inline MarginalDensityGrid marginal_density_estimate(const FeatureMatrix& features,
                                                     const Eigen::VectorXd& w1,
                                                     const Eigen::VectorXd& w2,
                                                     double grid_radius, int bins) {
    if (features.n() == 0)
        throw std::invalid_argument("marginal_density_estimate: empty feature matrix");
    if (w1.size() != features.values.cols() || w2.size() != features.values.cols())
        throw std::invalid_argument("marginal_density_estimate: direction size mismatch");
    if (bins < 1 || !(grid_radius > 0.0))
        throw std::invalid_argument("marginal_density_estimate: bad grid parameters");

    const double n1 = w1.norm();
    if (n1 == 0.0) throw std::invalid_argument("marginal_density_estimate: w1 is zero");
    const Eigen::VectorXd e1 = w1 / n1;
    Eigen::VectorXd u2 = w2 - e1.dot(w2) * e1;
    if (u2.norm() <= 1e-12 * w2.norm())
        throw std::invalid_argument(
            "marginal_density_estimate: w1 and w2 are parallel (degenerate span)");
    const Eigen::VectorXd e2 = u2 / u2.norm();

    MarginalDensityGrid out;
    out.grid_radius = grid_radius;
    out.density = Eigen::MatrixXd::Zero(bins, bins);
    out.points_total = features.n();

    const double cell = 2.0 * grid_radius / bins;
    const Eigen::VectorXd p = features.values * e1;
    const Eigen::VectorXd q = features.values * e2;
    for (Eigen::Index i = 0; i < features.n(); ++i) {
        const int bx = static_cast<int>(std::floor((p[i] + grid_radius) / cell));
        const int by = static_cast<int>(std::floor((q[i] + grid_radius) / cell));
        if (bx < 0 || bx >= bins || by < 0 || by >= bins) continue;
        out.density(bx, by) += 1.0;
        ++out.points_in_grid;
    }
    out.density /= static_cast<double>(features.n()) * cell * cell;

    double min_in_disk = std::numeric_limits<double>::infinity();
    bool any = false;
    for (int bx = 0; bx < bins; ++bx) {
        for (int by = 0; by < bins; ++by) {
            const double cx = -grid_radius + (bx + 0.5) * cell;
            const double cy = -grid_radius + (by + 0.5) * cell;
            if (cx * cx + cy * cy > out.disk_radius * out.disk_radius) continue;
            any = true;
            min_in_disk = std::min(min_in_disk, out.density(bx, by));
        }
    }
    if (any) out.min_density_in_disk = min_in_disk;
    return out;
}

inline nlohmann::json layer_to_json(const HiddenLayer& layer) {
    return nlohmann::json{{"d", layer.d}, {"r", layer.r}, {"seed", layer.seed}};
}

inline HiddenLayer layer_from_json(const nlohmann::json& j) {
    return init_hidden(j.at("d").get<int>(), j.at("r").get<int>(),
                       j.at("seed").get<std::uint64_t>());
}

}  // namespace sepkit::feat
