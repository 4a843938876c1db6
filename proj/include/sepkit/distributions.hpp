// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "sepkit/rng.hpp"
#include "sepkit/specfun.hpp"

namespace sepkit {
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

namespace sepkit::dist {

enum class DistKind { bessel_mixture, sphere_sum };

inline std::string kind_name(DistKind k) {
    return k == DistKind::bessel_mixture ? "bessel_mixture" : "sphere_sum";
}

inline DistKind kind_from_name(const std::string& s) {
    if (s == "bessel_mixture") return DistKind::bessel_mixture;
    if (s == "sphere_sum") return DistKind::sphere_sum;
    throw std::invalid_argument("unknown distribution kind: " + s);
}

/// Radius of the unit-volume Euclidean ball in dimension d.
inline double unit_ball_radius(int d) {
    if (d < 1) throw std::domain_error("unit_ball_radius: d must be >= 1");
    return std::exp(specfun::log_gamma(0.5 * d + 1.0) / d) / std::sqrt(specfun::pi);
}

/// Frequency of the shell density's Bessel argument: 2 pi alpha sqrt(d) R_d.
inline double shell_frequency(int d, double alpha) {
    return specfun::two_pi * alpha * std::sqrt(static_cast<double>(d)) * unit_ball_radius(d);
}

struct DistributionSpec {
    DistKind kind = DistKind::sphere_sum;
    int d = 3;
    double alpha = 1.0;               // bessel_mixture only
    double truncation_radius = 0.0;   // bessel_mixture only; 0 selects the default

    static DistributionSpec bessel_mixture_spec(int d, double alpha = 1.0,
                                                double truncation_radius = 0.0) {
        DistributionSpec s;
        s.kind = DistKind::bessel_mixture;
        s.d = d;
        s.alpha = alpha;
        s.truncation_radius = truncation_radius > 0.0 ? truncation_radius : 1300.0 / alpha;
        s.validate();
        return s;
    }

    static DistributionSpec sphere_sum_spec(int d) {
        DistributionSpec s;
        s.kind = DistKind::sphere_sum;
        s.d = d;
        s.validate();
        return s;
    }

    void validate() const {
        if (d < 2) throw std::invalid_argument("DistributionSpec: d must be >= 2");
        if (kind == DistKind::bessel_mixture) {
            if (d > 64)
                throw std::invalid_argument("DistributionSpec: d <= 64 for bessel_mixture");
            if (!(alpha >= 1.0))
                throw std::invalid_argument("DistributionSpec: alpha must be >= 1");
            if (truncation_radius < 0.0)
                throw std::invalid_argument("DistributionSpec: negative truncation radius");
        }
    }

    double tail_mass_bound() const {
        if (kind != DistKind::bessel_mixture) return 0.0;
        const double radius = truncation_radius > 0.0 ? truncation_radius : 1300.0 / alpha;
        return 1.3 / (alpha * radius);
    }

    double effective_truncation() const {
        return truncation_radius > 0.0 ? truncation_radius : 1300.0 / alpha;
    }
};

struct LabeledDataSet {
    RowMatrixXd X;
    Eigen::VectorXd norms;
    std::vector<std::int8_t> y;
    DistributionSpec spec;
    double lambda = 1.0;
    std::uint64_t seed = 0;

    Eigen::Index n() const { return X.rows(); }
    int dim() const { return static_cast<int>(X.cols()); }
};

/// Norm density of the heavy-tailed shell law: (d/x) J_{d/2}^2(2 pi alpha sqrt(d) R_d x).
inline double shell_norm_density(double x, int d, double alpha) {
    if (x == 0.0) return 0.0;  // limit for d >= 2
    if (!(x > 0.0)) throw std::domain_error("shell_norm_density: x must be positive");
    const double j = specfun::bessel_j(0.5 * d, shell_frequency(d, alpha) * x);
    return static_cast<double>(d) / x * j * j;
}

/// Norm density of the Gaussian mixture component, a chi distribution scaled
/// by 1/sqrt(d): 2 (d/2)^{d/2} / Gamma(d/2) * x^{d-1} exp(-d x^2 / 2).
inline double chi_component_density(double x, int d) {
    if (d < 2) throw std::domain_error("chi_component_density: d must be >= 2");
    if (x == 0.0) return 0.0;
    if (!(x > 0.0)) return 0.0;
    const double half_d = 0.5 * d;
    const double log_val = std::log(2.0) + half_d * std::log(half_d) -
                           specfun::log_gamma(half_d) + (d - 1) * std::log(x) -
                           half_d * x * x;
    return std::exp(log_val);
}

inline double mixture_norm_density(double x, const DistributionSpec& spec) {
    if (spec.kind != DistKind::bessel_mixture)
        throw std::invalid_argument("mixture_norm_density: spec must be bessel_mixture");
    return 0.5 * shell_norm_density(x, spec.d, spec.alpha) +
           0.5 * chi_component_density(x, spec.d);
}

/// Norm density of the sum of two independent uniform unit-sphere points,
/// supported on [0, 2].
inline double sphere_sum_norm_density(double x, int d) {
    if (d < 3) throw std::domain_error("sphere_sum_norm_density: d must be >= 3");
    if (x <= 0.0 || x > 2.0) return 0.0;
    const double log_coeff =
        specfun::log_gamma(0.5 * d) - specfun::log_gamma(0.5 * (d - 1)) -
        0.5 * std::log(specfun::pi);
    if (d == 3) return std::exp(log_coeff) * x;
    const double base = 1.0 - 0.25 * x * x;
    if (base <= 0.0) return 0.0;
    return std::exp(log_coeff + (d - 2) * std::log(x) + 0.5 * (d - 3) * std::log(base));
}

/// Hard oscillating radial target: sign(sin(2 pi m sqrt(d) z^2)) on the
/// annulus z^2 in [2 - 1/sqrt(d), 2], zero elsewhere. sign(0) = +1.
inline int oscillating_target(double z, int d, int m) {
    if (d < 4) throw std::domain_error("oscillating_target: d must be >= 4");
    if (m < 1) throw std::domain_error("oscillating_target: m must be >= 1");
    if (!(z >= 0.0)) throw std::domain_error("oscillating_target: z must be >= 0");
    const double z2 = z * z;
    const double lo = 2.0 - 1.0 / std::sqrt(static_cast<double>(d));
    // boundary tolerance: z = sqrt(2) must land inside the support
    if (z2 < lo * (1.0 - 1e-15) || z2 > 2.0 * (1.0 + 1e-15)) return 0;
    const double s = std::sin(specfun::two_pi * m * std::sqrt(static_cast<double>(d)) * z2);
    return s >= 0.0 ? 1 : -1;
}

struct tabulation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tabulated CDF of the shell norm density on (0, truncation_radius],
/// inverted by monotone linear interpolation for sampling.
class ShellNormTable {
public:
    ShellNormTable(int d, double alpha, double truncation_radius, int points = 20000) {
        if (points < 64) throw std::invalid_argument("ShellNormTable: too few points");
        const double freq = shell_frequency(d, alpha);
        const double osc_period = specfun::pi / freq;
        const double x_mid = std::min(8.0, 0.5 * truncation_radius);

        x_.reserve(points + 1);
        x_.push_back(0.0);
        const int n_lin = points / 2;
        const int n_geo = points - n_lin;
        for (int i = 1; i <= n_lin; ++i)
            x_.push_back(x_mid * static_cast<double>(i) / n_lin);
        const double ratio = std::log(truncation_radius / x_mid) / n_geo;
        for (int i = 1; i <= n_geo; ++i) x_.push_back(x_mid * std::exp(ratio * i));
        x_.back() = truncation_radius;

        F_.assign(x_.size(), 0.0);
        for (std::size_t k = 1; k < x_.size(); ++k) {
            const double a = x_[k - 1], b = x_[k];
            const int panels = std::max(
                4, static_cast<int>(std::ceil((b - a) / osc_period * 8.0)));
            // composite Simpson over the cell
            const double h = (b - a) / (2 * panels);
            double sum = shell_norm_density(a, d, alpha) + shell_norm_density(b, d, alpha);
            for (int j = 1; j < 2 * panels; ++j)
                sum += (j & 1 ? 4.0 : 2.0) * shell_norm_density(a + j * h, d, alpha);
            F_[k] = F_[k - 1] + std::max(0.0, sum * h / 3.0);
        }

        const double tail_bound = 1.3 / (alpha * truncation_radius);
        if (F_.back() < 1.0 - tail_bound - 1e-6)
            throw tabulation_error("ShellNormTable: CDF reaches only " +
                                   std::to_string(F_.back()) + ", below 1 - " +
                                   std::to_string(tail_bound));
    }

    double total_mass() const { return F_.back(); }

    /// Inverse CDF for u in [0, total_mass()).
    double quantile(double u) const {
        if (!(u >= 0.0) || u >= F_.back())
            throw std::domain_error("ShellNormTable::quantile: u out of range");
        const auto it = std::upper_bound(F_.begin(), F_.end(), u);
        const std::size_t k = static_cast<std::size_t>(it - F_.begin());
        const double f0 = F_[k - 1], f1 = F_[k];
        const double t = f1 > f0 ? (u - f0) / (f1 - f0) : 0.5;
        return x_[k - 1] + t * (x_[k] - x_[k - 1]);
    }

    const std::vector<double>& knots() const { return x_; }
    const std::vector<double>& cdf() const { return F_; }

private:
    std::vector<double> x_, F_;
};

namespace detail {

inline std::shared_ptr<const ShellNormTable> shared_table(int d, double alpha,
                                                          double radius) {
    using Key = std::tuple<int, double, double>;
    static std::map<Key, std::shared_ptr<const ShellNormTable>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    const Key key{d, alpha, radius};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto table = std::make_shared<const ShellNormTable>(d, alpha, radius);
    cache.emplace(key, table);
    return table;
}

inline void finalize_labels(LabeledDataSet& ds) {
    const Eigen::Index n = ds.X.rows();
    ds.norms.resize(n);
    ds.y.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        ds.norms[i] = ds.X.row(i).norm();
        ds.y[static_cast<std::size_t>(i)] = ds.norms[i] <= ds.lambda ? 1 : 0;
    }
}

}  // namespace detail

/// Sample n labeled points from the Bessel-shell / Gaussian mixture. Each
/// point uses its own RNG stream keyed by (seed, index), so the result is
/// independent of threading.
inline LabeledDataSet sample_mixture(const DistributionSpec& spec, Eigen::Index n,
                                     double lambda, std::uint64_t seed) {
    spec.validate();
    if (spec.kind != DistKind::bessel_mixture)
        throw std::invalid_argument("sample_mixture: spec must be bessel_mixture");
    if (n < 0) throw std::invalid_argument("sample_mixture: n must be >= 0");

    LabeledDataSet ds;
    ds.spec = spec;
    ds.spec.truncation_radius = spec.effective_truncation();
    ds.lambda = lambda;
    ds.seed = seed;
    ds.X.resize(n, spec.d);
    if (n == 0) {
        detail::finalize_labels(ds);
        return ds;
    }

    const auto table = detail::shared_table(spec.d, spec.alpha, ds.spec.truncation_radius);
    const double total = table->total_mass();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(spec.d));

    #pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        Rng g(seed, static_cast<std::uint64_t>(i));
        if (g.uniform() < 0.5) {
            for (int j = 0; j < spec.d; ++j) ds.X(i, j) = g.normal() * inv_sqrt_d;
        } else {
            const double radius = table->quantile(g.uniform() * total);
            double norm2 = 0.0;
            for (int j = 0; j < spec.d; ++j) {
                const double v = g.normal();
                ds.X(i, j) = v;
                norm2 += v * v;
            }
            const double scale = norm2 > 0.0 ? radius / std::sqrt(norm2) : 0.0;
            for (int j = 0; j < spec.d; ++j) ds.X(i, j) *= scale;
            if (scale == 0.0) ds.X(i, 0) = radius;
        }
    }
    detail::finalize_labels(ds);
    return ds;
}

/// Sample n labeled points x = x1 + x2 with x1, x2 independent uniform on
/// the unit sphere.
inline LabeledDataSet sample_sphere_sum(int d, Eigen::Index n, double lambda,
                                        std::uint64_t seed) {
    if (d < 2) throw std::invalid_argument("sample_sphere_sum: d must be >= 2");
    if (n < 0) throw std::invalid_argument("sample_sphere_sum: n must be >= 0");

    LabeledDataSet ds;
    ds.spec = DistributionSpec::sphere_sum_spec(d);
    ds.lambda = lambda;
    ds.seed = seed;
    ds.X.resize(n, d);

    #pragma omp parallel
    {
        std::vector<double> unit(static_cast<std::size_t>(d));
        #pragma omp for schedule(static)
        for (Eigen::Index i = 0; i < n; ++i) {
            Rng g(seed, static_cast<std::uint64_t>(i));
            ds.X.row(i).setZero();
            for (int which = 0; which < 2; ++which) {
                double norm2 = 0.0;
                for (int j = 0; j < d; ++j) {
                    const double v = g.normal();
                    unit[static_cast<std::size_t>(j)] = v;
                    norm2 += v * v;
                }
                const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
                if (inv == 0.0) {
                    ds.X(i, 0) += 1.0;
                    continue;
                }
                for (int j = 0; j < d; ++j)
                    ds.X(i, j) += unit[static_cast<std::size_t>(j)] * inv;
            }
        }
    }
    detail::finalize_labels(ds);
    return ds;
}

inline LabeledDataSet sample(const DistributionSpec& spec, Eigen::Index n, double lambda,
                             std::uint64_t seed) {
    return spec.kind == DistKind::bessel_mixture
               ? sample_mixture(spec, n, lambda, seed)
               : sample_sphere_sum(spec.d, n, lambda, seed);
}

inline nlohmann::json spec_to_json(const DistributionSpec& spec) {
    nlohmann::json j;
    j["kind"] = kind_name(spec.kind);
    j["d"] = spec.d;
    if (spec.kind == DistKind::bessel_mixture) {
        j["alpha"] = spec.alpha;
        j["truncation_radius"] = spec.effective_truncation();
        j["tail_mass_bound"] = spec.tail_mass_bound();
    }
    return j;
}

inline DistributionSpec spec_from_json(const nlohmann::json& j) {
    DistributionSpec spec;
    spec.kind = kind_from_name(j.at("kind").get<std::string>());
    spec.d = j.at("d").get<int>();
    if (spec.kind == DistKind::bessel_mixture) {
        spec.alpha = j.value("alpha", 1.0);
        spec.truncation_radius = j.value("truncation_radius", 0.0);
    }
    spec.validate();
    return spec;
}

inline void write_dataset_csv(const LabeledDataSet& ds, const std::string& csv_path,
                              const std::string& json_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("write_dataset_csv: cannot open " + csv_path);
    csv << "# sepkit.dataset.v1\n";
    const int d = ds.dim();
    for (int j = 0; j < d; ++j) csv << "x_" << j << ",";
    csv << "norm,y\n";
    csv.precision(17);
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        for (int j = 0; j < d; ++j) csv << ds.X(i, j) << ",";
        csv << ds.norms[i] << "," << static_cast<int>(ds.y[static_cast<std::size_t>(i)])
            << "\n";
    }

    nlohmann::json meta;
    meta["schema"] = "sepkit.dataset.v1";
    meta["spec"] = spec_to_json(ds.spec);
    meta["lambda"] = ds.lambda;
    meta["seed"] = ds.seed;
    meta["n"] = static_cast<std::int64_t>(ds.n());
    std::ofstream js(json_path);
    if (!js) throw std::runtime_error("write_dataset_csv: cannot open " + json_path);
    js << meta.dump(2) << "\n";
}

inline LabeledDataSet read_dataset_csv(const std::string& csv_path,
                                       const std::string& json_path) {
    std::ifstream js(json_path);
    if (!js) throw std::runtime_error("read_dataset_csv: cannot open " + json_path);
    nlohmann::json meta = nlohmann::json::parse(js);

    LabeledDataSet ds;
    ds.spec = spec_from_json(meta.at("spec"));
    ds.lambda = meta.at("lambda").get<double>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    const auto n = meta.at("n").get<std::int64_t>();
    const int d = ds.spec.d;
    ds.X.resize(n, d);
    ds.norms.resize(n);
    ds.y.resize(static_cast<std::size_t>(n));

    std::ifstream csv(csv_path);
    if (!csv) throw std::runtime_error("read_dataset_csv: cannot open " + csv_path);
    std::string line;
    Eigen::Index row = 0;
    while (std::getline(csv, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("x_0", 0) == 0) continue;
        if (row >= n) throw std::runtime_error("read_dataset_csv: more rows than declared");
        std::stringstream ss(line);
        std::string cell;
        for (int j = 0; j < d; ++j) {
            std::getline(ss, cell, ',');
            ds.X(row, j) = std::stod(cell);
        }
        std::getline(ss, cell, ',');
        ds.norms[row] = std::stod(cell);
        std::getline(ss, cell, ',');
        ds.y[static_cast<std::size_t>(row)] = static_cast<std::int8_t>(std::stoi(cell));
        ++row;
    }
    if (row != n) throw std::runtime_error("read_dataset_csv: fewer rows than declared");
    return ds;
}

}  // namespace sepkit::dist
