// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sepkit/features.hpp"
#include "sepkit/rng.hpp"

namespace sepkit::train {

inline double crelu(double z) { return std::min(std::max(0.0, z), 1.0); }

// ---------------------------------------------------------------------------
// activations for the depth-2 baseline

enum class Activation { erf, tanh, softplus, relu };

inline std::string activation_name(Activation a) {
    switch (a) {
        case Activation::erf: return "erf";
        case Activation::tanh: return "tanh";
        case Activation::softplus: return "softplus";
        case Activation::relu: return "relu";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "erf") return Activation::erf;
    if (s == "tanh") return Activation::tanh;
    if (s == "softplus") return Activation::softplus;
    if (s == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation: " + s);
}

/// Polynomial-boundedness constants |sigma(x)| <= C (1 + |x|^alpha) and
/// whether the activation admits gradients.
struct ActivationInfo {
    double C_sigma;
    double alpha_sigma;
    bool smooth;
};

inline ActivationInfo activation_info(Activation a) {
    switch (a) {
        case Activation::erf: return {1.0, 1.0, true};
        case Activation::tanh: return {1.0, 1.0, true};
        case Activation::softplus: return {1.0, 1.0, true};  // ln(1+e^x) <= 1 + |x|
        case Activation::relu: return {1.0, 1.0, false};
    }
    return {1.0, 1.0, false};
}

inline double act_value(Activation a, double z) {
    switch (a) {
        case Activation::erf: return std::erf(z);
        case Activation::tanh: return std::tanh(z);
        case Activation::softplus: return z > 30.0 ? z : std::log1p(std::exp(z));
        case Activation::relu: return z > 0.0 ? z : 0.0;
    }
    return 0.0;
}

inline double act_deriv(Activation a, double z) {
    switch (a) {
        case Activation::erf: return 2.0 / 1.77245385090551602729816748334 * std::exp(-z * z);
        case Activation::tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::softplus: return 1.0 / (1.0 + std::exp(-z));
        case Activation::relu:
            throw std::invalid_argument("act_deriv: relu gradient requested");
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// fixed-feature objective

namespace detail {

inline constexpr int kReductionBlocks = 64;

inline std::pair<Eigen::Index, Eigen::Index> block_range(Eigen::Index n, int block) {
    const Eigen::Index lo = n * block / kReductionBlocks;
    const Eigen::Index hi = n * (block + 1) / kReductionBlocks;
    return {lo, hi};
}

struct RfPassResult {
    double loss = 0.0;
    Eigen::VectorXd grad;
    double lhs = 0.0;  // technical-inequality sides (when v-margins are given)
    double rhs = 0.0;
};

/// One fused pass over the feature matrix: empirical loss, gradient and
/// (optionally) both sides of the technical inequality against reference
/// margins vm. Block-partial sums merged in fixed order, so the result is
/// bitwise independent of the thread count.
inline RfPassResult rf_pass(const Eigen::VectorXd& w, const RowMatrixXd& Xt,
                            const Eigen::VectorXd& y, bool want_grad,
                            const Eigen::VectorXd* vm) {
    const Eigen::Index n = Xt.rows();
    const int r = static_cast<int>(Xt.cols());
    if (w.size() != r) throw std::invalid_argument("rf_pass: weight size mismatch");
    if (y.size() != n) throw std::invalid_argument("rf_pass: label count mismatch");

    std::vector<double> loss_part(kReductionBlocks, 0.0);
    std::vector<double> lhs_part(kReductionBlocks, 0.0), rhs_part(kReductionBlocks, 0.0);
    RowMatrixXd grad_part;
    if (want_grad) grad_part = RowMatrixXd::Zero(kReductionBlocks, r);

    #pragma omp parallel for schedule(static)
    for (int blk = 0; blk < kReductionBlocks; ++blk) {
        const auto [lo, hi] = block_range(n, blk);
        double loss = 0.0, lhs = 0.0, rhs = 0.0;
        double* g = want_grad ? grad_part.row(blk).data() : nullptr;
        for (Eigen::Index i = lo; i < hi; ++i) {
            const double* row = Xt.row(i).data();
            double m = 0.0;
            for (int j = 0; j < r; ++j) m += row[j] * w[j];
            const double pred = crelu(m);
            const double res = pred - y[i];
            loss += res * res;
            const bool active = m > 0.0 && m < 1.0;
            if (active && want_grad) {
                const double coef = 2.0 * res;
                for (int j = 0; j < r; ++j) g[j] += coef * row[j];
            }
            if (vm && active) {
                const double mv = (*vm)[i];
                const double gap = m - mv;
                lhs += (pred - crelu(mv)) * gap;
                rhs += 2.0 * (crelu(mv) - y[i]) * gap;
            }
        }
        loss_part[static_cast<std::size_t>(blk)] = loss;
        lhs_part[static_cast<std::size_t>(blk)] = lhs;
        rhs_part[static_cast<std::size_t>(blk)] = rhs;
    }

    RfPassResult out;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int blk = 0; blk < kReductionBlocks; ++blk) out.loss += loss_part[blk];
    out.loss *= inv_n;
    if (want_grad) {
        out.grad = Eigen::VectorXd::Zero(r);
        for (int blk = 0; blk < kReductionBlocks; ++blk)
            out.grad += grad_part.row(blk).transpose();
        out.grad *= inv_n;
    }
    if (vm) {
        for (int blk = 0; blk < kReductionBlocks; ++blk) {
            out.lhs += lhs_part[blk];
            out.rhs += rhs_part[blk];
        }
        out.lhs *= inv_n;
        out.rhs *= inv_n;
    }
    return out;
}

// Table-interpolated erf and its Gaussian derivative kernel. Linear
// interpolation on a 32768-point grid over [-8, 8] keeps the absolute error
// below 1e-7, enough for the experiment fast paths (the exact std::erf route
// remains the default everywhere correctness is asserted).
class ErfTable {
public:
    static const ErfTable& get() {
        static const ErfTable table;
        return table;
    }

    float value(float z) const { return lookup(values_, z); }
    float deriv(float z) const { return lookup(derivs_, z); }

private:
    static constexpr int kPoints = 32768;
    static constexpr float kLimit = 8.0f;

    ErfTable() {
        for (int i = 0; i <= kPoints; ++i) {
            const double z = -kLimit + 2.0 * kLimit * i / kPoints;
            values_[i] = static_cast<float>(std::erf(z));
            derivs_[i] =
                static_cast<float>(2.0 / 1.7724538509055160273 * std::exp(-z * z));
        }
    }

    float lookup(const float* tab, float z) const {
        if (z <= -kLimit) return tab == values_ ? -1.0f : 0.0f;
        if (z >= kLimit) return tab == values_ ? 1.0f : 0.0f;
        const float t = (z + kLimit) * (kPoints / (2.0f * kLimit));
        const int idx = static_cast<int>(t);
        const float frac = t - static_cast<float>(idx);
        return tab[idx] + frac * (tab[idx + 1] - tab[idx]);
    }

    float values_[kPoints + 1];
    float derivs_[kPoints + 1];
};

/// Single-precision copy of the features for bandwidth-bound GD loops.
/// Margins accumulate in 4 float lanes and finish in double; the gradient
/// accumulates in per-block double rows merged in fixed order, so runs stay
/// deterministic and thread-count independent.
class FloatRfKernel {
public:
    FloatRfKernel(const RowMatrixXd& Xt, const Eigen::VectorXd& y)
        : n_(Xt.rows()), r_(static_cast<int>(Xt.cols())), y_(y) {
        X_.resize(static_cast<std::size_t>(n_) * r_);
        #pragma omp parallel for schedule(static)
        for (Eigen::Index i = 0; i < n_; ++i)
            for (int j = 0; j < r_; ++j)
                X_[static_cast<std::size_t>(i) * r_ + j] = static_cast<float>(Xt(i, j));
        loss_part_.resize(kReductionBlocks);
        lhs_part_.resize(kReductionBlocks);
        rhs_part_.resize(kReductionBlocks);
        grad_part_ = RowMatrixXd::Zero(kReductionBlocks, r_);
    }

    RfPassResult pass(const Eigen::VectorXd& w, const Eigen::VectorXd* vm) {
        std::vector<float> wf(static_cast<std::size_t>(r_));
        for (int j = 0; j < r_; ++j) wf[static_cast<std::size_t>(j)] = static_cast<float>(w[j]);
        #pragma omp parallel for schedule(static)
        for (int blk = 0; blk < kReductionBlocks; ++blk) {
            const auto [lo, hi] = block_range(n_, blk);
            double loss = 0.0, lhs = 0.0, rhs = 0.0;
            double* g = grad_part_.row(blk).data();
            for (int j = 0; j < r_; ++j) g[j] = 0.0;
            for (Eigen::Index i = lo; i < hi; ++i) {
                const float* row = &X_[static_cast<std::size_t>(i) * r_];
                float m0 = 0.f, m1 = 0.f, m2 = 0.f, m3 = 0.f;
                int j = 0;
                for (; j + 4 <= r_; j += 4) {
                    m0 += row[j] * wf[j];
                    m1 += row[j + 1] * wf[j + 1];
                    m2 += row[j + 2] * wf[j + 2];
                    m3 += row[j + 3] * wf[j + 3];
                }
                double m = static_cast<double>(m0) + m1 + m2 + m3;
                for (; j < r_; ++j) m += row[j] * wf[j];
                const double pred = crelu(m);
                const double res = pred - y_[i];
                loss += res * res;
                const bool active = m > 0.0 && m < 1.0;
                if (active) {
                    const double coef = 2.0 * res;
                    for (int k = 0; k < r_; ++k) g[k] += coef * row[k];
                    if (vm) {
                        const double mv = (*vm)[i];
                        const double gap = m - mv;
                        lhs += (pred - crelu(mv)) * gap;
                        rhs += 2.0 * (crelu(mv) - y_[i]) * gap;
                    }
                }
            }
            loss_part_[static_cast<std::size_t>(blk)] = loss;
            lhs_part_[static_cast<std::size_t>(blk)] = lhs;
            rhs_part_[static_cast<std::size_t>(blk)] = rhs;
        }
        RfPassResult out;
        const double inv_n = 1.0 / static_cast<double>(n_);
        out.grad = Eigen::VectorXd::Zero(r_);
        for (int blk = 0; blk < kReductionBlocks; ++blk) {
            out.loss += loss_part_[static_cast<std::size_t>(blk)];
            out.lhs += lhs_part_[static_cast<std::size_t>(blk)];
            out.rhs += rhs_part_[static_cast<std::size_t>(blk)];
            out.grad += grad_part_.row(blk).transpose();
        }
        out.loss *= inv_n;
        out.lhs *= inv_n;
        out.rhs *= inv_n;
        out.grad *= inv_n;
        return out;
    }

private:
    Eigen::Index n_;
    int r_;
    Eigen::VectorXd y_;
    std::vector<float> X_;
    std::vector<double> loss_part_, lhs_part_, rhs_part_;
    RowMatrixXd grad_part_;
};

/// Margins X~ v with the same per-row summation order as rf_pass, so that
/// w == v yields bitwise-equal margins (Eigen's GEMV reduction order differs).
inline Eigen::VectorXd row_margins(const RowMatrixXd& Xt, const Eigen::VectorXd& v) {
    const Eigen::Index n = Xt.rows();
    const int r = static_cast<int>(Xt.cols());
    Eigen::VectorXd out(n);
    #pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        const double* row = Xt.row(i).data();
        double m = 0.0;
        for (int j = 0; j < r; ++j) m += row[j] * v[j];
        out[i] = m;
    }
    return out;
}

}  // namespace detail

/// Binary dataset labels as a real vector (the objective also accepts
/// real-valued targets, e.g. planted-teacher outputs).
inline Eigen::VectorXd real_labels(const std::vector<std::int8_t>& y) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = static_cast<double>(y[i]);
    return out;
}

/// F^(w) = (1/n) sum (crelu(w . x~_i) - y_i)^2.
inline double empirical_loss(const Eigen::VectorXd& w, const feat::FeatureMatrix& Xt,
                             const Eigen::VectorXd& y) {
    if (Xt.n() == 0) throw std::invalid_argument("empirical_loss: empty dataset");
    return detail::rf_pass(w, Xt.values, y, false, nullptr).loss;
}

inline double empirical_loss(const Eigen::VectorXd& w, const feat::FeatureMatrix& Xt,
                             const std::vector<std::int8_t>& y) {
    return empirical_loss(w, Xt, real_labels(y));
}

/// grad F^(w) = (2/n) sum (crelu(w . x~_i) - y_i) 1{w . x~_i in (0,1)} x~_i.
/// The indicator uses the open interval, so w = 0 is a stationary point.
inline Eigen::VectorXd rf_gradient(const Eigen::VectorXd& w, const feat::FeatureMatrix& Xt,
                                   const Eigen::VectorXd& y) {
    if (Xt.n() == 0) throw std::invalid_argument("rf_gradient: empty dataset");
    return detail::rf_pass(w, Xt.values, y, true, nullptr).grad;
}

inline Eigen::VectorXd rf_gradient(const Eigen::VectorXd& w, const feat::FeatureMatrix& Xt,
                                   const std::vector<std::int8_t>& y) {
    return rf_gradient(w, Xt, real_labels(y));
}

struct InequalityCheck {
    bool holds = false;
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Both sides of the descent-direction inequality, evaluated exactly as
/// written (open-interval indicator on the w margins).
inline InequalityCheck technical_inequality_holds(const Eigen::VectorXd& w,
                                                  const Eigen::VectorXd& v,
                                                  const feat::FeatureMatrix& Xt,
                                                  const Eigen::VectorXd& y) {
    const Eigen::VectorXd vm = detail::row_margins(Xt.values, v);
    const auto pass = detail::rf_pass(w, Xt.values, y, false, &vm);
    return {pass.lhs >= pass.rhs, pass.lhs, pass.rhs};
}

inline InequalityCheck technical_inequality_holds(const Eigen::VectorXd& w,
                                                  const Eigen::VectorXd& v,
                                                  const feat::FeatureMatrix& Xt,
                                                  const std::vector<std::int8_t>& y) {
    return technical_inequality_holds(w, v, Xt, real_labels(y));
}

/// Empirical smoothness probe: largest eigenvalue of the objective Hessian
/// (2/n) sum over active rows of x~ x~^T, where a row is active when its
/// margin lies in (0, 1). Probing at the initial iterate matches the
/// depth-2 probe (Hessian at theta_0); with no anchor every row counts,
/// which gives the global quadratic-regime bound instead.
inline double rf_smoothness_probe(const feat::FeatureMatrix& Xt,
                                  const Eigen::VectorXd* anchor_w = nullptr,
                                  int iters = 30) {
    const Eigen::Index n = Xt.n();
    const int r = Xt.r();
    if (n == 0) throw std::invalid_argument("rf_smoothness_probe: empty dataset");

    Eigen::VectorXd mask;
    if (anchor_w) {
        const Eigen::VectorXd margins = detail::row_margins(Xt.values, *anchor_w);
        mask = margins.unaryExpr(
            [](double m) { return m > 0.0 && m < 1.0 ? 1.0 : 0.0; });
        if (mask.sum() == 0.0) mask.setOnes();  // fully inactive start: fall back
    }

    Eigen::VectorXd u = Eigen::VectorXd::Constant(r, 1.0 / std::sqrt(static_cast<double>(r)));
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd m = Xt.values * u;
        if (anchor_w) m.array() *= mask.array();
        Eigen::VectorXd z = Xt.values.transpose() * m;
        z /= static_cast<double>(n);
        const double nz = z.norm();
        if (nz == 0.0) return 0.0;
        z /= nz;
        const double prev = lambda;
        lambda = nz;
        u = z;
        if (it > 4 && std::fabs(lambda - prev) < 1e-4 * lambda) break;
    }
    return 2.0 * lambda;
}

// ---------------------------------------------------------------------------
// GD on the fixed-feature objective

enum class Schedule { theory, practical };
enum class StopReason { loss_target, iter_budget, stationary };

inline std::string stop_reason_name(StopReason s) {
    switch (s) {
        case StopReason::loss_target: return "loss_target";
        case StopReason::iter_budget: return "iter_budget";
        case StopReason::stationary: return "stationary";
    }
    return "?";
}

struct TrainConfig {
    std::optional<double> eta;  // unset selects the schedule's step size
    long max_iters = 10000;
    double stop_loss = 0.0;    // the eps/2 stopping rule
    Schedule schedule = Schedule::practical;
    std::uint64_t seed = 0;
    bool monitor_inequality = false;
    std::optional<Eigen::VectorXd> reference_v;
    int record_stride = 1;     // thin the per-iteration records
    bool use_float_kernel = false;  // single-precision feature storage

    // theory inputs (Network-width theorem schedule)
    double theory_epsilon = 0.1;
    double theory_C = 1.0;
};

struct TrainReport {
    std::vector<double> loss;         // F^(w_t), t = 0..iterations
    std::vector<double> grad_norm;
    std::vector<double> dist_to_ref;  // empty when no reference_v
    std::vector<std::uint8_t> ineq_holds;
    std::vector<double> theta_norm;   // depth-2 runs only
    std::vector<long> recorded_iters;
    Eigen::VectorXd final_w;
    StopReason stop = StopReason::iter_budget;
    bool ran = true;       // false when a theory schedule refuses to run
    bool diverged = false;
    std::string note;
    double eta = 0.0;
    long iterations = 0;
    std::uint64_t seed = 0;
    double pop_risk = std::numeric_limits<double>::quiet_NaN();
    double pop_risk_se = std::numeric_limits<double>::quiet_NaN();
    double wall_seconds = 0.0;  // excluded from the determinism contract
    // theory-schedule echo
    double theory_nu = std::numeric_limits<double>::quiet_NaN();
    double theory_eta_max = std::numeric_limits<double>::quiet_NaN();
    double theory_T = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr double theory_nu_of_C(double C) {
    return C / (840.0 * 9.0 * 9.0 * 9.0 * 9.0 * 1e6);
}

/// Plain GD w_{t+1} = w_t - eta grad F^(w_t) with the eps/2 stopping rule.
inline TrainReport gd_fixed_features(const Eigen::VectorXd& w0,
                                     const feat::FeatureMatrix& Xt,
                                     const Eigen::VectorXd& y,
                                     const TrainConfig& config) {
    if (Xt.n() == 0) throw std::invalid_argument("gd_fixed_features: empty dataset");
    if (w0.size() != Xt.values.cols())
        throw std::invalid_argument("gd_fixed_features: w0 size mismatch");

    const auto t_start = std::chrono::steady_clock::now();
    const int r = Xt.r();
    TrainReport report;
    report.seed = config.seed;

    double eta = config.eta.value_or(-1.0);
    if (config.schedule == Schedule::theory) {
        const double nu = theory_nu_of_C(config.theory_C);
        const double eta_max = nu / (8.0 * r);
        if (!config.eta) eta = 0.5 * eta_max;
        report.theory_nu = nu;
        report.theory_eta_max = eta_max;
        report.theory_T =
            2.0 / (eta * nu) * std::log(static_cast<double>(r) / (8.0 * config.theory_epsilon));
        if (report.theory_T > static_cast<double>(config.max_iters)) {
            // the theorem asks for more iterations than the budget: report
            // the schedule instead of running
            report.ran = false;
            report.eta = eta;
            report.final_w = w0;
            report.note = "theory schedule needs T = " + std::to_string(report.theory_T) +
                          " iterations, over the budget of " +
                          std::to_string(config.max_iters) + "; not run";
            return report;
        }
    } else if (!config.eta) {
        // smoothness probed at the starting point, as for the depth-2 model
        eta = 0.5 / rf_smoothness_probe(Xt, &w0);
    }
    report.eta = eta;

    std::optional<Eigen::VectorXd> vm;
    const bool monitor = config.monitor_inequality && config.reference_v.has_value();
    if (monitor) vm = detail::row_margins(Xt.values, *config.reference_v);

    std::optional<detail::FloatRfKernel> fast;
    if (config.use_float_kernel) fast.emplace(Xt.values, y);

    Eigen::VectorXd w = w0;
    const int stride = std::max(1, config.record_stride);
    for (long t = 0;; ++t) {
        const auto pass = fast ? fast->pass(w, monitor ? &*vm : nullptr)
                               : detail::rf_pass(w, Xt.values, y, true,
                                                 monitor ? &*vm : nullptr);
        if (!std::isfinite(pass.loss)) {
            report.diverged = true;
            report.note = "non-finite loss at iteration " + std::to_string(t);
            break;
        }
        const double gnorm = pass.grad.norm();
        const bool last = pass.loss <= config.stop_loss || gnorm < 1e-14 ||
                          t >= config.max_iters;
        if (t % stride == 0 || last) {
            report.recorded_iters.push_back(t);
            report.loss.push_back(pass.loss);
            report.grad_norm.push_back(gnorm);
            if (config.reference_v)
                report.dist_to_ref.push_back((w - *config.reference_v).norm());
            if (monitor) report.ineq_holds.push_back(pass.lhs >= pass.rhs ? 1 : 0);
        }
        report.iterations = t;
        if (pass.loss <= config.stop_loss) {
            report.stop = StopReason::loss_target;
            break;
        }
        if (gnorm < 1e-14) {
            report.stop = StopReason::stationary;
            break;
        }
        if (t >= config.max_iters) {
            report.stop = StopReason::iter_budget;
            break;
        }
        w -= eta * pass.grad;
    }
    report.final_w = w;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

inline TrainReport gd_fixed_features(const Eigen::VectorXd& w0,
                                     const feat::FeatureMatrix& Xt,
                                     const std::vector<std::int8_t>& y,
                                     const TrainConfig& config) {
    return gd_fixed_features(w0, Xt, real_labels(y), config);
}

// ---------------------------------------------------------------------------
// depth-2 baseline (all parameters trainable)

struct Depth2Params {
    RowMatrixXd U;       // r x d
    Eigen::VectorXd w;   // r
    Eigen::VectorXd b;   // r
    double b0 = 0.0;
    Activation act = Activation::erf;

    int r() const { return static_cast<int>(U.rows()); }
    int d() const { return static_cast<int>(U.cols()); }
    long param_count() const { return static_cast<long>(r()) * (d() + 2) + 1; }
    double theta_norm() const {
        return std::sqrt(U.squaredNorm() + w.squaredNorm() + b.squaredNorm() + b0 * b0);
    }
};

/// Xavier-style initialization: U ~ N(0, 1/d), w ~ N(0, 1/r), b = b0 = 0.
inline Depth2Params init_depth2(int d, int r, Activation act, std::uint64_t seed) {
    Depth2Params p;
    p.act = act;
    p.U.resize(r, d);
    p.w.resize(r);
    p.b = Eigen::VectorXd::Zero(r);
    p.b0 = 0.0;
    const double su = 1.0 / std::sqrt(static_cast<double>(d));
    const double sw = 1.0 / std::sqrt(static_cast<double>(r));
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < r; ++j) {
        Rng g(seed, static_cast<std::uint64_t>(j));
        for (int k = 0; k < d; ++k) p.U(j, k) = su * g.normal();
        p.w[j] = sw * g.normal();
    }
    return p;
}

struct Depth2Grad {
    RowMatrixXd dU;
    Eigen::VectorXd dw, db;
    double db0 = 0.0;

    double norm() const {
        return std::sqrt(dU.squaredNorm() + dw.squaredNorm() + db.squaredNorm() + db0 * db0);
    }
};

/// Squared loss of the depth-2 network and (optionally) its full gradient.
inline std::pair<double, Depth2Grad> depth2_forward_loss_grad(const Depth2Params& theta,
                                                              const RowMatrixXd& X,
                                                              const std::vector<std::int8_t>& y,
                                                              bool want_grad = true) {
    const Eigen::Index n = X.rows();
    const int r = theta.r(), d = theta.d();
    if (n == 0) throw std::invalid_argument("depth2_forward_loss_grad: empty dataset");
    if (X.cols() != d) throw std::invalid_argument("depth2_forward_loss_grad: d mismatch");
    if (static_cast<Eigen::Index>(y.size()) != n)
        throw std::invalid_argument("depth2_forward_loss_grad: label count mismatch");
    if (want_grad && !activation_info(theta.act).smooth)
        throw std::invalid_argument(
            "depth2_forward_loss_grad: gradient requested with relu activation");

    using detail::kReductionBlocks;
    std::vector<double> loss_part(kReductionBlocks, 0.0);
    std::vector<Depth2Grad> grad_part;
    if (want_grad) {
        grad_part.resize(kReductionBlocks);
        for (auto& g : grad_part) {
            g.dU = RowMatrixXd::Zero(r, d);
            g.dw = Eigen::VectorXd::Zero(r);
            g.db = Eigen::VectorXd::Zero(r);
        }
    }

    #pragma omp parallel for schedule(static)
    for (int blk = 0; blk < kReductionBlocks; ++blk) {
        const auto [lo, hi] = detail::block_range(n, blk);
        double loss = 0.0;
        std::vector<double> z(static_cast<std::size_t>(r)), s(static_cast<std::size_t>(r));
        for (Eigen::Index i = lo; i < hi; ++i) {
            const double* x = X.row(i).data();
            double pred = theta.b0;
            for (int j = 0; j < r; ++j) {
                double zj = theta.b[j];
                const double* uj = theta.U.row(j).data();
                for (int k = 0; k < d; ++k) zj += uj[k] * x[k];
                z[static_cast<std::size_t>(j)] = zj;
                const double sj = act_value(theta.act, zj);
                s[static_cast<std::size_t>(j)] = sj;
                pred += theta.w[j] * sj;
            }
            const double res = pred - static_cast<double>(y[static_cast<std::size_t>(i)]);
            loss += res * res;
            if (want_grad) {
                auto& g = grad_part[static_cast<std::size_t>(blk)];
                const double two_res = 2.0 * res;
                g.db0 += two_res;
                for (int j = 0; j < r; ++j) {
                    const double sd = act_deriv(theta.act, z[static_cast<std::size_t>(j)]);
                    const double tj = two_res * theta.w[j] * sd;
                    g.dw[j] += two_res * s[static_cast<std::size_t>(j)];
                    g.db[j] += tj;
                    double* gu = g.dU.row(j).data();
                    for (int k = 0; k < d; ++k) gu[k] += tj * x[k];
                }
            }
        }
        loss_part[static_cast<std::size_t>(blk)] = loss;
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    double loss = 0.0;
    for (double l : loss_part) loss += l;
    loss *= inv_n;

    Depth2Grad grad;
    if (want_grad) {
        grad.dU = RowMatrixXd::Zero(r, d);
        grad.dw = Eigen::VectorXd::Zero(r);
        grad.db = Eigen::VectorXd::Zero(r);
        for (const auto& g : grad_part) {
            grad.dU += g.dU;
            grad.dw += g.dw;
            grad.db += g.db;
            grad.db0 += g.db0;
        }
        grad.dU *= inv_n;
        grad.dw *= inv_n;
        grad.db *= inv_n;
        grad.db0 *= inv_n;
    }
    return {loss, std::move(grad)};
}

/// Depth-2 network outputs for a batch (used for risk estimates).
inline Eigen::VectorXd depth2_predict(const Depth2Params& theta, const RowMatrixXd& X) {
    const Eigen::Index n = X.rows();
    Eigen::VectorXd out(n);
    const int r = theta.r(), d = theta.d();
    #pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        const double* x = X.row(i).data();
        double pred = theta.b0;
        for (int j = 0; j < r; ++j) {
            double zj = theta.b[j];
            const double* uj = theta.U.row(j).data();
            for (int k = 0; k < d; ++k) zj += uj[k] * x[k];
            pred += theta.w[j] * act_value(theta.act, zj);
        }
        out[i] = pred;
    }
    return out;
}

namespace detail {

/// Fast depth-2 pass: single-precision parameters and data with
/// table-interpolated erf. Only for the erf activation; the exact double
/// path remains authoritative for gradient checks.
class FloatDepth2Kernel {
public:
    FloatDepth2Kernel(const RowMatrixXd& X, const Eigen::VectorXd& y, int r)
        : n_(X.rows()), d_(static_cast<int>(X.cols())), r_(r), y_(y) {
        Xf_.resize(static_cast<std::size_t>(n_) * d_);
        for (Eigen::Index i = 0; i < n_; ++i)
            for (int k = 0; k < d_; ++k)
                Xf_[static_cast<std::size_t>(i) * d_ + k] = static_cast<float>(X(i, k));
        const std::size_t blocks = kReductionBlocks;
        dU_.assign(blocks * r_ * d_, 0.f);
        dw_.assign(blocks * r_, 0.f);
        db_.assign(blocks * r_, 0.f);
        db0_.assign(blocks, 0.f);
        loss_.assign(blocks, 0.0);
    }

    double pass(const Depth2Params& theta, Depth2Grad& grad) {
        const auto& table = ErfTable::get();
        std::vector<float> U(static_cast<std::size_t>(r_) * d_), w(r_), b(r_);
        for (int j = 0; j < r_; ++j) {
            for (int k = 0; k < d_; ++k)
                U[static_cast<std::size_t>(j) * d_ + k] = static_cast<float>(theta.U(j, k));
            w[static_cast<std::size_t>(j)] = static_cast<float>(theta.w[j]);
            b[static_cast<std::size_t>(j)] = static_cast<float>(theta.b[j]);
        }
        const float b0 = static_cast<float>(theta.b0);

        #pragma omp parallel for schedule(static)
        for (int blk = 0; blk < kReductionBlocks; ++blk) {
            const auto [lo, hi] = block_range(n_, blk);
            float* gU = &dU_[static_cast<std::size_t>(blk) * r_ * d_];
            float* gw = &dw_[static_cast<std::size_t>(blk) * r_];
            float* gb = &db_[static_cast<std::size_t>(blk) * r_];
            std::fill(gU, gU + static_cast<std::size_t>(r_) * d_, 0.f);
            std::fill(gw, gw + r_, 0.f);
            std::fill(gb, gb + r_, 0.f);
            float gb0 = 0.f;
            double loss = 0.0;
            std::vector<float> z(static_cast<std::size_t>(r_)), s(static_cast<std::size_t>(r_));
            for (Eigen::Index i = lo; i < hi; ++i) {
                const float* x = &Xf_[static_cast<std::size_t>(i) * d_];
                float pred = b0;
                for (int j = 0; j < r_; ++j) {
                    const float* uj = &U[static_cast<std::size_t>(j) * d_];
                    float zj = b[static_cast<std::size_t>(j)];
                    for (int k = 0; k < d_; ++k) zj += uj[k] * x[k];
                    z[static_cast<std::size_t>(j)] = zj;
                    const float sj = table.value(zj);
                    s[static_cast<std::size_t>(j)] = sj;
                    pred += w[static_cast<std::size_t>(j)] * sj;
                }
                const double res = static_cast<double>(pred) - y_[i];
                loss += res * res;
                const float two_res = static_cast<float>(2.0 * res);
                gb0 += two_res;
                for (int j = 0; j < r_; ++j) {
                    const float tj =
                        two_res * w[static_cast<std::size_t>(j)] *
                        table.deriv(z[static_cast<std::size_t>(j)]);
                    gw[j] += two_res * s[static_cast<std::size_t>(j)];
                    gb[j] += tj;
                    float* gu = &gU[static_cast<std::size_t>(j) * d_];
                    for (int k = 0; k < d_; ++k) gu[k] += tj * x[k];
                }
            }
            db0_[static_cast<std::size_t>(blk)] = gb0;
            loss_[static_cast<std::size_t>(blk)] = loss;
        }

        const double inv_n = 1.0 / static_cast<double>(n_);
        grad.dU = RowMatrixXd::Zero(r_, d_);
        grad.dw = Eigen::VectorXd::Zero(r_);
        grad.db = Eigen::VectorXd::Zero(r_);
        grad.db0 = 0.0;
        double loss = 0.0;
        for (int blk = 0; blk < kReductionBlocks; ++blk) {
            const float* gU = &dU_[static_cast<std::size_t>(blk) * r_ * d_];
            const float* gw = &dw_[static_cast<std::size_t>(blk) * r_];
            const float* gb = &db_[static_cast<std::size_t>(blk) * r_];
            for (int j = 0; j < r_; ++j) {
                for (int k = 0; k < d_; ++k) grad.dU(j, k) += gU[static_cast<std::size_t>(j) * d_ + k];
                grad.dw[j] += gw[j];
                grad.db[j] += gb[j];
            }
            grad.db0 += db0_[static_cast<std::size_t>(blk)];
            loss += loss_[static_cast<std::size_t>(blk)];
        }
        grad.dU *= inv_n;
        grad.dw *= inv_n;
        grad.db *= inv_n;
        grad.db0 *= inv_n;
        return loss * inv_n;
    }

private:
    Eigen::Index n_;
    int d_, r_;
    Eigen::VectorXd y_;
    std::vector<float> Xf_;
    std::vector<float> dU_, dw_, db_;
    std::vector<float> db0_;
    std::vector<double> loss_;
};

}  // namespace detail

/// Hessian spectral-norm estimate at theta via finite-difference
/// Hessian-vector products; the 2/L stability threshold comes from this.
inline double depth2_smoothness_probe(const Depth2Params& theta, const RowMatrixXd& X,
                                      const std::vector<std::int8_t>& y, int iters = 12) {
    const int r = theta.r(), d = theta.d();
    const long k = theta.param_count();
    Rng g(0xD2D2D2D2ULL, 1);
    Eigen::VectorXd v(k);
    for (long i = 0; i < k; ++i) v[i] = g.normal();
    v.normalize();

    const auto unpack = [&](const Eigen::VectorXd& vec, Depth2Params& p) {
        long idx = 0;
        for (int j = 0; j < r; ++j)
            for (int kk = 0; kk < d; ++kk) p.U(j, kk) = vec[idx++];
        for (int j = 0; j < r; ++j) p.w[j] = vec[idx++];
        for (int j = 0; j < r; ++j) p.b[j] = vec[idx++];
        p.b0 = vec[idx++];
    };
    const auto pack_grad = [&](const Depth2Grad& grad) {
        Eigen::VectorXd vec(k);
        long idx = 0;
        for (int j = 0; j < r; ++j)
            for (int kk = 0; kk < d; ++kk) vec[idx++] = grad.dU(j, kk);
        for (int j = 0; j < r; ++j) vec[idx++] = grad.dw[j];
        for (int j = 0; j < r; ++j) vec[idx++] = grad.db[j];
        vec[idx++] = grad.db0;
        return vec;
    };
    Eigen::VectorXd theta_vec(k);
    {
        long idx = 0;
        for (int j = 0; j < r; ++j)
            for (int kk = 0; kk < d; ++kk) theta_vec[idx++] = theta.U(j, kk);
        for (int j = 0; j < r; ++j) theta_vec[idx++] = theta.w[j];
        for (int j = 0; j < r; ++j) theta_vec[idx++] = theta.b[j];
        theta_vec[idx++] = theta.b0;
    }

    Depth2Params probe = theta;
    const double eps = 1e-5 * std::max(1.0, theta_vec.norm());
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        unpack(theta_vec + eps * v, probe);
        const auto gp = pack_grad(depth2_forward_loss_grad(probe, X, y, true).second);
        unpack(theta_vec - eps * v, probe);
        const auto gm = pack_grad(depth2_forward_loss_grad(probe, X, y, true).second);
        Eigen::VectorXd hv = (gp - gm) / (2.0 * eps);
        const double nv = hv.norm();
        if (nv == 0.0) break;
        const double prev = lambda;
        lambda = nv;
        v = hv / nv;
        if (it > 3 && std::fabs(lambda - prev) < 1e-3 * lambda) break;
    }
    return lambda;
}

/// Full-parameter GD on the depth-2 objective, recording the loss and
/// parameter-norm trajectories. use_fast_kernel selects the single-precision
/// erf-table pass (erf activation only).
inline TrainReport gd_full_depth2(Depth2Params theta, const RowMatrixXd& X,
                                  const std::vector<std::int8_t>& y, double eta, long T,
                                  double stop_loss = 0.0, int record_stride = 1,
                                  bool use_fast_kernel = false) {
    const auto t_start = std::chrono::steady_clock::now();
    if (use_fast_kernel && theta.act != Activation::erf)
        throw std::invalid_argument("gd_full_depth2: fast kernel supports erf only");
    std::optional<detail::FloatDepth2Kernel> fast;
    if (use_fast_kernel) fast.emplace(X, real_labels(y), theta.r());
    TrainReport report;
    report.eta = eta;
    const int stride = std::max(1, record_stride);
    double eta_sum_grad = 0.0;
    Depth2Grad fast_grad;
    for (long t = 0;; ++t) {
        double loss_value;
        const Depth2Grad* grad_ptr;
        std::pair<double, Depth2Grad> exact;
        if (fast) {
            loss_value = fast->pass(theta, fast_grad);
            grad_ptr = &fast_grad;
        } else {
            exact = depth2_forward_loss_grad(theta, X, y, true);
            loss_value = exact.first;
            grad_ptr = &exact.second;
        }
        const double loss = loss_value;
        const Depth2Grad& grad = *grad_ptr;
        if (!std::isfinite(loss) || loss > 1e6) {
            report.diverged = true;
            report.note = "objective diverged at iteration " + std::to_string(t) +
                          " (loss = " + std::to_string(loss) + ")";
            break;
        }
        const double gnorm = grad.norm();
        const bool last = loss <= stop_loss || gnorm < 1e-14 || t >= T;
        if (t % stride == 0 || last) {
            report.recorded_iters.push_back(t);
            report.loss.push_back(loss);
            report.grad_norm.push_back(gnorm);
            report.theta_norm.push_back(theta.theta_norm());
        }
        report.iterations = t;
        if (loss <= stop_loss && stop_loss > 0.0) {
            report.stop = StopReason::loss_target;
            break;
        }
        if (gnorm < 1e-14) {
            report.stop = StopReason::stationary;
            break;
        }
        if (t >= T) {
            report.stop = StopReason::iter_budget;
            break;
        }
        theta.U -= eta * grad.dU;
        theta.w -= eta * grad.dw;
        theta.b -= eta * grad.db;
        theta.b0 -= eta * grad.db0;
        eta_sum_grad += eta * gnorm;
    }
    // final parameters flattened into final_w for callers that persist them
    report.final_w.resize(theta.param_count());
    {
        long idx = 0;
        for (int j = 0; j < theta.r(); ++j)
            for (int kk = 0; kk < theta.d(); ++kk) report.final_w[idx++] = theta.U(j, kk);
        for (int j = 0; j < theta.r(); ++j) report.final_w[idx++] = theta.w[j];
        for (int j = 0; j < theta.r(); ++j) report.final_w[idx++] = theta.b[j];
        report.final_w[idx++] = theta.b0;
    }
    report.note += report.note.empty() ? "" : "; ";
    report.note += "eta*sum||grad|| = " + std::to_string(eta_sum_grad);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

/// Depth-2 parameters reconstructed from a flattened report vector.
inline Depth2Params depth2_from_flat(const Eigen::VectorXd& flat, int r, int d,
                                     Activation act) {
    Depth2Params p;
    p.act = act;
    p.U.resize(r, d);
    p.w.resize(r);
    p.b.resize(r);
    long idx = 0;
    for (int j = 0; j < r; ++j)
        for (int k = 0; k < d; ++k) p.U(j, k) = flat[idx++];
    for (int j = 0; j < r; ++j) p.w[j] = flat[idx++];
    for (int j = 0; j < r; ++j) p.b[j] = flat[idx++];
    p.b0 = flat[idx++];
    return p;
}

// ---------------------------------------------------------------------------
// step-size stability demonstration

/// Exact GD recursion x_{t+1} = (1 - 2 eta) x_t on f(x) = x^2; for
/// eta in (1 - 1/T, 1) the final iterate keeps at least 1/16 of |x_0|.
inline std::vector<double> stability_demo(double eta, long T, double x0) {
    if (T < 4) throw std::invalid_argument("stability_demo: T must be >= 4");
    std::vector<double> traj(static_cast<std::size_t>(T + 1));
    traj[0] = x0;
    const double factor = 1.0 - 2.0 * eta;
    for (long t = 0; t < T; ++t)
        traj[static_cast<std::size_t>(t + 1)] = factor * traj[static_cast<std::size_t>(t)];
    return traj;
}

// ---------------------------------------------------------------------------
// theorem schedule calculator

struct TheorySchedule {
    double epsilon = 0.0, delta = 0.0, C = 1.0, q_of_d = 1.0;
    double c1 = 1.0, c2 = 1.0, c_const = 1.0;
    int d = 0;
    double nu = 0.0;
    double r = 0.0, n = 0.0, eta_max = 0.0, T = 0.0;
    double log10_r = 0.0, log10_n = 0.0, log10_eta_max = 0.0, log10_T = 0.0;
    bool feasible_at_desk_scale = false;
    std::string verdict;
};

/// The convergence theorem's width/sample/step/iteration requirements, with
/// base-10 logarithms (the raw values overflow any practical budget).
/// c_const is the theorem's unspecified constant c >= 1 (default 1); c1 and
/// c2 are echoed for the record but do not enter the formulas.
inline TheorySchedule theory_schedule(double epsilon, double delta, int d, double C,
                                      double q_of_d, double c1, double c2,
                                      double c_const = 1.0) {
    if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0))
        throw std::domain_error("theory_schedule: epsilon, delta must be in (0,1)");
    if (!(C > 0.0) || !(q_of_d > 0.0) || !(c_const >= 1.0))
        throw std::domain_error("theory_schedule: positive constants required");

    TheorySchedule s;
    s.epsilon = epsilon;
    s.delta = delta;
    s.d = d;
    s.C = C;
    s.q_of_d = q_of_d;
    s.c1 = c1;
    s.c2 = c2;
    s.c_const = c_const;
    s.nu = theory_nu_of_C(C);

    const double r_floor = 12000.0 * 12000.0 * 12000.0 * 12000.0;
    const double q4 = q_of_d * q_of_d * q_of_d * q_of_d;
    const double lnd = std::log(1.0 / delta);
    const double r_assume = c_const * std::pow(epsilon, -5.0) * (q4 + lnd * lnd);
    s.r = std::max(r_floor, r_assume);
    const double log2r = std::log2(s.r);
    s.n = std::ceil(c_const * s.r * s.r * s.r * log2r * log2r);
    s.eta_max = s.nu / (8.0 * s.r);
    s.T = 2.0 / (s.eta_max * s.nu) * std::log(s.r / (8.0 * epsilon));

    s.log10_r = std::log10(s.r);
    s.log10_n = std::log10(s.n);
    s.log10_eta_max = std::log10(s.eta_max);
    s.log10_T = std::log10(s.T);

    const double desk_width_cap = 1 << 26;
    s.feasible_at_desk_scale = s.r <= desk_width_cap && s.T <= 1e9;
    s.verdict = s.feasible_at_desk_scale
                    ? "feasible at desk scale"
                    : "infeasible at desk scale: width 10^" + std::to_string(s.log10_r) +
                          ", iterations 10^" + std::to_string(s.log10_T);
    return s;
}

}  // namespace sepkit::train
