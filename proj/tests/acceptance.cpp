// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: fourteen pinned pass/fail gates, one line each.
// Run all of them (no arguments) or one with --criterion N.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sepkit/harness.hpp"
#include "sepkit/verify.hpp"

namespace sv = sepkit::verify;
namespace sh = sepkit::harness;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome from_check(const sv::CheckResult& check, double time_limit_s = 0.0) {
    Outcome o;
    o.pass = check.pass;
    std::ostringstream ss;
    ss << "measured " << check.measured << " vs " << check.threshold << " ("
       << check.relation << ")";
    if (!check.details.empty()) ss << "; " << check.details;
    ss << "; " << check.seconds << " s";
    if (time_limit_s > 0.0) {
        o.pass = o.pass && check.seconds < time_limit_s;
        if (check.seconds >= time_limit_s) ss << " OVER TIME LIMIT " << time_limit_s;
    }
    o.detail = ss.str();
    return o;
}

Outcome criterion_01() { return from_check(sv::owen_sandwich(1e-10), 2.0); }

Outcome criterion_02() { return from_check(sv::truncated_expectation_mc(1000000, 5), 120.0); }

Outcome criterion_03() { return from_check(sv::xi_zero_placement(50)); }

Outcome criterion_04() { return from_check(sv::argmin_interval()); }

Outcome criterion_05() { return from_check(sv::f_decay_and_slope()); }

Outcome criterion_06() { return from_check(sv::conditional_cdf_fit(100000)); }

Outcome criterion_07() {
    const auto hist = sv::sphere3_histogram(1000000, 50);
    const auto tail = sv::mixture_tail(1000000);
    Outcome o;
    o.pass = hist.pass && tail.pass;
    std::ostringstream ss;
    ss << "histogram max z " << hist.measured << " (<4); tail max z " << tail.measured
       << " (<=3); " << hist.seconds + tail.seconds << " s";
    o.detail = ss.str();
    return o;
}

Outcome criterion_08() {
    const auto rf = sv::rf_gradient_fd(20);
    const auto d2 = sv::depth2_gradient_fd(20);
    Outcome o;
    o.pass = rf.pass && d2.pass;
    std::ostringstream ss;
    ss << "rf rel err " << rf.measured << ", depth2 rel err " << d2.measured
       << " (<= 1e-5); " << rf.seconds + d2.seconds << " s";
    o.detail = ss.str();
    return o;
}

Outcome criterion_09() {
    const auto stats = sv::witness_statistics(100, 10000);
    const auto curve = sv::witness_curve(10000, 100000, 1.5);
    Outcome o;
    o.pass = stats.pass && curve.pass;
    std::ostringstream ss;
    ss << "fractions max z " << stats.measured << " (<=5), " << stats.details
       << "; curve max z " << curve.measured << " (<=4), " << curve.details << "; "
       << stats.seconds + curve.seconds << " s";
    o.detail = ss.str();
    return o;
}

sh::ExperimentConfig learning_config() {
    sh::ExperimentConfig cfg;
    cfg.spec = sepkit::dist::DistributionSpec::sphere_sum_spec(5);
    cfg.lambda = 1.5;
    cfg.r = 2048;
    cfg.n = 50000;
    cfg.max_iters = 200000;
    cfg.stop_loss = 0.048;
    cfg.seeds = {1, 2, 3, 4, 5};
    cfg.master_seed = 20260810;
    cfg.pop_eval_n = 100000;
    cfg.fast_kernels = true;
    return cfg;
}

Outcome criterion_10() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto outcome = sh::run_learning_experiment(learning_config());
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const int good = outcome.seeds_at_risk(0.05);
    Outcome o;
    o.pass = good >= 4 && seconds < 900.0;
    std::ostringstream ss;
    ss << "risk <= 0.05 on " << good << "/5 seeds (";
    for (const auto& run : outcome.runs)
        ss << run.pop_risk << "@" << run.iterations << "it ";
    ss << "); " << seconds << " s (< 900)";
    o.detail = ss.str();
    return o;
}

Outcome criterion_11() {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = learning_config();
    cfg.experiment = "separate";
    cfg.depth2_widths = {8, 16, 32, 64, 128};
    cfg.depth3_stop_loss = 0.09;
    cfg.depth2_max_iters = 200000;
    cfg.workers = 2;
    const auto outcome = sh::run_separation_experiment(cfg);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const int separated = outcome.separated_seeds(2.0);
    Outcome o;
    o.pass = separated >= 4;
    std::ostringstream ss;
    ss << "factor-2 separation on " << separated << "/5 seeds; per-seed risks:";
    for (const auto& row : outcome.rows)
        if (row.arch == "depth3_rf") {
            double best_depth2 = 1e300;
            for (const auto& other : outcome.rows)
                if (other.arch == "depth2" && other.seed == row.seed)
                    best_depth2 = std::min(
                        best_depth2,
                        other.diverged ? 1e300 : other.pop_risk);
            ss << " [seed " << row.seed << ": d3 " << row.pop_risk << " vs best d2 "
               << best_depth2 << "]";
        }
    ss << "; " << seconds << " s";
    o.detail = ss.str();
    return o;
}

Outcome criterion_12() { return from_check(sv::stability_grid()); }

Outcome criterion_13() { return from_check(sv::generalization_gap(50, 5000, 0.1, 200)); }

Outcome criterion_14() { return from_check(sv::theory_schedule_report()); }

struct Criterion {
    int id;
    const char* label;
    std::function<Outcome()> run;
};

const std::vector<Criterion>& all_criteria() {
    static const std::vector<Criterion> list = {
        {1, "Owen's T sandwich on the 13x21 grid (<2 s)", criterion_01},
        {2, "truncated expectations vs 1e6-draw MC (<2 min)", criterion_02},
        {3, "g(1), g(2) in I and f_{g(lambda)}(lambda) = 0 over 50 radii", criterion_03},
        {4, "f_xi minimizer in [2.8, 4.2] with vanishing derivative", criterion_04},
        {5, "f_xi tail decay and derivative floor", criterion_05},
        {6, "conditional feature CDF KS fit at norms {0,1,2}", criterion_06},
        {7, "sphere-sum histogram and mixture tail", criterion_07},
        {8, "gradients vs central finite differences", criterion_08},
        {9, "witness statistics and expectation curve", criterion_09},
        {10, "learning experiment: risk <= 0.05 on 4/5 seeds (<15 min)", criterion_10},
        {11, "separation experiment: depth-2 risk >= 2x depth-3 on 4/5 seeds", criterion_11},
        {12, "large-step GD keeps 1/16 of |x_0| (premise eta in (1-1/T, 1))", criterion_12},
        {13, "generalization-gap violation rate <= delta + 0.05", criterion_13},
        {14, "theory schedule reports r >= 12000^4, exact nu, infeasible", criterion_14},
    };
    return list;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
            only = std::atoi(argv[++i]);
    }
    int failed = 0;
    for (const auto& criterion : all_criteria()) {
        if (only != 0 && criterion.id != only) continue;
        const auto outcome = criterion.run();
        failed += outcome.pass ? 0 : 1;
        std::printf("[C%02d] %s  %s\n      %s\n", criterion.id,
                    outcome.pass ? "PASS" : "FAIL", criterion.label,
                    outcome.detail.c_str());
        std::fflush(stdout);
    }
    return failed;
}
