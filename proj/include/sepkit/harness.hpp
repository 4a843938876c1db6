// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sepkit/bounds.hpp"
#include "sepkit/distributions.hpp"
#include "sepkit/features.hpp"
#include "sepkit/training.hpp"
#include "sepkit/verify.hpp"
#include "sepkit/witness.hpp"

namespace sepkit::harness {

inline constexpr const char* kVersion = "sepkit 0.1.0";

struct ExperimentConfig {
    std::string experiment = "verify";
    dist::DistributionSpec spec = dist::DistributionSpec::sphere_sum_spec(5);
    double lambda = 1.5;
    int r = 2048;
    train::Activation activation = train::Activation::erf;
    long n = 50000;
    long max_iters = 200000;
    double stop_loss = 0.048;
    train::Schedule schedule = train::Schedule::practical;
    std::optional<double> eta;
    bool monitor_inequality = false;
    std::vector<int> depth2_widths{8, 16, 32, 64, 128};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    int workers = 1;
    std::string out_dir = "out";
    std::uint64_t master_seed = 1;
    long pop_eval_n = 100000;
    double depth3_stop_loss = 0.09;  // reference stop for the separation sweep
    long depth2_max_iters = 200000;
    bool fast_kernels = true;
    // verify scales
    double owen_slack = 1e-10;
    long verify_mc_draws = 1000000;
    int gap_trials = 200;
    // theory schedule inputs
    double theory_epsilon = 0.1;
    double theory_delta = 0.05;
    double theory_C = 1.0;
    double theory_q_of_d = 5.0;

    void validate() const {
        spec.validate();
        if (!(lambda >= 1.0 && lambda <= 2.0))
            throw std::invalid_argument("config: lambda must be in [1, 2]");
        if (r < 2 || n < 0) throw std::invalid_argument("config: bad r or n");
        if (experiment == "separate") {
            if (depth2_widths.empty() || seeds.empty())
                throw std::invalid_argument("config: separation sweep lists must be nonempty");
            for (int w : depth2_widths)
                if (w < 1) throw std::invalid_argument("config: depth-2 width must be >= 1");
        }
        if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["experiment"] = experiment;
        j["spec"] = dist::spec_to_json(spec);
        j["lambda"] = lambda;
        j["r"] = r;
        j["activation"] = train::activation_name(activation);
        j["n"] = n;
        j["max_iters"] = max_iters;
        j["stop_loss"] = stop_loss;
        j["schedule"] = schedule == train::Schedule::practical ? "practical" : "theory";
        if (eta) j["eta"] = *eta;
        j["monitor_inequality"] = monitor_inequality;
        j["depth2_widths"] = depth2_widths;
        j["seeds"] = seeds;
        j["workers"] = workers;
        j["out_dir"] = out_dir;
        j["master_seed"] = master_seed;
        j["pop_eval_n"] = pop_eval_n;
        j["depth3_stop_loss"] = depth3_stop_loss;
        j["depth2_max_iters"] = depth2_max_iters;
        j["fast_kernels"] = fast_kernels;
        j["owen_slack"] = owen_slack;
        j["verify_mc_draws"] = verify_mc_draws;
        j["gap_trials"] = gap_trials;
        j["theory"] = {{"epsilon", theory_epsilon},
                       {"delta", theory_delta},
                       {"C", theory_C},
                       {"q_of_d", theory_q_of_d}};
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        c.experiment = j.value("experiment", c.experiment);
        if (j.contains("spec")) c.spec = dist::spec_from_json(j.at("spec"));
        c.lambda = j.value("lambda", c.lambda);
        c.r = j.value("r", c.r);
        if (j.contains("activation"))
            c.activation = train::activation_from_name(j.at("activation").get<std::string>());
        c.n = j.value("n", c.n);
        c.max_iters = j.value("max_iters", c.max_iters);
        c.stop_loss = j.value("stop_loss", c.stop_loss);
        if (j.contains("schedule"))
            c.schedule = j.at("schedule").get<std::string>() == "theory"
                             ? train::Schedule::theory
                             : train::Schedule::practical;
        if (j.contains("eta")) c.eta = j.at("eta").get<double>();
        c.monitor_inequality = j.value("monitor_inequality", c.monitor_inequality);
        if (j.contains("depth2_widths"))
            c.depth2_widths = j.at("depth2_widths").get<std::vector<int>>();
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        c.workers = j.value("workers", c.workers);
        c.out_dir = j.value("out_dir", c.out_dir);
        c.master_seed = j.value("master_seed", c.master_seed);
        c.pop_eval_n = j.value("pop_eval_n", c.pop_eval_n);
        c.depth3_stop_loss = j.value("depth3_stop_loss", c.depth3_stop_loss);
        c.depth2_max_iters = j.value("depth2_max_iters", c.depth2_max_iters);
        c.fast_kernels = j.value("fast_kernels", c.fast_kernels);
        c.owen_slack = j.value("owen_slack", c.owen_slack);
        c.verify_mc_draws = j.value("verify_mc_draws", c.verify_mc_draws);
        c.gap_trials = j.value("gap_trials", c.gap_trials);
        if (j.contains("theory")) {
            const auto& t = j.at("theory");
            c.theory_epsilon = t.value("epsilon", c.theory_epsilon);
            c.theory_delta = t.value("delta", c.theory_delta);
            c.theory_C = t.value("C", c.theory_C);
            c.theory_q_of_d = t.value("q_of_d", c.theory_q_of_d);
        }
        c.validate();
        return c;
    }

    static ExperimentConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open " + path);
        return from_json(nlohmann::json::parse(in));
    }

    /// FNV-1a over the canonical JSON dump; stamps every result file.
    std::uint64_t hash() const {
        const std::string dump = to_json().dump();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : dump) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    std::string hash_hex() const {
        std::ostringstream ss;
        ss << std::hex << hash();
        return ss.str();
    }
};

// ---------------------------------------------------------------------------
// population-risk estimation (streamed, so the population features never
// materialize in full)

inline std::pair<double, double> rf_population_risk(const feat::HiddenLayer& layer,
                                                    const Eigen::VectorXd& w,
                                                    const dist::DistributionSpec& spec,
                                                    double lambda, long n,
                                                    std::uint64_t seed) {
    const auto pop = dist::sample(spec, n, lambda, seed);
    const auto& table = train::detail::ErfTable::get();
    const int r = layer.r, d = layer.d;
    std::vector<double> s1_part(64, 0.0), s2_part(64, 0.0);
    #pragma omp parallel for schedule(static)
    for (int blk = 0; blk < 64; ++blk) {
        const long lo = n * blk / 64, hi = n * (blk + 1) / 64;
        double s1 = 0.0, s2 = 0.0;
        for (long i = lo; i < hi; ++i) {
            double margin = 0.0;
            for (int j = 0; j < r; ++j) {
                double pre = layer.b[j];
                for (int k = 0; k < d; ++k) pre += layer.U(j, k) * pop.X(i, k);
                margin += w[j] * table.value(static_cast<float>(pre));
            }
            const double e =
                train::crelu(margin) - static_cast<double>(pop.y[static_cast<std::size_t>(i)]);
            s1 += e * e;
            s2 += e * e * e * e;
        }
        s1_part[static_cast<std::size_t>(blk)] = s1;
        s2_part[static_cast<std::size_t>(blk)] = s2;
    }
    double s1 = 0.0, s2 = 0.0;
    for (int blk = 0; blk < 64; ++blk) {
        s1 += s1_part[static_cast<std::size_t>(blk)];
        s2 += s2_part[static_cast<std::size_t>(blk)];
    }
    const double risk = s1 / n;
    const double var = std::max(0.0, s2 / n - risk * risk);
    return {risk, std::sqrt(var / n)};
}

inline std::pair<double, double> depth2_population_risk(const train::Depth2Params& theta,
                                                        const dist::DistributionSpec& spec,
                                                        double lambda, long n,
                                                        std::uint64_t seed) {
    const auto pop = dist::sample(spec, n, lambda, seed);
    const Eigen::VectorXd pred = train::depth2_predict(theta, pop.X);
    double s1 = 0.0, s2 = 0.0;
    for (long i = 0; i < n; ++i) {
        const double e = pred[i] - static_cast<double>(pop.y[static_cast<std::size_t>(i)]);
        s1 += e * e;
        s2 += e * e * e * e;
    }
    const double risk = s1 / n;
    const double var = std::max(0.0, s2 / n - risk * risk);
    return {risk, std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------
// learning experiment (scaled convergence run of the strong architecture)

struct SeedRun {
    std::uint64_t seed = 0;
    long iterations = 0;
    double eta = 0.0;
    double final_loss = 0.0;
    double pop_risk = 0.0;
    double pop_risk_se = 0.0;
    std::string stop;
    bool ran = true;
    bool diverged = false;
    double wall_seconds = 0.0;
};

struct LearningOutcome {
    std::vector<SeedRun> runs;
    int seeds_at_risk(double target) const {
        int count = 0;
        for (const auto& run : runs)
            count += run.ran && !run.diverged && run.pop_risk <= target;
        return count;
    }
};

inline LearningOutcome run_learning_experiment(const ExperimentConfig& cfg,
                                               std::ostream* log = nullptr) {
    LearningOutcome outcome;
    for (std::uint64_t seed : cfg.seeds) {
        const std::uint64_t data_seed = Rng(cfg.master_seed, seed * 3 + 0).next_u64();
        const std::uint64_t layer_seed = Rng(cfg.master_seed, seed * 3 + 1).next_u64();
        const std::uint64_t w0_seed = Rng(cfg.master_seed, seed * 3 + 2).next_u64();

        const auto data = dist::sample(cfg.spec, cfg.n, cfg.lambda, data_seed);
        const auto layer = feat::init_hidden(cfg.spec.d, cfg.r, layer_seed);
        const auto w0 = feat::init_output(cfg.r, w0_seed);
        const auto feats = feat::feature_map(layer, data.X);

        train::TrainConfig tc;
        tc.eta = cfg.eta;
        tc.max_iters = cfg.max_iters;
        tc.stop_loss = cfg.stop_loss;
        tc.schedule = cfg.schedule;
        tc.seed = seed;
        tc.record_stride = 25;
        tc.use_float_kernel = cfg.fast_kernels;
        tc.theory_epsilon = cfg.theory_epsilon;
        tc.theory_C = cfg.theory_C;
        const auto rep = train::gd_fixed_features(w0.w, feats, data.y, tc);

        SeedRun run;
        run.seed = seed;
        run.iterations = rep.iterations;
        run.eta = rep.eta;
        run.final_loss = rep.loss.empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : rep.loss.back();
        run.stop = train::stop_reason_name(rep.stop);
        run.ran = rep.ran;
        run.diverged = rep.diverged;
        run.wall_seconds = rep.wall_seconds;
        if (rep.ran && !rep.diverged) {
            const auto [risk, se] = rf_population_risk(
                layer, rep.final_w, cfg.spec, cfg.lambda, cfg.pop_eval_n,
                Rng(cfg.master_seed, seed * 7 + 5).next_u64());
            run.pop_risk = risk;
            run.pop_risk_se = se;
        } else {
            run.pop_risk = std::numeric_limits<double>::quiet_NaN();
        }
        if (log)
            (*log) << "  seed " << seed << ": iters " << run.iterations << ", loss "
                   << run.final_loss << ", pop risk " << run.pop_risk << " (se "
                   << run.pop_risk_se << "), stop " << run.stop << "\n";
        outcome.runs.push_back(run);
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// separation experiment

struct SeparationRow {
    std::string arch;  // "depth3_rf" or "depth2"
    int width = 0;
    std::uint64_t seed = 0;
    long params = 0;
    long iterations = 0;
    double budget = 0.0;  // scalar-gradient evaluations granted
    double eta = 0.0;
    double final_loss = 0.0;
    double pop_risk = 0.0;
    double pop_risk_se = 0.0;
    double theta_norm = 0.0;
    bool diverged = false;
    bool budget_satisfied = true;
};

struct SeparationOutcome {
    std::vector<SeparationRow> rows;

    /// Seeds on which every depth-2 width ends at risk >= factor times the
    /// depth-3 risk.
    int separated_seeds(double factor) const {
        int count = 0;
        for (const auto& ref : rows) {
            if (ref.arch != "depth3_rf") continue;
            bool separated = true;
            for (const auto& row : rows) {
                if (row.arch != "depth2" || row.seed != ref.seed) continue;
                const double risk =
                    row.diverged ? std::numeric_limits<double>::infinity() : row.pop_risk;
                separated = separated && risk >= factor * ref.pop_risk;
            }
            count += separated;
        }
        return count;
    }
};

namespace detail {

/// Run tasks indexed 0..count-1 on a small worker pool; results land in a
/// pre-sized vector, so assembly order never changes the output.
template <class Fn>
inline void parallel_tasks(int count, int workers, const Fn& fn) {
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(workers, count); ++t)
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

inline SeparationOutcome run_separation_experiment(const ExperimentConfig& cfg,
                                                   std::ostream* log = nullptr) {
    cfg.validate();
    SeparationOutcome outcome;
    const int d = cfg.spec.d;

    // depth-3 reference runs fix the per-seed budgets
    std::vector<double> budgets(cfg.seeds.size(), 0.0);
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        const std::uint64_t seed = cfg.seeds[si];
        const std::uint64_t data_seed = Rng(cfg.master_seed, seed * 3 + 0).next_u64();
        const auto data = dist::sample(cfg.spec, cfg.n, cfg.lambda, data_seed);
        const auto layer =
            feat::init_hidden(d, cfg.r, Rng(cfg.master_seed, seed * 3 + 1).next_u64());
        const auto w0 = feat::init_output(cfg.r, Rng(cfg.master_seed, seed * 3 + 2).next_u64());
        const auto feats = feat::feature_map(layer, data.X);

        train::TrainConfig tc;
        tc.max_iters = cfg.max_iters;
        tc.stop_loss = cfg.depth3_stop_loss;
        tc.seed = seed;
        tc.record_stride = 50;
        tc.use_float_kernel = cfg.fast_kernels;
        const auto rep = train::gd_fixed_features(w0.w, feats, data.y, tc);

        SeparationRow row;
        row.arch = "depth3_rf";
        row.width = cfg.r;
        row.seed = seed;
        row.params = cfg.r;  // only the output layer trains
        row.iterations = rep.iterations;
        row.budget = static_cast<double>(rep.iterations) * cfg.r;
        row.eta = rep.eta;
        row.final_loss = rep.loss.back();
        row.theta_norm = rep.final_w.norm();
        row.diverged = rep.diverged;
        const auto [risk, se] =
            rf_population_risk(layer, rep.final_w, cfg.spec, cfg.lambda, cfg.pop_eval_n,
                               Rng(cfg.master_seed, seed * 7 + 5).next_u64());
        row.pop_risk = risk;
        row.pop_risk_se = se;
        budgets[si] = row.budget;
        outcome.rows.push_back(row);
        if (log)
            (*log) << "  depth3 seed " << seed << ": iters " << row.iterations
                   << ", pop risk " << risk << " -> budget " << row.budget << "\n";
    }

    // budget-matched depth-2 sweep
    struct Task {
        std::size_t seed_index;
        int width;
    };
    std::vector<Task> tasks;
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si)
        for (int width : cfg.depth2_widths) tasks.push_back({si, width});
    std::vector<SeparationRow> depth2_rows(tasks.size());

    detail::parallel_tasks(static_cast<int>(tasks.size()), cfg.workers, [&](int ti) {
        const auto [si, width] = tasks[static_cast<std::size_t>(ti)];
        const std::uint64_t seed = cfg.seeds[si];
        const std::uint64_t data_seed = Rng(cfg.master_seed, seed * 3 + 0).next_u64();
        const auto data = dist::sample(cfg.spec, cfg.n, cfg.lambda, data_seed);
        auto theta = train::init_depth2(
            d, width, cfg.activation,
            Rng(cfg.master_seed, seed * 1000 + static_cast<std::uint64_t>(width)).next_u64());
        const long params = theta.param_count();
        long T = static_cast<long>(budgets[si] / static_cast<double>(params));
        const bool satisfied = T <= cfg.depth2_max_iters;
        T = std::max(1L, std::min(T, cfg.depth2_max_iters));

        const double L0 = train::depth2_smoothness_probe(theta, data.X, data.y);
        const double eta = 0.5 / std::max(1e-12, L0);
        const auto rep = train::gd_full_depth2(theta, data.X, data.y, eta, T, 0.0, 200,
                                               cfg.fast_kernels &&
                                                   cfg.activation == train::Activation::erf);

        SeparationRow row;
        row.arch = "depth2";
        row.width = width;
        row.seed = seed;
        row.params = params;
        row.iterations = rep.iterations;
        row.budget = static_cast<double>(rep.iterations) * params;
        row.eta = eta;
        row.final_loss = rep.loss.back();
        row.theta_norm = rep.theta_norm.empty() ? 0.0 : rep.theta_norm.back();
        row.diverged = rep.diverged;
        row.budget_satisfied = satisfied;
        const auto final_theta =
            train::depth2_from_flat(rep.final_w, width, d, cfg.activation);
        const auto [risk, se] =
            depth2_population_risk(final_theta, cfg.spec, cfg.lambda, cfg.pop_eval_n,
                                   Rng(cfg.master_seed, seed * 7 + 5).next_u64());
        row.pop_risk = risk;
        row.pop_risk_se = se;
        depth2_rows[static_cast<std::size_t>(ti)] = row;
        if (log) {
            std::ostringstream line;
            line << "  depth2 w=" << width << " seed " << seed << ": T=" << rep.iterations
                 << ", loss " << row.final_loss << ", pop risk " << risk
                 << (rep.diverged ? " DIVERGED" : "") << "\n";
            (*log) << line.str();
        }
    });
    for (auto& row : depth2_rows) outcome.rows.push_back(row);
    return outcome;
}

// ---------------------------------------------------------------------------
// persistence

namespace detail {

inline void ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
}

inline nlohmann::json result_envelope(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["schema"] = "sepkit.result.v1";
    j["environment"] = {{"version", kVersion}, {"config_hash", cfg.hash_hex()}};
    j["config"] = cfg.to_json();
    return j;
}

}  // namespace detail

/// Full property-check battery; returns the number of failed checks.
inline int run_verify(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    detail::ensure_dir(cfg.out_dir);
    const auto checks = verify::run_all(cfg.owen_slack, cfg.verify_mc_draws,
                                        cfg.gap_trials, cfg.master_seed);
    int failed = 0;
    const std::string csv_path =
        cfg.out_dir + "/verify_" + cfg.hash_hex() + ".csv";
    std::ofstream csv(csv_path);
    csv << "# sepkit.verify.v1\n";
    csv << "name,pass,measured,threshold,relation,details\n";
    csv.precision(17);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& check : checks) {
        failed += check.pass ? 0 : 1;
        out << (check.pass ? "PASS " : "FAIL ") << check.name << "  measured "
            << check.measured << " vs " << check.threshold << " (" << check.relation
            << ")" << (check.details.empty() ? "" : "  [" + check.details + "]") << "\n";
        std::string details = check.details;
        for (auto& ch : details)
            if (ch == ',') ch = ';';
        csv << check.name << "," << (check.pass ? 1 : 0) << "," << check.measured << ","
            << check.threshold << "," << check.relation << "," << details << "\n";
        rows.push_back({{"name", check.name},
                        {"pass", check.pass},
                        {"measured", check.measured},
                        {"threshold", check.threshold},
                        {"relation", check.relation},
                        {"details", check.details}});
    }
    auto envelope = detail::result_envelope(cfg);
    envelope["checks"] = rows;
    envelope["failed"] = failed;
    std::ofstream js(cfg.out_dir + "/verify_" + cfg.hash_hex() + ".json");
    js << envelope.dump(2) << "\n";
    out << (failed == 0 ? "all checks passed" : std::to_string(failed) + " checks failed")
        << "; results in " << csv_path << "\n";
    return failed;
}

/// Single training run (first seed of the list) with full trajectory export.
inline int run_train(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    if (cfg.n <= 0) throw std::invalid_argument("run_train: empty dataset (n == 0)");
    detail::ensure_dir(cfg.out_dir);
    const std::uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();
    const auto data = dist::sample(cfg.spec, cfg.n, cfg.lambda,
                                   Rng(cfg.master_seed, seed * 3 + 0).next_u64());
    const auto layer =
        feat::init_hidden(cfg.spec.d, cfg.r, Rng(cfg.master_seed, seed * 3 + 1).next_u64());
    const auto w0 = feat::init_output(cfg.r, Rng(cfg.master_seed, seed * 3 + 2).next_u64());
    const auto feats = feat::feature_map(layer, data.X);

    train::TrainConfig tc;
    tc.eta = cfg.eta;
    tc.max_iters = cfg.max_iters;
    tc.stop_loss = cfg.stop_loss;
    tc.schedule = cfg.schedule;
    tc.seed = seed;
    tc.use_float_kernel = cfg.fast_kernels;
    tc.theory_epsilon = cfg.theory_epsilon;
    tc.theory_C = cfg.theory_C;
    std::optional<wit::WitnessCertificate> cert;
    std::string witness_note;
    if (cfg.monitor_inequality) {
        try {
            cert = wit::build_witness(layer, w0, cfg.lambda, {});
            tc.monitor_inequality = true;
            tc.reference_v = cert->v;
        } catch (const wit::degenerate_witness_error& e) {
            witness_note = e.what();
            out << "monitor disabled: " << witness_note << "\n";
        }
    }
    const auto rep = train::gd_fixed_features(w0.w, feats, data.y, tc);

    const std::string stem = cfg.out_dir + "/train_" + cfg.hash_hex();
    std::ofstream csv(stem + ".csv");
    csv << "# sepkit.trainreport.v1\n";
    csv << "iter,loss,grad_norm,dist_to_v,ineq_flag\n";
    csv.precision(17);
    for (std::size_t i = 0; i < rep.loss.size(); ++i) {
        csv << rep.recorded_iters[i] << "," << rep.loss[i] << "," << rep.grad_norm[i] << ",";
        if (i < rep.dist_to_ref.size()) csv << rep.dist_to_ref[i];
        csv << ",";
        if (i < rep.ineq_holds.size()) csv << static_cast<int>(rep.ineq_holds[i]);
        csv << "\n";
    }

    auto envelope = detail::result_envelope(cfg);
    envelope["iterations"] = rep.iterations;
    envelope["eta"] = rep.eta;
    envelope["ran"] = rep.ran;
    envelope["diverged"] = rep.diverged;
    envelope["stop"] = train::stop_reason_name(rep.stop);
    envelope["final_loss"] = rep.loss.empty() ? nlohmann::json() : nlohmann::json(rep.loss.back());
    if (rep.ran && !rep.diverged) {
        const auto [risk, se] =
            rf_population_risk(layer, rep.final_w, cfg.spec, cfg.lambda, cfg.pop_eval_n,
                               Rng(cfg.master_seed, seed * 7 + 5).next_u64());
        envelope["pop_risk"] = risk;
        envelope["pop_risk_se"] = se;
        out << "final loss " << rep.loss.back() << ", population risk " << risk << " (se "
            << se << ")\n";
    } else if (!rep.ran) {
        envelope["note"] = rep.note;
        out << rep.note << "\n";
    }
    if (cert) envelope["witness"] = wit::certificate_to_json(*cert);
    if (!witness_note.empty()) envelope["witness_note"] = witness_note;
    std::ofstream js(stem + ".json");
    js << envelope.dump(2) << "\n";
    out << "trajectory in " << stem << ".csv\n";
    return rep.diverged ? 1 : 0;
}

inline int run_sample(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    detail::ensure_dir(cfg.out_dir);
    const auto ds = dist::sample(cfg.spec, cfg.n, cfg.lambda, cfg.master_seed);
    const std::string stem = cfg.out_dir + "/sample_" + cfg.hash_hex();
    dist::write_dataset_csv(ds, stem + ".csv", stem + ".json");
    out << "wrote " << ds.n() << " points to " << stem << ".csv\n";
    return 0;
}

inline int run_bounds(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    detail::ensure_dir(cfg.out_dir);
    const std::string path = cfg.out_dir + "/bounds_" + cfg.hash_hex() + ".csv";
    std::ofstream csv(path);
    csv << "# sepkit.bounds.v1\n";
    csv << "name,value,log10_value,inputs,description\n";
    csv.precision(17);
    for (const auto& row : bounds::standard_bound_rows()) {
        std::string inputs = row.inputs.dump();
        for (auto& ch : inputs)
            if (ch == ',') ch = ';';
        csv << row.name << "," << row.value << "," << row.log10_value << "," << inputs
            << "," << row.description << "\n";
    }
    const auto s = train::theory_schedule(cfg.theory_epsilon, cfg.theory_delta, cfg.spec.d,
                                          cfg.theory_C, cfg.theory_q_of_d, 1.0, 1.0);
    csv << "theory_width_r," << s.r << "," << s.log10_r << ",{}," << "width requirement\n";
    csv << "theory_sample_n," << s.n << "," << s.log10_n << ",{}," << "sample requirement\n";
    csv << "theory_eta_max," << s.eta_max << "," << s.log10_eta_max << ",{},"
        << "step-size bound nu/(8r)\n";
    csv << "theory_iterations_T," << s.T << "," << s.log10_T << ",{},"
        << "iteration bound 2/(eta nu) ln(r/(8 eps))\n";
    out << "theory schedule: " << s.verdict << "\n";
    out << "bound rows in " << path << "\n";
    return 0;
}

inline int run_separate(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    detail::ensure_dir(cfg.out_dir);
    const auto outcome = run_separation_experiment(cfg, &out);
    const std::string stem = cfg.out_dir + "/separate_" + cfg.hash_hex();
    std::ofstream csv(stem + ".csv");
    csv << "# sepkit.separation.v1\n";
    csv << "arch,width,seed,params,iterations,budget,eta,final_train_loss,pop_risk,"
           "pop_risk_se,theta_norm,diverged,budget_satisfied\n";
    csv.precision(17);
    for (const auto& row : outcome.rows)
        csv << row.arch << "," << row.width << "," << row.seed << "," << row.params << ","
            << row.iterations << "," << row.budget << "," << row.eta << ","
            << row.final_loss << "," << row.pop_risk << "," << row.pop_risk_se << ","
            << row.theta_norm << "," << (row.diverged ? 1 : 0) << ","
            << (row.budget_satisfied ? 1 : 0) << "\n";

    const int separated = outcome.separated_seeds(2.0);
    auto envelope = detail::result_envelope(cfg);
    envelope["separated_seeds"] = separated;
    envelope["total_seeds"] = cfg.seeds.size();
    std::ofstream js(stem + ".json");
    js << envelope.dump(2) << "\n";
    out << "separation factor 2 held on " << separated << "/" << cfg.seeds.size()
        << " seeds; rows in " << stem << ".csv\n";
    return 0;
}

}  // namespace sepkit::harness
