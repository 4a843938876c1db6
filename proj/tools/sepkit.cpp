// Copyright (c) 2026 the sepkit developers.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: verify | train | separate | sample | bounds.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "sepkit/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"sepkit: ball-indicator learning and depth-separation laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON experiment configuration");
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--seed", seed, "master seed (overrides config)")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* verify_cmd = app.add_subcommand("verify", "run the property-check suite");
    auto* train_cmd = app.add_subcommand("train", "train the fixed-feature model");
    auto* separate_cmd = app.add_subcommand("separate", "budget-matched depth separation sweep");
    auto* sample_cmd = app.add_subcommand("sample", "sample a labeled dataset");
    auto* bounds_cmd = app.add_subcommand("bounds", "print the closed-form bound table");
    for (auto* sub : {verify_cmd, train_cmd, separate_cmd, sample_cmd, bounds_cmd})
        add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        sepkit::harness::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = sepkit::harness::ExperimentConfig::load(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed_set) cfg.master_seed = seed;

        int failed = 0;
        if (verify_cmd->parsed()) {
            cfg.experiment = "verify";
            failed = sepkit::harness::run_verify(cfg, std::cout);
        } else if (train_cmd->parsed()) {
            cfg.experiment = "train";
            failed = sepkit::harness::run_train(cfg, std::cout);
        } else if (separate_cmd->parsed()) {
            cfg.experiment = "separate";
            failed = sepkit::harness::run_separate(cfg, std::cout);
        } else if (sample_cmd->parsed()) {
            cfg.experiment = "sample";
            failed = sepkit::harness::run_sample(cfg, std::cout);
        } else if (bounds_cmd->parsed()) {
            cfg.experiment = "bounds";
            failed = sepkit::harness::run_bounds(cfg, std::cout);
        }
        return failed == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
