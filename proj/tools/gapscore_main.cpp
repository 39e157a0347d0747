#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gapscore/harness.hpp"

namespace {

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    gapscore::write_text_file(out_path, text);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scores how well complexity measures rank models by generalization gap"};
    app.require_subcommand(1);

    gapscore::RunConfig score_cfg;
    std::string score_weighting = "equal";
    auto* score = app.add_subcommand("score", "Score measures on population manifests");
    score->add_option("--manifest", score_cfg.manifests, "Population manifest path(s)")->required();
    score->add_option("--measure", score_cfg.measures,
                      "Stored measure name or noisy_oracle[:sigma=<r>,seed=<n>] spec")
        ->required();
    score->add_option("--kmax", score_cfg.k_max, "Largest conditioning-set size");
    score->add_option("--weighting", score_weighting, "Group weighting: equal or pairs")
        ->check(CLI::IsMember({"equal", "pairs"}));
    score->add_option("--format", score_cfg.format, "Report format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    score->add_option("--out", score_cfg.out, "Report path (default stdout)");
    score->add_option("--budget-secs", score_cfg.budget_secs, "Per-model time budget, reporting only");
    score->add_option("--threads", score_cfg.threads, "Worker threads for conditioning sets");
    score->add_flag("--timing", score_cfg.include_timing,
                    "Embed wall-clock timing in the report (breaks byte-identity across runs)");

    gapscore::GenConfig gen_cfg;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic population for a task preset");
    gen->add_option("--preset", gen_cfg.preset, "task1, task2 or task4..task9")->required();
    gen->add_option("--plant", gen_cfg.plant_path, "Plant spec JSON (default: built-in plant)");
    auto* seed_opt = gen->add_option("--seed", gen_seed, "Overrides the plant's seed");
    gen->add_option("--replicas", gen_cfg.replicas, "Models per grid cell");
    gen->add_option("--out", gen_cfg.out, "Manifest path; ground truth lands at <out minus .json>.truth.json")
        ->required();

    gapscore::BaselineConfig base_cfg;
    auto* baseline = app.add_subcommand("baseline", "Append a baseline measure to a manifest");
    baseline->add_option("--name", base_cfg.name,
                         "param_count, vc_proxy, log_frobenius_product, log_spectral_product or "
                         "noisy_oracle[:sigma=<r>,seed=<n>]")
        ->required();
    baseline->add_option("--manifest", base_cfg.manifest, "Population manifest path")->required();
    baseline->add_option("--archives", base_cfg.archives, "Root directory for per-record weight references");
    baseline->add_option("--out", base_cfg.out, "Output manifest path (default stdout)");
    baseline->add_option("--budget-secs", base_cfg.budget_secs, "Per-model time budget, reporting only");

    std::vector<std::string> report_paths;
    std::string leaderboard_out;
    auto* leaderboard = app.add_subcommand("leaderboard", "Rank measures from score reports");
    leaderboard->add_option("--reports", report_paths, "Score report path(s)")->required();
    leaderboard->add_option("--out", leaderboard_out, "Leaderboard CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*score) {
            score_cfg.weighting = gapscore::weighting_from_string(score_weighting);
            const auto outcome = gapscore::run_score(score_cfg);
            for (const auto& note : outcome.notes) std::cerr << note << "\n";
            emit(score_cfg.out, score_cfg.format == "json" ? gapscore::render_report_json(outcome.run)
                                                           : gapscore::render_report_csv(outcome.run));
        } else if (*gen) {
            if (seed_opt->count() > 0) gen_cfg.seed = gen_seed;
            const auto outcome = gapscore::run_gen(gen_cfg);
            std::cerr << "wrote " << outcome.manifest_path << " and " << outcome.truth_path << "\n";
        } else if (*baseline) {
            const auto outcome = gapscore::run_baseline(base_cfg);
            for (const auto& note : outcome.notes) std::cerr << note << "\n";
            emit(base_cfg.out, outcome.manifest_json);
        } else if (*leaderboard) {
            emit(leaderboard_out, gapscore::render_leaderboard_csv(gapscore::build_leaderboard(report_paths)));
        }
    } catch (const gapscore::ScoreError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gapscore::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
