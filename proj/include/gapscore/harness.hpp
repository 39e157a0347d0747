#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gapscore/report_io.hpp"
#include "gapscore/tensor_archive.hpp"

namespace gapscore {

struct RunConfig {
    std::vector<std::string> manifests;
    std::vector<std::string> measures; // stored names, or "noisy_oracle[:sigma=<r>,seed=<n>]" specs
    int k_max = 2;
    GroupWeighting weighting = GroupWeighting::Equal;
    std::string out;                   // empty or "-" writes to stdout
    std::string format = "json";       // json | csv
    int budget_secs = 300;             // per-model budget, reporting only
    int threads = 1;
    bool include_timing = false;
};

struct ScoreOutcome {
    ScoreRun run;
    std::vector<std::string> notes; // informational, stderr only (may depend on wall clock)
};

// Scores every requested measure on every manifest. Tasks are reported in
// task_id order and measures in name order regardless of argument order.
ScoreOutcome run_score(const RunConfig& config);

// Measure-spec syntax shared by score and baseline: a name containing ':'
// is parsed as parameterized noisy_oracle; anything else is a stored name.
struct MeasureSpec {
    std::string raw;
    bool noisy = false;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};
MeasureSpec parse_measure_spec(const std::string& arg);

struct GenConfig {
    std::string preset;                 // task1, task2, task4..task9
    std::string plant_path;             // empty: default plant for the preset
    std::optional<std::uint64_t> seed;  // overrides the plant's seed
    int replicas = 1;
    std::string out;                    // manifest path; sidecar lands next to it
};

struct GenOutcome {
    std::string manifest_path;
    std::string truth_path;
};

GenOutcome run_gen(const GenConfig& config);

struct BaselineConfig {
    std::string name;     // param_count | vc_proxy | log_frobenius_product |
                          // log_spectral_product | noisy_oracle[:...]
    std::string manifest;
    std::string archives; // root directory for per-record weight references
    std::string out;
    int budget_secs = 300;
};

struct BaselineOutcome {
    std::string manifest_json; // input manifest with the new measure appended
    std::vector<std::string> notes;
};

BaselineOutcome run_baseline(const BaselineConfig& config);

double compute_archive_measure(const std::string& name, const TensorArchive& arch);

struct LeaderboardEntry {
    std::string measure;
    double metric2 = 0.0;
    double metric1 = 0.0;
};

// Reads score reports and ranks all measures: metric2 descending, then
// metric1 descending, then name. All reports must cover the same task set.
std::vector<LeaderboardEntry> build_leaderboard(const std::vector<std::string>& report_paths);
std::string render_leaderboard_csv(const std::vector<LeaderboardEntry>& entries);

std::string read_text_file(const std::string& path);                     // InputError
void write_text_file(const std::string& path, const std::string& text);  // InputError

} // namespace gapscore
