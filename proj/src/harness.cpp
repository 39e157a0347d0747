#include "gapscore/harness.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gapscore/baselines.hpp"
#include "gapscore/synth.hpp"

namespace gapscore {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Population load_population(const std::string& path) {
    try {
        return Population::parse_manifest(read_text_file(path));
    } catch (const ManifestError& e) {
        throw ManifestError("'" + path + "': " + e.what());
    }
}

// Resolves one measure spec against a population, computing noisy_oracle
// vectors on the fly under the spec string as measure name.
Population attach_measure(Population pop, const MeasureSpec& spec, double& compute_secs) {
    if (!spec.noisy) {
        if (!pop.has_measure(spec.raw))
            throw ScoreError("unknown measure '" + spec.raw + "' in task '" + pop.task_id() + "'");
        return pop;
    }
    // A manifest may already store this exact spec (e.g. appended by the
    // baseline subcommand); the stored vector then wins over recomputing.
    if (pop.has_measure(spec.raw)) return pop;
    const auto start = std::chrono::steady_clock::now();
    auto mv = measure_noisy_oracle(pop, spec.sigma, spec.seed);
    compute_secs = seconds_since(start);
    mv.name = spec.raw;
    return pop.with_measure(std::move(mv));
}

} // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw InputError("failed reading '" + path + "'");
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << text;
    out.flush();
    if (!out) throw InputError("failed writing '" + path + "'");
}

MeasureSpec parse_measure_spec(const std::string& arg) {
    MeasureSpec spec;
    spec.raw = arg;
    const auto colon = arg.find(':');
    if (colon == std::string::npos) return spec;

    const std::string head = arg.substr(0, colon);
    if (head != "noisy_oracle")
        throw InputError("unknown measure spec '" + arg + "' (only noisy_oracle takes parameters)");
    spec.noisy = true;

    std::string params = arg.substr(colon + 1);
    std::istringstream ss(params);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw InputError("measure spec '" + arg + "': expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        try {
            if (key == "sigma") {
                spec.sigma = std::stod(value);
            } else if (key == "seed") {
                spec.seed = std::stoull(value);
            } else {
                throw InputError("measure spec '" + arg + "': unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw InputError("measure spec '" + arg + "': cannot parse value '" + value + "'");
        } catch (const std::out_of_range&) {
            throw InputError("measure spec '" + arg + "': value out of range '" + value + "'");
        }
    }
    if (!(spec.sigma >= 0.0)) throw InputError("measure spec '" + arg + "': sigma must be non-negative");
    return spec;
}

ScoreOutcome run_score(const RunConfig& config) {
    if (config.manifests.empty()) throw InputError("at least one manifest is required");
    if (config.measures.empty()) throw InputError("at least one measure is required");
    if (config.k_max < 0) throw InputError("kmax must be non-negative");
    if (config.threads < 1) throw InputError("threads must be at least 1");
    if (config.format != "json" && config.format != "csv")
        throw InputError("unknown format '" + config.format + "' (expected 'json' or 'csv')");

    ScoreOutcome outcome;
    const auto parse_start = std::chrono::steady_clock::now();
    std::vector<Population> pops;
    std::set<std::string> task_ids;
    for (const auto& path : config.manifests) {
        auto pop = load_population(path);
        if (!task_ids.insert(pop.task_id()).second)
            throw InputError("duplicate task_id '" + pop.task_id() + "' across manifests ('" + path + "')");
        pops.push_back(std::move(pop));
    }
    std::sort(pops.begin(), pops.end(),
              [](const Population& a, const Population& b) { return a.task_id() < b.task_id(); });
    outcome.run.parse_secs = seconds_since(parse_start);

    std::vector<MeasureSpec> specs;
    std::set<std::string> seen;
    for (const auto& arg : config.measures) {
        if (!seen.insert(arg).second) continue;
        specs.push_back(parse_measure_spec(arg));
    }
    std::sort(specs.begin(), specs.end(),
              [](const MeasureSpec& a, const MeasureSpec& b) { return a.raw < b.raw; });

    outcome.run.k_max = config.k_max;
    outcome.run.weighting = config.weighting;
    outcome.run.include_timing = config.include_timing;

    const ScoreOptions opts{config.k_max, config.weighting, config.threads};
    const auto score_start = std::chrono::steady_clock::now();
    for (const auto& spec : specs) {
        std::vector<TaskScore> tasks;
        for (const auto& pop : pops) {
            double compute_secs = 0.0;
            const Population scored = attach_measure(pop, spec, compute_secs);
            const double per_model = compute_secs / static_cast<double>(scored.size());
            if (per_model > static_cast<double>(config.budget_secs)) {
                std::ostringstream note;
                note << "measure '" << spec.raw << "' on task '" << scored.task_id() << "': mean per-model time "
                     << per_model << " s exceeds budget " << config.budget_secs << " s (informational)";
                outcome.notes.push_back(note.str());
            }
            tasks.push_back(score_task(scored, spec.raw, opts));
        }
        outcome.run.measures.push_back(aggregate_tasks(spec.raw, std::move(tasks)));
    }
    outcome.run.score_secs = seconds_since(score_start);
    return outcome;
}

GenOutcome run_gen(const GenConfig& config) {
    if (config.out.empty()) throw InputError("gen requires an output path");
    const auto space = preset_space(config.preset);
    PlantSpec plant =
        config.plant_path.empty() ? default_plant(space) : PlantSpec::parse(read_text_file(config.plant_path));
    if (config.seed) plant.seed = *config.seed;

    const auto generated = generate_population(space, plant, config.replicas, config.preset);

    GenOutcome out;
    out.manifest_path = config.out;
    std::string truth = config.out;
    const std::string suffix = ".json";
    if (truth.size() > suffix.size() && truth.compare(truth.size() - suffix.size(), suffix.size(), suffix) == 0)
        truth.resize(truth.size() - suffix.size());
    out.truth_path = truth + ".truth.json";

    write_text_file(out.manifest_path, generated.population.to_manifest_json());
    write_text_file(out.truth_path, generated.truth.to_json());
    return out;
}

double compute_archive_measure(const std::string& name, const TensorArchive& arch) {
    if (name == "param_count") return measure_param_count(arch);
    if (name == "vc_proxy") return measure_vc_proxy(arch);
    if (name == "log_frobenius_product") return measure_log_frobenius_product(arch);
    if (name == "log_spectral_product") return measure_log_spectral_product(arch);
    throw InputError("unknown baseline '" + name +
                     "' (expected param_count, vc_proxy, log_frobenius_product, log_spectral_product or "
                     "noisy_oracle[:sigma=<r>,seed=<n>])");
}

BaselineOutcome run_baseline(const BaselineConfig& config) {
    auto pop = load_population(config.manifest);

    BaselineOutcome outcome;
    MeasureVector mv;
    mv.name = config.name;

    const bool noisy = config.name == "noisy_oracle" || config.name.rfind("noisy_oracle:", 0) == 0;
    if (noisy) {
        const auto spec = parse_measure_spec(config.name == "noisy_oracle" ? "noisy_oracle:sigma=0,seed=0"
                                                                           : config.name);
        mv.values = measure_noisy_oracle(pop, spec.sigma, spec.seed).values;
    } else {
        static const std::set<std::string> known = {"param_count", "vc_proxy", "log_frobenius_product",
                                                    "log_spectral_product"};
        if (!known.count(config.name))
            throw InputError("unknown baseline '" + config.name +
                             "' (expected param_count, vc_proxy, log_frobenius_product, log_spectral_product or "
                             "noisy_oracle[:sigma=<r>,seed=<n>])");
        if (config.archives.empty()) throw InputError("baseline '" + config.name + "' requires --archives");
        const auto& records = pop.records();
        mv.values.resize(static_cast<Eigen::Index>(records.size()));
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (records[i].weights_ref.empty())
                throw InputError("models[" + std::to_string(i) + "] has no weights reference");
            const auto dir = (fs::path(config.archives) / records[i].weights_ref).string();
            const auto start = std::chrono::steady_clock::now();
            const auto arch = read_tensor_archive(dir);
            mv.values[static_cast<Eigen::Index>(i)] = compute_archive_measure(config.name, arch);
            const double secs = seconds_since(start);
            if (secs > static_cast<double>(config.budget_secs)) {
                std::ostringstream note;
                note << "models[" << i << "] ('" << dir << "'): " << secs << " s exceeds budget "
                     << config.budget_secs << " s (informational)";
                outcome.notes.push_back(note.str());
            }
        }
    }

    outcome.manifest_json = pop.with_measure(std::move(mv)).to_manifest_json();
    return outcome;
}

std::vector<LeaderboardEntry> build_leaderboard(const std::vector<std::string>& report_paths) {
    if (report_paths.empty()) throw InputError("at least one report is required");

    std::vector<LeaderboardEntry> entries;
    std::set<std::string> names;
    std::optional<std::set<std::string>> expected_tasks;
    for (const auto& path : report_paths) {
        json doc;
        try {
            doc = json::parse(read_text_file(path));
        } catch (const json::parse_error& e) {
            throw InputError("'" + path + "' is not valid JSON: " + std::string(e.what()));
        }
        if (!doc.is_object() || !doc.contains("measures") || !doc["measures"].is_array())
            throw InputError("'" + path + "' is not a score report (missing 'measures')");
        for (const auto& m : doc["measures"]) {
            if (!m.contains("name") || !m.contains("aggregate") || !m.contains("tasks"))
                throw InputError("'" + path + "': malformed measure entry");
            LeaderboardEntry entry;
            entry.measure = m["name"].get<std::string>();
            entry.metric1 = m["aggregate"]["metric1"].get<double>();
            entry.metric2 = m["aggregate"]["metric2"].get<double>();
            if (!names.insert(entry.measure).second)
                throw InputError("measure '" + entry.measure + "' appears in more than one report");

            std::set<std::string> tasks;
            for (const auto& t : m["tasks"]) tasks.insert(t["task_id"].get<std::string>());
            if (!expected_tasks) {
                expected_tasks = std::move(tasks);
            } else if (tasks != *expected_tasks) {
                throw InputError("'" + path + "': task set differs from earlier reports");
            }
            entries.push_back(std::move(entry));
        }
    }
    std::sort(entries.begin(), entries.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
        if (a.metric2 != b.metric2) return a.metric2 > b.metric2;
        if (a.metric1 != b.metric1) return a.metric1 > b.metric1;
        return a.measure < b.measure;
    });
    return entries;
}

std::string render_leaderboard_csv(const std::vector<LeaderboardEntry>& entries) {
    std::string out = "rank,measure,metric2,metric1\n";
    for (std::size_t i = 0; i < entries.size(); ++i) {
        out += std::to_string(i + 1);
        out += ",\"";
        for (char c : entries[i].measure) {
            if (c == '"') out += "\"\"";
            else out += c;
        }
        out += "\",";
        out += fmt_g12(entries[i].metric2);
        out += ',';
        out += fmt_g12(entries[i].metric1);
        out += '\n';
    }
    return out;
}

} // namespace gapscore
