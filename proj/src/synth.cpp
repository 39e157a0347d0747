#include "gapscore/synth.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "gapscore/baselines.hpp"
#include "gapscore/rng.hpp"

namespace gapscore {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

double axis_level(const HyperparamSpace& space, int axis, int index) {
    const int card = space.cardinality(axis);
    if (card < 2) return 0.0;
    return static_cast<double>(index) / static_cast<double>(card - 1);
}

int required_axis(const HyperparamSpace& space, const std::string& name, const char* context) {
    const int idx = space.axis_index(name);
    if (idx < 0) throw InputError(std::string(context) + ": unknown axis '" + name + "'");
    return idx;
}

} // namespace

MeasureKind measure_kind_from_string(std::string_view s) {
    if (s == "oracle") return MeasureKind::Oracle;
    if (s == "noisy_oracle") return MeasureKind::NoisyOracle;
    if (s == "axis_proxy") return MeasureKind::AxisProxy;
    if (s == "independent_random") return MeasureKind::IndependentRandom;
    if (s == "monotone_oracle" || s == "monotone_transform") return MeasureKind::MonotoneOracle;
    throw InputError("unknown measure kind '" + std::string(s) + "'");
}

std::string to_string(MeasureKind kind) {
    switch (kind) {
        case MeasureKind::Oracle: return "oracle";
        case MeasureKind::NoisyOracle: return "noisy_oracle";
        case MeasureKind::AxisProxy: return "axis_proxy";
        case MeasureKind::IndependentRandom: return "independent_random";
        case MeasureKind::MonotoneOracle: return "monotone_oracle";
    }
    throw InputError("invalid measure kind");
}

PlantSpec PlantSpec::parse(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("plant spec is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw InputError("plant spec root must be an object");

    PlantSpec plant;
    if (doc.contains("bias")) plant.gap.bias = doc["bias"].get<double>();
    if (doc.contains("affine")) {
        for (const auto& t : doc["affine"]) {
            if (!t.is_object() || !t.contains("axis") || !t.contains("coeff"))
                throw InputError("plant affine terms need 'axis' and 'coeff'");
            plant.gap.affine.push_back({t["axis"].get<std::string>(), t["coeff"].get<double>()});
        }
    }
    if (doc.contains("interactions")) {
        for (const auto& t : doc["interactions"]) {
            if (!t.is_object() || !t.contains("a") || !t.contains("b") || !t.contains("coeff"))
                throw InputError("plant interaction terms need 'a', 'b' and 'coeff'");
            plant.gap.interactions.push_back(
                {t["a"].get<std::string>(), t["b"].get<std::string>(), t["coeff"].get<double>()});
        }
    }
    if (doc.contains("noise_sigma")) plant.gap.noise_sigma = doc["noise_sigma"].get<double>();
    if (doc.contains("measure")) plant.kind = measure_kind_from_string(doc["measure"].get<std::string>());
    if (doc.contains("measure_sigma")) plant.measure_sigma = doc["measure_sigma"].get<double>();
    if (doc.contains("proxy_axis")) plant.proxy_axis = doc["proxy_axis"].get<std::string>();
    if (doc.contains("seed")) plant.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("jitter")) plant.jitter = doc["jitter"].get<bool>();

    if (!(plant.gap.noise_sigma >= 0.0)) throw InputError("plant noise_sigma must be non-negative");
    if (!(plant.measure_sigma >= 0.0)) throw InputError("plant measure_sigma must be non-negative");
    return plant;
}

std::string PlantSpec::to_json() const {
    ordered_json doc;
    doc["bias"] = gap.bias;
    doc["affine"] = ordered_json::array();
    for (const auto& t : gap.affine) {
        ordered_json term;
        term["axis"] = t.axis;
        term["coeff"] = t.coeff;
        doc["affine"].push_back(std::move(term));
    }
    doc["interactions"] = ordered_json::array();
    for (const auto& t : gap.interactions) {
        ordered_json term;
        term["a"] = t.a;
        term["b"] = t.b;
        term["coeff"] = t.coeff;
        doc["interactions"].push_back(std::move(term));
    }
    doc["noise_sigma"] = gap.noise_sigma;
    doc["measure"] = to_string(kind);
    if (kind == MeasureKind::NoisyOracle) doc["measure_sigma"] = measure_sigma;
    if (kind == MeasureKind::AxisProxy) doc["proxy_axis"] = proxy_axis;
    doc["seed"] = seed;
    doc["jitter"] = jitter;
    return doc.dump(2) + "\n";
}

HyperparamSpace preset_space(std::string_view task) {
    auto num = [](double v) { return AxisValue(v); };
    auto integer = [](std::int64_t v) { return AxisValue(v); };
    auto str = [](const char* v) { return AxisValue(v); };

    std::vector<HyperparamAxis> axes;
    if (task == "task1") {
        axes = {{"num_filters", {integer(256), integer(512)}},
                {"dropout", {num(0.0), num(0.5)}},
                {"conv_blocks", {integer(1), integer(3)}},
                {"dense_layers", {integer(1), integer(2)}},
                {"weight_decay", {num(0.0), num(0.001)}},
                {"batch_size", {integer(8), integer(32), integer(512)}}};
    } else if (task == "task2") {
        axes = {{"conv_layers", {integer(6), integer(9), integer(12)}},
                {"dropout", {num(0.0), num(0.25), num(0.5)}},
                {"weight_decay", {num(0.0), num(0.001)}},
                {"batch_size", {integer(32), integer(512), integer(1024)}}};
    } else if (task == "task4" || task == "task5") {
        axes = {{"num_params", {integer(1000000), integer(2500000)}},
                {"depth", {integer(4), integer(6)}},
                {"reversed", {AxisValue(false), AxisValue(true)}},
                {"weight_decay", {num(0.0), num(0.0005)}},
                {"learning_rate", {num(0.01), num(0.001)}},
                {"batch_size", {integer(32), integer(256)}}};
    } else if (task == "task6") {
        axes = {{"weight_decay", {num(0.0), num(0.001)}},
                {"batch_size", {integer(512), integer(1024)}},
                {"num_filters", {integer(256), integer(512)}},
                {"conv_layers", {integer(6), integer(9), integer(12)}},
                {"dropout", {num(0.0), num(0.25)}},
                {"learning_rate", {num(0.1), num(0.01)}}};
    } else if (task == "task7") {
        axes = {{"depth", {integer(6), integer(9)}},
                {"dropout", {num(0.0), num(0.25)}},
                {"weight_decay", {num(0.0), num(0.001)}},
                {"batch_size", {integer(512), integer(1024)}},
                {"dense_arch", {str("128-128-128"), str("256-256"), str("512")}}};
    } else if (task == "task8") {
        axes = {{"num_filters", {integer(256), integer(512)}},
                {"dropout", {num(0.0), num(0.5)}},
                {"conv_blocks", {integer(1), integer(3)}},
                {"learning_rate", {num(0.001), num(0.01)}},
                {"batch_size", {integer(32), integer(512)}}};
    } else if (task == "task9") {
        axes = {{"num_filters", {integer(256), integer(512)}},
                {"conv_layers", {integer(9), integer(12)}},
                {"dropout", {num(0.0), num(0.25)}},
                {"weight_decay", {num(0.0), num(0.001)}},
                {"batch_size", {integer(32), integer(512)}}};
    } else if (task == "task3") {
        throw InputError("task3 was never released; presets cover task1, task2 and task4 through task9");
    } else {
        throw InputError("unknown task preset '" + std::string(task) +
                         "'; known presets: task1, task2, task4..task9");
    }
    return HyperparamSpace(std::move(axes));
}

PlantSpec default_plant(const HyperparamSpace& space) {
    PlantSpec plant;
    plant.gap.bias = 0.01;
    for (int a = 0; a < space.axis_count(); ++a)
        plant.gap.affine.push_back({space.axis(a).name, 0.02 * static_cast<double>(a + 1)});
    if (space.axis_count() >= 2)
        plant.gap.interactions.push_back({space.axis(0).name, space.axis(1).name, 0.03});
    return plant;
}

std::string GroundTruth::to_json() const {
    ordered_json doc;
    doc["task_id"] = task_id;
    doc["plant"] = json::parse(plant.to_json());
    doc["replicas"] = replicas;
    doc["measure_name"] = measure_name;
    doc["gap_min"] = gap_min;
    doc["gap_max"] = gap_max;
    doc["clamped"] = clamped;
    doc["warnings"] = warnings;
    return doc.dump(2) + "\n";
}

GeneratedPopulation generate_population(const HyperparamSpace& space, const PlantSpec& plant, int replicas,
                                        std::string task_id) {
    if (replicas < 1) throw InputError("replicas must be at least 1");
    if (!(plant.gap.noise_sigma >= 0.0)) throw InputError("plant noise_sigma must be non-negative");
    if (!(plant.measure_sigma >= 0.0)) throw InputError("plant measure_sigma must be non-negative");

    std::vector<std::pair<int, double>> affine;
    for (const auto& t : plant.gap.affine)
        affine.emplace_back(required_axis(space, t.axis, "plant affine term"), t.coeff);
    std::vector<std::pair<std::pair<int, int>, double>> interactions;
    for (const auto& t : plant.gap.interactions)
        interactions.push_back({{required_axis(space, t.a, "plant interaction term"),
                                 required_axis(space, t.b, "plant interaction term")},
                                t.coeff});
    int proxy_axis = -1;
    if (plant.kind == MeasureKind::AxisProxy) {
        if (plant.proxy_axis.empty()) throw InputError("axis_proxy plant needs proxy_axis");
        proxy_axis = required_axis(space, plant.proxy_axis, "proxy_axis");
    }

    const std::int64_t cells = space.grid_size();
    std::vector<ModelRecord> records;
    records.reserve(static_cast<std::size_t>(cells * replicas));
    std::int64_t clamped = 0;
    for (std::int64_t cell = 0; cell < cells; ++cell) {
        const auto coord = space.cell_coord(cell);
        double planted = plant.gap.bias;
        for (const auto& [axis, coeff] : affine) planted += coeff * axis_level(space, axis, coord[static_cast<std::size_t>(axis)]);
        for (const auto& [axes, coeff] : interactions)
            planted += coeff * axis_level(space, axes.first, coord[static_cast<std::size_t>(axes.first)]) *
                       axis_level(space, axes.second, coord[static_cast<std::size_t>(axes.second)]);

        for (int rep = 0; rep < replicas; ++rep) {
            const auto cell_u = static_cast<std::uint64_t>(cell);
            const auto rep_u = static_cast<std::uint64_t>(rep);
            double g = planted;
            if (plant.gap.noise_sigma > 0.0)
                g += plant.gap.noise_sigma * rng::Stream(plant.seed, rng::Purpose::GapNoise, cell_u, rep_u).gaussian(0);
            if (plant.jitter) g += 1e-9 * rng::Stream(plant.seed, rng::Purpose::Jitter, cell_u, rep_u).uniform(0);
            if (g < -1.0 || g > 1.0) {
                ++clamped;
                g = std::clamp(g, -1.0, 1.0);
            }
            ModelRecord rec;
            rec.coord = coord;
            rec.replica = rep;
            rec.train_err = 0.01 * rng::Stream(plant.seed, rng::Purpose::TrainErr, cell_u, rep_u).uniform(0);
            rec.val_err = std::clamp(rec.train_err + g, 0.0, 1.0);
            // Nudge train_err so val_err - train_err reproduces the planted gap
            // bitwise; otherwise rounding breaks planted ties when jitter is off.
            for (int pass = 0; pass < 4 && rec.val_err - rec.train_err != g; ++pass) {
                const double adjusted = rec.val_err - g;
                if (!(adjusted >= 0.0 && adjusted <= 0.02)) break; // keep train_err near 0
                rec.train_err = adjusted;
                rec.val_err = std::clamp(rec.train_err + g, 0.0, 1.0);
            }
            records.push_back(std::move(rec));
        }
    }

    GeneratedPopulation out{Population::assemble(task_id, space, std::move(records), {}), GroundTruth{}};
    const auto& pop_records = out.population.records();

    MeasureVector mv;
    mv.values.resize(static_cast<Eigen::Index>(pop_records.size()));
    switch (plant.kind) {
        case MeasureKind::Oracle:
            mv.name = "oracle";
            mv.values = out.population.gaps();
            break;
        case MeasureKind::NoisyOracle:
            mv = measure_noisy_oracle(out.population, plant.measure_sigma, plant.seed);
            break;
        case MeasureKind::AxisProxy:
            mv.name = "axis_proxy_" + plant.proxy_axis;
            for (std::size_t i = 0; i < pop_records.size(); ++i)
                mv.values[static_cast<Eigen::Index>(i)] =
                    static_cast<double>(pop_records[i].coord[static_cast<std::size_t>(proxy_axis)]);
            break;
        case MeasureKind::IndependentRandom:
            mv.name = "independent_random";
            for (std::size_t i = 0; i < pop_records.size(); ++i) {
                const auto cell_u = static_cast<std::uint64_t>(space.cell_index(pop_records[i].coord));
                const auto rep_u = static_cast<std::uint64_t>(pop_records[i].replica);
                mv.values[static_cast<Eigen::Index>(i)] =
                    rng::Stream(plant.seed, rng::Purpose::MeasureRandom, cell_u, rep_u).uniform(0);
            }
            break;
        case MeasureKind::MonotoneOracle: {
            mv.name = "monotone_oracle";
            const auto& gaps = out.population.gaps();
            for (Eigen::Index i = 0; i < gaps.size(); ++i) {
                const double x = gaps[i];
                mv.values[i] = x * x * x + 2.0 * x;
            }
            break;
        }
    }
    out.population = out.population.with_measure(std::move(mv));

    auto& truth = out.truth;
    truth.task_id = out.population.task_id();
    truth.plant = plant;
    truth.replicas = replicas;
    truth.measure_name = out.population.measures().back().name;
    const auto& gaps = out.population.gaps();
    truth.gap_min = gaps.minCoeff();
    truth.gap_max = gaps.maxCoeff();
    truth.clamped = clamped;
    if (clamped > 0)
        truth.warnings.push_back("planted gap left [-1, 1] for " + std::to_string(clamped) +
                                 " record(s); values clamped");
    return out;
}

} // namespace gapscore
