#include "gapscore/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

namespace gapscore {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::int64_t kMaxGridSize = std::int64_t(1) << 53;

std::string at_model(std::size_t i, const std::string& what) {
    return "models[" + std::to_string(i) + "]: " + what;
}

bool is_scalar_literal(const json& v) {
    return v.is_number() || v.is_string() || v.is_boolean();
}

} // namespace

HyperparamSpace::HyperparamSpace(std::vector<HyperparamAxis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw ManifestError("axes: at least one axis is required");
    std::unordered_set<std::string> names;
    grid_size_ = 1;
    for (const auto& ax : axes_) {
        if (ax.name.empty()) throw ManifestError("axes: axis name must be non-empty");
        if (!names.insert(ax.name).second) throw ManifestError("axes: duplicate axis name '" + ax.name + "'");
        if (ax.values.empty()) throw ManifestError("axes." + ax.name + ": values must be non-empty");
        std::set<std::string> seen;
        for (const auto& v : ax.values) {
            if (!is_scalar_literal(v)) throw ManifestError("axes." + ax.name + ": values must be scalars");
            if (!seen.insert(v.dump()).second)
                throw ManifestError("axes." + ax.name + ": duplicate value " + v.dump());
        }
        const auto card = static_cast<std::int64_t>(ax.values.size());
        if (grid_size_ > kMaxGridSize / card)
            throw ManifestError("axes: grid size exceeds 2^53 cells");
        grid_size_ *= card;
    }
}

int HyperparamSpace::axis_index(std::string_view name) const {
    for (std::size_t i = 0; i < axes_.size(); ++i)
        if (axes_[i].name == name) return static_cast<int>(i);
    return -1;
}

std::int64_t HyperparamSpace::cell_index(std::span<const int> coord) const {
    if (coord.size() != axes_.size()) throw ScoreError("coordinate arity does not match axis count");
    std::int64_t cell = 0;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        const int c = coord[i];
        if (c < 0 || c >= cardinality(static_cast<int>(i)))
            throw ScoreError("coordinate out of range on axis '" + axes_[i].name + "'");
        cell = cell * cardinality(static_cast<int>(i)) + c;
    }
    return cell;
}

std::vector<int> HyperparamSpace::cell_coord(std::int64_t cell) const {
    if (cell < 0 || cell >= grid_size_) throw ScoreError("cell index out of range");
    std::vector<int> coord(axes_.size());
    for (int i = axis_count() - 1; i >= 0; --i) {
        const int card = cardinality(i);
        coord[static_cast<std::size_t>(i)] = static_cast<int>(cell % card);
        cell /= card;
    }
    return coord;
}

Population Population::parse_manifest(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ManifestError("manifest root must be an object");

    static const std::set<std::string> allowed = {"task_id", "axes", "models", "measures"};
    for (const auto& [key, _] : doc.items())
        if (!allowed.count(key)) throw ManifestError("unknown top-level key '" + key + "'");
    for (const auto& key : allowed)
        if (!doc.contains(key)) throw ManifestError("missing top-level key '" + key + "'");

    Population pop;

    if (!doc["task_id"].is_string() || doc["task_id"].get<std::string>().empty())
        throw ManifestError("task_id must be a non-empty string");
    pop.task_id_ = doc["task_id"].get<std::string>();

    if (!doc["axes"].is_array()) throw ManifestError("axes must be an array");
    std::vector<HyperparamAxis> axes;
    for (const auto& a : doc["axes"]) {
        if (!a.is_object() || !a.contains("name") || !a.contains("values"))
            throw ManifestError("axes: each axis needs 'name' and 'values'");
        if (!a["name"].is_string()) throw ManifestError("axes: axis name must be a string");
        if (!a["values"].is_array()) throw ManifestError("axes: axis values must be an array");
        HyperparamAxis ax;
        ax.name = a["name"].get<std::string>();
        for (const auto& v : a["values"]) ax.values.push_back(v);
        axes.push_back(std::move(ax));
    }
    pop.space_ = HyperparamSpace(std::move(axes));

    if (!doc["models"].is_array()) throw ManifestError("models must be an array");
    const auto n_axes = static_cast<std::size_t>(pop.space_.axis_count());
    for (std::size_t i = 0; i < doc["models"].size(); ++i) {
        const auto& m = doc["models"][i];
        if (!m.is_object()) throw ManifestError(at_model(i, "must be an object"));
        static const std::set<std::string> mkeys = {"coord", "train_err", "val_err", "replica", "weights"};
        for (const auto& [key, _] : m.items())
            if (!mkeys.count(key)) throw ManifestError(at_model(i, "unknown key '" + key + "'"));
        ModelRecord rec;
        if (!m.contains("coord") || !m["coord"].is_array())
            throw ManifestError(at_model(i, "coord must be an array of value indices"));
        if (m["coord"].size() != n_axes)
            throw ManifestError(at_model(i, "coord has " + std::to_string(m["coord"].size()) + " entries, expected " +
                                               std::to_string(n_axes)));
        for (std::size_t a = 0; a < n_axes; ++a) {
            const auto& c = m["coord"][a];
            if (!c.is_number_integer()) throw ManifestError(at_model(i, "coord entries must be integers"));
            const auto idx = c.get<std::int64_t>();
            if (idx < 0 || idx >= pop.space_.cardinality(static_cast<int>(a)))
                throw ManifestError(at_model(i, "coord[" + std::to_string(a) + "] out of range for axis '" +
                                                   pop.space_.axis(static_cast<int>(a)).name + "'"));
            rec.coord.push_back(static_cast<int>(idx));
        }
        for (const char* field : {"train_err", "val_err"}) {
            if (!m.contains(field) || !m[field].is_number())
                throw ManifestError(at_model(i, std::string(field) + " must be a number"));
            const double v = m[field].get<double>();
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw ManifestError(at_model(i, std::string(field) + " must lie in [0, 1]"));
        }
        rec.train_err = m["train_err"].get<double>();
        rec.val_err = m["val_err"].get<double>();
        if (m.contains("replica")) {
            if (!m["replica"].is_number_integer() || m["replica"].get<std::int64_t>() < 0)
                throw ManifestError(at_model(i, "replica must be a non-negative integer"));
            rec.replica = static_cast<int>(m["replica"].get<std::int64_t>());
        }
        if (m.contains("weights")) {
            if (!m["weights"].is_string()) throw ManifestError(at_model(i, "weights must be a string path"));
            rec.weights_ref = m["weights"].get<std::string>();
        }
        pop.records_.push_back(std::move(rec));
    }

    if (!doc["measures"].is_object()) throw ManifestError("measures must be an object of name -> values");
    for (const auto& [name, values] : doc["measures"].items()) {
        if (name.empty()) throw ManifestError("measures: name must be non-empty");
        if (!values.is_array()) throw ManifestError("measures." + name + ": values must be an array");
        MeasureVector out;
        out.name = name;
        out.values.resize(static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!values[i].is_number())
                throw ManifestError("measures." + name + ": values must be numbers");
            out.values[static_cast<Eigen::Index>(i)] = values[i].get<double>();
        }
        pop.measures_.push_back(std::move(out));
    }

    pop.validate();
    pop.finalize();
    return pop;
}

Population Population::assemble(std::string task_id, HyperparamSpace space, std::vector<ModelRecord> records,
                                std::vector<MeasureVector> measures) {
    Population pop;
    pop.task_id_ = std::move(task_id);
    pop.space_ = std::move(space);
    pop.records_ = std::move(records);
    pop.measures_ = std::move(measures);
    if (pop.task_id_.empty()) throw ManifestError("task_id must be a non-empty string");
    if (pop.space_.axis_count() == 0) throw ManifestError("axes: at least one axis is required");
    for (std::size_t i = 0; i < pop.records_.size(); ++i) {
        const auto& r = pop.records_[i];
        if (r.coord.size() != static_cast<std::size_t>(pop.space_.axis_count()))
            throw ManifestError(at_model(i, "coord arity does not match axis count"));
        for (std::size_t a = 0; a < r.coord.size(); ++a)
            if (r.coord[a] < 0 || r.coord[a] >= pop.space_.cardinality(static_cast<int>(a)))
                throw ManifestError(at_model(i, "coord[" + std::to_string(a) + "] out of range"));
        for (double v : {r.train_err, r.val_err})
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw ManifestError(at_model(i, "errors must lie in [0, 1]"));
        if (r.replica < 0) throw ManifestError(at_model(i, "replica must be non-negative"));
    }
    pop.validate();
    pop.finalize();
    return pop;
}

void Population::validate() const {
    if (records_.empty()) throw ManifestError("models must be non-empty");

    std::unordered_set<std::string> keys;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        std::string key;
        for (int c : records_[i].coord) key += std::to_string(c) + ",";
        key += "r" + std::to_string(records_[i].replica);
        if (!keys.insert(key).second)
            throw ManifestError(at_model(i, "duplicate (coord, replica) pair"));
    }

    std::unordered_set<std::string> mnames;
    for (const auto& mv : measures_) {
        if (!mnames.insert(mv.name).second)
            throw ManifestError("measures: duplicate measure name '" + mv.name + "'");
        if (mv.values.size() != static_cast<Eigen::Index>(records_.size()))
            throw ManifestError("measures." + mv.name + ": has " + std::to_string(mv.values.size()) +
                                " values, expected one per model (" + std::to_string(records_.size()) + ")");
        for (Eigen::Index i = 0; i < mv.values.size(); ++i)
            if (!std::isfinite(mv.values[i]))
                throw ManifestError("measures." + mv.name + ": values[" + std::to_string(i) + "] is not finite");
    }
}

void Population::finalize() {
    gaps_.resize(static_cast<Eigen::Index>(records_.size()));
    for (std::size_t i = 0; i < records_.size(); ++i)
        gaps_[static_cast<Eigen::Index>(i)] = gap(records_[i]);
}

std::string Population::to_manifest_json() const {
    ordered_json doc;
    doc["task_id"] = task_id_;
    doc["axes"] = ordered_json::array();
    for (const auto& ax : space_.axes()) {
        ordered_json a;
        a["name"] = ax.name;
        a["values"] = ax.values;
        doc["axes"].push_back(std::move(a));
    }
    doc["models"] = ordered_json::array();
    for (const auto& r : records_) {
        ordered_json m;
        m["coord"] = r.coord;
        m["train_err"] = r.train_err;
        m["val_err"] = r.val_err;
        if (r.replica != 0) m["replica"] = r.replica;
        if (!r.weights_ref.empty()) m["weights"] = r.weights_ref;
        doc["models"].push_back(std::move(m));
    }
    doc["measures"] = ordered_json::object();
    std::vector<const MeasureVector*> sorted;
    for (const auto& mv : measures_) sorted.push_back(&mv);
    std::sort(sorted.begin(), sorted.end(),
              [](const MeasureVector* a, const MeasureVector* b) { return a->name < b->name; });
    for (const auto* mv : sorted) {
        auto vals = ordered_json::array();
        for (Eigen::Index i = 0; i < mv->values.size(); ++i) vals.push_back(mv->values[i]);
        doc["measures"][mv->name] = std::move(vals);
    }
    return doc.dump(2) + "\n";
}

bool Population::has_measure(std::string_view name) const {
    for (const auto& mv : measures_)
        if (mv.name == name) return true;
    return false;
}

const MeasureVector& Population::measure(std::string_view name) const {
    for (const auto& mv : measures_)
        if (mv.name == name) return mv;
    throw ScoreError("unknown measure '" + std::string(name) + "' in task '" + task_id_ + "'");
}

Population Population::with_measure(MeasureVector mv) const {
    if (has_measure(mv.name)) throw ManifestError("measures: duplicate measure name '" + mv.name + "'");
    if (mv.values.size() != static_cast<Eigen::Index>(records_.size()))
        throw ManifestError("measures." + mv.name + ": has " + std::to_string(mv.values.size()) +
                            " values, expected one per model (" + std::to_string(records_.size()) + ")");
    Population out = *this;
    out.measures_.push_back(std::move(mv));
    out.validate();
    return out;
}

std::vector<Group> group_by_axes(const Population& pop, std::vector<int> cond_axes) {
    const auto& space = pop.space();
    std::sort(cond_axes.begin(), cond_axes.end());
    for (std::size_t i = 0; i < cond_axes.size(); ++i) {
        if (cond_axes[i] < 0 || cond_axes[i] >= space.axis_count())
            throw ScoreError("conditioning axis index out of range");
        if (i > 0 && cond_axes[i] == cond_axes[i - 1])
            throw ScoreError("duplicate axis in conditioning set");
    }

    std::int64_t combos = 1;
    for (int a : cond_axes) {
        combos *= space.cardinality(a);
        if (combos > 10'000'000)
            throw ScoreError("conditioning set spans more than 1e7 value combinations");
    }

    std::vector<Group> groups(static_cast<std::size_t>(combos));
    for (std::int64_t g = 0; g < combos; ++g) {
        std::int64_t rem = g;
        auto& key = groups[static_cast<std::size_t>(g)].key;
        key.resize(cond_axes.size());
        for (int i = static_cast<int>(cond_axes.size()) - 1; i >= 0; --i) {
            const int card = space.cardinality(cond_axes[static_cast<std::size_t>(i)]);
            key[static_cast<std::size_t>(i)] = static_cast<int>(rem % card);
            rem /= card;
        }
    }
    const auto& records = pop.records();
    for (std::size_t r = 0; r < records.size(); ++r) {
        std::int64_t g = 0;
        for (int a : cond_axes) g = g * space.cardinality(a) + records[r].coord[static_cast<std::size_t>(a)];
        groups[static_cast<std::size_t>(g)].members.push_back(static_cast<int>(r));
    }
    return groups;
}

std::vector<Group> group_by(const Population& pop, std::span<const std::string> cond) {
    std::vector<int> axes;
    for (const auto& name : cond) {
        const int idx = pop.space().axis_index(name);
        if (idx < 0) throw ScoreError("unknown axis '" + name + "' in conditioning set");
        axes.push_back(idx);
    }
    return group_by_axes(pop, std::move(axes));
}

GridReport validate_grid(const Population& pop) {
    GridReport report;
    const auto& space = pop.space();

    for (const auto& ax : space.axes())
        if (ax.values.size() < 2) report.single_valued_axes.push_back(ax.name);

    std::map<std::int64_t, std::int64_t> per_cell;
    for (const auto& r : pop.records()) ++per_cell[space.cell_index(r.coord)];

    report.missing_cells = space.grid_size() - static_cast<std::int64_t>(per_cell.size());
    if (report.missing_cells > 0 && space.grid_size() <= 1'000'000) {
        for (std::int64_t cell = 0; cell < space.grid_size(); ++cell)
            if (!per_cell.count(cell)) report.missing_coords.push_back(space.cell_coord(cell));
    }
    for (const auto& [cell, count] : per_cell) ++report.replica_histogram[static_cast<int>(count)];
    return report;
}

} // namespace gapscore
