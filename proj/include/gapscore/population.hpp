#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "gapscore/errors.hpp"

namespace gapscore {

// An axis value is kept as the JSON literal it was written as (number, string
// or bool). Models address values by index, so literals are never compared
// numerically downstream.
using AxisValue = nlohmann::json;

struct HyperparamAxis {
    std::string name;
    std::vector<AxisValue> values;
};

class HyperparamSpace {
public:
    HyperparamSpace() = default;
    explicit HyperparamSpace(std::vector<HyperparamAxis> axes); // validates invariants

    int axis_count() const { return static_cast<int>(axes_.size()); }
    const std::vector<HyperparamAxis>& axes() const { return axes_; }
    const HyperparamAxis& axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
    int axis_index(std::string_view name) const; // -1 when absent
    int cardinality(int i) const { return static_cast<int>(axes_[static_cast<std::size_t>(i)].values.size()); }
    std::int64_t grid_size() const { return grid_size_; }

    // Mixed-radix rank of a coordinate, axis 0 most significant. Coordinates
    // enumerate lexicographically as the rank runs 0..grid_size-1.
    std::int64_t cell_index(std::span<const int> coord) const;
    std::vector<int> cell_coord(std::int64_t cell) const;

private:
    std::vector<HyperparamAxis> axes_;
    std::int64_t grid_size_ = 1;
};

struct ModelRecord {
    std::vector<int> coord;  // value index per axis
    double train_err = 0.0;
    double val_err = 0.0;
    int replica = 0;
    std::string weights_ref; // tensor-archive directory, empty if none
};

// Validation error minus training error.
inline double gap(const ModelRecord& r) { return r.val_err - r.train_err; }

struct MeasureVector {
    std::string name;
    Eigen::VectorXd values; // aligned with Population record order
};

class Population {
public:
    // Parses and validates a manifest document (schema in README). Errors name
    // the offending record index and field.
    static Population parse_manifest(std::string_view bytes);

    // Builds a population from parts, running the same validation as parsing.
    static Population assemble(std::string task_id, HyperparamSpace space, std::vector<ModelRecord> records,
                               std::vector<MeasureVector> measures);

    std::string to_manifest_json() const;

    const std::string& task_id() const { return task_id_; }
    const HyperparamSpace& space() const { return space_; }
    const std::vector<ModelRecord>& records() const { return records_; }
    int size() const { return static_cast<int>(records_.size()); }
    const Eigen::VectorXd& gaps() const { return gaps_; }

    const std::vector<MeasureVector>& measures() const { return measures_; }
    bool has_measure(std::string_view name) const;
    const MeasureVector& measure(std::string_view name) const; // ScoreError when unknown
    Population with_measure(MeasureVector mv) const;           // ManifestError on name collision

private:
    Population() = default;
    void validate() const;
    void finalize(); // caches gaps

    std::string task_id_;
    HyperparamSpace space_;
    std::vector<ModelRecord> records_;
    std::vector<MeasureVector> measures_;
    Eigen::VectorXd gaps_;
};

struct Group {
    std::vector<int> key;     // value index per conditioning axis (axis order)
    std::vector<int> members; // record indices
};

// Partitions records by their values on the named axes. Returns one group per
// value combination (product of cardinalities; exactly one group holding every
// record when cond is empty), in lexicographic key order. Unknown axis names
// throw ScoreError.
std::vector<Group> group_by(const Population& pop, std::span<const std::string> cond);
std::vector<Group> group_by_axes(const Population& pop, std::vector<int> cond_axes);

struct GridReport {
    std::int64_t missing_cells = 0;
    std::vector<std::vector<int>> missing_coords;        // listed while grid_size <= 1e6
    std::map<int, std::int64_t> replica_histogram;       // models-per-cell -> number of cells
    std::vector<std::string> single_valued_axes;
};

GridReport validate_grid(const Population& pop);

} // namespace gapscore
