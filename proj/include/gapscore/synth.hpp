#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gapscore/population.hpp"

namespace gapscore {

struct AffineTerm {
    std::string axis;
    double coeff = 0.0;
};

struct InteractionTerm {
    std::string a;
    std::string b;
    double coeff = 0.0;
};

// Planted gap over normalized axis levels x = index / (cardinality - 1):
// bias + sum coeff*x + sum coeff*x_a*x_b + Gaussian noise.
struct GapFormula {
    double bias = 0.0;
    std::vector<AffineTerm> affine;
    std::vector<InteractionTerm> interactions;
    double noise_sigma = 0.0;
};

enum class MeasureKind { Oracle, NoisyOracle, AxisProxy, IndependentRandom, MonotoneOracle };

MeasureKind measure_kind_from_string(std::string_view s); // InputError on unknown
std::string to_string(MeasureKind kind);

struct PlantSpec {
    GapFormula gap;
    MeasureKind kind = MeasureKind::Oracle;
    double measure_sigma = 0.0;  // noisy_oracle only
    std::string proxy_axis;      // axis_proxy only
    std::uint64_t seed = 0;
    bool jitter = true;          // per-model 1e-9 offset so planted gaps are tie-free

    static PlantSpec parse(std::string_view bytes); // InputError
    std::string to_json() const;
};

// Grid presets for the released tasks (task1, task2, task4..task9); task3
// was never released and is rejected.
HyperparamSpace preset_space(std::string_view task);

// A plant touching every axis: bias 0.01, affine weight 0.02*(k+1) on axis
// k, one interaction between the first two axes, no noise.
PlantSpec default_plant(const HyperparamSpace& space);

struct GroundTruth {
    std::string task_id;
    PlantSpec plant;
    int replicas = 1;
    std::string measure_name;
    double gap_min = 0.0;
    double gap_max = 0.0;
    std::int64_t clamped = 0; // records whose raw gap left [-1, 1]
    std::vector<std::string> warnings;

    std::string to_json() const;
};

struct GeneratedPopulation {
    Population population;
    GroundTruth truth;
};

// One record per (cell, replica), cell-major. train_err ~ U[0, 0.01];
// val_err = clamp(train_err + gap, 0, 1); the measure vector follows
// plant.kind. Deterministic in (space, plant, replicas).
GeneratedPopulation generate_population(const HyperparamSpace& space, const PlantSpec& plant, int replicas,
                                        std::string task_id);

} // namespace gapscore
