#pragma once

#include <string>
#include <vector>

#include "gapscore/rank_metrics.hpp"

namespace gapscore {

// Doubles in reports are rendered with 12 significant digits, shortest form,
// locale-independent.
std::string fmt_g12(double v);

std::string to_string(GroupWeighting w);
GroupWeighting weighting_from_string(std::string_view s); // InputError on unknown

struct ScoreRun {
    int k_max = 2;
    GroupWeighting weighting = GroupWeighting::Equal;
    std::vector<MeasureReport> measures;
    bool include_timing = false; // timing breaks byte-identity across runs, so opt-in
    double parse_secs = 0.0;
    double score_secs = 0.0;
};

// Fixed key order, 2-space indent, trailing newline; byte-identical for
// identical scoring results.
std::string render_report_json(const ScoreRun& run);

// Columns: task_id, measure, psi, metric2, argmin_cond_set (';'-joined).
// One row per (measure, task) plus an "aggregate" row per measure. Strings
// quoted, '.' decimal separator.
std::string render_report_csv(const ScoreRun& run);

} // namespace gapscore
