#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "gapscore/population.hpp"

namespace gapscore {

// sgn(a - b) in {-1, 0, +1}. Throws ScoreError on non-finite input.
int sign_vote(double a, double b);

// Mean product of measure votes and gap votes over all ordered distinct
// pairs, denominator n(n-1). No tie correction: tied pairs vote 0 and stay
// in the denominator. Throws ScoreError on length mismatch, n < 2, or
// non-finite values.
double kendall_tau(const Eigen::VectorXd& mu, const Eigen::VectorXd& g);

struct PsiAxis {
    std::string axis;
    double psi = 0.0;
    int slices_scored = 0;
    int slices_skipped = 0;
};

struct PsiResult {
    std::vector<PsiAxis> per_axis;           // scored multi-valued axes, in axis order
    double psi = 0.0;                        // mean over per_axis
    std::vector<std::string> excluded_axes;  // multi-valued axes with no scorable slice
    std::vector<std::string> warnings;
};

// Mean Kendall tau over the slices that vary only `axis` (one slice per
// combination of the other axes, replicas included). Slices with fewer than
// two models are skipped and leave the denominator. Throws ScoreError on an
// unknown or single-valued axis, or when no slice is scorable.
double psi_axis(const Population& pop, std::string_view measure, std::string_view axis);

// Mean of psi_axis over multi-valued axes. Axes where every slice is too
// small are excluded with a warning; throws ScoreError when nothing remains.
PsiResult psi_overall(const Population& pop, std::string_view measure);

struct VoteJoint {
    // counts[vg + 1][vm + 1] over all ordered distinct pairs in one group;
    // centrally symmetric by construction (both pair orders counted).
    std::int64_t counts[3][3] = {};
    std::int64_t total = 0;
};

// Vote table for one group. Throws ScoreError when the group has fewer than
// two members (callers enumerate groups and skip those).
VoteJoint vote_joint(const Group& group, const Population& pop, std::string_view measure);

enum class GroupWeighting { Equal, Pairs };

struct CmiBreakdown {
    std::vector<std::string> cond_set;  // conditioning axis names, in axis order
    double mi = 0.0;                    // I(V_g; V_mu | O), bits
    double entropy = 0.0;               // H(V_g | O), bits
    double normalized = 0.0;            // mi / entropy, 0 when entropy == 0
    std::vector<double> group_weights;  // scored groups, canonical value order
    int skipped_groups = 0;             // value combinations with < 2 models
};

// Conditional mutual information between gap votes and measure votes given
// the axes in `cond`, from per-group vote tables. Groups with fewer than two
// models are skipped and equal weights renormalized over the rest (or
// weighted by ordered-pair counts under GroupWeighting::Pairs). Throws
// ScoreError when every group is too small or an axis is unknown/repeated.
CmiBreakdown cond_mi(const Population& pop, std::string_view measure,
                     std::span<const std::string> cond,
                     GroupWeighting weighting = GroupWeighting::Equal);

struct Metric2Result {
    double value = 0.0;                      // min normalized over evaluated sets
    std::vector<std::string> argmin_cond_set;
    std::vector<CmiBreakdown> breakdowns;    // evaluated sets, size then index order
    std::vector<std::string> warnings;
};

// Evaluates cond_mi for every subset of the multi-valued axes with
// |O| <= k_max, including the empty set, and takes the minimum normalized
// value. Ties go to the smallest set, then lexicographically smallest name
// sequence. Degenerate sets (every group < 2) are skipped with a warning;
// throws ScoreError when every set is degenerate or k_max < 0.
Metric2Result metric2_task(const Population& pop, std::string_view measure, int k_max = 2,
                           GroupWeighting weighting = GroupWeighting::Equal, int threads = 1);

struct ScoreOptions {
    int k_max = 2;
    GroupWeighting weighting = GroupWeighting::Equal;
    int threads = 1;
};

struct TaskScore {
    std::string task_id;
    PsiResult psi;
    Metric2Result metric2;
};

TaskScore score_task(const Population& pop, std::string_view measure, const ScoreOptions& opts = {});

struct AggregateScore {
    double metric1 = 0.0;  // mean per-task psi
    double metric2 = 0.0;  // mean per-task J
};

struct MeasureReport {
    std::string measure;
    std::vector<TaskScore> tasks;
    AggregateScore aggregate;
};

// Means over tasks. Throws ScoreError on an empty task list.
MeasureReport aggregate_tasks(std::string measure, std::vector<TaskScore> tasks);

} // namespace gapscore
