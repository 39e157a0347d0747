#include "gapscore/rank_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "gapscore/parallel.hpp"

namespace gapscore {
namespace {

inline int sv(double a, double b) { return (a > b) - (a < b); }

std::string join_names(std::span<const std::string> names) {
    std::string out = "{";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out + "}";
}

// Kendall tau over a member subset: integer vote-product sum over unordered
// pairs, doubled for the ordered-pair convention, over n(n-1).
double tau_over(const Eigen::VectorXd& mu, const Eigen::VectorXd& g, std::span<const int> members,
                std::vector<double>& mu_buf, std::vector<double>& g_buf) {
    const std::size_t n = members.size();
    mu_buf.resize(n);
    g_buf.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        mu_buf[k] = mu[members[k]];
        g_buf[k] = g[members[k]];
    }
    std::int64_t s = 0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            s += static_cast<std::int64_t>(sv(mu_buf[i], mu_buf[j]) * sv(g_buf[i], g_buf[j]));
    const auto nn = static_cast<std::int64_t>(n);
    return static_cast<double>(2 * s) / static_cast<double>(nn * (nn - 1));
}

double entropy_from_counts(std::span<const std::int64_t> counts, std::int64_t total) {
    const double t = static_cast<double>(total);
    double h = 0.0;
    for (std::int64_t c : counts) {
        if (c <= 0) continue;
        const double p = static_cast<double>(c) / t;
        h += -(p * std::log2(p));
    }
    return h;
}

struct MiParts {
    double h_gap = 0.0;
    double h_mu = 0.0;
    double mi = 0.0;
    std::int64_t total = 0;
};

MiParts mi_parts(const VoteJoint& vj) {
    std::int64_t row[3] = {0, 0, 0};
    std::int64_t col[3] = {0, 0, 0};
    std::int64_t flat[9];
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            row[a] += vj.counts[a][b];
            col[b] += vj.counts[a][b];
            flat[a * 3 + b] = vj.counts[a][b];
        }
    MiParts parts;
    parts.total = vj.total;
    parts.h_gap = entropy_from_counts(row, vj.total);
    parts.h_mu = entropy_from_counts(col, vj.total);
    const double h_joint = entropy_from_counts(flat, vj.total);
    // For identical vote columns the joint table is diagonal and equals both
    // marginals termwise, so (h + h) - h recovers h without rounding; for a
    // constant measure the subtraction cancels exactly to +0.0. The clamp
    // only absorbs rounding residue from genuinely mixed tables.
    double mi = (parts.h_gap + parts.h_mu) - h_joint;
    const double cap = std::min(parts.h_gap, parts.h_mu);
    if (mi < 0.0) mi = 0.0;
    if (mi > cap) mi = cap;
    parts.mi = mi;
    return parts;
}

VoteJoint vote_joint_over(const Eigen::VectorXd& g, const Eigen::VectorXd& mu, std::span<const int> members,
                          std::vector<double>& mu_buf, std::vector<double>& g_buf) {
    const std::size_t n = members.size();
    mu_buf.resize(n);
    g_buf.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        mu_buf[k] = mu[members[k]];
        g_buf[k] = g[members[k]];
    }
    VoteJoint vj;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const int vg = sv(g_buf[i], g_buf[j]);
            const int vm = sv(mu_buf[i], mu_buf[j]);
            ++vj.counts[vg + 1][vm + 1];
            ++vj.counts[1 - vg][1 - vm];
        }
    const auto nn = static_cast<std::int64_t>(n);
    vj.total = nn * (nn - 1);
    return vj;
}

std::optional<CmiBreakdown> cond_mi_axes(const Population& pop, const Eigen::VectorXd& mu,
                                         const std::vector<int>& cond_axes, GroupWeighting weighting) {
    const auto groups = group_by_axes(pop, cond_axes);

    std::vector<MiParts> parts;
    int skipped = 0;
    std::vector<double> mu_buf, g_buf;
    for (const auto& grp : groups) {
        if (grp.members.size() < 2) {
            ++skipped;
            continue;
        }
        parts.push_back(mi_parts(vote_joint_over(pop.gaps(), mu, grp.members, mu_buf, g_buf)));
    }
    if (parts.empty()) return std::nullopt;

    CmiBreakdown bd;
    for (int a : cond_axes) bd.cond_set.push_back(pop.space().axis(a).name);
    bd.skipped_groups = skipped;

    bd.group_weights.reserve(parts.size());
    if (weighting == GroupWeighting::Equal) {
        const double w = 1.0 / static_cast<double>(parts.size());
        bd.group_weights.assign(parts.size(), w);
    } else {
        std::int64_t pair_total = 0;
        for (const auto& p : parts) pair_total += p.total;
        for (const auto& p : parts)
            bd.group_weights.push_back(static_cast<double>(p.total) / static_cast<double>(pair_total));
    }

    double mi = 0.0, entropy = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        mi += bd.group_weights[i] * parts[i].mi;
        entropy += bd.group_weights[i] * parts[i].h_gap;
    }
    bd.mi = mi;
    bd.entropy = entropy;
    bd.normalized = entropy > 0.0 ? mi / entropy : 0.0;
    return bd;
}

struct PsiAxisStats {
    double psi = 0.0;
    int scored = 0;
    int skipped = 0;
};

PsiAxisStats psi_axis_stats(const Population& pop, const Eigen::VectorXd& mu, int axis) {
    std::map<std::vector<int>, std::vector<int>> slices;
    const auto& records = pop.records();
    std::vector<int> key(static_cast<std::size_t>(pop.space().axis_count()) - 1);
    for (std::size_t r = 0; r < records.size(); ++r) {
        std::size_t k = 0;
        for (std::size_t a = 0; a < records[r].coord.size(); ++a)
            if (static_cast<int>(a) != axis) key[k++] = records[r].coord[a];
        slices[key].push_back(static_cast<int>(r));
    }
    PsiAxisStats stats;
    double sum = 0.0;
    std::vector<double> mu_buf, g_buf;
    for (const auto& [_, members] : slices) {
        if (members.size() < 2) {
            ++stats.skipped;
            continue;
        }
        sum += tau_over(mu, pop.gaps(), members, mu_buf, g_buf);
        ++stats.scored;
    }
    if (stats.scored > 0) stats.psi = sum / static_cast<double>(stats.scored);
    return stats;
}

// Subsets of `pool` with size <= k_max, sizes ascending, index-lex within a
// size. The empty set comes first.
std::vector<std::vector<int>> enumerate_cond_sets(const std::vector<int>& pool, int k_max) {
    std::vector<std::vector<int>> sets;
    const int n = static_cast<int>(pool.size());
    const int max_size = std::min(k_max, n);
    for (int s = 0; s <= max_size; ++s) {
        std::vector<int> pick(static_cast<std::size_t>(s));
        for (int i = 0; i < s; ++i) pick[static_cast<std::size_t>(i)] = i;
        while (true) {
            std::vector<int> set(static_cast<std::size_t>(s));
            for (int i = 0; i < s; ++i) set[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
            sets.push_back(std::move(set));
            int i = s - 1;
            while (i >= 0 && pick[static_cast<std::size_t>(i)] == i + n - s) --i;
            if (i < 0) break;
            ++pick[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < s; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return sets;
}

} // namespace

int sign_vote(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b)) throw ScoreError("sign_vote: non-finite input");
    return sv(a, b);
}

double kendall_tau(const Eigen::VectorXd& mu, const Eigen::VectorXd& g) {
    if (mu.size() != g.size())
        throw ScoreError("kendall_tau: length mismatch (" + std::to_string(mu.size()) + " vs " +
                         std::to_string(g.size()) + ")");
    if (mu.size() < 2) throw ScoreError("kendall_tau: need at least 2 values");
    if (!mu.allFinite() || !g.allFinite()) throw ScoreError("kendall_tau: non-finite input");
    std::vector<int> members(static_cast<std::size_t>(mu.size()));
    for (std::size_t i = 0; i < members.size(); ++i) members[i] = static_cast<int>(i);
    std::vector<double> mu_buf, g_buf;
    return tau_over(mu, g, members, mu_buf, g_buf);
}

double psi_axis(const Population& pop, std::string_view measure, std::string_view axis) {
    const int idx = pop.space().axis_index(axis);
    if (idx < 0) throw ScoreError("unknown axis '" + std::string(axis) + "'");
    if (pop.space().cardinality(idx) < 2)
        throw ScoreError("axis '" + std::string(axis) + "' is single-valued");
    const auto stats = psi_axis_stats(pop, pop.measure(measure).values, idx);
    if (stats.scored == 0)
        throw ScoreError("axis '" + std::string(axis) + "': no slice with 2 or more models");
    return stats.psi;
}

PsiResult psi_overall(const Population& pop, std::string_view measure) {
    const auto& mu = pop.measure(measure).values;
    PsiResult result;
    for (int a = 0; a < pop.space().axis_count(); ++a) {
        const auto& name = pop.space().axis(a).name;
        if (pop.space().cardinality(a) < 2) continue;
        const auto stats = psi_axis_stats(pop, mu, a);
        if (stats.scored == 0) {
            result.excluded_axes.push_back(name);
            result.warnings.push_back("axis '" + name + "' excluded: no slice with 2 or more models");
            continue;
        }
        if (stats.skipped > 0)
            result.warnings.push_back("axis '" + name + "': skipped " + std::to_string(stats.skipped) +
                                      " slice(s) with fewer than 2 models");
        result.per_axis.push_back({name, stats.psi, stats.scored, stats.skipped});
    }
    if (result.per_axis.empty()) throw ScoreError("no eligible axis: every axis is single-valued or unscorable");
    double sum = 0.0;
    for (const auto& pa : result.per_axis) sum += pa.psi;
    result.psi = sum / static_cast<double>(result.per_axis.size());
    return result;
}

VoteJoint vote_joint(const Group& group, const Population& pop, std::string_view measure) {
    if (group.members.size() < 2) throw ScoreError("vote_joint: group has fewer than 2 members");
    std::vector<double> mu_buf, g_buf;
    return vote_joint_over(pop.gaps(), pop.measure(measure).values, group.members, mu_buf, g_buf);
}

CmiBreakdown cond_mi(const Population& pop, std::string_view measure, std::span<const std::string> cond,
                     GroupWeighting weighting) {
    std::vector<int> axes;
    for (const auto& name : cond) {
        const int idx = pop.space().axis_index(name);
        if (idx < 0) throw ScoreError("unknown axis '" + name + "' in conditioning set");
        axes.push_back(idx);
    }
    std::sort(axes.begin(), axes.end());
    if (std::adjacent_find(axes.begin(), axes.end()) != axes.end())
        throw ScoreError("duplicate axis in conditioning set");
    auto bd = cond_mi_axes(pop, pop.measure(measure).values, axes, weighting);
    if (!bd) {
        std::vector<std::string> names(cond.begin(), cond.end());
        throw ScoreError("conditioning set " + join_names(names) + ": every group has fewer than 2 models");
    }
    return *bd;
}

Metric2Result metric2_task(const Population& pop, std::string_view measure, int k_max,
                           GroupWeighting weighting, int threads) {
    if (k_max < 0) throw ScoreError("k_max must be non-negative");
    const auto& mu = pop.measure(measure).values;

    std::vector<int> eligible;
    for (int a = 0; a < pop.space().axis_count(); ++a)
        if (pop.space().cardinality(a) >= 2) eligible.push_back(a);

    const auto sets = enumerate_cond_sets(eligible, k_max);
    std::vector<std::optional<CmiBreakdown>> evaluated(sets.size());
    parallel_for(static_cast<int>(sets.size()), threads,
                 [&](int i) { evaluated[static_cast<std::size_t>(i)] = cond_mi_axes(pop, mu, sets[static_cast<std::size_t>(i)], weighting); });

    Metric2Result result;
    int best = -1;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (!evaluated[i]) {
            std::vector<std::string> names;
            for (int a : sets[i]) names.push_back(pop.space().axis(a).name);
            result.warnings.push_back("conditioning set " + join_names(names) +
                                      " skipped: every group has fewer than 2 models");
            continue;
        }
        const auto& bd = *evaluated[i];
        const int self = static_cast<int>(result.breakdowns.size());
        result.breakdowns.push_back(bd);
        if (best < 0) {
            best = self;
            continue;
        }
        const auto& incumbent = result.breakdowns[static_cast<std::size_t>(best)];
        if (bd.normalized < incumbent.normalized) {
            best = self;
        } else if (bd.normalized == incumbent.normalized) {
            const bool smaller = bd.cond_set.size() != incumbent.cond_set.size()
                                     ? bd.cond_set.size() < incumbent.cond_set.size()
                                     : bd.cond_set < incumbent.cond_set;
            if (smaller) best = self;
        }
    }
    if (best < 0) throw ScoreError("every conditioning set is degenerate: no group has 2 or more models");
    result.value = result.breakdowns[static_cast<std::size_t>(best)].normalized;
    result.argmin_cond_set = result.breakdowns[static_cast<std::size_t>(best)].cond_set;
    return result;
}

TaskScore score_task(const Population& pop, std::string_view measure, const ScoreOptions& opts) {
    TaskScore score;
    score.task_id = pop.task_id();
    score.psi = psi_overall(pop, measure);
    score.metric2 = metric2_task(pop, measure, opts.k_max, opts.weighting, opts.threads);
    return score;
}

MeasureReport aggregate_tasks(std::string measure, std::vector<TaskScore> tasks) {
    if (tasks.empty()) throw ScoreError("aggregate: no tasks scored");
    MeasureReport report;
    report.measure = std::move(measure);
    double psi_sum = 0.0, j_sum = 0.0;
    for (const auto& t : tasks) {
        psi_sum += t.psi.psi;
        j_sum += t.metric2.value;
    }
    report.aggregate.metric1 = psi_sum / static_cast<double>(tasks.size());
    report.aggregate.metric2 = j_sum / static_cast<double>(tasks.size());
    report.tasks = std::move(tasks);
    return report;
}

} // namespace gapscore
