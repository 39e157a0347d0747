#include "gapscore/report_io.hpp"

#include <charconv>
#include <cstdio>

#include "gapscore/errors.hpp"

namespace gapscore {
namespace {

void append_escaped(std::string& out, std::string_view s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void append_csv_quoted(std::string& out, std::string_view s) {
    out += '"';
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
}

// Emits JSON with 2-space indentation and keys in insertion order.
class JsonWriter {
public:
    std::string take() { return std::move(out_); }

    void begin_object() { open('{'); }
    void end_object() { close('}'); }
    void begin_array() { open('['); }
    void end_array() { close(']'); }

    void key(std::string_view name) {
        separate();
        append_escaped(out_, name);
        out_ += ": ";
        pending_key_ = true;
    }

    void value(std::string_view s) {
        separate();
        append_escaped(out_, s);
    }
    void value(double v) {
        separate();
        out_ += fmt_g12(v);
    }
    void value(std::int64_t v) {
        separate();
        out_ += std::to_string(v);
    }
    void value(int v) { value(static_cast<std::int64_t>(v)); }

private:
    void open(char c) {
        separate();
        out_ += c;
        ++depth_;
        fresh_scope_ = true;
    }
    void close(char c) {
        --depth_;
        if (!fresh_scope_) {
            out_ += '\n';
            indent();
        }
        out_ += c;
        fresh_scope_ = false;
    }
    void separate() {
        if (pending_key_) {
            pending_key_ = false;
            return;
        }
        if (depth_ > 0) {
            if (!fresh_scope_) out_ += ',';
            out_ += '\n';
            indent();
        }
        fresh_scope_ = false;
    }
    void indent() {
        for (int i = 0; i < depth_ * 2; ++i) out_ += ' ';
    }

    std::string out_;
    int depth_ = 0;
    bool fresh_scope_ = false;
    bool pending_key_ = false;
};

void write_string_array(JsonWriter& w, const std::vector<std::string>& items) {
    w.begin_array();
    for (const auto& s : items) w.value(s);
    w.end_array();
}

void write_task(JsonWriter& w, const TaskScore& task) {
    w.begin_object();
    w.key("task_id");
    w.value(task.task_id);
    w.key("psi_per_axis");
    w.begin_object();
    for (const auto& pa : task.psi.per_axis) {
        w.key(pa.axis);
        w.value(pa.psi);
    }
    w.end_object();
    w.key("psi");
    w.value(task.psi.psi);
    w.key("metric2");
    w.value(task.metric2.value);
    w.key("argmin_cond_set");
    write_string_array(w, task.metric2.argmin_cond_set);
    w.key("breakdowns");
    w.begin_array();
    for (const auto& bd : task.metric2.breakdowns) {
        w.begin_object();
        w.key("cond_set");
        write_string_array(w, bd.cond_set);
        w.key("mi");
        w.value(bd.mi);
        w.key("entropy");
        w.value(bd.entropy);
        w.key("normalized");
        w.value(bd.normalized);
        w.key("groups");
        w.value(static_cast<std::int64_t>(bd.group_weights.size()));
        w.key("skipped_groups");
        w.value(bd.skipped_groups);
        w.key("group_weights");
        w.begin_array();
        for (double g : bd.group_weights) w.value(g);
        w.end_array();
        w.end_object();
    }
    w.end_array();
    w.key("warnings");
    std::vector<std::string> warnings = task.psi.warnings;
    warnings.insert(warnings.end(), task.metric2.warnings.begin(), task.metric2.warnings.end());
    write_string_array(w, warnings);
    w.end_object();
}

} // namespace

std::string fmt_g12(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

std::string to_string(GroupWeighting w) { return w == GroupWeighting::Equal ? "equal" : "pairs"; }

GroupWeighting weighting_from_string(std::string_view s) {
    if (s == "equal") return GroupWeighting::Equal;
    if (s == "pairs") return GroupWeighting::Pairs;
    throw InputError("unknown weighting '" + std::string(s) + "' (expected 'equal' or 'pairs')");
}

std::string render_report_json(const ScoreRun& run) {
    JsonWriter w;
    w.begin_object();
    w.key("schema");
    w.value(std::string_view("gapscore-report-v1"));
    w.key("k_max");
    w.value(run.k_max);
    w.key("weighting");
    w.value(to_string(run.weighting));
    w.key("measures");
    w.begin_array();
    for (const auto& m : run.measures) {
        w.begin_object();
        w.key("name");
        w.value(m.measure);
        w.key("tasks");
        w.begin_array();
        for (const auto& t : m.tasks) write_task(w, t);
        w.end_array();
        w.key("aggregate");
        w.begin_object();
        w.key("metric1");
        w.value(m.aggregate.metric1);
        w.key("metric2");
        w.value(m.aggregate.metric2);
        w.end_object();
        w.end_object();
    }
    w.end_array();
    if (run.include_timing) {
        w.key("timing");
        w.begin_object();
        w.key("parse_secs");
        w.value(run.parse_secs);
        w.key("score_secs");
        w.value(run.score_secs);
        w.end_object();
    }
    w.end_object();
    auto out = w.take();
    out += '\n';
    return out;
}

std::string render_report_csv(const ScoreRun& run) {
    std::string out = "task_id,measure,psi,metric2,argmin_cond_set\n";
    auto row = [&out](std::string_view task, std::string_view measure, double psi, double j,
                      std::string_view argmin) {
        append_csv_quoted(out, task);
        out += ',';
        append_csv_quoted(out, measure);
        out += ',';
        out += fmt_g12(psi);
        out += ',';
        out += fmt_g12(j);
        out += ',';
        append_csv_quoted(out, argmin);
        out += '\n';
    };
    for (const auto& m : run.measures) {
        for (const auto& t : m.tasks) {
            std::string argmin;
            for (std::size_t i = 0; i < t.metric2.argmin_cond_set.size(); ++i) {
                if (i) argmin += ';';
                argmin += t.metric2.argmin_cond_set[i];
            }
            row(t.task_id, m.measure, t.psi.psi, t.metric2.value, argmin);
        }
        row("aggregate", m.measure, m.aggregate.metric1, m.aggregate.metric2, "");
    }
    return out;
}

} // namespace gapscore
