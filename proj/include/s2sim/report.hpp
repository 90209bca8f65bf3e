#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "s2sim/error.hpp"
#include "s2sim/event_loop.hpp"
#include "s2sim/time.hpp"

namespace s2sim {

// Per-turn accounting. Stage fields are durations; playback_end_ms is an
// absolute virtual timestamp. A canceled or failed turn has no turn_delay
// and no playback_end but still carries its cost.
struct TurnMetrics {
    SessionId session;
    int turn_index = 0;
    std::string tier;
    Duration queue_wait{0};
    Duration asr{0};
    Duration repair{0};
    Duration retrieval{0};
    Duration context_fetch{0};
    Duration llm_first_token{0};
    Duration llm_total{0};
    // Batch: synthesis time of the sole chunk, so queue+asr+repair+retrieval+
    // context+llm_total+tts_first_chunk == turn_delay exactly. Streaming: time
    // from LLM stage start to first audio ready (chunks are cut mid-stream),
    // so queue+asr+repair+retrieval+context+tts_first_chunk == turn_delay.
    Duration tts_first_chunk{0};
    std::optional<Duration> turn_delay;
    std::optional<VirtualTime> playback_end;
    bool filler_emitted = false;
    bool canceled = false;
    std::int64_t cost_micro_usd = 0;
    std::optional<std::string> error;
};

struct Report {
    std::vector<TurnMetrics> turns;
};

struct TierAggregate {
    std::string tier;
    std::int64_t cost_per_turn_micro_usd = 0;
    std::size_t turn_count = 0;       // all turns routed to this tier
    std::size_t measured_count = 0;   // turns with a turn_delay
    double mean_turn_delay_ms = 0.0;
    Duration p50_turn_delay{0};
    Duration p95_turn_delay{0};
    std::int64_t total_cost_micro_usd = 0;
};

struct Aggregates {
    bool empty = true;
    std::size_t turn_count = 0;
    std::size_t measured_count = 0;
    double mean_turn_delay_ms = 0.0;
    Duration p50_turn_delay{0};
    Duration p95_turn_delay{0};
    std::int64_t total_cost_micro_usd = 0;
    std::vector<TierAggregate> tiers;
};

namespace detail {

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest sample. Exact,
/// no interpolation; p in (0,100], values non-empty.
inline Duration nearest_rank(std::vector<Duration> values, double p) {
    if (values.empty()) throw ValidationError("percentile of empty sample");
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(values.size())));
    if (rank < 1) rank = 1;
    if (rank > values.size()) rank = values.size();
    return values[rank - 1];
}

inline int tier_rank(const std::string& name) {
    if (name == "Fluid") return 0;
    if (name == "Precise") return 1;
    if (name == "Reasoning") return 2;
    if (name == "DeepReasoning") return 3;
    if (name == "RealtimeBenchmark") return 4;
    return 5;
}

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace detail

inline Aggregates summarize(const Report& report) {
    Aggregates agg;
    agg.turn_count = report.turns.size();
    agg.empty = report.turns.empty();

    std::vector<Duration> delays;
    std::int64_t delay_tenths_sum = 0;
    std::map<std::string, TierAggregate> by_tier;
    std::map<std::string, std::vector<Duration>> tier_delays;
    std::map<std::string, std::int64_t> tier_delay_sums;

    for (const auto& t : report.turns) {
        agg.total_cost_micro_usd += t.cost_micro_usd;
        auto& ta = by_tier[t.tier];
        ta.tier = t.tier;
        ta.cost_per_turn_micro_usd = t.cost_micro_usd;
        ta.turn_count += 1;
        ta.total_cost_micro_usd += t.cost_micro_usd;
        if (t.turn_delay) {
            delays.push_back(*t.turn_delay);
            delay_tenths_sum += t.turn_delay->tenths;
            ta.measured_count += 1;
            tier_delays[t.tier].push_back(*t.turn_delay);
            tier_delay_sums[t.tier] += t.turn_delay->tenths;
        }
    }
    agg.measured_count = delays.size();
    if (!delays.empty()) {
        agg.mean_turn_delay_ms = static_cast<double>(delay_tenths_sum) /
                                 (10.0 * static_cast<double>(delays.size()));
        agg.p50_turn_delay = detail::nearest_rank(delays, 50.0);
        agg.p95_turn_delay = detail::nearest_rank(delays, 95.0);
    }
    for (auto& [name, ta] : by_tier) {
        auto it = tier_delays.find(name);
        if (it != tier_delays.end() && !it->second.empty()) {
            ta.mean_turn_delay_ms = static_cast<double>(tier_delay_sums[name]) /
                                    (10.0 * static_cast<double>(it->second.size()));
            ta.p50_turn_delay = detail::nearest_rank(it->second, 50.0);
            ta.p95_turn_delay = detail::nearest_rank(it->second, 95.0);
        }
        agg.tiers.push_back(ta);
    }
    std::stable_sort(agg.tiers.begin(), agg.tiers.end(),
                     [](const TierAggregate& a, const TierAggregate& b) {
                         int ra = detail::tier_rank(a.tier), rb = detail::tier_rank(b.tier);
                         if (ra != rb) return ra < rb;
                         return a.tier < b.tier;
                     });
    return agg;
}

inline nlohmann::ordered_json metrics_to_json(const TurnMetrics& t) {
    nlohmann::ordered_json row;
    row["session"] = t.session;
    row["turn_index"] = t.turn_index;
    row["tier"] = t.tier;
    row["queue_wait_ms"] = t.queue_wait.tenths / 10.0;
    row["asr_ms"] = t.asr.tenths / 10.0;
    row["repair_ms"] = t.repair.tenths / 10.0;
    row["retrieval_ms"] = t.retrieval.tenths / 10.0;
    row["context_fetch_ms"] = t.context_fetch.tenths / 10.0;
    row["llm_first_token_ms"] = t.llm_first_token.tenths / 10.0;
    row["llm_total_ms"] = t.llm_total.tenths / 10.0;
    row["tts_first_chunk_ms"] = t.tts_first_chunk.tenths / 10.0;
    if (t.turn_delay)
        row["turn_delay_ms"] = t.turn_delay->tenths / 10.0;
    else
        row["turn_delay_ms"] = nullptr;
    if (t.playback_end)
        row["playback_end_ms"] = t.playback_end->tenths / 10.0;
    else
        row["playback_end_ms"] = nullptr;
    row["filler_emitted"] = t.filler_emitted;
    row["canceled"] = t.canceled;
    row["cost_usd"] = static_cast<double>(t.cost_micro_usd) / 1e6;
    if (t.error)
        row["error"] = *t.error;
    else
        row["error"] = nullptr;
    return row;
}

inline nlohmann::ordered_json report_to_json(const Report& report) {
    const auto agg = summarize(report);
    nlohmann::ordered_json doc;
    doc["turns"] = nlohmann::ordered_json::array();
    for (const auto& t : report.turns) doc["turns"].push_back(metrics_to_json(t));

    nlohmann::ordered_json a;
    a["empty"] = agg.empty;
    a["turn_count"] = agg.turn_count;
    a["measured_count"] = agg.measured_count;
    if (agg.measured_count > 0) {
        a["mean_turn_delay_ms"] = agg.mean_turn_delay_ms;
        a["p50_turn_delay_ms"] = agg.p50_turn_delay.tenths / 10.0;
        a["p95_turn_delay_ms"] = agg.p95_turn_delay.tenths / 10.0;
    } else {
        a["mean_turn_delay_ms"] = nullptr;
        a["p50_turn_delay_ms"] = nullptr;
        a["p95_turn_delay_ms"] = nullptr;
    }
    a["total_cost_usd"] = static_cast<double>(agg.total_cost_micro_usd) / 1e6;
    a["tiers"] = nlohmann::ordered_json::array();
    for (const auto& ta : agg.tiers) {
        nlohmann::ordered_json row;
        row["tier"] = ta.tier;
        row["cost_per_turn_usd"] = static_cast<double>(ta.cost_per_turn_micro_usd) / 1e6;
        row["turns"] = ta.turn_count;
        row["measured"] = ta.measured_count;
        if (ta.measured_count > 0) {
            row["mean_turn_delay_ms"] = ta.mean_turn_delay_ms;
            row["p50_turn_delay_ms"] = ta.p50_turn_delay.tenths / 10.0;
            row["p95_turn_delay_ms"] = ta.p95_turn_delay.tenths / 10.0;
        } else {
            row["mean_turn_delay_ms"] = nullptr;
            row["p50_turn_delay_ms"] = nullptr;
            row["p95_turn_delay_ms"] = nullptr;
        }
        row["total_cost_usd"] = static_cast<double>(ta.total_cost_micro_usd) / 1e6;
        a["tiers"].push_back(row);
    }
    doc["aggregates"] = a;
    return doc;
}

/// Parses a serialized report back into rows (used by the `table` command).
inline Report report_from_json(const nlohmann::json& doc) {
    Report report;
    if (!doc.is_object() || !doc.contains("turns") || !doc.at("turns").is_array())
        throw ConfigError("report: missing turns array");
    for (const auto& row : doc.at("turns")) {
        TurnMetrics t;
        t.session = row.at("session").get<std::string>();
        t.turn_index = row.at("turn_index").get<int>();
        t.tier = row.value("tier", std::string{});
        auto dur = [&row](const char* key) {
            return duration_from_ms(row.at(key).get<double>());
        };
        t.queue_wait = dur("queue_wait_ms");
        t.asr = dur("asr_ms");
        t.repair = dur("repair_ms");
        t.retrieval = dur("retrieval_ms");
        t.context_fetch = dur("context_fetch_ms");
        t.llm_first_token = dur("llm_first_token_ms");
        t.llm_total = dur("llm_total_ms");
        t.tts_first_chunk = dur("tts_first_chunk_ms");
        if (!row.at("turn_delay_ms").is_null())
            t.turn_delay = duration_from_ms(row.at("turn_delay_ms").get<double>());
        if (!row.at("playback_end_ms").is_null())
            t.playback_end =
                VirtualTime{} + duration_from_ms(row.at("playback_end_ms").get<double>());
        t.filler_emitted = row.at("filler_emitted").get<bool>();
        t.canceled = row.at("canceled").get<bool>();
        t.cost_micro_usd =
            static_cast<std::int64_t>(std::llround(row.at("cost_usd").get<double>() * 1e6));
        if (row.contains("error") && !row.at("error").is_null())
            t.error = row.at("error").get<std::string>();
        report.turns.push_back(std::move(t));
    }
    return report;
}

enum class ReportFormat { Json, Csv, Table };

inline ReportFormat parse_report_format(const std::string& s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "table") return ReportFormat::Table;
    throw ConfigError("unknown report format '" + s + "'");
}

/// Renders the per-tier summary. Column order is fixed; output is
/// byte-stable for a fixed report.
inline std::string render_table(const Report& report, ReportFormat format) {
    if (format == ReportFormat::Json) return report_to_json(report).dump(2) + "\n";

    const auto agg = summarize(report);
    const char* headers[] = {"tier",       "cost_per_turn_usd",   "turns",
                             "mean_delay_ms", "p50_delay_ms",     "p95_delay_ms",
                             "total_cost_usd"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& ta : agg.tiers) {
        std::vector<std::string> row;
        row.push_back(ta.tier);
        row.push_back(detail::fixed(static_cast<double>(ta.cost_per_turn_micro_usd) / 1e6, 4));
        row.push_back(std::to_string(ta.turn_count));
        if (ta.measured_count > 0) {
            row.push_back(detail::fixed(ta.mean_turn_delay_ms, 1));
            row.push_back(detail::fixed(ta.p50_turn_delay.tenths / 10.0, 1));
            row.push_back(detail::fixed(ta.p95_turn_delay.tenths / 10.0, 1));
        } else {
            row.push_back("-");
            row.push_back("-");
            row.push_back("-");
        }
        row.push_back(detail::fixed(static_cast<double>(ta.total_cost_micro_usd) / 1e6, 4));
        rows.push_back(std::move(row));
    }

    std::string out;
    if (format == ReportFormat::Csv) {
        for (std::size_t i = 0; i < 7; ++i) {
            if (i) out += ',';
            out += headers[i];
        }
        out += '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                out += row[i];
            }
            out += '\n';
        }
        return out;
    }

    std::size_t widths[7];
    for (std::size_t i = 0; i < 7; ++i) widths[i] = std::string(headers[i]).size();
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    auto emit_row = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += "  ";
            out += cells[i];
            out.append(widths[i] - cells[i].size(), ' ');
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
    };
    emit_row({headers[0], headers[1], headers[2], headers[3], headers[4], headers[5], headers[6]});
    for (const auto& row : rows) emit_row(row);
    return out;
}

}  // namespace s2sim
