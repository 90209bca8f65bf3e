#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "s2sim/error.hpp"
#include "s2sim/event_loop.hpp"
#include "s2sim/time.hpp"

namespace s2sim {

enum class TraceKind { Frame, Utterance, BargeIn, End };

inline const char* to_string(TraceKind k) {
    switch (k) {
        case TraceKind::Frame: return "frame";
        case TraceKind::Utterance: return "utterance";
        case TraceKind::BargeIn: return "barge_in";
        case TraceKind::End: return "end";
    }
    return "?";
}

// One line of a JSONL input trace. barge_in carries text but no duration:
// it models an instantaneous interjection whose turn boundaries coincide.
struct TraceEvent {
    VirtualTime t{};
    SessionId session;
    TraceKind kind = TraceKind::End;
    double vad_raw = 0.0;                // frame
    double gain = 1.0;                   // frame
    std::vector<std::string> prosody;    // frame, utterance
    std::string text;                    // utterance, barge_in
    Duration duration{0};                // utterance
    std::size_t line = 0;                // 1-based source line, for diagnostics
};

namespace detail {

inline Duration json_ms(const nlohmann::json& v, std::size_t line, const char* field) {
    if (v.is_number_integer())
        return duration_from_ms(static_cast<std::int64_t>(v.get<std::int64_t>()));
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (!std::isfinite(d)) throw TraceError(line, std::string(field) + " is not finite");
        return duration_from_ms(d);
    }
    throw TraceError(line, std::string(field) + " must be a number");
}

}  // namespace detail

/// Parses and validates a JSONL trace. Events must be time-ordered within
/// each session, and a session is either frame-based or utterance-based,
/// never both: mixing raw audio frames with pre-segmented utterances would
/// make turn boundaries ambiguous.
inline std::vector<TraceEvent> parse_trace(std::istream& in) {
    std::vector<TraceEvent> events;
    std::map<SessionId, VirtualTime> last_t;
    std::map<SessionId, TraceKind> session_flavor;  // Frame or Utterance

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        // tolerate blank lines and trailing whitespace
        std::size_t start = raw.find_first_not_of(" \t\r");
        if (start == std::string::npos) continue;

        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::exception& e) {
            throw TraceError(line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object()) throw TraceError(line_no, "trace line must be a JSON object");

        TraceEvent ev;
        ev.line = line_no;
        if (!obj.contains("t_ms")) throw TraceError(line_no, "missing t_ms");
        ev.t = VirtualTime{} + detail::json_ms(obj.at("t_ms"), line_no, "t_ms");
        if (ev.t.tenths < 0) throw TraceError(line_no, "t_ms must be >= 0");
        if (!obj.contains("session") || !obj.at("session").is_string())
            throw TraceError(line_no, "missing session");
        ev.session = obj.at("session").get<std::string>();
        if (ev.session.empty()) throw TraceError(line_no, "empty session id");
        if (!obj.contains("kind") || !obj.at("kind").is_string())
            throw TraceError(line_no, "missing kind");
        const auto kind = obj.at("kind").get<std::string>();

        if (kind == "frame") {
            ev.kind = TraceKind::Frame;
            if (!obj.contains("vad_raw")) throw TraceError(line_no, "frame needs vad_raw");
            if (!obj.at("vad_raw").is_number())
                throw TraceError(line_no, "vad_raw must be a number");
            ev.vad_raw = obj.at("vad_raw").get<double>();
            if (!(ev.vad_raw >= 0.0 && ev.vad_raw <= 1.0))
                throw TraceError(line_no, "vad_raw must be in [0,1]");
            if (obj.contains("gain")) {
                if (!obj.at("gain").is_number())
                    throw TraceError(line_no, "gain must be a number");
                ev.gain = obj.at("gain").get<double>();
                if (!(ev.gain > 0.0)) throw TraceError(line_no, "gain must be > 0");
            }
        } else if (kind == "utterance") {
            ev.kind = TraceKind::Utterance;
            if (!obj.contains("text") || !obj.at("text").is_string())
                throw TraceError(line_no, "utterance needs text");
            ev.text = obj.at("text").get<std::string>();
            if (!obj.contains("duration_ms"))
                throw TraceError(line_no, "utterance needs duration_ms");
            ev.duration = detail::json_ms(obj.at("duration_ms"), line_no, "duration_ms");
            if (ev.duration.tenths < 0) throw TraceError(line_no, "duration_ms must be >= 0");
        } else if (kind == "barge_in") {
            ev.kind = TraceKind::BargeIn;
            if (!obj.contains("text") || !obj.at("text").is_string())
                throw TraceError(line_no, "barge_in needs text");
            ev.text = obj.at("text").get<std::string>();
        } else if (kind == "end") {
            ev.kind = TraceKind::End;
        } else {
            throw TraceError(line_no, "unknown kind '" + kind + "'");
        }

        if (obj.contains("prosody")) {
            const auto& p = obj.at("prosody");
            if (!p.is_array()) throw TraceError(line_no, "prosody must be an array");
            for (const auto& tag : p) {
                if (!tag.is_string())
                    throw TraceError(line_no, "prosody entries must be strings");
                ev.prosody.push_back(tag.get<std::string>());
            }
        }

        auto it = last_t.find(ev.session);
        if (it != last_t.end() && ev.t < it->second)
            throw TraceError(line_no, "time regression within session '" + ev.session + "'");
        last_t[ev.session] = ev.t;

        if (ev.kind == TraceKind::Frame || ev.kind == TraceKind::Utterance) {
            auto fl = session_flavor.find(ev.session);
            if (fl == session_flavor.end()) {
                session_flavor.emplace(ev.session, ev.kind);
            } else if (fl->second != ev.kind) {
                throw TraceError(line_no, "session '" + ev.session +
                                              "' mixes frame and utterance events");
            }
        }

        events.push_back(std::move(ev));
    }
    return events;
}

inline std::vector<TraceEvent> load_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw TraceError(0, "cannot open trace file: " + path);
    return parse_trace(f);
}

}  // namespace s2sim
