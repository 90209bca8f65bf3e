#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "s2sim/config.hpp"
#include "s2sim/engine.hpp"
#include "s2sim/report.hpp"
#include "s2sim/trace.hpp"
#include "s2sim/vad.hpp"

namespace s2sim {

inline Report run_scenario(const std::vector<TraceEvent>& trace, const RunConfig& cfg) {
    ScenarioEngine engine(cfg);
    return engine.run(trace);
}

/// Endpointing dry run: feeds a frame-only trace through gain normalization
/// and the detector, reporting the turn boundaries it would hand to the floor.
inline std::vector<FloorSignal> vad_check(const std::vector<TraceEvent>& trace,
                                          const RunConfig& cfg) {
    std::map<SessionId, VadDetector> detectors;
    std::vector<FloorSignal> signals;
    for (const auto& ev : trace) {
        if (ev.kind == TraceKind::End) continue;
        if (ev.kind != TraceKind::Frame)
            throw TraceError(ev.line, "vad-check expects a frame-only trace");
        auto it = detectors.find(ev.session);
        if (it == detectors.end()) it = detectors.emplace(ev.session, VadDetector(cfg.vad)).first;
        AudioFrame frame{ev.t, ev.session, ev.vad_raw, ev.gain, ev.prosody};
        frame = normalize_frame(frame, cfg.target_gain);
        if (auto sig = it->second.step(frame)) signals.push_back(*sig);
    }
    return signals;
}

inline nlohmann::ordered_json vad_signals_to_json(const std::vector<FloorSignal>& signals) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& s : signals) {
        nlohmann::ordered_json row;
        row["t_ms"] = s.t.tenths / 10.0;
        row["session"] = s.session;
        row["signal"] = s.kind == FloorSignalKind::TurnStart ? "turn_start" : "turn_end";
        doc.push_back(row);
    }
    return doc;
}

}  // namespace s2sim
