#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "s2sim/error.hpp"
#include "s2sim/event_loop.hpp"
#include "s2sim/time.hpp"

namespace s2sim {

// One simulated audio frame: a voice-activity probability plus channel gain.
// Prosody tags ride along so downstream stages can observe (or drop) them.
struct AudioFrame {
    VirtualTime t;
    SessionId session;
    double vad_raw = 0.0;  // in [0,1] after normalization
    double gain = 1.0;     // linear amplitude scalar, > 0
    std::vector<std::string> prosody;
};

struct VadConfig {
    double alpha = 0.3;         // EMA coefficient, (0,1]
    double theta_start = 0.80;  // high bar to open a turn
    double theta_end = 0.40;    // lower bar to keep it
    int start_frames = 3;       // consecutive frames >= theta_start to fire TurnStart
    Duration hangover = 600_ms; // sustained silence before TurnEnd
    Duration frame_period = 20_ms;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw ValidationError("vad: alpha must be in (0,1]");
        if (!(0.0 <= theta_end && theta_end < theta_start && theta_start <= 1.0))
            throw ValidationError("vad: thresholds must satisfy 0 <= theta_end < theta_start <= 1");
        if (start_frames < 1) throw ValidationError("vad: start_frames must be >= 1");
        if (frame_period.tenths <= 0) throw ValidationError("vad: frame_period must be positive");
        if (hangover < frame_period)
            throw ValidationError("vad: hangover must be >= frame_period");
    }
};

enum class VadPhase { Silent, Arming, InTurn, Cooling };

struct VadState {
    double smoothed = 0.0;
    VadPhase phase = VadPhase::Silent;
    int arm_count = 0;              // valid in Arming, < start_frames
    Duration cooling_elapsed{0};    // valid in Cooling, < hangover
    std::optional<VirtualTime> last_t;
};

enum class FloorSignalKind { TurnStart, TurnEnd };

struct FloorSignal {
    FloorSignalKind kind;
    VirtualTime t;
    SessionId session;
};

/// Gain normalization plus probability clamping. The simulator consumes
/// probability streams, not PCM, so "uniform spectral representation" reduces
/// to making the gain uniform and the probability well-formed.
inline AudioFrame normalize_frame(AudioFrame frame, double target_gain) {
    if (!(frame.gain > 0.0))
        throw ValidationError("normalize_frame: non-positive gain");
    frame.gain = target_gain;
    frame.vad_raw = std::clamp(frame.vad_raw, 0.0, 1.0);
    return frame;
}

/// First-order exponential moving average: alpha*raw + (1-alpha)*prev.
inline double smooth(double prev, double raw, double alpha) {
    return alpha * raw + (1.0 - alpha) * prev;
}

/// One step of the endpointing state machine.
///
/// Silent -> Arming once smoothed >= theta_start; the arm counter resets to
/// zero on any sub-threshold frame (strict high-confidence start). TurnStart
/// fires on the frame where the counter reaches start_frames. In a turn,
/// smoothed <= theta_end starts the hangover; any recovery above theta_end
/// aborts it, which is what absorbs micro-pauses. TurnEnd fires on the frame
/// where accumulated sub-threshold time reaches the hangover.
inline std::pair<VadState, std::optional<FloorSignal>>
step_vad(VadState state, const AudioFrame& frame, const VadConfig& cfg) {
    if (state.last_t && frame.t <= *state.last_t)
        throw ValidationError("step_vad: out-of-order frame at t=" + format_ms(frame.t));
    state.last_t = frame.t;
    state.smoothed = smooth(state.smoothed, frame.vad_raw, cfg.alpha);

    std::optional<FloorSignal> signal;
    switch (state.phase) {
        case VadPhase::Silent:
        case VadPhase::Arming: {
            if (state.smoothed >= cfg.theta_start) {
                int count = (state.phase == VadPhase::Arming) ? state.arm_count + 1 : 1;
                if (count >= cfg.start_frames) {
                    state.phase = VadPhase::InTurn;
                    state.arm_count = 0;
                    signal = FloorSignal{FloorSignalKind::TurnStart, frame.t, frame.session};
                } else {
                    state.phase = VadPhase::Arming;
                    state.arm_count = count;
                }
            } else {
                state.phase = VadPhase::Silent;
                state.arm_count = 0;
            }
            break;
        }
        case VadPhase::InTurn: {
            if (state.smoothed <= cfg.theta_end) {
                if (cfg.frame_period >= cfg.hangover) {
                    state.phase = VadPhase::Silent;
                    signal = FloorSignal{FloorSignalKind::TurnEnd, frame.t, frame.session};
                } else {
                    state.phase = VadPhase::Cooling;
                    state.cooling_elapsed = cfg.frame_period;
                }
            }
            break;
        }
        case VadPhase::Cooling: {
            if (state.smoothed > cfg.theta_end) {
                state.phase = VadPhase::InTurn;  // micro-pause absorbed
                state.cooling_elapsed = Duration{0};
            } else {
                Duration elapsed = state.cooling_elapsed + cfg.frame_period;
                if (elapsed >= cfg.hangover) {
                    state.phase = VadPhase::Silent;
                    state.cooling_elapsed = Duration{0};
                    signal = FloorSignal{FloorSignalKind::TurnEnd, frame.t, frame.session};
                } else {
                    state.cooling_elapsed = elapsed;
                }
            }
            break;
        }
    }
    return {std::move(state), signal};
}

/// Stateful convenience wrapper around step_vad for one session's stream.
class VadDetector {
public:
    explicit VadDetector(VadConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    std::optional<FloorSignal> step(const AudioFrame& frame) {
        auto [next, signal] = step_vad(state_, frame, cfg_);
        state_ = std::move(next);
        return signal;
    }

    const VadState& state() const { return state_; }
    const VadConfig& config() const { return cfg_; }

private:
    VadConfig cfg_;
    VadState state_;
};

}  // namespace s2sim
