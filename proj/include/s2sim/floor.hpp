#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "s2sim/error.hpp"
#include "s2sim/time.hpp"

namespace s2sim {

enum class FloorPhase { Idle, UserTurn, Processing, AgentTurn };

enum class DuplexMode { HalfDuplex, FullDuplexBargeIn };

enum class ProcessingSpeechPolicy { CancelAndRestart, QueueAsFollowUp };

struct FloorConfig {
    DuplexMode mode = DuplexMode::HalfDuplex;
    // Full duplex: audio keeps playing for this long after barge-in detection
    // before the output actually halts.
    Duration interrupt_latency{50_ms};
    bool filler_enabled = true;
    Duration filler_threshold{3000_ms};
    ProcessingSpeechPolicy processing_speech = ProcessingSpeechPolicy::CancelAndRestart;

    void validate() const {
        if (interrupt_latency.tenths < 0)
            throw ValidationError("floor config: interrupt_latency < 0");
        if (filler_threshold.tenths < 0)
            throw ValidationError("floor config: filler_threshold < 0");
    }
};

// What the floor machine tells the engine to do in response to a signal.
enum class FloorActionKind {
    None,
    BeginUserTurn,     // user holds the floor, collect the utterance
    BeginProcessing,   // utterance complete, dispatch the pipeline
    Ignored,           // half duplex: speech while the agent holds the floor
    BargeIn,           // full duplex: halt playback after interrupt_latency
    CancelAndRestart,  // speech during processing: drop request_id, restart
    QueueFollowUp,     // speech during processing: buffer it
    FollowUpReady,     // buffered follow-up utterance is complete
};

struct FloorDecision {
    FloorActionKind kind = FloorActionKind::None;
    std::uint64_t request_id = 0;  // CancelAndRestart: the request to drop
};

/// Turn-taking arbiter for one session. Consumes TurnStart/TurnEnd signals
/// plus engine lifecycle notifications and decides who holds the floor.
/// Signals must alternate (the endpointing layer guarantees this); a
/// violation throws ProtocolError rather than guessing.
class FloorMachine {
public:
    // Request ids name in-flight work across the whole run, so an engine
    // hosting several sessions supplies one shared allocator; standalone
    // machines fall back to a private counter.
    using IdSource = std::function<std::uint64_t()>;

    explicit FloorMachine(FloorConfig cfg = {}, IdSource ids = {})
        : cfg_(cfg), ids_(std::move(ids)) {
        cfg_.validate();
    }

    const FloorConfig& config() const { return cfg_; }
    FloorPhase phase() const { return phase_; }
    std::uint64_t active_request() const { return active_request_; }
    std::optional<VirtualTime> processing_entered_at() const {
        if (phase_ != FloorPhase::Processing) return std::nullopt;
        return entered_at_;
    }

    FloorDecision on_turn_start(VirtualTime t) {
        switch (phase_) {
            case FloorPhase::Idle:
                phase_ = FloorPhase::UserTurn;
                return {FloorActionKind::BeginUserTurn};
            case FloorPhase::UserTurn:
                throw ProtocolError("floor: TurnStart while user already holds the floor");
            case FloorPhase::Processing:
                if (cfg_.processing_speech == ProcessingSpeechPolicy::CancelAndRestart) {
                    const auto dropped = active_request_;
                    clear_processing();
                    phase_ = FloorPhase::UserTurn;
                    return {FloorActionKind::CancelAndRestart, dropped};
                }
                followup_open_ = true;
                return {FloorActionKind::QueueFollowUp};
            case FloorPhase::AgentTurn:
                if (cfg_.mode == DuplexMode::HalfDuplex) {
                    ++suppressed_pending_;
                    return {FloorActionKind::Ignored};
                }
                // barge-in: the user owns the floor now; the engine halts
                // playback at t + interrupt_latency
                phase_ = FloorPhase::UserTurn;
                (void)t;
                return {FloorActionKind::BargeIn};
        }
        return {};
    }

    FloorDecision on_turn_end(VirtualTime t) {
        // a TurnEnd belonging to speech we discarded earlier is discarded too
        if (suppressed_pending_ > 0) {
            --suppressed_pending_;
            return {FloorActionKind::Ignored};
        }
        if (followup_open_) {
            followup_open_ = false;
            return {FloorActionKind::FollowUpReady};
        }
        if (phase_ != FloorPhase::UserTurn)
            throw ProtocolError("floor: TurnEnd without an open user turn");
        phase_ = FloorPhase::Processing;
        entered_at_ = t;
        active_request_ = new_request_id();
        filler_emitted_ = false;
        return {FloorActionKind::BeginProcessing, active_request_};
    }

    /// Dispatch a previously buffered follow-up. Only legal from Idle.
    std::uint64_t begin_queued_processing(VirtualTime t) {
        if (phase_ != FloorPhase::Idle)
            throw ProtocolError("floor: queued processing needs an idle floor");
        phase_ = FloorPhase::Processing;
        entered_at_ = t;
        active_request_ = new_request_id();
        filler_emitted_ = false;
        return active_request_;
    }

    /// A request died without producing audio (stage error). The floor goes
    /// back to idle so the session can keep going.
    void abort_processing(std::uint64_t request_id) {
        if (phase_ != FloorPhase::Processing || request_id != active_request_)
            throw ProtocolError("floor: abort for a request that is not active");
        clear_processing();
        phase_ = FloorPhase::Idle;
    }

    void on_agent_turn_started(std::uint64_t request_id) {
        if (phase_ != FloorPhase::Processing || request_id != active_request_)
            throw ProtocolError("floor: agent turn for a request that is not active");
        clear_processing();
        phase_ = FloorPhase::AgentTurn;
    }

    void on_agent_playback_end() {
        if (phase_ != FloorPhase::AgentTurn)
            throw ProtocolError("floor: playback end outside an agent turn");
        phase_ = FloorPhase::Idle;
    }

    // Filler bridges long silent processing gaps. The engine arms a timer at
    // Processing entry; when it fires this says whether the gap is still open.
    bool should_emit_filler(VirtualTime now) const {
        if (!cfg_.filler_enabled) return false;
        if (phase_ != FloorPhase::Processing || filler_emitted_) return false;
        return now - entered_at_ >= cfg_.filler_threshold;
    }

    void mark_filler_emitted() { filler_emitted_ = true; }
    bool filler_emitted() const { return filler_emitted_; }
    std::size_t suppressed_pending() const { return suppressed_pending_; }

private:
    void clear_processing() {
        active_request_ = 0;
        filler_emitted_ = false;
    }

    std::uint64_t new_request_id() { return ids_ ? ids_() : next_request_id_++; }

    FloorConfig cfg_;
    IdSource ids_;
    FloorPhase phase_ = FloorPhase::Idle;
    VirtualTime entered_at_{};
    std::uint64_t active_request_ = 0;
    std::uint64_t next_request_id_ = 1;
    bool filler_emitted_ = false;
    bool followup_open_ = false;
    std::size_t suppressed_pending_ = 0;
};

}  // namespace s2sim
