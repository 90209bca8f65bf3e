#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "s2sim/adapters.hpp"
#include "s2sim/aggregator.hpp"
#include "s2sim/config.hpp"
#include "s2sim/error.hpp"
#include "s2sim/event_loop.hpp"
#include "s2sim/floor.hpp"
#include "s2sim/orchestrator.hpp"
#include "s2sim/repair.hpp"
#include "s2sim/report.hpp"
#include "s2sim/rng.hpp"
#include "s2sim/trace.hpp"
#include "s2sim/vad.hpp"

namespace s2sim {

// Timeline entry for assertions and debugging; the report carries the
// numbers, this carries the order of things.
struct EngineLogEntry {
    VirtualTime t{};
    std::string kind;
    SessionId session;
    std::uint64_t request = 0;
    std::string detail;
};

/// Runs a full trace against the configured stack on one event loop.
/// Deterministic: same trace, config and seed give the same report and log.
class ScenarioEngine {
public:
    explicit ScenarioEngine(RunConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    Report run(const std::vector<TraceEvent>& trace) {
        loop_ = std::make_unique<EventLoop>();
        sessions_.clear();
        requests_.clear();
        rngs_.clear();
        next_request_id_ = 1;
        report_ = Report{};
        log_.clear();
        store_ = ConversationStore(cfg_.context_fetch);
        gate_ = std::make_unique<ConcurrencyGate>(cfg_.gate_capacity);

        for (const auto& ev : trace) {
            schedule_at(ev.t, ev.session, [this, ev] { on_trace_event(ev); });
        }
        loop_->run_until_idle();
        return report_;
    }

    const std::vector<EngineLogEntry>& log() const { return log_; }
    const ConversationStore& store() const { return store_; }
    const RunConfig& config() const { return cfg_; }

private:
    struct TurnCtx {
        std::uint64_t request = 0;
        SessionId session;
        int turn_index = 0;
        std::string tier;
        std::string raw_text;
        std::vector<std::string> prosody;
        VirtualTime t0{};          // processing entry (TurnEnd detection)
        VirtualTime admitted_at{};
        std::size_t row = 0;       // index into report_.turns
        std::vector<EventId> pending;
        bool done = false;
        // streaming state
        std::optional<Aggregator> agg;
        std::optional<EventId> staleness_event;
        VirtualTime llm_start{};
        std::string response_text;
        bool stream_done = false;
        std::size_t chunks_total = 0;
        std::size_t chunks_ready = 0;
        std::size_t chunks_played = 0;
        bool first_audio = false;
        VirtualTime channel_free{};
    };

    struct SessionState {
        SessionId id;
        FloorMachine floor;
        std::optional<VadDetector> vad;
        std::string pending_text;
        std::vector<std::string> pending_prosody;
        std::string followup_text;
        std::vector<std::string> followup_prosody;
        int turns_started = 0;
        std::uint64_t playing_request = 0;
        std::deque<std::pair<std::string, std::vector<std::string>>> followups;
        std::deque<std::string> barge_retry;  // half-duplex: the user persists
    };

    // ---- plumbing ----

    SessionState& session(const SessionId& id) {
        auto it = sessions_.find(id);
        if (it == sessions_.end()) {
            it = sessions_.try_emplace(id).first;
            it->second.id = id;
            // one id space for the whole run: requests_ is keyed by these
            it->second.floor =
                FloorMachine(cfg_.floor, [this] { return next_request_id_++; });
        }
        return it->second;
    }

    TurnCtx& ctx_of(std::uint64_t request) {
        auto it = requests_.find(request);
        if (it == requests_.end())
            throw ProtocolError("engine: unknown request id " + std::to_string(request));
        return it->second;
    }

    Rng& rng_for(const SessionId& session, const ComponentProfile& profile) {
        const std::string key = session + "\x1f" + profile.name;
        auto it = rngs_.find(key);
        if (it == rngs_.end()) {
            auto seed = mix_seed(mix_seed(cfg_.seed, profile.latency.seed), hash_str(key));
            it = rngs_.emplace(key, Rng(seed)).first;
        }
        return it->second;
    }

    EventId schedule_at(VirtualTime t, const SessionId& session, std::function<void()> fn) {
        const auto now = loop_->now();
        const Duration delay = t >= now ? t - now : Duration{0};
        return loop_->schedule(delay, session, std::move(fn));
    }

    EventId schedule_in(Duration delay, TurnCtx& ctx, std::function<void()> fn) {
        auto id = loop_->schedule(delay, ctx.session, std::move(fn));
        ctx.pending.push_back(id);
        return id;
    }

    void forget_event(TurnCtx& ctx, EventId id) {
        for (auto it = ctx.pending.begin(); it != ctx.pending.end(); ++it) {
            if (*it == id) {
                ctx.pending.erase(it);
                return;
            }
        }
    }

    void note(const char* kind, const SessionId& session, std::uint64_t request,
              std::string detail = {}) {
        log_.push_back({loop_->now(), kind, session, request, std::move(detail)});
    }

    // ---- trace dispatch ----

    void on_trace_event(const TraceEvent& ev) {
        auto& ss = session(ev.session);
        switch (ev.kind) {
            case TraceKind::Frame: {
                if (!ss.vad) ss.vad.emplace(cfg_.vad);
                AudioFrame frame{ev.t, ev.session, ev.vad_raw, ev.gain, ev.prosody};
                frame = normalize_frame(frame, cfg_.target_gain);
                if (auto sig = ss.vad->step(frame)) {
                    if (sig->kind == FloorSignalKind::TurnStart)
                        handle_turn_start(ss, sig->t, "", {}, false);
                    else
                        handle_turn_end(ss, sig->t);
                }
                break;
            }
            case TraceKind::Utterance: {
                handle_turn_start(ss, ev.t, ev.text, ev.prosody, false);
                const auto t_end = ev.t + ev.duration;
                schedule_at(t_end, ev.session,
                            [this, id = ev.session, t_end] { handle_turn_end(session(id), t_end); });
                break;
            }
            case TraceKind::BargeIn: {
                handle_turn_start(ss, ev.t, ev.text, ev.prosody, true);
                handle_turn_end(ss, ev.t);
                break;
            }
            case TraceKind::End:
                note("trace_end", ev.session, 0);
                break;
        }
    }

    void handle_turn_start(SessionState& ss, VirtualTime t, const std::string& text,
                           const std::vector<std::string>& prosody, bool is_barge) {
        const auto d = ss.floor.on_turn_start(t);
        switch (d.kind) {
            case FloorActionKind::BeginUserTurn:
                ss.pending_text = text;
                ss.pending_prosody = prosody;
                note("turn_start", ss.id, 0);
                break;
            case FloorActionKind::Ignored:
                note("speech_ignored", ss.id, 0, "half-duplex gate closed");
                if (is_barge) ss.barge_retry.push_back(text);
                break;
            case FloorActionKind::CancelAndRestart:
                cancel_request(d.request_id, "superseded by new user speech");
                ss.pending_text = text;
                ss.pending_prosody = prosody;
                note("turn_start", ss.id, 0, "restart after cancel");
                break;
            case FloorActionKind::QueueFollowUp:
                ss.followup_text = text;
                ss.followup_prosody = prosody;
                note("follow_up_open", ss.id, 0);
                break;
            case FloorActionKind::BargeIn: {
                const auto victim = ss.playing_request;
                const auto halt_at = t + cfg_.floor.interrupt_latency;
                schedule_at(halt_at, ss.id, [this, sid = ss.id, victim, halt_at] {
                    halt_playback(session(sid), victim, halt_at);
                });
                ss.pending_text = text;
                ss.pending_prosody = prosody;
                note("barge_in", ss.id, victim);
                break;
            }
            case FloorActionKind::None:
            case FloorActionKind::BeginProcessing:
            case FloorActionKind::FollowUpReady:
                break;
        }
    }

    void handle_turn_end(SessionState& ss, VirtualTime t) {
        const auto d = ss.floor.on_turn_end(t);
        switch (d.kind) {
            case FloorActionKind::Ignored:
                note("speech_ignored_end", ss.id, 0);
                break;
            case FloorActionKind::FollowUpReady:
                ss.followups.emplace_back(ss.followup_text, ss.followup_prosody);
                note("follow_up_queued", ss.id, 0);
                break;
            case FloorActionKind::BeginProcessing:
                note("turn_end", ss.id, d.request_id);
                start_request(ss, d.request_id, t, ss.pending_text, ss.pending_prosody);
                break;
            default:
                break;
        }
    }

    // ---- request lifecycle ----

    void start_request(SessionState& ss, std::uint64_t request, VirtualTime t0,
                       std::string text, std::vector<std::string> prosody) {
        TurnCtx ctx;
        ctx.request = request;
        ctx.session = ss.id;
        ctx.turn_index = ss.turns_started++;
        ctx.raw_text = std::move(text);
        ctx.prosody = std::move(prosody);
        ctx.t0 = t0;

        if (auto fixed = tier_for_pipeline_key(cfg_.pipeline)) {
            ctx.tier = *fixed;
        } else {
            const auto intent = classify_intent(ctx.raw_text, cfg_.phatic_lexicon);
            ctx.tier = route(intent, cfg_.routing);
            note("routed", ss.id, request,
                 std::string(to_string(intent)) + " -> " + ctx.tier);
        }
        const auto& tier = cfg_.tiers.get(ctx.tier);

        TurnMetrics row;
        row.session = ss.id;
        row.turn_index = ctx.turn_index;
        row.tier = ctx.tier;
        row.cost_micro_usd = tier.cost_micro_usd;
        ctx.row = report_.turns.size();
        report_.turns.push_back(std::move(row));

        auto [it, inserted] = requests_.emplace(request, std::move(ctx));
        if (!inserted) throw ProtocolError("engine: request id reused");
        TurnCtx& c = it->second;

        if (cfg_.floor.filler_enabled) {
            schedule_in(cfg_.floor.filler_threshold, c,
                        [this, request] { on_filler_check(request); });
        }

        if (gate_->try_admit(request)) {
            c.admitted_at = t0;
            note("admitted", ss.id, request);
            begin_stages(c);
        } else {
            note("gate_queued", ss.id, request);
        }
    }

    void on_filler_check(std::uint64_t request) {
        auto& ctx = ctx_of(request);
        if (ctx.done) return;
        auto& ss = session(ctx.session);
        if (ss.floor.active_request() != request) return;
        if (!ss.floor.should_emit_filler(loop_->now())) return;
        ss.floor.mark_filler_emitted();
        report_.turns[ctx.row].filler_emitted = true;
        note("filler", ctx.session, request, "bridging silence");
    }

    void begin_stages(TurnCtx& ctx) {
        const auto& tier = cfg_.tiers.get(ctx.tier);
        auto& row = report_.turns[ctx.row];
        row.queue_wait = ctx.admitted_at - ctx.t0;

        if (tier.is_opaque()) {
            const auto d = tier.opaque->latency.sample(rng_for(ctx.session, *tier.opaque));
            store_.append(ctx.session, "user", ctx.raw_text, ctx.admitted_at);
            schedule_in(d, ctx, [this, request = ctx.request, d] {
                auto& c = ctx_of(request);
                auto& r = report_.turns[c.row];
                r.llm_first_token = d;
                r.llm_total = d;
                c.response_text = cfg_.fallback_response;
                on_response_synthesized(c, speak_duration(c.response_text,
                                                          tier_profile(c).speaking_rate_cps));
            });
            return;
        }

        const auto asr_ms = tier.asr->latency.sample(rng_for(ctx.session, *tier.asr));
        schedule_in(asr_ms, ctx, [this, request = ctx.request, asr_ms] {
            on_asr_done(ctx_of(request), asr_ms);
        });
    }

    void on_asr_done(TurnCtx& ctx, Duration asr_ms) {
        const auto& tier = cfg_.tiers.get(ctx.tier);
        auto& row = report_.turns[ctx.row];
        row.asr = asr_ms;

        const auto transcript =
            sim_asr(ctx.raw_text, ctx.prosody, *tier.asr, rng_for(ctx.session, *tier.asr));
        ctx.raw_text = transcript.text;

        if (tier.repair) {
            const auto repair_ms = tier.repair->latency.sample(rng_for(ctx.session, *tier.repair));
            schedule_in(repair_ms, ctx, [this, request = ctx.request, repair_ms] {
                auto& c = ctx_of(request);
                auto& r = report_.turns[c.row];
                r.repair = repair_ms;
                const auto result = repair_transcript(c.raw_text, cfg_.phrase_set, cfg_.repair);
                if (!result.substitutions.empty())
                    note("repaired", c.session, c.request,
                         std::to_string(result.substitutions.size()) + " substitution(s)");
                c.raw_text = result.corrected;
                after_transcript(c);
            });
        } else {
            after_transcript(ctx);
        }
    }

    void after_transcript(TurnCtx& ctx) {
        if (cfg_.strict_transcripts && normalize_tokens(ctx.raw_text).empty()) {
            fail_request(ctx, "empty transcript after recognition");
            return;
        }
        schedule_in(cfg_.rag.retrieval_overhead, ctx, [this, request = ctx.request] {
            auto& c = ctx_of(request);
            auto& r = report_.turns[c.row];
            r.retrieval = cfg_.rag.retrieval_overhead;
            const auto retrieved = retrieve(cfg_.rag, c.raw_text);
            c.response_text =
                retrieved.chunks.empty() ? cfg_.fallback_response : retrieved.chunks[0].text;
            if (!retrieved.chunks.empty())
                note("retrieved", c.session, c.request, retrieved.chunks[0].doc_id);

            schedule_in(store_.fetch_latency(), c, [this, request] {
                auto& c2 = ctx_of(request);
                auto& r2 = report_.turns[c2.row];
                r2.context_fetch = store_.fetch_latency();
                // prompt assembly: history is fetched, then the user turn lands in it
                (void)inject_context(store_, c2.session, c2.raw_text, {});
                store_.append(c2.session, "user", c2.raw_text, loop_->now());
                begin_llm(c2);
            });
        });
    }

    void begin_llm(TurnCtx& ctx) {
        const auto& tier = cfg_.tiers.get(ctx.tier);
        auto& rng = rng_for(ctx.session, *tier.llm);
        ctx.llm_start = loop_->now();

        if (!cfg_.streaming) {
            const auto resp = sim_llm(ctx.response_text, *tier.llm, rng, LlmMode::Batch);
            schedule_in(resp.total, ctx, [this, request = ctx.request, total = resp.total] {
                auto& c = ctx_of(request);
                auto& r = report_.turns[c.row];
                r.llm_first_token = total;
                r.llm_total = total;
                begin_batch_tts(c);
            });
            return;
        }

        const auto resp = sim_llm(ctx.response_text, *tier.llm, rng, LlmMode::Streaming);
        auto& row = report_.turns[ctx.row];
        row.llm_first_token = resp.first_token;
        ctx.agg.emplace(cfg_.chunker);
        for (const auto& [offset, token] : resp.tokens) {
            schedule_in(offset, ctx, [this, request = ctx.request, token] {
                on_stream_token(ctx_of(request), token);
            });
        }
        const auto last = resp.tokens.back().first;
        schedule_in(last, ctx, [this, request = ctx.request] {
            on_stream_flush(ctx_of(request));
        });
    }

    void begin_batch_tts(TurnCtx& ctx) {
        const auto& tier = cfg_.tiers.get(ctx.tier);
        AudioOut audio;
        try {
            audio = sim_tts(ctx.response_text, *tier.tts, rng_for(ctx.session, *tier.tts));
        } catch (const ValidationError& e) {
            fail_request(ctx, e.what());
            return;
        }
        schedule_in(audio.synthesis_latency, ctx,
                    [this, request = ctx.request, audio] {
                        auto& c = ctx_of(request);
                        report_.turns[c.row].tts_first_chunk = audio.synthesis_latency;
                        on_response_synthesized(c, audio.playback_duration);
                    });
    }

    /// Batch and opaque paths: the whole response becomes audio at once.
    void on_response_synthesized(TurnCtx& ctx, Duration playback) {
        const auto now = loop_->now();
        auto& ss = session(ctx.session);
        auto& row = report_.turns[ctx.row];

        release_slot(ctx);
        ss.floor.on_agent_turn_started(ctx.request);
        ss.playing_request = ctx.request;
        row.turn_delay = now - ctx.t0;
        note("audio_start", ctx.session, ctx.request);

        const auto end_at = now + playback;
        schedule_in(playback, ctx, [this, request = ctx.request, end_at] {
            auto& c = ctx_of(request);
            finish_playback(c, end_at);
        });
    }

    void finish_playback(TurnCtx& ctx, VirtualTime end_at) {
        auto& ss = session(ctx.session);
        auto& row = report_.turns[ctx.row];
        row.playback_end = end_at;
        ctx.done = true;
        ss.playing_request = 0;
        store_.append(ctx.session, "agent", ctx.response_text, end_at);
        note("audio_end", ctx.session, ctx.request);
        // A barge-in may already have moved the floor to the user while this
        // audio was in its interrupt-latency window; then there is no agent
        // turn left to close.
        if (ss.floor.phase() == FloorPhase::AgentTurn) {
            ss.floor.on_agent_playback_end();
            after_floor_idle(ss);
        }
    }

    // ---- streaming path ----

    void on_stream_token(TurnCtx& ctx, const std::string& token) {
        std::vector<SpeechChunk> chunks;
        try {
            chunks = ctx.agg->push_token({loop_->now(), token});
        } catch (const SimError& e) {
            fail_request(ctx, e.what());
            return;
        }
        for (const auto& c : chunks) start_chunk_tts(ctx, c.text);
        arm_staleness(ctx, true);
    }

    void on_stream_flush(TurnCtx& ctx) {
        auto& row = report_.turns[ctx.row];
        row.llm_total = loop_->now() - ctx.llm_start;
        if (auto tail = ctx.agg->flush(loop_->now())) start_chunk_tts(ctx, tail->text);
        ctx.stream_done = true;
        disarm_staleness(ctx);
        if (ctx.chunks_total == 0) {
            fail_request(ctx, "response stream produced no audio");
            return;
        }
        if (ctx.chunks_ready == ctx.chunks_total) release_slot(ctx);
    }

    void on_staleness_fire(TurnCtx& ctx) {
        ctx.staleness_event.reset();
        if (ctx.done || !ctx.agg) return;
        std::optional<SpeechChunk> chunk;
        try {
            chunk = ctx.agg->on_staleness_check(loop_->now());
        } catch (const SimError& e) {
            fail_request(ctx, e.what());
            return;
        }
        if (chunk) {
            note("stale_cut", ctx.session, ctx.request);
            start_chunk_tts(ctx, chunk->text);
        }
        // if the check deferred (protected-term prefix), the next token re-arms
        arm_staleness(ctx, chunk.has_value());
    }

    void arm_staleness(TurnCtx& ctx, bool allow_due_now) {
        disarm_staleness(ctx);
        const auto deadline = ctx.agg->next_staleness_deadline();
        if (!deadline) return;
        const auto now = loop_->now();
        if (*deadline <= now && !allow_due_now) return;
        const auto delay = *deadline > now ? *deadline - now : Duration{0};
        ctx.staleness_event = schedule_in(delay, ctx, [this, request = ctx.request] {
            auto& c = ctx_of(request);
            if (c.staleness_event) forget_event(c, *c.staleness_event);
            on_staleness_fire(c);
        });
    }

    void disarm_staleness(TurnCtx& ctx) {
        if (!ctx.staleness_event) return;
        loop_->cancel(*ctx.staleness_event);
        forget_event(ctx, *ctx.staleness_event);
        ctx.staleness_event.reset();
    }

    void start_chunk_tts(TurnCtx& ctx, const std::string& text) {
        const auto& tier = cfg_.tiers.get(ctx.tier);
        AudioOut audio;
        try {
            audio = sim_tts(text, *tier.tts, rng_for(ctx.session, *tier.tts));
        } catch (const ValidationError& e) {
            fail_request(ctx, e.what());
            return;
        }
        ctx.chunks_total += 1;
        note("chunk_cut", ctx.session, ctx.request, std::to_string(text.size()) + " chars");
        schedule_in(audio.synthesis_latency, ctx,
                    [this, request = ctx.request, playback = audio.playback_duration] {
                        on_chunk_ready(ctx_of(request), playback);
                    });
    }

    void on_chunk_ready(TurnCtx& ctx, Duration playback) {
        const auto now = loop_->now();
        auto& ss = session(ctx.session);
        auto& row = report_.turns[ctx.row];
        ctx.chunks_ready += 1;

        if (!ctx.first_audio) {
            ctx.first_audio = true;
            row.tts_first_chunk = now - ctx.llm_start;
            row.turn_delay = now - ctx.t0;
            ss.floor.on_agent_turn_started(ctx.request);
            ss.playing_request = ctx.request;
            ctx.channel_free = now;
            note("audio_start", ctx.session, ctx.request);
        }
        const auto start = ctx.channel_free > now ? ctx.channel_free : now;
        const auto end_at = start + playback;
        ctx.channel_free = end_at;
        schedule_in(end_at - now, ctx, [this, request = ctx.request, end_at] {
            on_chunk_played(ctx_of(request), end_at);
        });
        if (ctx.stream_done && ctx.chunks_ready == ctx.chunks_total) release_slot(ctx);
    }

    void on_chunk_played(TurnCtx& ctx, VirtualTime end_at) {
        auto& row = report_.turns[ctx.row];
        ctx.chunks_played += 1;
        row.playback_end = end_at;
        if (ctx.stream_done && ctx.chunks_played == ctx.chunks_total) {
            finish_playback(ctx, end_at);
        } else {
            note("chunk_played", ctx.session, ctx.request);
        }
    }

    // ---- interruption and failure ----

    void cancel_request(std::uint64_t request, const std::string& why) {
        auto& ctx = ctx_of(request);
        for (auto id : ctx.pending) loop_->cancel(id);
        ctx.pending.clear();
        ctx.staleness_event.reset();
        ctx.done = true;
        auto& row = report_.turns[ctx.row];
        row.canceled = true;
        row.turn_delay.reset();
        row.playback_end.reset();
        release_or_withdraw(ctx);
        note("canceled", ctx.session, request, why);
    }

    void fail_request(TurnCtx& ctx, const std::string& what) {
        for (auto id : ctx.pending) loop_->cancel(id);
        ctx.pending.clear();
        ctx.staleness_event.reset();
        ctx.done = true;
        auto& row = report_.turns[ctx.row];
        row.error = what;
        release_or_withdraw(ctx);
        note("turn_failed", ctx.session, ctx.request, what);

        auto& ss = session(ctx.session);
        if (ss.floor.phase() == FloorPhase::Processing &&
            ss.floor.active_request() == ctx.request) {
            // died before any audio
            row.turn_delay.reset();
            row.playback_end.reset();
            ss.floor.abort_processing(ctx.request);
            after_floor_idle(ss);
        } else if (ss.playing_request == ctx.request) {
            // died mid-stream with audio already out: end the agent turn here
            row.playback_end = loop_->now();
            ss.playing_request = 0;
            if (ss.floor.phase() == FloorPhase::AgentTurn) {
                ss.floor.on_agent_playback_end();
                after_floor_idle(ss);
            }
        } else {
            row.turn_delay.reset();
            row.playback_end.reset();
        }
    }

    void halt_playback(SessionState& ss, std::uint64_t victim, VirtualTime halt_at) {
        if (victim == 0 || ss.playing_request != victim) return;  // already over
        auto& ctx = ctx_of(victim);
        for (auto id : ctx.pending) loop_->cancel(id);
        ctx.pending.clear();
        ctx.staleness_event.reset();
        ctx.done = true;
        auto& row = report_.turns[ctx.row];
        row.playback_end = halt_at;
        release_or_withdraw(ctx);  // streaming may still hold the slot mid-synthesis
        ss.playing_request = 0;
        store_.append(ctx.session, "agent", ctx.response_text, halt_at);
        note("audio_halt", ctx.session, victim);
        // no floor transition: the barge-in already moved the floor to the user
    }

    // Idempotent: the slot is released exactly when the response is fully
    // synthesized, which streaming reaches from two different events.
    void release_slot(TurnCtx& ctx) {
        if (!gate_->holds_slot(ctx.request)) return;
        if (auto next = gate_->release(ctx.request)) admit(*next);
    }

    void release_or_withdraw(TurnCtx& ctx) {
        if (gate_->holds_slot(ctx.request)) {
            if (auto next = gate_->release(ctx.request)) admit(*next);
        } else {
            gate_->withdraw(ctx.request);
        }
    }

    void admit(std::uint64_t request) {
        auto& ctx = ctx_of(request);
        ctx.admitted_at = loop_->now();
        note("admitted", ctx.session, request,
             "waited " + format_ms(ctx.admitted_at - ctx.t0) + " ms");
        begin_stages(ctx);
    }

    /// The floor just went idle: serve anything the user tried to say while
    /// it was busy. Queued follow-ups go first, then barge-ins the half-duplex
    /// gate swallowed (the persistent user repeats themselves).
    void after_floor_idle(SessionState& ss) {
        if (ss.floor.phase() != FloorPhase::Idle) return;
        const auto now = loop_->now();
        if (!ss.followups.empty()) {
            auto [text, prosody] = ss.followups.front();
            ss.followups.pop_front();
            const auto request = ss.floor.begin_queued_processing(now);
            note("follow_up_start", ss.id, request);
            start_request(ss, request, now, text, prosody);
            return;
        }
        if (!ss.barge_retry.empty()) {
            auto text = ss.barge_retry.front();
            ss.barge_retry.pop_front();
            note("barge_retry", ss.id, 0, "user repeats after gate opens");
            handle_turn_start(ss, now, text, {}, true);
            handle_turn_end(ss, now);
        }
    }

    const ComponentProfile& tier_profile(const TurnCtx& ctx) const {
        const auto& tier = cfg_.tiers.get(ctx.tier);
        if (tier.opaque) return *tier.opaque;
        return *tier.tts;
    }

    static Duration speak_duration(const std::string& text, double cps) {
        if (cps <= 0) cps = 15.0;
        const double tenths = static_cast<double>(text.size()) * 10000.0 / cps;
        return Duration{static_cast<std::int64_t>(std::ceil(tenths / 10.0)) * 10};
    }

    RunConfig cfg_;
    std::unique_ptr<EventLoop> loop_;
    std::unique_ptr<ConcurrencyGate> gate_;
    ConversationStore store_;
    std::map<SessionId, SessionState> sessions_;
    std::unordered_map<std::uint64_t, TurnCtx> requests_;
    std::unordered_map<std::string, Rng> rngs_;
    std::uint64_t next_request_id_ = 1;
    Report report_;
    std::vector<EngineLogEntry> log_;
};

}  // namespace s2sim
