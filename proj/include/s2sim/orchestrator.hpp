#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "s2sim/adapters.hpp"
#include "s2sim/error.hpp"
#include "s2sim/event_loop.hpp"
#include "s2sim/text.hpp"
#include "s2sim/time.hpp"

namespace s2sim {

struct TurnRequest {
    SessionId session;
    std::string transcript;
    VirtualTime t_submitted{};
    std::uint64_t request_id = 0;
};

/// Bounded-concurrency admission gate. At most `capacity` requests are in
/// flight; the rest wait in FIFO order. A slot is held from admission until
/// the response is fully synthesized (or the request is canceled).
class ConcurrencyGate {
public:
    explicit ConcurrencyGate(std::size_t capacity = 4) : capacity_(capacity) {
        if (capacity_ == 0) throw ValidationError("gate: capacity must be positive");
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t in_flight() const { return in_flight_.size(); }
    std::size_t waiting() const { return waiting_.size(); }

    /// Returns true if the request got a slot immediately; otherwise it is
    /// queued and will be returned by a later release().
    bool try_admit(std::uint64_t id) {
        if (in_flight_.count(id) ||
            std::find(waiting_.begin(), waiting_.end(), id) != waiting_.end())
            throw ValidationError("gate: duplicate request id");
        if (in_flight_.size() < capacity_) {
            in_flight_.insert(id);
            return true;
        }
        waiting_.push_back(id);
        return false;
    }

    /// Frees the slot held by `id` and admits the longest-waiting request,
    /// if any. Returns the newly admitted id.
    std::optional<std::uint64_t> release(std::uint64_t id) {
        if (in_flight_.erase(id) == 0)
            throw ValidationError("gate: release of a request not in flight");
        if (waiting_.empty()) return std::nullopt;
        auto next = waiting_.front();
        waiting_.pop_front();
        in_flight_.insert(next);
        return next;
    }

    /// Removes a request that is still waiting (canceled before admission).
    bool withdraw(std::uint64_t id) {
        auto it = std::find(waiting_.begin(), waiting_.end(), id);
        if (it == waiting_.end()) return false;
        waiting_.erase(it);
        return true;
    }

    bool holds_slot(std::uint64_t id) const { return in_flight_.count(id) > 0; }

private:
    std::size_t capacity_;
    std::unordered_set<std::uint64_t> in_flight_;
    std::deque<std::uint64_t> waiting_;
};

struct ConversationEntry {
    std::string role;  // "user" or "agent"
    std::string text;
    VirtualTime t{};
};

/// Append-only conversation history per session, with a modeled fetch cost.
class ConversationStore {
public:
    explicit ConversationStore(Duration fetch_latency = Duration{0})
        : fetch_latency_(fetch_latency) {
        if (fetch_latency_.tenths < 0)
            throw ValidationError("conversation store: negative fetch latency");
    }

    Duration fetch_latency() const { return fetch_latency_; }

    const std::vector<ConversationEntry>& history(const SessionId& session) const {
        static const std::vector<ConversationEntry> kEmpty;
        auto it = sessions_.find(session);
        return it == sessions_.end() ? kEmpty : it->second;
    }

    void append(const SessionId& session, std::string role, std::string text, VirtualTime t) {
        sessions_[session].push_back({std::move(role), std::move(text), t});
    }

    std::size_t size(const SessionId& session) const { return history(session).size(); }

private:
    Duration fetch_latency_;
    std::map<SessionId, std::vector<ConversationEntry>> sessions_;
};

struct RagChunk {
    std::string doc_id;
    std::string text;
};

struct RagConfig {
    std::vector<RagChunk> documents;
    std::size_t top_k = 3;
    Duration retrieval_overhead{0};

    void validate() const {
        if (top_k < 1) throw ValidationError("rag: top_k must be >= 1");
        if (retrieval_overhead.tenths < 0) throw ValidationError("rag: negative overhead");
    }
};

struct RetrievalResult {
    std::vector<RagChunk> chunks;
    Duration overhead{0};
};

/// Keyword retrieval: documents ranked by how many distinct normalized query
/// tokens they share. Documents sharing nothing are not "relevant" and are
/// never returned; ties resolve by ascending doc_id. The overhead is the same
/// constant for every query.
inline RetrievalResult retrieve(const RagConfig& rag, const std::string& query) {
    rag.validate();
    RetrievalResult out;
    out.overhead = rag.retrieval_overhead;

    const auto query_tokens = normalize_tokens(query);
    const std::set<std::string> query_set(query_tokens.begin(), query_tokens.end());

    struct Scored {
        std::size_t overlap;
        const RagChunk* chunk;
    };
    std::vector<Scored> scored;
    for (const auto& doc : rag.documents) {
        const auto doc_tokens = normalize_tokens(doc.text);
        const std::set<std::string> doc_set(doc_tokens.begin(), doc_tokens.end());
        std::size_t overlap = 0;
        for (const auto& tok : query_set) overlap += doc_set.count(tok);
        if (overlap > 0) scored.push_back({overlap, &doc});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        return a.chunk->doc_id < b.chunk->doc_id;
    });
    const std::size_t n = std::min(rag.top_k, scored.size());
    for (std::size_t i = 0; i < n; ++i) out.chunks.push_back(*scored[i].chunk);
    return out;
}

/// Prompt assembly: full history oldest-first, then retrieved chunks, then
/// the current transcript. Purely textual; the fetch cost is the store's.
inline std::string inject_context(const ConversationStore& store, const SessionId& session,
                                  const std::string& transcript,
                                  const std::vector<RagChunk>& chunks) {
    std::string prompt;
    for (const auto& entry : store.history(session)) {
        prompt += entry.role;
        prompt += ": ";
        prompt += entry.text;
        prompt += '\n';
    }
    for (const auto& chunk : chunks) {
        prompt += "[doc ";
        prompt += chunk.doc_id;
        prompt += "] ";
        prompt += chunk.text;
        prompt += '\n';
    }
    prompt += "user: ";
    prompt += transcript;
    return prompt;
}

enum class IntentClass { Phatic, Epistemic };

inline const char* to_string(IntentClass c) {
    return c == IntentClass::Phatic ? "Phatic" : "Epistemic";
}

inline std::vector<std::string> default_phatic_lexicon() {
    return {"hello",       "hi",        "hey",      "thanks", "thank you", "okay",
            "ok",          "yes",       "no",       "yep",    "bye",       "goodbye",
            "good morning", "good evening", "sure", "great",  "cool",      "right"};
}

/// Phatic when the normalized transcript is itself a lexicon phrase, or when
/// it has at most two tokens and every token is a lexicon phrase. The empty
/// transcript lands on Phatic (zero tokens, vacuously all in the lexicon),
/// routing degenerate input to the cheapest tier.
inline IntentClass classify_intent(const std::string& transcript,
                                   const std::vector<std::string>& phatic_lexicon) {
    std::set<std::string> lex;
    for (const auto& phrase : phatic_lexicon) lex.insert(join(normalize_tokens(phrase)));

    const auto tokens = normalize_tokens(transcript);
    if (lex.count(join(tokens))) return IntentClass::Phatic;
    if (tokens.size() <= 2) {
        bool all = true;
        for (const auto& tok : tokens)
            if (!lex.count(tok)) { all = false; break; }
        if (all) return IntentClass::Phatic;
    }
    return IntentClass::Epistemic;
}

struct RoutingPolicy {
    std::string phatic_tier = "Fluid";
    std::string epistemic_tier = "Precise";
};

inline const std::string& route(IntentClass intent, const RoutingPolicy& policy) {
    return intent == IntentClass::Phatic ? policy.phatic_tier : policy.epistemic_tier;
}

/// One pipeline tier: either a staged ASR(+repair)+LLM+TTS composition or a
/// single opaque end-to-end latency (the industry-benchmark profile).
struct PipelineTier {
    std::string name;
    std::optional<ComponentProfile> asr;
    std::optional<ComponentProfile> repair;
    std::optional<ComponentProfile> llm;
    std::optional<ComponentProfile> tts;
    std::optional<ComponentProfile> opaque;
    std::int64_t cost_micro_usd = 0;

    bool is_opaque() const { return opaque.has_value(); }

    void validate() const {
        if (name.empty()) throw ValidationError("tier: empty name");
        if (cost_micro_usd < 0) throw ValidationError("tier: negative cost");
        if (opaque) {
            if (asr || repair || llm || tts)
                throw ValidationError("tier '" + name + "': opaque tiers have no stages");
            return;
        }
        if (!asr || !llm || !tts)
            throw ValidationError("tier '" + name + "': staged tiers need asr, llm and tts");
    }
};

inline PipelineTier tier_fluid() {
    PipelineTier t;
    t.name = "Fluid";
    t.asr = preset_typhoon();
    t.repair = preset_flash_lite_repair();
    t.llm = preset_flash();
    t.tts = preset_tts_default();
    t.cost_micro_usd = 1000;
    return t;
}

inline PipelineTier tier_precise() {
    PipelineTier t;
    t.name = "Precise";
    t.asr = preset_google_stt_v1();
    t.llm = preset_flash();
    t.tts = preset_tts_default();
    t.cost_micro_usd = 2300;
    return t;
}

inline PipelineTier tier_reasoning() {
    PipelineTier t;
    t.name = "Reasoning";
    t.asr = preset_typhoon();
    t.repair = preset_flash_lite_repair();
    t.llm = preset_gpt5();
    t.tts = preset_tts_default();
    t.cost_micro_usd = 4600;
    return t;
}

inline PipelineTier tier_deep_reasoning() {
    PipelineTier t;
    t.name = "DeepReasoning";
    t.asr = preset_google_stt_v1();
    t.llm = preset_gpt5();
    t.tts = preset_tts_default();
    t.cost_micro_usd = 4600;
    return t;
}

inline PipelineTier tier_realtime(std::uint64_t seed = 0) {
    PipelineTier t;
    t.name = "RealtimeBenchmark";
    t.opaque = preset_gpt_realtime(seed);
    t.cost_micro_usd = 15400;
    return t;
}

class TierRegistry {
public:
    static TierRegistry with_defaults(std::uint64_t realtime_seed = 0) {
        TierRegistry r;
        r.add(tier_fluid());
        r.add(tier_precise());
        r.add(tier_reasoning());
        r.add(tier_deep_reasoning());
        r.add(tier_realtime(realtime_seed));
        return r;
    }

    void add(PipelineTier tier) {
        tier.validate();
        tiers_[tier.name] = std::move(tier);
    }

    const PipelineTier& get(const std::string& name) const {
        auto it = tiers_.find(name);
        if (it == tiers_.end()) throw ConfigError("unknown pipeline tier '" + name + "'");
        return it->second;
    }

    bool has(const std::string& name) const { return tiers_.count(name) > 0; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [name, tier] : tiers_) out.push_back(name);
        return out;
    }

private:
    std::map<std::string, PipelineTier> tiers_;
};

}  // namespace s2sim
