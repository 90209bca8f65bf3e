#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "s2sim/error.hpp"
#include "s2sim/repair.hpp"
#include "s2sim/rng.hpp"
#include "s2sim/text.hpp"
#include "s2sim/time.hpp"
#include "s2sim/vad.hpp"

namespace s2sim {

// Latency distribution for one pipeline component. The benchmark presets are
// Constant (the measurements are point estimates); Uniform and LogNormal
// exist for spread studies and carry their own seed so sampling stays
// reproducible regardless of event interleaving.
struct LatencyModel {
    enum class Kind { Constant, Uniform, LogNormal };
    Kind kind = Kind::Constant;
    Duration constant{0};
    Duration lo{0}, hi{0};        // Uniform, inclusive
    double mu = 0.0, sigma = 0.0; // LogNormal of the millisecond value
    std::uint64_t seed = 0;

    static LatencyModel constant_ms(Duration d) {
        LatencyModel m;
        m.kind = Kind::Constant;
        m.constant = d;
        return m;
    }
    static LatencyModel uniform_ms(Duration lo, Duration hi, std::uint64_t seed) {
        if (hi < lo) throw ValidationError("latency model: uniform hi < lo");
        LatencyModel m;
        m.kind = Kind::Uniform;
        m.lo = lo;
        m.hi = hi;
        m.seed = seed;
        return m;
    }
    static LatencyModel lognormal(double mu, double sigma, std::uint64_t seed) {
        LatencyModel m;
        m.kind = Kind::LogNormal;
        m.mu = mu;
        m.sigma = sigma;
        m.seed = seed;
        return m;
    }

    Duration sample(Rng& rng) const {
        switch (kind) {
            case Kind::Constant:
                return constant;
            case Kind::Uniform: {
                std::uint64_t span = static_cast<std::uint64_t>(hi.tenths - lo.tenths) + 1;
                return Duration{lo.tenths + static_cast<std::int64_t>(rng.bounded(span))};
            }
            case Kind::LogNormal: {
                // Box-Muller, hand-rolled so the stream is implementation-stable
                double u1 = rng.unit(), u2 = rng.unit();
                while (u1 <= 0.0) u1 = rng.unit();
                double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
                double ms_val = std::exp(mu + sigma * z);
                auto t = static_cast<std::int64_t>(std::llround(ms_val * 10.0));
                return Duration{t < 0 ? 0 : t};
            }
        }
        return Duration{0};
    }
};

// Inverse of the repair layer: replaces canonical jargon with a seeded-random
// known corruption, the way a fast ASR mangles code-switched terms.
struct CorruptionModel {
    PhraseSet phrase_set;
    double corruption_rate = 0.0;
    std::uint64_t seed = 0;
};

struct ComponentProfile {
    std::string name;
    LatencyModel latency;
    std::map<std::string, double> meta;          // e.g. {"wer", 0.562}
    std::optional<CorruptionModel> corruption;   // ASR only
    double stream_rate_tps = 10.0;               // LLM streaming tokens/s
    double first_token_fraction = 0.3;           // LLM streaming
    double speaking_rate_cps = 15.0;             // TTS playback chars/s
};

struct TranscriptEvent {
    std::string text;
    Duration latency{0};
};

/// Simulated ASR: sampled latency, optional canonical-term corruption, and
/// unconditional prosody drop. Losing the annotations is the structural
/// expressive-flattening effect: downstream stages only ever see text.
inline TranscriptEvent sim_asr(const std::string& utterance_text,
                               const std::vector<std::string>& /*prosody — always dropped*/,
                               const ComponentProfile& profile, Rng& rng) {
    TranscriptEvent out;
    out.latency = profile.latency.sample(rng);
    out.text = utterance_text;
    if (profile.corruption && profile.corruption->corruption_rate > 0.0 &&
        !profile.corruption->phrase_set.entries.empty()) {
        const auto& cm = *profile.corruption;
        // token n-gram scan for canonical occurrences, longest span first
        auto tokens = split_ws(out.text);
        std::vector<std::string> rebuilt;
        std::size_t i = 0;
        while (i < tokens.size()) {
            const PhraseEntry* hit = nullptr;
            std::size_t span = 0;
            for (const auto& entry : cm.phrase_set.entries) {
                auto canon_toks = split_ws(entry.canonical);
                if (canon_toks.empty() || i + canon_toks.size() > tokens.size()) continue;
                bool eq = true;
                for (std::size_t k = 0; k < canon_toks.size(); ++k)
                    if (to_lower(tokens[i + k]) != to_lower(canon_toks[k])) { eq = false; break; }
                if (eq && canon_toks.size() > span) {
                    hit = &entry;
                    span = canon_toks.size();
                }
            }
            if (hit && rng.unit() < cm.corruption_rate) {
                const auto& variant = hit->variants[rng.bounded(hit->variants.size())];
                rebuilt.push_back(variant);
                i += span;
            } else if (hit) {
                for (std::size_t k = 0; k < span; ++k) rebuilt.push_back(tokens[i + k]);
                i += span;
            } else {
                rebuilt.push_back(tokens[i]);
                i += 1;
            }
        }
        out.text = join(rebuilt);
    }
    return out;
}

struct LlmResponse {
    std::string text;
    Duration total{0};             // sampled total latency
    Duration first_token{0};       // offset of first token (streaming)
    std::vector<std::pair<Duration, std::string>> tokens;  // (offset, text), streaming only
};

enum class LlmMode { Batch, Streaming };

/// Simulated LLM: canned template response after a sampled latency. Streaming
/// emits the first token at first_token_fraction of the total and the rest at
/// stream_rate; token texts concatenate back to the full response.
inline LlmResponse sim_llm(const std::string& response_text, const ComponentProfile& profile,
                           Rng& rng, LlmMode mode) {
    LlmResponse out;
    out.text = response_text;
    out.total = profile.latency.sample(rng);
    if (mode == LlmMode::Batch) {
        out.first_token = out.total;
        return out;
    }
    // split into word tokens, whitespace kept on the preceding token
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < response_text.size()) {
        std::size_t j = i;
        while (j < response_text.size() && !is_space(response_text[j])) ++j;
        while (j < response_text.size() && is_space(response_text[j])) ++j;
        parts.push_back(response_text.substr(i, j - i));
        i = j;
    }
    if (parts.empty()) parts.push_back("");
    out.first_token =
        Duration{static_cast<std::int64_t>(std::llround(profile.first_token_fraction *
                                                        static_cast<double>(out.total.tenths)))};
    const auto gap = Duration{static_cast<std::int64_t>(
        std::llround(10000.0 / (profile.stream_rate_tps <= 0 ? 10.0 : profile.stream_rate_tps)))};
    Duration at = out.first_token;
    for (auto& p : parts) {
        out.tokens.emplace_back(at, std::move(p));
        at += gap;
    }
    return out;
}

struct AudioOut {
    Duration synthesis_latency{0};
    Duration playback_duration{0};
};

/// Simulated TTS for one chunk: sampled synthesis latency plus a playback
/// duration of ceil(chars / speaking_rate) seconds-worth of audio.
inline AudioOut sim_tts(const std::string& chunk_text, const ComponentProfile& profile, Rng& rng) {
    if (chunk_text.empty()) throw ValidationError("sim_tts: empty chunk");
    AudioOut out;
    out.synthesis_latency = profile.latency.sample(rng);
    const double cps = profile.speaking_rate_cps <= 0 ? 15.0 : profile.speaking_rate_cps;
    const double tenths = static_cast<double>(chunk_text.size()) * 10000.0 / cps;
    out.playback_duration = Duration{static_cast<std::int64_t>(std::ceil(tenths / 10.0)) * 10};
    return out;
}

// Table of per-turn costs in micro-USD, keyed by tier name.
struct CostModel {
    std::map<std::string, std::int64_t> cost_micro_usd = {
        {"Fluid", 1000},
        {"Precise", 2300},
        {"Reasoning", 4600},
        {"DeepReasoning", 4600},
        {"RealtimeBenchmark", 15400},
    };

    std::int64_t micro_usd(const std::string& tier_name) const {
        auto it = cost_micro_usd.find(tier_name);
        if (it == cost_micro_usd.end())
            throw ValidationError("cost model: unknown tier '" + tier_name + "'");
        if (it->second < 0) throw ValidationError("cost model: negative cost");
        return it->second;
    }
};

inline double cost_of_turn_usd(const std::string& tier_name, const CostModel& model) {
    return static_cast<double>(model.micro_usd(tier_name)) / 1e6;
}

// ---- benchmark presets ----

inline ComponentProfile preset_typhoon() {
    ComponentProfile p;
    p.name = "typhoon";
    p.latency = LatencyModel::constant_ms(417.1_ms);
    p.meta["wer"] = 0.562;
    return p;
}

inline ComponentProfile preset_google_stt_v1() {
    ComponentProfile p;
    p.name = "google-stt-v1";
    p.latency = LatencyModel::constant_ms(2457.2_ms);
    p.meta["wer"] = 0.243;
    return p;
}

inline ComponentProfile preset_flash() {
    ComponentProfile p;
    p.name = "flash";
    p.latency = LatencyModel::constant_ms(1148.6_ms);
    return p;
}

inline ComponentProfile preset_flash_lite_repair() {
    ComponentProfile p;
    p.name = "flash-lite-repair";
    p.latency = LatencyModel::constant_ms(623.0_ms);
    p.meta["correction_score"] = 0.85;
    return p;
}

inline ComponentProfile preset_gpt5() {
    ComponentProfile p;
    p.name = "gpt5";
    p.latency = LatencyModel::constant_ms(5264.1_ms);
    return p;
}

inline ComponentProfile preset_tts_default() {
    ComponentProfile p;
    p.name = "tts-default";
    p.latency = LatencyModel::constant_ms(450.0_ms);
    return p;
}

inline ComponentProfile preset_gpt_realtime(std::uint64_t seed = 0) {
    ComponentProfile p;
    p.name = "gpt-realtime";
    p.latency = LatencyModel::uniform_ms(4000_ms, 6000_ms, seed);
    return p;
}

inline std::optional<ComponentProfile> find_preset(const std::string& name,
                                                   std::uint64_t seed = 0) {
    if (name == "typhoon") return preset_typhoon();
    if (name == "google-stt-v1") return preset_google_stt_v1();
    if (name == "flash") return preset_flash();
    if (name == "flash-lite-repair") return preset_flash_lite_repair();
    if (name == "gpt5") return preset_gpt5();
    if (name == "tts-default") return preset_tts_default();
    if (name == "gpt-realtime") return preset_gpt_realtime(seed);
    return std::nullopt;
}

}  // namespace s2sim
