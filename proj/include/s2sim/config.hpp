#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "s2sim/aggregator.hpp"
#include "s2sim/error.hpp"
#include "s2sim/floor.hpp"
#include "s2sim/orchestrator.hpp"
#include "s2sim/repair.hpp"
#include "s2sim/vad.hpp"

namespace s2sim {

// Everything a scenario run needs besides the trace. Every field has a
// default, so "{}" is a valid config file.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string pipeline = "route";  // fluid|precise|reasoning|deep-reasoning|realtime|route
    bool streaming = false;
    FloorConfig floor;
    VadConfig vad;
    double target_gain = 1.0;
    ChunkPolicy chunker;
    PhraseSet phrase_set;
    RepairConfig repair;
    RagConfig rag;
    Duration context_fetch{0};
    std::size_t gate_capacity = 4;
    std::vector<std::string> phatic_lexicon = default_phatic_lexicon();
    RoutingPolicy routing;
    TierRegistry tiers = TierRegistry::with_defaults();
    std::string fallback_response = "I do not have that information.";
    bool strict_transcripts = false;

    void validate() const {
        vad.validate();
        floor.validate();
        chunker.validate();
        phrase_set.validate();
        repair.validate();
        rag.validate();
        if (gate_capacity == 0) throw ConfigError("gate_capacity must be >= 1");
        if (!(target_gain > 0.0)) throw ConfigError("target_gain must be > 0");
        if (context_fetch.tenths < 0) throw ConfigError("context_fetch_ms must be >= 0");
    }
};

/// Maps a CLI pipeline key to the tier it selects; "route" means per-turn
/// hybrid routing.
inline std::optional<std::string> tier_for_pipeline_key(const std::string& key) {
    if (key == "route") return std::nullopt;
    if (key == "fluid") return "Fluid";
    if (key == "precise") return "Precise";
    if (key == "reasoning") return "Reasoning";
    if (key == "deep-reasoning") return "DeepReasoning";
    if (key == "realtime") return "RealtimeBenchmark";
    throw ConfigError("unknown pipeline '" + key + "'");
}

namespace detail {

inline Duration cfg_ms(const nlohmann::json& v, const std::string& field) {
    if (v.is_number_integer()) return duration_from_ms(v.get<std::int64_t>());
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(field + " is not finite");
        return duration_from_ms(d);
    }
    throw ConfigError(field + " must be a number");
}

inline LatencyModel parse_latency(const nlohmann::json& j, std::uint64_t default_seed) {
    if (j.is_number()) return LatencyModel::constant_ms(cfg_ms(j, "latency_ms"));
    if (!j.is_object()) throw ConfigError("latency must be a number or object");
    const auto kind = j.value("kind", std::string("constant"));
    const auto seed = j.value("seed", default_seed);
    if (kind == "constant") {
        if (!j.contains("ms")) throw ConfigError("constant latency needs ms");
        return LatencyModel::constant_ms(cfg_ms(j.at("ms"), "latency.ms"));
    }
    if (kind == "uniform") {
        if (!j.contains("lo_ms") || !j.contains("hi_ms"))
            throw ConfigError("uniform latency needs lo_ms and hi_ms");
        return LatencyModel::uniform_ms(cfg_ms(j.at("lo_ms"), "latency.lo_ms"),
                                        cfg_ms(j.at("hi_ms"), "latency.hi_ms"), seed);
    }
    if (kind == "lognormal") {
        if (!j.contains("mu") || !j.contains("sigma"))
            throw ConfigError("lognormal latency needs mu and sigma");
        return LatencyModel::lognormal(j.at("mu").get<double>(), j.at("sigma").get<double>(),
                                       seed);
    }
    throw ConfigError("unknown latency kind '" + kind + "'");
}

inline PhraseSet parse_phrase_set(const nlohmann::json& j) {
    PhraseSet ps;
    if (!j.is_array()) throw ConfigError("phrase_set must be an array");
    for (const auto& entry : j) {
        PhraseEntry pe;
        pe.canonical = entry.at("canonical").get<std::string>();
        for (const auto& v : entry.at("variants")) pe.variants.push_back(v.get<std::string>());
        ps.entries.push_back(std::move(pe));
    }
    ps.validate();
    return ps;
}

inline ComponentProfile parse_profile(const nlohmann::json& j, const PhraseSet& shared_phrases,
                                      std::uint64_t default_seed) {
    if (j.is_string()) {
        auto preset = find_preset(j.get<std::string>(), default_seed);
        if (!preset) throw ConfigError("unknown profile preset '" + j.get<std::string>() + "'");
        return *preset;
    }
    if (!j.is_object()) throw ConfigError("profile must be a preset name or object");

    ComponentProfile p;
    if (j.contains("preset")) {
        auto preset = find_preset(j.at("preset").get<std::string>(), default_seed);
        if (!preset)
            throw ConfigError("unknown profile preset '" +
                              j.at("preset").get<std::string>() + "'");
        p = *preset;
    }
    if (j.contains("name")) p.name = j.at("name").get<std::string>();
    if (p.name.empty()) throw ConfigError("profile needs a name or preset");
    if (j.contains("latency")) p.latency = parse_latency(j.at("latency"), default_seed);
    if (j.contains("meta"))
        for (auto it = j.at("meta").begin(); it != j.at("meta").end(); ++it)
            p.meta[it.key()] = it.value().get<double>();
    if (j.contains("stream_rate_tps")) p.stream_rate_tps = j.at("stream_rate_tps").get<double>();
    if (j.contains("first_token_fraction"))
        p.first_token_fraction = j.at("first_token_fraction").get<double>();
    if (j.contains("speaking_rate_cps"))
        p.speaking_rate_cps = j.at("speaking_rate_cps").get<double>();
    if (j.contains("corruption")) {
        const auto& c = j.at("corruption");
        CorruptionModel cm;
        cm.corruption_rate = c.value("rate", 0.0);
        if (cm.corruption_rate < 0.0 || cm.corruption_rate > 1.0)
            throw ConfigError("corruption rate must be in [0,1]");
        cm.seed = c.value("seed", default_seed);
        if (c.contains("phrase_set"))
            cm.phrase_set = parse_phrase_set(c.at("phrase_set"));
        else
            cm.phrase_set = shared_phrases;
        p.corruption = cm;
    }
    return p;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.pipeline = j.value("pipeline", cfg.pipeline);
        tier_for_pipeline_key(cfg.pipeline);  // validates the key
        cfg.streaming = j.value("streaming", cfg.streaming);

        if (j.contains("mode")) {
            const auto mode = j.at("mode").get<std::string>();
            if (mode == "half")
                cfg.floor.mode = DuplexMode::HalfDuplex;
            else if (mode == "full")
                cfg.floor.mode = DuplexMode::FullDuplexBargeIn;
            else
                throw ConfigError("mode must be 'half' or 'full'");
        }
        if (j.contains("interrupt_latency_ms"))
            cfg.floor.interrupt_latency =
                detail::cfg_ms(j.at("interrupt_latency_ms"), "interrupt_latency_ms");
        if (j.contains("filler")) {
            const auto& f = j.at("filler");
            cfg.floor.filler_enabled = f.value("enabled", cfg.floor.filler_enabled);
            if (f.contains("threshold_ms"))
                cfg.floor.filler_threshold =
                    detail::cfg_ms(f.at("threshold_ms"), "filler.threshold_ms");
        }
        if (j.contains("processing_speech")) {
            const auto ps = j.at("processing_speech").get<std::string>();
            if (ps == "cancel_and_restart")
                cfg.floor.processing_speech = ProcessingSpeechPolicy::CancelAndRestart;
            else if (ps == "queue_as_follow_up")
                cfg.floor.processing_speech = ProcessingSpeechPolicy::QueueAsFollowUp;
            else
                throw ConfigError("processing_speech must be cancel_and_restart or "
                                  "queue_as_follow_up");
        }

        if (j.contains("vad")) {
            const auto& v = j.at("vad");
            cfg.vad.alpha = v.value("alpha", cfg.vad.alpha);
            cfg.vad.theta_start = v.value("theta_start", cfg.vad.theta_start);
            cfg.vad.theta_end = v.value("theta_end", cfg.vad.theta_end);
            cfg.vad.start_frames = v.value("start_frames", cfg.vad.start_frames);
            if (v.contains("hangover_ms"))
                cfg.vad.hangover = detail::cfg_ms(v.at("hangover_ms"), "vad.hangover_ms");
            if (v.contains("frame_period_ms"))
                cfg.vad.frame_period =
                    detail::cfg_ms(v.at("frame_period_ms"), "vad.frame_period_ms");
            cfg.target_gain = v.value("target_gain", cfg.target_gain);
        }

        if (j.contains("chunker")) {
            const auto& c = j.at("chunker");
            cfg.chunker.min_chars = c.value("min_chars", cfg.chunker.min_chars);
            cfg.chunker.max_chars = c.value("max_chars", cfg.chunker.max_chars);
            cfg.chunker.delimiters = c.value("delimiters", cfg.chunker.delimiters);
            if (c.contains("max_buffer_wait_ms"))
                cfg.chunker.max_buffer_wait =
                    detail::cfg_ms(c.at("max_buffer_wait_ms"), "chunker.max_buffer_wait_ms");
            if (c.contains("protected_lexicon")) {
                cfg.chunker.protected_lexicon.clear();
                for (const auto& t : c.at("protected_lexicon"))
                    cfg.chunker.protected_lexicon.push_back(t.get<std::string>());
            }
            cfg.chunker.continuous_script =
                c.value("continuous_script", cfg.chunker.continuous_script);
        }

        if (j.contains("phrase_set")) cfg.phrase_set = detail::parse_phrase_set(j.at("phrase_set"));
        // by default the chunker protects the same jargon the repair layer knows
        if (!j.contains("chunker") ||
            !j.at("chunker").contains("protected_lexicon")) {
            if (cfg.chunker.protected_lexicon.empty())
                for (const auto& e : cfg.phrase_set.entries)
                    cfg.chunker.protected_lexicon.push_back(e.canonical);
        }

        if (j.contains("repair")) {
            const auto& r = j.at("repair");
            cfg.repair.max_norm_edit_distance =
                r.value("max_norm_edit_distance", cfg.repair.max_norm_edit_distance);
            if (r.contains("latency_ms"))
                cfg.repair.latency = detail::cfg_ms(r.at("latency_ms"), "repair.latency_ms");
            cfg.repair.max_window_tokens =
                r.value("max_window_tokens", cfg.repair.max_window_tokens);
        }

        if (j.contains("rag")) {
            const auto& r = j.at("rag");
            cfg.rag.top_k = r.value("top_k", cfg.rag.top_k);
            if (r.contains("retrieval_overhead_ms"))
                cfg.rag.retrieval_overhead =
                    detail::cfg_ms(r.at("retrieval_overhead_ms"), "rag.retrieval_overhead_ms");
            if (r.contains("documents")) {
                for (const auto& d : r.at("documents"))
                    cfg.rag.documents.push_back(
                        {d.at("doc_id").get<std::string>(), d.at("text").get<std::string>()});
            }
        }
        if (j.contains("context_fetch_ms"))
            cfg.context_fetch = detail::cfg_ms(j.at("context_fetch_ms"), "context_fetch_ms");
        cfg.gate_capacity = j.value("gate_capacity", cfg.gate_capacity);

        if (j.contains("phatic_lexicon")) {
            cfg.phatic_lexicon.clear();
            for (const auto& p : j.at("phatic_lexicon"))
                cfg.phatic_lexicon.push_back(p.get<std::string>());
        }
        if (j.contains("routing")) {
            const auto& r = j.at("routing");
            cfg.routing.phatic_tier = r.value("phatic", cfg.routing.phatic_tier);
            cfg.routing.epistemic_tier = r.value("epistemic", cfg.routing.epistemic_tier);
        }

        cfg.tiers = TierRegistry::with_defaults(cfg.seed);
        if (j.contains("tiers")) {
            for (auto it = j.at("tiers").begin(); it != j.at("tiers").end(); ++it) {
                const auto& t = it.value();
                PipelineTier tier;
                if (cfg.tiers.has(it.key())) tier = cfg.tiers.get(it.key());
                tier.name = it.key();
                if (t.contains("asr"))
                    tier.asr = detail::parse_profile(t.at("asr"), cfg.phrase_set, cfg.seed);
                if (t.contains("repair")) {
                    if (t.at("repair").is_null())
                        tier.repair.reset();
                    else
                        tier.repair =
                            detail::parse_profile(t.at("repair"), cfg.phrase_set, cfg.seed);
                }
                if (t.contains("llm"))
                    tier.llm = detail::parse_profile(t.at("llm"), cfg.phrase_set, cfg.seed);
                if (t.contains("tts"))
                    tier.tts = detail::parse_profile(t.at("tts"), cfg.phrase_set, cfg.seed);
                if (t.contains("opaque")) {
                    tier.opaque =
                        detail::parse_profile(t.at("opaque"), cfg.phrase_set, cfg.seed);
                    tier.asr.reset();
                    tier.repair.reset();
                    tier.llm.reset();
                    tier.tts.reset();
                }
                if (t.contains("cost_usd"))
                    tier.cost_micro_usd = static_cast<std::int64_t>(
                        std::llround(t.at("cost_usd").get<double>() * 1e6));
                cfg.tiers.add(std::move(tier));
            }
        }

        cfg.fallback_response = j.value("fallback_response", cfg.fallback_response);
        cfg.strict_transcripts = j.value("strict_transcripts", cfg.strict_transcripts);
        cfg.validate();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const ValidationError& e) {
        // validation failures triggered by config input are config errors
        throw ConfigError(e.what());
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace s2sim
