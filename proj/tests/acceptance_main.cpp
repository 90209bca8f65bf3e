// Acceptance gate: one line per criterion, nonzero exit if any fails.
// Run via ctest or directly; scenario inputs come from S2SIM_SCENARIO_DIR.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <s2sim/engine.hpp>
#include <s2sim/harness.hpp>

#include "oracles.hpp"

using namespace s2sim;

namespace {

int g_failures = 0;

void criterion(int n, const std::string& label, const std::function<bool()>& body) {
    bool ok = false;
    std::string note;
    try {
        ok = body();
    } catch (const std::exception& e) {
        note = std::string(" (") + e.what() + ")";
    }
    std::printf("%s %2d: %s%s\n", ok ? "PASS" : "FAIL", n, label.c_str(), note.c_str());
    if (!ok) ++g_failures;
}

std::string scenario(const std::string& name) {
    return std::string(S2SIM_SCENARIO_DIR) + "/" + name;
}

TraceEvent utter(double t_ms, const std::string& session, const std::string& text,
                 double dur_ms) {
    TraceEvent ev;
    ev.t = time_from_ms(t_ms);
    ev.session = session;
    ev.kind = TraceKind::Utterance;
    ev.text = text;
    ev.duration = duration_from_ms(dur_ms);
    return ev;
}

TraceEvent frame(double t_ms, const std::string& session, double raw) {
    TraceEvent ev;
    ev.t = time_from_ms(t_ms);
    ev.session = session;
    ev.kind = TraceKind::Frame;
    ev.vad_raw = raw;
    return ev;
}

RunConfig pipeline_cfg(const std::string& key) {
    RunConfig cfg;
    cfg.pipeline = key;
    return cfg;
}

TurnMetrics run_one(const std::string& key) {
    auto report =
        run_scenario({utter(0, "s", "what is the deployment status", 1000)}, pipeline_cfg(key));
    return report.turns.at(0);
}

// ---- criterion 7 helpers -------------------------------------------------

std::vector<FloorSignal> vad_run(const std::vector<double>& raws, const VadConfig& cfg) {
    VadDetector det(cfg);
    std::vector<FloorSignal> out;
    for (std::size_t i = 0; i < raws.size(); ++i) {
        AudioFrame f;
        f.t = VirtualTime{static_cast<std::int64_t>(i) * cfg.frame_period.tenths};
        f.session = "s";
        f.vad_raw = raws[i];
        if (auto sig = det.step(f)) out.push_back(*sig);
    }
    return out;
}

bool alternates(const std::vector<FloorSignal>& sig) {
    for (std::size_t i = 0; i < sig.size(); ++i) {
        const auto want = i % 2 == 0 ? FloorSignalKind::TurnStart : FloorSignalKind::TurnEnd;
        if (sig[i].kind != want) return false;
    }
    return true;
}

// ---- criterion 8 helpers -------------------------------------------------

struct StreamedToken {
    VirtualTime t;
    std::string text;
};

std::vector<SpeechChunk> drive_chunker(const std::vector<StreamedToken>& tokens,
                                       const ChunkPolicy& policy) {
    Aggregator agg(policy);
    std::vector<SpeechChunk> out;
    VirtualTime last{};
    for (const auto& tok : tokens) {
        while (auto dl = agg.next_staleness_deadline()) {
            if (*dl > tok.t) break;
            auto cut = agg.on_staleness_check(*dl);
            if (!cut) break;  // held back; retry after the next push
            out.push_back(*cut);
        }
        for (auto& c : agg.push_token(TokenEvent{tok.t, tok.text})) out.push_back(c);
        while (auto dl = agg.next_staleness_deadline()) {
            if (*dl > tok.t) break;
            auto cut = agg.on_staleness_check(tok.t);
            if (!cut) break;
            out.push_back(*cut);
        }
        last = tok.t;
    }
    while (auto dl = agg.next_staleness_deadline()) {
        auto cut = agg.on_staleness_check(*dl > last ? *dl : last);
        if (!cut) break;
        out.push_back(*cut);
    }
    if (auto tail = agg.flush(last + 1_ms)) out.push_back(*tail);
    return out;
}

std::vector<StreamedToken> random_token_stream(std::mt19937_64& gen, bool with_protected) {
    static const std::vector<std::string> words{"the",   "server", "deploy.", "cache!",
                                                "retry", "node",   "works?",  "fast;"};
    std::uniform_int_distribution<int> n_tokens(4, 40);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<int> coin(0, 9);
    std::vector<StreamedToken> toks;
    std::int64_t t = 0;
    const int n = n_tokens(gen);
    for (int i = 0; i < n; ++i) {
        if (with_protected && coin(gen) == 0) {
            const std::string term = coin(gen) < 5 ? "Azure" : "Kubernetes";
            std::uniform_int_distribution<std::size_t> split(1, term.size() - 1);
            const auto k = split(gen);
            toks.push_back({VirtualTime{t}, term.substr(0, k)});
            t += 800;
            toks.push_back({VirtualTime{t}, term.substr(k) + " "});
        } else {
            toks.push_back({VirtualTime{t}, words[pick(gen)] + " "});
        }
        t += 800;
    }
    return toks;
}

// ---- criterion 9 helpers -------------------------------------------------

std::vector<std::vector<std::string>> all_sequences(int max_len) {
    static const std::vector<std::string> alphabet{"aa", "bb", "cc"};
    std::vector<std::vector<std::string>> out{{}};
    std::size_t level_begin = 0;
    for (int len = 1; len <= max_len; ++len) {
        const std::size_t level_end = out.size();
        for (std::size_t i = level_begin; i < level_end; ++i)
            for (const auto& sym : alphabet) {
                auto next = out[i];
                next.push_back(sym);
                out.push_back(std::move(next));
            }
        level_begin = level_end;
    }
    return out;
}

std::string join_ws(const std::vector<std::string>& tokens) {
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) s += ' ';
        s += tokens[i];
    }
    return s;
}

}  // namespace

int main() {
    criterion(1, "Table 1 tier latencies reproduce exactly, within the published bands", [] {
        struct Row {
            const char* key;
            std::int64_t tenths;
            std::int64_t band_lo, band_hi;  // ms
        };
        for (const auto& row : std::vector<Row>{{"fluid", 26387, 2000, 3000},
                                                {"precise", 40558, 3000, 5000},
                                                {"reasoning", 67542, 5000, 7000},
                                                {"deep-reasoning", 81713, 8000, 9000}}) {
            const auto r = run_one(row.key);
            if (!r.turn_delay || r.turn_delay->tenths != row.tenths) return false;
            const double ms = r.turn_delay->tenths / 10.0;
            if (ms < row.band_lo || ms > row.band_hi) return false;
            const auto sum = r.queue_wait + r.asr + r.repair + r.retrieval + r.context_fetch +
                             r.llm_total + r.tts_first_chunk;
            if (sum != *r.turn_delay) return false;
        }
        return true;
    });

    criterion(2, "hybrid fast-ASR + repair costs 1040.1 ms, under half of the accurate ASR", [] {
        const auto r = run_one("fluid");
        const auto hybrid = r.asr + r.repair;
        if (hybrid.tenths != 10401) return false;
        if (std::abs(hybrid.tenths / 10.0 - 1040.0) > 0.5) return false;
        return hybrid.tenths / 10.0 < 0.5 * 2457.2;
    });

    criterion(3, "per-turn costs match the published table; realtime is >= 15x fluid", [] {
        const CostModel model;
        if (model.micro_usd("Fluid") != 1000) return false;
        if (model.micro_usd("Precise") != 2300) return false;
        if (model.micro_usd("Reasoning") != 4600) return false;
        if (model.micro_usd("RealtimeBenchmark") != 15400) return false;
        const double ratio = static_cast<double>(model.micro_usd("RealtimeBenchmark")) /
                             static_cast<double>(model.micro_usd("Fluid"));
        return std::abs(ratio - 15.4) < 1e-9 && ratio >= 15.0;
    });

    criterion(4, "half-duplex turns a 2 s correction into a >= 3x longer repair loop", [] {
        const auto trace = load_trace(scenario("repair_rigidity.jsonl"));
        auto cfg = load_config(scenario("repair_rigidity.json"));
        const double noticed_ms = 3100;

        cfg.floor.mode = DuplexMode::HalfDuplex;
        const auto half = run_scenario(trace, cfg);
        if (half.turns.size() != 2 || !half.turns[1].playback_end) return false;
        const double half_ms = half.turns[1].playback_end->tenths / 10.0 - noticed_ms;

        cfg.floor.mode = DuplexMode::FullDuplexBargeIn;
        const auto full = run_scenario(trace, cfg);
        if (full.turns.size() != 2 || !full.turns[1].playback_end) return false;
        const double full_ms = full.turns[1].playback_end->tenths / 10.0 - noticed_ms;

        return half_ms >= 12000.0 && full_ms <= 3500.0 && half_ms >= 3.0 * full_ms;
    });

    criterion(5, "filler speaks iff processing reaches 3 s, always before agent audio", [] {
        std::vector<double> sweep{0, 1000, 2500, 2999.9, 3000, 3000.1, 4000, 8000};
        std::mt19937_64 gen(42);
        std::uniform_int_distribution<int> tenths(0, 60000);
        for (int i = 0; i < 50; ++i) sweep.push_back(tenths(gen) / 10.0);

        for (const double d : sweep) {
            RunConfig cfg = pipeline_cfg("fluid");
            auto tier = tier_fluid();
            tier.asr->latency = LatencyModel::constant_ms(Duration{0});
            tier.repair.reset();
            tier.llm->latency = LatencyModel::constant_ms(duration_from_ms(d));
            tier.tts->latency = LatencyModel::constant_ms(Duration{0});
            cfg.tiers.add(tier);

            ScenarioEngine engine(cfg);
            const auto report = engine.run({utter(0, "s", "question", 0)});
            const bool want = d >= 3000.0;
            if (report.turns.at(0).filler_emitted != want) return false;
            if (want) {
                std::ptrdiff_t i_filler = -1, i_audio = -1;
                const auto& log = engine.log();
                for (std::size_t i = 0; i < log.size(); ++i) {
                    if (log[i].kind == "filler" && i_filler < 0)
                        i_filler = static_cast<std::ptrdiff_t>(i);
                    if (log[i].kind == "audio_start" && i_audio < 0)
                        i_audio = static_cast<std::ptrdiff_t>(i);
                }
                if (i_filler < 0 || i_audio < 0 || i_filler > i_audio) return false;
            }
        }
        return true;
    });

    criterion(6, "a barge-in 3.5 s into a deep-reasoning turn cancels and restarts it", [] {
        const auto trace = load_trace(scenario("deep_reasoning_cancel.jsonl"));
        const auto cfg = load_config(scenario("deep_reasoning_cancel.json"));

        const auto report = run_scenario(trace, cfg);
        if (report.turns.size() != 2) return false;
        const auto& victim = report.turns[0];
        const auto& redo = report.turns[1];
        if (!victim.canceled || victim.playback_end || victim.turn_delay) return false;
        if (!redo.playback_end) return false;

        std::vector<TraceEvent> undisturbed;
        for (const auto& ev : trace)
            if (ev.kind != TraceKind::BargeIn) undisturbed.push_back(ev);
        const auto baseline = run_scenario(undisturbed, cfg);
        return redo.playback_end->tenths > baseline.turns.at(0).playback_end->tenths;
    });

    criterion(7, "endpointing properties hold over 1000 seeded sequences", [] {
        // hand-derived fixed points first
        if (smooth(0.123, 0.9, 1.0) != 0.9) return false;
        VadConfig crisp;
        crisp.alpha = 1.0;
        {
            const auto sig = vad_run({0.9, 0.9, 0.9}, crisp);
            if (sig.size() != 1 || sig[0].t.tenths != 400) return false;
        }
        {
            const auto sig = vad_run({0.9, 0.9, 0.3, 0.9, 0.9, 0.9}, crisp);
            if (sig.size() != 1 || sig[0].t.tenths != 1000) return false;
        }
        {
            std::vector<double> raws{0.9, 0.9, 0.9};
            raws.insert(raws.end(), 40, 0.05);
            const auto sig = vad_run(raws, crisp);
            if (sig.size() != 2 || sig[1].t.tenths != 6400) return false;
        }

        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            std::mt19937_64 gen(seed);
            std::uniform_real_distribution<double> strong(0.85, 1.0);
            std::uniform_real_distribution<double> weak(0.0, 0.3);
            std::uniform_int_distribution<int> dip_len(1, 29);

            // micro-pause immunity: dips shorter than the hangover never end a turn
            std::vector<double> raws;
            for (int i = 0; i < 10; ++i) raws.push_back(strong(gen));
            const int dip = dip_len(gen);
            for (int i = 0; i < dip; ++i) raws.push_back(weak(gen));
            for (int i = 0; i < 10; ++i) raws.push_back(strong(gen));
            for (int i = 0; i < 40; ++i) raws.push_back(weak(gen));
            const auto sig = vad_run(raws, crisp);
            if (sig.size() != 2 || !alternates(sig)) return false;
            if (sig[1].t.tenths < (10 + dip + 10) * 200) return false;

            // alternation on unconstrained noise
            std::uniform_real_distribution<double> any(0.0, 1.0);
            std::vector<double> noise;
            for (int i = 0; i < 200; ++i) noise.push_back(any(gen));
            if (!alternates(vad_run(noise, VadConfig{}))) return false;

            // hysteresis: a stricter start threshold never fires earlier
            VadConfig lo = crisp, hi = crisp;
            lo.theta_start = 0.7;
            hi.theta_start = 0.9;
            const auto sig_lo = vad_run(noise, lo);
            const auto sig_hi = vad_run(noise, hi);
            if (!sig_hi.empty()) {
                if (sig_lo.empty()) return false;
                if (sig_lo[0].t > sig_hi[0].t) return false;
            }

            // chatter bound: probabilities inside the hysteresis band never signal
            std::uniform_real_distribution<double> band(0.45, 0.78);
            std::vector<double> mid;
            for (int i = 0; i < 200; ++i) mid.push_back(band(gen));
            if (!vad_run(mid, crisp).empty()) return false;
        }
        return true;
    });

    criterion(8, "chunking properties hold over 1000 seeded token streams", [] {
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            std::mt19937_64 gen(seed);
            std::uniform_int_distribution<int> min_c(4, 16);
            std::uniform_int_distribution<int> extra(8, 60);
            ChunkPolicy policy;
            policy.min_chars = static_cast<std::size_t>(min_c(gen));
            policy.max_chars = policy.min_chars + static_cast<std::size_t>(extra(gen));
            const bool guarded = seed % 2 == 0;
            if (guarded) policy.protected_lexicon = {"Azure", "Kubernetes"};

            const auto tokens = random_token_stream(gen, guarded);
            const auto chunks = drive_chunker(tokens, policy);

            std::string full, rebuilt;
            for (const auto& t : tokens) full += t.text;
            for (const auto& c : chunks) rebuilt += c.text;
            if (rebuilt != full) return false;  // losslessness, byte-exact

            for (const auto& c : chunks)
                if (c.reason != ChunkReason::Flush && c.text.size() > policy.max_chars)
                    return false;

            // protected-term integrity: no cut strictly inside an occurrence
            std::vector<std::size_t> cuts;
            std::size_t acc = 0;
            for (const auto& c : chunks) cuts.push_back(acc += c.text.size());
            for (const auto& term : policy.protected_lexicon)
                for (auto pos = full.find(term); pos != std::string::npos;
                     pos = full.find(term, pos + 1))
                    for (const auto cut : cuts)
                        if (cut > pos && cut < pos + term.size()) return false;
        }

        // latency monotonicity: a longer staleness wait never speaks sooner
        for (std::uint64_t seed = 0; seed < 500; ++seed) {
            std::mt19937_64 gen(seed);
            const auto tokens = random_token_stream(gen, false);
            std::int64_t prev = -1;
            for (const std::int64_t wait_ms : {200, 400, 800}) {
                ChunkPolicy policy;
                policy.min_chars = 24;
                policy.max_chars = 200;
                policy.max_buffer_wait = duration_from_ms(wait_ms);
                const auto chunks = drive_chunker(tokens, policy);
                if (chunks.empty()) return false;
                if (prev >= 0 && chunks[0].t_emitted.tenths < prev) return false;
                prev = chunks[0].t_emitted.tenths;
            }
        }

        // streaming beats batch: multi-chunk responses start before the stream ends
        for (std::uint64_t seed = 0; seed < 500; ++seed) {
            std::mt19937_64 gen(seed);
            std::uniform_int_distribution<int> n_sent(3, 8);
            std::vector<StreamedToken> tokens;
            std::int64_t t = 0;
            const int n = n_sent(gen);
            for (int i = 0; i < n; ++i) {
                tokens.push_back({VirtualTime{t}, "segment "});
                t += 800;
                tokens.push_back({VirtualTime{t}, "done. "});
                t += 800;
            }
            const auto chunks = drive_chunker(tokens, ChunkPolicy{});
            if (chunks.size() < 2) return false;
            if (chunks[0].t_emitted.tenths >= tokens.back().t.tenths) return false;
        }
        return true;
    });

    criterion(9, "repair and WER agree with brute-force oracles; round-trip scores 1.0", [] {
        // exhaustive: every pair of token sequences up to length 6 over 3 symbols
        const auto seqs = all_sequences(6);
        for (const auto& ref : seqs) {
            if (ref.empty()) continue;
            for (const auto& hyp : seqs) {
                const double got = normalized_wer(join_ws(ref), join_ws(hyp));
                const double want = oracle::wer(join_ws(ref), join_ws(hyp));
                if (got != want) return false;
            }
        }

        // randomized repair runs against the flat n-gram oracle, ties included
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            std::mt19937_64 gen(seed);
            static const std::vector<std::string> pool{"alpha", "bravo", "charlie", "delta",
                                                       "echo",  "fox",   "golf",    "hotel",
                                                       "india", "juliet"};
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            std::uniform_int_distribution<int> n_var(1, 2);
            PhraseSet ps;
            for (int e = 0; e < 5; ++e) {
                PhraseEntry entry;
                entry.canonical = "term" + std::to_string(e);
                for (int v = 0, nv = n_var(gen); v < nv; ++v) {
                    std::string variant = pool[pick(gen)];
                    if (n_var(gen) == 2) variant += " " + pool[pick(gen)];
                    entry.variants.push_back(variant);
                }
                ps.entries.push_back(entry);
            }
            std::uniform_int_distribution<int> n_tok(5, 30);
            std::vector<std::string> input;
            for (int i = 0, n = n_tok(gen); i < n; ++i) input.push_back(pool[pick(gen)]);

            const RepairConfig cfg;
            const auto got = repair_transcript(join_ws(input), ps, cfg);
            const auto want = oracle::repair_tokens(
                input, ps, cfg.max_norm_edit_distance,
                static_cast<std::size_t>(cfg.max_window_tokens));
            if (split_ws(got.corrected) != want.tokens) return false;
            if (got.substitutions.size() != want.subs.size()) return false;
            for (std::size_t i = 0; i < want.subs.size(); ++i) {
                if (got.substitutions[i].token_begin != want.subs[i].begin) return false;
                if (got.substitutions[i].token_end != want.subs[i].end) return false;
                if (got.substitutions[i].canonical != want.subs[i].canonical) return false;
            }
        }

        // corruption followed by repair restores a generated 50-term test set
        PhraseSet ps;
        std::vector<std::pair<std::string, std::string>> testset;
        for (int i = 0; i < 50; ++i) {
            PhraseEntry entry;
            entry.canonical = "term" + std::to_string(i);
            entry.variants = {"vnt" + std::to_string(i)};
            ps.entries.push_back(entry);
            testset.emplace_back("please use vnt" + std::to_string(i) + " here",
                                 "please use term" + std::to_string(i) + " here");
        }
        return correction_score(testset, ps, RepairConfig{}) == 1.0;
    });

    criterion(10, "a single slot yields exact 0, T, 2T queue waits and never starves", [] {
        RunConfig cfg = pipeline_cfg("fluid");
        cfg.gate_capacity = 1;
        std::vector<TraceEvent> trace;
        for (int i = 0; i < 4; ++i)
            trace.push_back(utter(0, "s" + std::to_string(i), "identical question", 1000));
        const auto report = run_scenario(trace, cfg);
        if (report.turns.size() != 4) return false;
        const std::int64_t service = 26387;  // slot held until synthesis completes
        for (int i = 0; i < 4; ++i)
            if (report.turns[i].queue_wait.tenths != i * service) return false;

        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            std::mt19937_64 gen(seed);
            std::uniform_int_distribution<int> n_req(2, 6);
            std::uniform_int_distribution<int> arrival(0, 30);
            std::vector<int> at;
            for (int i = 0, n = n_req(gen); i < n; ++i) at.push_back(arrival(gen) * 100);
            std::sort(at.begin(), at.end());
            std::vector<TraceEvent> random_trace;
            for (std::size_t i = 0; i < at.size(); ++i)
                random_trace.push_back(
                    utter(at[i], "r" + std::to_string(i), "identical question", 500));
            const auto r = run_scenario(random_trace, cfg);
            if (r.turns.size() != at.size()) return false;
            for (const auto& row : r.turns)
                if (!row.playback_end || row.canceled || row.error) return false;
        }
        return true;
    });

    criterion(11, "every shipped scenario replays to a byte-identical report", [] {
        struct Pair {
            const char* trace;
            const char* config;  // empty: defaults
        };
        for (const auto& p : std::vector<Pair>{
                 {"repair_rigidity.jsonl", "repair_rigidity.json"},
                 {"table1.jsonl", "table1.json"},
                 {"queueing.jsonl", "queueing.json"},
                 {"deep_reasoning_cancel.jsonl", "deep_reasoning_cancel.json"},
                 {"streaming.jsonl", "streaming.json"},
                 {"routing.jsonl", ""},
                 {"vad_demo.jsonl", ""}}) {
            const auto trace = load_trace(scenario(p.trace));
            const RunConfig cfg =
                *p.config ? load_config(scenario(p.config)) : RunConfig{};
            const auto a = report_to_json(run_scenario(trace, cfg)).dump(2);
            const auto b = report_to_json(run_scenario(trace, cfg)).dump(2);
            if (a != b || a.empty()) return false;
        }
        return true;
    });

    criterion(12, "default routing sends Hello to Fluid and jargon to Precise", [] {
        const auto trace = load_trace(scenario("routing.jsonl"));
        const auto report = run_scenario(trace, RunConfig{});
        if (report.turns.size() != 2) return false;
        if (report.turns[0].tier != "Fluid") return false;
        if (report.turns[1].tier != "Precise") return false;
        return report.turns[0].turn_delay->tenths == 26387 &&
               report.turns[1].turn_delay->tenths == 40558;
    });

    if (g_failures == 0) {
        std::printf("all 12 acceptance criteria pass\n");
        return 0;
    }
    std::printf("%d acceptance criteria failing\n", g_failures);
    return 1;
}
