#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "s2sim/error.hpp"
#include "s2sim/text.hpp"
#include "s2sim/time.hpp"

namespace s2sim {

// Code-switch jargon lexicon: each canonical term with the transliterations
// and corruptions a fast ASR is known to produce for it.
struct PhraseEntry {
    std::string canonical;
    std::vector<std::string> variants;
};

struct PhraseSet {
    std::vector<PhraseEntry> entries;

    void validate() const {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& e = entries[i];
            if (e.canonical.empty())
                throw ValidationError("phrase set: empty canonical");
            if (e.variants.empty())
                throw ValidationError("phrase set: '" + e.canonical + "' has no variants");
            for (const auto& v : e.variants) {
                if (v.empty())
                    throw ValidationError("phrase set: empty variant for '" + e.canonical + "'");
                if (v == e.canonical)
                    throw ValidationError("phrase set: variant equals canonical '" + e.canonical + "'");
            }
            for (std::size_t j = i + 1; j < entries.size(); ++j)
                if (entries[j].canonical == e.canonical)
                    throw ValidationError("phrase set: duplicate canonical '" + e.canonical + "'");
        }
    }

    const PhraseEntry* find(const std::string& canonical) const {
        for (const auto& e : entries)
            if (e.canonical == canonical) return &e;
        return nullptr;
    }
};

struct RepairConfig {
    // char-level edit distance divided by variant length
    double max_norm_edit_distance = 0.2;
    Duration latency = 623.0_ms;
    int max_window_tokens = 5;

    void validate() const {
        if (max_norm_edit_distance < 0.0 || max_norm_edit_distance > 1.0)
            throw ConfigError("repair.max_norm_edit_distance must be in [0,1]");
        if (latency.tenths < 0) throw ConfigError("repair.latency_ms must be >= 0");
        if (max_window_tokens < 1) throw ConfigError("repair.max_window_tokens must be >= 1");
    }
};

struct Substitution {
    std::size_t token_begin = 0;  // token span [begin, end)
    std::size_t token_end = 0;
    std::string matched;   // the n-gram as written in the input
    std::string canonical;
};

struct RepairResult {
    std::string corrected;
    std::vector<Substitution> substitutions;
    Duration latency{0};
};

namespace detail {

// Best fuzzy match for the n-gram starting at token i, if any.
// Tie-break: longest token span, then smallest char edit distance, then
// phrase-set order (entry first, then variant order).
struct NgramMatch {
    std::size_t span;
    std::size_t dist;
    std::size_t entry_idx;
};

inline std::optional<NgramMatch> best_match_at(const std::vector<std::string>& tokens,
                                               std::size_t i, const PhraseSet& ps,
                                               const RepairConfig& cfg) {
    const std::size_t max_span =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.max_window_tokens), tokens.size() - i);
    for (std::size_t span = max_span; span >= 1; --span) {
        std::vector<std::string> gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + span));
        const std::string gram_lc = to_lower(join(gram));
        std::optional<NgramMatch> best;
        for (std::size_t e = 0; e < ps.entries.size(); ++e) {
            for (const auto& variant : ps.entries[e].variants) {
                const std::string var_lc = to_lower(variant);
                const std::size_t d = char_edit_distance(gram_lc, var_lc);
                if (static_cast<double>(d) >
                    cfg.max_norm_edit_distance * static_cast<double>(var_lc.size()))
                    continue;
                if (!best || d < best->dist) best = NgramMatch{span, d, e};
            }
        }
        if (best) return best;  // longer spans were already tried
    }
    return std::nullopt;
}

}  // namespace detail

/// Deterministic phrase-set repair: scans token n-grams left to right and
/// replaces any n-gram within the normalized edit-distance budget of a known
/// variant by its canonical term. Text outside substitution spans is kept
/// byte-identical.
inline RepairResult repair_transcript(const std::string& text, const PhraseSet& ps,
                                      const RepairConfig& cfg) {
    // Tokens plus the exact whitespace separating them, so untouched spans
    // reassemble byte-for-byte.
    std::vector<std::string> tokens;
    std::vector<std::string> gaps;  // gaps[k] precedes tokens[k]; back() trails
    {
        std::size_t i = 0;
        while (true) {
            std::size_t j = i;
            while (j < text.size() && is_space(text[j])) ++j;
            gaps.push_back(text.substr(i, j - i));
            if (j >= text.size()) break;
            std::size_t k = j;
            while (k < text.size() && !is_space(text[k])) ++k;
            tokens.push_back(text.substr(j, k - j));
            i = k;
        }
    }

    RepairResult result;
    result.latency = cfg.latency;
    std::string out;
    std::size_t i = 0;
    while (i < tokens.size()) {
        out += gaps[i];
        auto m = detail::best_match_at(tokens, i, ps, cfg);
        if (m) {
            std::vector<std::string> gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                          tokens.begin() + static_cast<std::ptrdiff_t>(i + m->span));
            // inner whitespace of the matched span is consumed by the replacement
            std::string matched = gram[0];
            for (std::size_t k = 1; k < m->span; ++k) matched += gaps[i + k] + gram[k];
            out += ps.entries[m->entry_idx].canonical;
            result.substitutions.push_back(
                Substitution{i, i + m->span, matched, ps.entries[m->entry_idx].canonical});
            i += m->span;
        } else {
            out += tokens[i];
            i += 1;
        }
    }
    out += gaps.back();
    result.corrected = std::move(out);
    return result;
}

/// Word-level Levenshtein distance over metric tokens (lowercased,
/// punctuation-stripped). Exposed so tests can compare raw edit counts.
inline std::size_t word_edit_distance(const std::string& reference, const std::string& hypothesis) {
    return edit_distance(normalize_tokens(reference), normalize_tokens(hypothesis));
}

/// Edits divided by max(1, reference word count). Uncapped: a hypothesis much
/// longer than the reference scores above 1.
inline double normalized_wer(const std::string& reference, const std::string& hypothesis) {
    const auto ref = normalize_tokens(reference);
    const auto hyp = normalize_tokens(hypothesis);
    const std::size_t edits = edit_distance(ref, hyp);
    const std::size_t denom = std::max<std::size_t>(1, ref.size());
    return static_cast<double>(edits) / static_cast<double>(denom);
}

/// Fraction of items whose repaired corrupted text matches gold exactly,
/// compared on metric tokens.
inline double correction_score(const std::vector<std::pair<std::string, std::string>>& testset,
                               const PhraseSet& ps, const RepairConfig& cfg) {
    if (testset.empty())
        throw ValidationError("correction_score: empty test set");
    std::size_t hits = 0;
    for (const auto& [corrupted, gold] : testset) {
        const auto repaired = repair_transcript(corrupted, ps, cfg);
        if (normalize_tokens(repaired.corrected) == normalize_tokens(gold)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(testset.size());
}

}  // namespace s2sim
