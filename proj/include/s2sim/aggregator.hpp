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

// One streamed LLM token. Text may contain no spaces at all (continuous-script
// simulation) or several words; the aggregator treats it as raw bytes.
struct TokenEvent {
    VirtualTime t;
    std::string text;
};

struct ChunkPolicy {
    std::size_t min_chars = 12;
    std::size_t max_chars = 80;
    std::string delimiters = ".!?;\n";
    Duration max_buffer_wait = 400_ms;
    std::vector<std::string> protected_lexicon;
    bool continuous_script = false;

    void validate() const {
        if (min_chars < 1) throw ValidationError("chunk policy: min_chars must be >= 1");
        if (max_chars < min_chars)
            throw ValidationError("chunk policy: max_chars must be >= min_chars");
        if (max_buffer_wait.tenths < 0)
            throw ValidationError("chunk policy: negative max_buffer_wait");
        for (const auto& term : protected_lexicon) {
            if (term.empty()) throw ValidationError("chunk policy: empty protected term");
            if (term.size() > max_chars)
                throw ValidationError("chunk policy: protected term '" + term +
                                      "' longer than max_chars");
        }
    }
};

enum class ChunkReason { Delimiter, MaxSize, Staleness, Flush };

struct SpeechChunk {
    std::string text;
    VirtualTime t_emitted;
    ChunkReason reason;
};

/// Buffers streamed tokens into prosody-safe chunks for TTS.
///
/// A chunk is cut when a delimiter closes a segment of at least min_chars,
/// when the buffer reaches max_chars (cut at the rightmost safe boundary:
/// delimiter, then whitespace, then dictionary-segmentation boundary when
/// continuous_script), or when the oldest buffered character exceeds
/// max_buffer_wait (checked via on_staleness_check). flush() drains the rest
/// at end of stream.
///
/// Two rules keep protected lexicon terms intact: a cut never lands strictly
/// inside an occurrence already in the buffer, and any buffer suffix that is
/// a proper prefix of a protected term is held back, since the next token may
/// complete the term.
class Aggregator {
public:
    explicit Aggregator(ChunkPolicy policy) : policy_(std::move(policy)) { policy_.validate(); }

    std::vector<SpeechChunk> push_token(const TokenEvent& token) {
        if (last_t_ && token.t < *last_t_)
            throw ValidationError("aggregator: token out of order at t=" + format_ms(token.t));
        last_t_ = token.t;
        buffer_ += token.text;
        char_t_.resize(buffer_.size(), token.t);
        return drain(token.t);
    }

    // Staleness rule: emit the longest safely cuttable prefix once the oldest
    // buffered char has aged past max_buffer_wait. May defer (return nullopt)
    // when everything cuttable is held back by a half-arrived protected term.
    std::optional<SpeechChunk> on_staleness_check(VirtualTime now) {
        if (buffer_.empty()) return std::nullopt;
        if (now - char_t_.front() < policy_.max_buffer_wait) return std::nullopt;
        const std::size_t cap = std::min({buffer_.size(), policy_.max_chars, hold_start()});
        for (std::size_t p = cap; p >= 1; --p) {
            if (cut_is_safe(p)) return emit(p, ChunkReason::Staleness, now);
        }
        return std::nullopt;
    }

    std::optional<SpeechChunk> flush(VirtualTime now) {
        if (buffer_.empty()) return std::nullopt;
        return emit(buffer_.size(), ChunkReason::Flush, now);
    }

    std::optional<VirtualTime> next_staleness_deadline() const {
        if (buffer_.empty()) return std::nullopt;
        return char_t_.front() + policy_.max_buffer_wait;
    }

    bool empty() const { return buffer_.empty(); }
    const std::string& buffered() const { return buffer_; }
    const ChunkPolicy& policy() const { return policy_; }

private:
    // Spans [s, e) of protected terms present in the buffer.
    std::vector<std::pair<std::size_t, std::size_t>> occurrences() const {
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        for (const auto& term : policy_.protected_lexicon) {
            std::size_t from = 0;
            while (true) {
                std::size_t s = buffer_.find(term, from);
                if (s == std::string::npos) break;
                spans.emplace_back(s, s + term.size());
                from = s + 1;
            }
        }
        return spans;
    }

    bool cut_is_safe(std::size_t p) const {
        for (const auto& [s, e] : occurrences())
            if (s < p && p < e) return false;
        return true;
    }

    // Smallest s where buffer[s..] is a proper prefix of a protected term;
    // cuts beyond it could split a term the stream has not finished yet.
    std::size_t hold_start() const {
        std::size_t hold = buffer_.size();
        for (const auto& term : policy_.protected_lexicon) {
            const std::size_t lo = buffer_.size() > term.size() - 1 ? buffer_.size() - (term.size() - 1) : 0;
            for (std::size_t s = lo; s < buffer_.size() && s < hold; ++s) {
                const std::size_t n = buffer_.size() - s;
                if (n < term.size() && term.compare(0, n, buffer_, s, n) == 0) {
                    hold = s;
                    break;
                }
            }
        }
        return hold;
    }

    bool is_delim(char c) const { return policy_.delimiters.find(c) != std::string::npos; }

    // Cut after the char at index i, extended through the following
    // whitespace run; every step must stay within cap and safe.
    std::optional<std::size_t> extended_cut(std::size_t i, std::size_t cap) const {
        std::size_t p = i + 1;
        if (p > cap || !cut_is_safe(p)) return std::nullopt;
        while (p < buffer_.size() && is_space(buffer_[p]) && p + 1 <= cap && cut_is_safe(p + 1))
            ++p;
        return p;
    }

    // Boundaries of longest-match dictionary segmentation over the protected
    // lexicon; single characters are their own units outside known terms.
    std::vector<std::size_t> lexicon_boundaries() const {
        std::vector<std::size_t> cuts;
        std::size_t pos = 0;
        while (pos < buffer_.size()) {
            std::size_t unit = 1;
            for (const auto& term : policy_.protected_lexicon)
                if (term.size() > unit && buffer_.compare(pos, term.size(), term) == 0)
                    unit = term.size();
            pos += unit;
            cuts.push_back(pos);
        }
        return cuts;
    }

    // Rightmost max-size cut no further than cap, by class precedence:
    // delimiter > whitespace > lexicon boundary.
    std::optional<std::pair<std::size_t, ChunkReason>> max_size_cut(std::size_t cap) const {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < buffer_.size() && i < cap; ++i) {
            if (!is_delim(buffer_[i])) continue;
            if (auto p = extended_cut(i, cap); p && (!best || *p > *best)) best = *p;
        }
        if (best) return std::make_pair(*best, ChunkReason::MaxSize);

        for (std::size_t p = std::min(buffer_.size(), cap); p >= 1; --p) {
            if (is_space(buffer_[p - 1]) && cut_is_safe(p))
                return std::make_pair(p, ChunkReason::MaxSize);
        }

        if (policy_.continuous_script) {
            std::optional<std::size_t> lex;
            for (std::size_t b : lexicon_boundaries())
                if (b <= cap && cut_is_safe(b)) lex = b;
            if (lex) return std::make_pair(*lex, ChunkReason::MaxSize);
        }
        return std::nullopt;
    }

    std::vector<SpeechChunk> drain(VirtualTime now) {
        std::vector<SpeechChunk> out;
        while (true) {
            const std::size_t hold = hold_start();
            const std::size_t cap = std::min(policy_.max_chars, hold);

            // (a) delimiter closes a segment of at least min_chars
            bool emitted = false;
            for (std::size_t i = 0; i < buffer_.size(); ++i) {
                if (!is_delim(buffer_[i])) continue;
                if (i + 1 < policy_.min_chars) continue;
                if (i + 1 > policy_.max_chars) break;  // overlong segment: max-size rule territory
                if (i + 1 > cap) break;                // held back
                if (auto p = extended_cut(i, cap)) {
                    out.push_back(emit(*p, ChunkReason::Delimiter, now));
                    emitted = true;
                    break;
                }
                // delimiter sits inside a protected occurrence: not a cut point
            }
            if (emitted) continue;

            // (b) buffer reached max_chars
            if (buffer_.size() >= policy_.max_chars) {
                if (auto cut = max_size_cut(cap)) {
                    out.push_back(emit(cut->first, cut->second, now));
                    continue;
                }
                // No cut within the hold limit. If there is none within
                // max_chars either, no future token can help.
                if (!max_size_cut(policy_.max_chars))
                    throw OversizeTokenError(
                        "token run of " + std::to_string(buffer_.size()) +
                        " chars has no safe cut within max_chars=" +
                        std::to_string(policy_.max_chars));
            }
            break;
        }
        return out;
    }

    SpeechChunk emit(std::size_t p, ChunkReason reason, VirtualTime now) {
        SpeechChunk chunk{buffer_.substr(0, p), now, reason};
        buffer_.erase(0, p);
        char_t_.erase(char_t_.begin(), char_t_.begin() + static_cast<std::ptrdiff_t>(p));
        return chunk;
    }

    ChunkPolicy policy_;
    std::string buffer_;
    std::vector<VirtualTime> char_t_;
    std::optional<VirtualTime> last_t_;
};

/// Cut offsets the aggregator produces for the whole text delivered as a
/// single untimed token followed by flush. This is the pure interface the
/// chunking tests check against a reference segmenter.
inline std::vector<std::size_t> segment(const std::string& text, const ChunkPolicy& policy) {
    Aggregator agg(policy);
    std::vector<std::size_t> cuts;
    std::size_t off = 0;
    for (const auto& c : agg.push_token(TokenEvent{VirtualTime{0}, text})) {
        off += c.text.size();
        cuts.push_back(off);
    }
    if (auto tail = agg.flush(VirtualTime{0})) {
        off += tail->text.size();
        cuts.push_back(off);
    }
    return cuts;
}

}  // namespace s2sim
