#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace s2sim {

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

/// Whitespace split, nothing else. Empty tokens never appear.
inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !is_space(s[j])) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

/// Metric tokenization: lowercase, strip punctuation, whitespace split.
/// Tokens that are all punctuation disappear.
inline std::vector<std::string> normalize_tokens(std::string_view s) {
    std::vector<std::string> out;
    for (const auto& raw : split_ws(s)) {
        std::string tok;
        for (unsigned char c : raw)
            if (!std::ispunct(c)) tok += static_cast<char>(std::tolower(c));
        if (!tok.empty()) out.push_back(std::move(tok));
    }
    return out;
}

inline std::string join(const std::vector<std::string>& toks, std::string_view sep = " ") {
    std::string out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i) out += sep;
        out += toks[i];
    }
    return out;
}

/// Unit-cost Levenshtein distance over arbitrary element sequences.
/// Two-row DP; used at word level for WER and at char level for fuzzy
/// phrase matching.
template <typename Seq>
std::size_t edit_distance(const Seq& a, const Seq& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

inline std::size_t char_edit_distance(std::string_view a, std::string_view b) {
    return edit_distance(std::string(a), std::string(b));
}

}  // namespace s2sim
