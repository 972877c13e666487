#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pss/records.hpp"
#include "pss/tokenizer.hpp"

namespace pss::layout {

enum class CharWidthEstimator {
    median_token, // grid width from the median character pitch of the page
    per_token,    // fixed grid of max_width_chars
};

struct GridConfig {
    int max_width_chars = 210;              // >= 20
    double line_overlap_threshold = 0.5;    // in (0, 1]
    CharWidthEstimator char_width_estimator = CharWidthEstimator::median_token;
};

void validate(const GridConfig& cfg);

// Groups a page's tokens into visual lines: two tokens share a line when
// their vertical overlap is at least `threshold` of the smaller box height.
// Lines are returned top to bottom, tokens left to right.
std::vector<std::vector<const corpus::OcrToken*>>
cluster_lines(const corpus::PageRecord& page, double threshold = 0.5);

// Renders the page onto a monospaced grid that preserves layout: one output
// row per line cluster, columns from round(x0 * width) with collisions
// shifted right. No trailing whitespace; blank page renders as "".
std::string project_2d(const corpus::PageRecord& page, const GridConfig& cfg = {});

// Reading-order fallback: tokens sorted by (line cluster, x0), joined with
// single spaces; lines joined with newlines.
std::string linearize(const corpus::PageRecord& page);

// Keeps the first L and last L tokens when the sequence is longer than 2L.
template <typename T>
std::vector<T> head_tail_truncate(const std::vector<T>& tokens, std::size_t l) {
    if (l == 0) throw ValidationError("head_tail_truncate: L must be >= 1");
    if (tokens.size() <= 2 * l) return tokens;
    std::vector<T> out;
    out.reserve(2 * l);
    out.insert(out.end(), tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(l));
    out.insert(out.end(), tokens.end() - static_cast<std::ptrdiff_t>(l), tokens.end());
    return out;
}

// Generalized head/tail cut to an exact target count (head gets the extra
// token when target is odd). target >= sequence length is a no-op.
template <typename T>
std::vector<T> truncate_to_count(const std::vector<T>& tokens, std::size_t target) {
    if (tokens.size() <= target) return tokens;
    const std::size_t head = (target + 1) / 2;
    const std::size_t tail = target / 2;
    std::vector<T> out;
    out.reserve(target);
    out.insert(out.end(), tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(head));
    out.insert(out.end(), tokens.end() - static_cast<std::ptrdiff_t>(tail), tokens.end());
    return out;
}

std::vector<std::string> tokenize(std::string_view text, const Tokenizer& tokenizer);

} // namespace pss::layout
