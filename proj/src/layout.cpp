#include "pss/layout.hpp"

#include <algorithm>
#include <cmath>

namespace pss::layout {

namespace {

std::size_t codepoint_count(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n == 0 ? 1 : n;
}

struct Band {
    double y0, y1;
};

bool shares_line(const Band& band, const corpus::OcrToken& t, double threshold) {
    const double overlap = std::min(band.y1, t.y1) - std::max(band.y0, t.y0);
    const double smaller = std::min(band.y1 - band.y0, t.y1 - t.y0);
    if (smaller <= 0) return overlap >= 0; // degenerate boxes: touching counts
    return overlap >= threshold * smaller;
}

} // namespace

void validate(const GridConfig& cfg) {
    if (cfg.max_width_chars < 20)
        throw ValidationError("max_width_chars must be >= 20");
    if (!(cfg.line_overlap_threshold > 0.0) || cfg.line_overlap_threshold > 1.0)
        throw ValidationError("line_overlap_threshold must be in (0, 1]");
}

std::vector<std::vector<const corpus::OcrToken*>>
cluster_lines(const corpus::PageRecord& page, double threshold) {
    std::vector<const corpus::OcrToken*> order;
    order.reserve(page.tokens.size());
    for (const auto& t : page.tokens) order.push_back(&t);
    std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        const double ca = a->y0 + a->y1, cb = b->y0 + b->y1;
        if (ca != cb) return ca < cb;
        return a->x0 < b->x0;
    });

    std::vector<std::vector<const corpus::OcrToken*>> lines;
    Band band{0, 0};
    for (const auto* t : order) {
        if (lines.empty() || !shares_line(band, *t, threshold)) {
            lines.push_back({t});
            band = {t->y0, t->y1};
        } else {
            lines.back().push_back(t);
            band.y0 = std::min(band.y0, t->y0);
            band.y1 = std::max(band.y1, t->y1);
        }
    }
    for (auto& line : lines)
        std::stable_sort(line.begin(), line.end(),
                         [](const auto* a, const auto* b) { return a->x0 < b->x0; });
    return lines;
}

std::string project_2d(const corpus::PageRecord& page, const GridConfig& cfg) {
    validate(cfg);
    if (page.tokens.empty()) return "";

    int width = cfg.max_width_chars;
    if (cfg.char_width_estimator == CharWidthEstimator::median_token) {
        // median character pitch in page-width fractions
        std::vector<double> pitches;
        pitches.reserve(page.tokens.size());
        for (const auto& t : page.tokens) {
            const double w = t.x1 - t.x0;
            if (w > 0) pitches.push_back(w / static_cast<double>(codepoint_count(t.text)));
        }
        if (!pitches.empty()) {
            const auto mid = pitches.begin() + static_cast<std::ptrdiff_t>(pitches.size() / 2);
            std::nth_element(pitches.begin(), mid, pitches.end());
            double pitch = *mid;
            if (pitches.size() % 2 == 0) {
                const auto lo = std::max_element(pitches.begin(), mid);
                pitch = (*lo + pitch) / 2.0;
            }
            if (pitch > 0)
                width = std::clamp(static_cast<int>(std::lround(1.0 / pitch)), 20,
                                   cfg.max_width_chars);
        }
    }

    std::string out;
    const auto lines = cluster_lines(page, cfg.line_overlap_threshold);
    std::string row;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        row.clear();
        for (const auto* t : lines[li]) {
            std::size_t col =
                static_cast<std::size_t>(std::max<long>(0, std::lround(t->x0 * width)));
            // shift right until the token's cells are free
            const std::size_t len = t->text.size();
            auto occupied = [&](std::size_t c) {
                for (std::size_t k = 0; k < len; ++k)
                    if (c + k < row.size() && row[c + k] != ' ') return true;
                return false;
            };
            while (occupied(col)) ++col;
            if (row.size() < col + len) row.resize(col + len, ' ');
            std::copy(t->text.begin(), t->text.end(), row.begin() + static_cast<std::ptrdiff_t>(col));
        }
        while (!row.empty() && row.back() == ' ') row.pop_back();
        if (li) out += '\n';
        out += row;
    }
    return out;
}

std::string linearize(const corpus::PageRecord& page) {
    if (page.tokens.empty()) return "";
    std::string out;
    const auto lines = cluster_lines(page, 0.5);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        if (li) out += '\n';
        for (std::size_t ti = 0; ti < lines[li].size(); ++ti) {
            if (ti) out += ' ';
            out += lines[li][ti]->text;
        }
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text, const Tokenizer& tokenizer) {
    return tokenizer.tokenize(text);
}

} // namespace pss::layout
