#include "pss/llmpack.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "pss/io.hpp"
#include "pss/layout.hpp"
#include "pss/rng.hpp"

namespace pss::llmpack {

using nlohmann::json;

const std::string& prompt_template() {
    static const std::string tmpl =
        "You are a skilled document reviewer. Given extracted text from pages of documents, your "
        "task is to determine if a page starts a new document or continues from the previous one. "
        "You will be presented with the text of the current page and the text of the preceding "
        "page.\n"
        "\n"
        "Example:\n"
        "\n"
        "Prior text:\n"
        "###\n"
        "This is the text on the page before the page you are evaluating.\n"
        "###\n"
        "Page text:\n"
        "###\n"
        "This is the text on the page you are evaluating.\n"
        "###\n"
        "\n"
        "Carefully review the text to decide if the current page starts a new document or "
        "continues from the previous one.\n"
        "\n"
        "Here is the input:\n"
        "\n"
        "Prior text:\n"
        "###\n"
        "{pg_prev}\n"
        "###\n"
        "Page text:\n"
        "###\n"
        "{pg}\n"
        "###\n"
        "\n"
        "Output your prediction as a JSON object. When the page is the start of a new document, "
        "your output should be {\"label\": 1}. If the page continues the document from the "
        "previous page, your output should be {\"label\": 0}. Do not provide any explanation, "
        "additional information, or punctuation. Simply provide the JSON object.\n"
        "\n"
        "Does the page start a new document?";
    return tmpl;
}

namespace {

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos;
         pos = hay.find(needle, pos + 1))
        ++n;
    return n;
}

} // namespace

std::string build_prompt_text(std::string_view prev_text, std::string_view cur_text) {
    const std::string& tmpl = prompt_template();
    // exactly one slot each, by construction
    static const bool checked = [] {
        if (count_occurrences(prompt_template(), "{pg_prev}") != 1 ||
            count_occurrences(prompt_template(), "{pg}") != 1)
            throw Error("prompt template must contain {pg_prev} and {pg} exactly once");
        return true;
    }();
    (void)checked;
    std::string out;
    out.reserve(tmpl.size() + prev_text.size() + cur_text.size());
    const auto prev_at = tmpl.find("{pg_prev}");
    const auto cur_at = tmpl.find("{pg}", prev_at + 9);
    out.append(tmpl, 0, prev_at);
    out.append(prev_text);
    out.append(tmpl, prev_at + 9, cur_at - prev_at - 9);
    out.append(cur_text);
    out.append(tmpl, cur_at + 4, std::string::npos);
    return out;
}

PromptInstance build_prompt(std::string stream_id, int center_index, std::string_view prev_text,
                            std::string_view cur_text, const layout::Tokenizer* counter) {
    PromptInstance inst;
    inst.stream_id = std::move(stream_id);
    inst.center_index = center_index;
    inst.text = build_prompt_text(prev_text, cur_text);
    inst.delimiter_collision = prev_text.find("###") != std::string_view::npos ||
                               cur_text.find("###") != std::string_view::npos;
    if (counter) inst.token_count = counter->count(inst.text);
    return inst;
}

std::pair<std::string, std::string> fit_budget(std::string_view prev_text,
                                               std::string_view cur_text,
                                               std::uint64_t budget_tokens,
                                               const layout::Tokenizer& tokenizer,
                                               bool* truncated) {
    if (truncated) *truncated = false;
    const std::uint64_t overhead = tokenizer.count(build_prompt_text("", ""));
    if (budget_tokens <= overhead)
        throw ValidationError("prompt budget " + std::to_string(budget_tokens) +
                              " cannot hold the template (" + std::to_string(overhead) +
                              " tokens)");
    if (tokenizer.count(build_prompt_text(prev_text, cur_text)) <= budget_tokens)
        return {std::string(prev_text), std::string(cur_text)};

    const std::uint64_t remaining = budget_tokens - overhead;
    auto prev_tokens = tokenizer.tokenize(prev_text);
    auto cur_tokens = tokenizer.tokenize(cur_text);

    // equal split; slack from a short page goes to the other one
    std::uint64_t t_prev = (remaining + 1) / 2, t_cur = remaining / 2;
    if (prev_tokens.size() < t_prev) {
        t_cur += t_prev - prev_tokens.size();
        t_prev = prev_tokens.size();
    }
    if (cur_tokens.size() < t_cur) {
        t_prev = std::min<std::uint64_t>(prev_tokens.size(), t_prev + t_cur - cur_tokens.size());
        t_cur = cur_tokens.size();
    }

    auto render = [&](std::uint64_t tp, std::uint64_t tc) {
        const auto p = layout::truncate_to_count(prev_tokens, tp);
        const auto c = layout::truncate_to_count(cur_tokens, tc);
        return std::pair<std::string, std::string>{tokenizer.join(p), tokenizer.join(c)};
    };

    auto [p, c] = render(t_prev, t_cur);
    // tokenizer merges across the cut can still push the count over budget
    while (tokenizer.count(build_prompt_text(p, c)) > budget_tokens) {
        if (t_prev == 0 && t_cur == 0)
            throw ValidationError("prompt budget too small for the template");
        if (t_prev >= t_cur && t_prev > 0) --t_prev;
        else --t_cur;
        std::tie(p, c) = render(t_prev, t_cur);
    }
    if (truncated)
        *truncated = p != prev_text || c != cur_text;
    return {std::move(p), std::move(c)};
}

const char* to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::ok: return "ok";
        case ParseStatus::malformed: return "malformed";
        case ParseStatus::missing_key: return "missing_key";
        case ParseStatus::empty: return "empty";
    }
    return "?";
}

ParseStatus parse_status_from_string(std::string_view s) {
    if (s == "ok") return ParseStatus::ok;
    if (s == "malformed") return ParseStatus::malformed;
    if (s == "missing_key") return ParseStatus::missing_key;
    if (s == "empty") return ParseStatus::empty;
    throw ValidationError("unknown parse status: " + std::string(s));
}

namespace {

// Balanced {...} span starting at `start`, string/escape aware; empty view
// when the braces never close.
std::string_view balanced_object_at(std::string_view text, std::size_t start) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (ch == '\\') escaped = true;
            else if (ch == '"') in_string = false;
            continue;
        }
        if (ch == '"') in_string = true;
        else if (ch == '{') ++depth;
        else if (ch == '}') {
            if (--depth == 0) return text.substr(start, i - start + 1);
        }
    }
    return {};
}

} // namespace

ParsedPrediction parse_response(std::string_view text) {
    ParsedPrediction out;
    out.raw = std::string(text);
    out.label = 0;

    // the first span that parses as a JSON object decides the outcome
    for (std::size_t start = text.find('{'); start != std::string_view::npos;
         start = text.find('{', start + 1)) {
        const auto span = balanced_object_at(text, start);
        if (span.empty()) continue;
        const json j = json::parse(span, nullptr, false);
        if (j.is_discarded() || !j.is_object()) continue;

        const auto it = j.find("label");
        if (it == j.end()) {
            out.status = ParseStatus::missing_key;
            return out;
        }
        if (it->is_number_integer()) {
            const auto v = it->get<std::int64_t>();
            if (v == 0 || v == 1) {
                out.label = static_cast<std::uint8_t>(v);
                out.status = ParseStatus::ok;
                return out;
            }
        }
        out.status = ParseStatus::malformed; // "label" outside {0, 1}
        return out;
    }

    bool blank = true;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) {
            blank = false;
            break;
        }
    out.status = blank ? ParseStatus::empty : ParseStatus::malformed;
    return out;
}

void validate(const InferenceConfig& cfg) {
    if (cfg.endpoint.empty()) throw ValidationError("inference endpoint is required");
    if (cfg.parallelism < 1) throw ValidationError("parallelism must be >= 1");
    if (cfg.max_retries < 0) throw ValidationError("max_retries must be >= 0");
    if (cfg.timeout_s <= 0) throw ValidationError("timeout must be positive");
    if (cfg.endpoint.rfind("http://", 0) != 0 && cfg.endpoint.rfind("https://", 0) != 0)
        throw ValidationError("endpoint must be an http(s) URL");
}

std::vector<corpus::StreamManifest> subsample_streams(const std::vector<corpus::StreamManifest>& streams,
                                                      double fraction, std::uint64_t seed) {
    if (streams.empty()) throw ValidationError("subsample_streams over an empty stream list");
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ValidationError("fraction must be in (0, 1]");
    const auto n = streams.size();
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(splitmix64(seed) ^ 0x73756273616dULL);
    for (std::size_t i = 0; i < k; ++i)
        std::swap(idx[i], idx[i + rng.uniform_below(n - i)]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end()); // keep original order
    std::vector<corpus::StreamManifest> out;
    out.reserve(k);
    for (auto i : idx) out.push_back(streams[i]);
    return out;
}

} // namespace pss::llmpack
