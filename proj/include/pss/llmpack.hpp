#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pss/records.hpp"
#include "pss/tokenizer.hpp"

namespace pss::llmpack {

// The instruction template with one {pg_prev} slot and one {pg} slot.
const std::string& prompt_template();

struct PromptInstance {
    std::string stream_id;
    int center_index = 0;
    std::string text;
    std::uint64_t token_count = 0; // under the tokenizer used to build it, 0 if none
    bool truncated = false;
    bool delimiter_collision = false; // a page text contains the ### fence
};

// Byte-exact template instantiation. Page texts are inserted verbatim (no
// escaping); a "###" inside them is flagged, not rewritten.
std::string build_prompt_text(std::string_view prev_text, std::string_view cur_text);
PromptInstance build_prompt(std::string stream_id, int center_index, std::string_view prev_text,
                            std::string_view cur_text, const layout::Tokenizer* counter = nullptr);

// Shrinks both page texts with head/tail cuts until the rendered prompt fits
// the token budget; the remaining budget is split equally between the pages.
// Untouched pages pass through byte-identical. Throws when the budget cannot
// even hold the empty template.
std::pair<std::string, std::string> fit_budget(std::string_view prev_text,
                                               std::string_view cur_text,
                                               std::uint64_t budget_tokens,
                                               const layout::Tokenizer& tokenizer,
                                               bool* truncated = nullptr);

enum class ParseStatus { ok, malformed, missing_key, empty };
const char* to_string(ParseStatus s);
ParseStatus parse_status_from_string(std::string_view s);

struct ParsedPrediction {
    std::string stream_id;
    int center_index = 0;
    std::uint8_t label = 0; // 0 unless status == ok
    ParseStatus status = ParseStatus::empty;
    std::string raw;
    int retries = 0;
    bool failed = false; // transport/HTTP failure after retries
};

// Total function: extracts the first JSON object in the text and reads its
// integer "label". Anything else degrades to label 0 with a diagnostic
// status (no JSON object: empty/malformed; object without a usable key:
// missing_key; "label" outside {0,1}: malformed).
ParsedPrediction parse_response(std::string_view text);

struct InferenceConfig {
    std::string endpoint;   // e.g. http://host:port/v1/chat/completions
    std::string model;
    double temperature = 0.0;
    int max_output_tokens = 16;
    int max_retries = 3;
    double backoff_base_s = 0.5; // sleep base, doubled per retry
    int parallelism = 4;
    double timeout_s = 60.0;
    std::string api_key_env = "PSS_API_KEY"; // bearer token read from the environment
};

void validate(const InferenceConfig& cfg);

// Sends each prompt as a single user message to a chat-completions endpoint
// with bounded parallelism and exponential backoff on retryable failures
// (transport errors, 429, 5xx). Finished instances are appended to a JSONL
// checkpoint keyed by (stream_id, center_index) and skipped on resume; the
// returned list is sorted by key regardless of completion order.
std::vector<ParsedPrediction> run_inference(const std::vector<PromptInstance>& instances,
                                            const InferenceConfig& cfg,
                                            const std::filesystem::path& checkpoint_path);

// Deterministic uniform subsample of ceil(fraction * n) streams, original
// order preserved. fraction must be in (0, 1]; input must be non-empty.
std::vector<corpus::StreamManifest> subsample_streams(const std::vector<corpus::StreamManifest>& streams,
                                                      double fraction, std::uint64_t seed);

} // namespace pss::llmpack
