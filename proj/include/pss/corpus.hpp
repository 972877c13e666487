#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pss/records.hpp"
#include "pss/tokenizer.hpp"

namespace pss::corpus {

struct LoadReport {
    std::uint64_t malformed_lines = 0;   // unparseable / schema-violating lines
    std::uint64_t invalid_documents = 0; // documents dropped after page validation
    std::uint64_t dangling_doc_refs = 0; // manifest references to missing docs
    std::uint64_t dropped_streams = 0;   // streams left with no resolvable docs
    std::vector<std::string> issues;     // first few human-readable messages

    std::uint64_t total_problems() const {
        return malformed_lines + invalid_documents + dangling_doc_refs + dropped_streams;
    }
    void note(std::string msg) {
        if (issues.size() < 50) issues.push_back(std::move(msg));
    }
};

// Loads a corpus root holding documents*.jsonl and streams*.jsonl files.
// strict: any invalid record or dangling reference throws ValidationError.
// lenient: offending records are dropped and counted in the report.
Corpus load_corpus(const std::filesystem::path& root, bool strict, LoadReport* report = nullptr);

// Canonical serialization: documents.jsonl (doc_id ascending, pages by
// index) and streams.jsonl (manifest order preserved). load(save(c)) == c.
void save_corpus(const Corpus& corpus, const std::filesystem::path& root);
void write_documents_jsonl(const std::vector<const DocumentRecord*>& docs,
                           const std::filesystem::path& path);
void write_streams_jsonl(const std::vector<StreamManifest>& streams,
                         const std::filesystem::path& path);

// Content identity of a document: a digest over the page count and the
// ordered linearized text of every page. Independent of doc_id; stable
// across runs and platforms.
std::uint64_t document_content_key(const DocumentRecord& doc);

// Nine summary columns. "Unique" columns count each distinct content key
// once; totals count every document instance referenced by the streams.
struct StatsTable {
    std::uint64_t streams_total = 0;
    double streams_pct_single_doc = 0; // % streams with exactly one document
    std::uint64_t docs_total = 0;      // document instances across streams
    std::uint64_t docs_unique = 0;     // distinct content keys
    double docs_pct_single_page = 0;   // % instances that are single-page
    std::uint64_t pages_total = 0;
    std::uint64_t pages_unique = 0;
    std::uint64_t tokens_total = 0;
    std::uint64_t tokens_unique = 0;
};

StatsTable corpus_stats(const Corpus& corpus, const layout::Tokenizer& tokenizer);

std::string stats_csv(const StatsTable& t);

// Pages with no OCR text (zero tokens, or whitespace-only text). The ratio
// is over all pages of the stored documents, each document counted once.
std::pair<std::uint64_t, double> blank_page_census(const Corpus& corpus);

enum class Distribution {
    pages_per_doc,
    pages_per_stream,
    docs_per_stream,
    tokens_per_doc,
    tokens_per_stream,
};

Distribution distribution_from_string(std::string_view name);
const char* to_string(Distribution which);

// One row per entity (id ascending) with its raw value; feeds external
// histogram/KDE plotting.
std::vector<std::pair<std::string, std::uint64_t>>
distribution_export(const Corpus& corpus, Distribution which, const layout::Tokenizer& tokenizer);

std::string distribution_csv(Distribution which,
                             const std::vector<std::pair<std::string, std::uint64_t>>& rows);

} // namespace pss::corpus
