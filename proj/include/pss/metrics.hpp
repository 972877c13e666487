#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pss/windows.hpp"

namespace pss::metrics {

// A partition of page indices 0..N-1 into ordered, contiguous documents.
// Each document is the half-open index interval [begin, end).
struct Segmentation {
    std::vector<std::pair<int, int>> docs;

    int page_count() const { return docs.empty() ? 0 : docs.back().second; }
    bool operator==(const Segmentation&) const = default;
};

void validate(const Segmentation& seg);

// Cuts before every label-1 index. strict: labels[0] must be 1. lenient:
// a leading 0 is forced to 1 (reported through *forced when given).
Segmentation segmentation_from_labels(const std::vector<std::uint8_t>& labels, bool strict = false,
                                      bool* forced = nullptr);

struct Prf {
    double precision = 0, recall = 0, f1 = 0;
};

struct Counts {
    std::uint64_t tp = 0, fp = 0, fn = 0;
};

// Zero-denominator convention: a metric with an empty denominator is 0, and
// F1 is 0 when P + R == 0.
Prf prf_from_counts(const Counts& c);

// Page level: positive class is label 1; skip_first drops index 0 from the
// counts. Lengths must match.
Counts page_counts(const std::vector<std::uint8_t>& truth, const std::vector<std::uint8_t>& pred,
                   bool skip_first);
Prf page_metrics(const std::vector<std::uint8_t>& truth, const std::vector<std::uint8_t>& pred,
                 bool skip_first);

// Document level: documents compared as exact page-index tuples.
// TP = |P ∩ G|, FP = |P \ G|, FN = |G \ P|.
Counts doc_counts(const Segmentation& truth, const Segmentation& pred);
Prf doc_metrics(const Segmentation& truth, const Segmentation& pred);

// Minimum number of drag-and-drops: N minus the value of a maximum-weight
// matching between predicted and true documents (edge weight = page
// overlap), computed exactly with the Hungarian algorithm.
std::int64_t mndd(const Segmentation& truth, const Segmentation& pred);

struct StreamReport {
    std::string stream_id;
    Counts page;
    Counts doc;
    std::int64_t mndd = 0;
    bool perfect = false; // <=> mndd == 0 <=> doc fp == fn == 0
    std::uint64_t pages = 0;
    bool forced_first = false; // lenient mode rewrote a leading 0
};

struct ScoreOptions {
    bool skip_first = false;
    bool strict = false;
};

StreamReport score_stream(const windows::LabelVector& truth, const windows::LabelVector& pred,
                          const ScoreOptions& opts = {});

// Fraction of perfectly segmented streams.
double stp(const std::vector<StreamReport>& reports);

struct AggregateReport {
    Prf page;
    Prf doc;
    double mean_mndd = 0;
    double stp = 0;
    std::uint64_t streams = 0;
    std::uint64_t pages = 0;
    std::uint64_t forced_first_pages = 0;
};

// Micro pooling over summed TP/FP/FN for P/R/F1; arithmetic mean of
// per-stream MNDD.
AggregateReport aggregate(const std::vector<StreamReport>& reports);

std::string report_json(const AggregateReport& agg, const std::vector<StreamReport>* per_stream);
std::string report_csv(const AggregateReport& agg);

} // namespace pss::metrics
