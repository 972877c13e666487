#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pss/records.hpp"

namespace pss::windows {

// Reserved id for the out-of-range context page at stream boundaries; its
// rendered text is empty.
inline constexpr std::string_view kSentinelDocId = "__stream_boundary__";

struct LabelVector {
    std::string stream_id;
    std::vector<std::uint8_t> labels; // 1 = page starts a new document
};

struct PageRef {
    std::string doc_id; // kSentinelDocId when sentinel
    int page_index = 0; // within the document
    bool sentinel = false;
};

struct WindowSample {
    std::string stream_id;
    int center_index = 0; // 0-based position in the stream
    int left = 1, right = 0;
    std::vector<PageRef> context; // p_{i-l} .. p_{i+r}, center included
    std::uint8_t label = 0;       // 1 iff center page starts its document
    std::string prev_doc_id;      // provenance; sentinel id at stream start
    std::string cur_doc_id;
    int doc_slot = 0; // index of the center page's document instance in the stream
};

// 1 at each document's first page, 0 elsewhere.
LabelVector label_stream(const corpus::StreamManifest& manifest, const corpus::Corpus& corpus);

// One sample per page; out-of-range context positions hold the sentinel.
std::vector<WindowSample> extract_windows(const corpus::StreamManifest& manifest,
                                          const corpus::Corpus& corpus, int l = 1, int r = 0);

// For the first occurrence of each document content key (stream_id
// ascending, slot ascending) all samples are kept; later occurrences keep
// only their label-1 start sample. Requires samples extracted with l=1, r=0.
std::vector<WindowSample> dedup_pair_samples(const std::vector<WindowSample>& samples,
                                             const corpus::Corpus& corpus);

// (pos_weight, neg_weight): pos = #neg / #pos, neg = 1. Throws on a
// single-class sample set.
std::pair<double, double> class_weights(const std::vector<WindowSample>& samples);

} // namespace pss::windows
