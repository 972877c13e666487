#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pss/records.hpp"

namespace pss::streamgen {

struct GenConfig {
    std::uint64_t num_streams = 1;  // M
    double doc_rate = 1.0;          // mean documents per stream (lambda)
    double page_rate = 1.0;         // mean pages per document (nu); used by synth
    bool with_replacement = true;
    std::uint64_t seed = 0;
    std::vector<double> doc_weights; // optional, one nonnegative weight per doc
};

void validate(const GenConfig& cfg, std::size_t collection_size);

// Draws per-stream document counts from a zero-truncated Poisson(doc_rate)
// and selects documents uniformly (or by weight). Per-stream RNG substreams
// make the output a pure function of (collection order, cfg), independent of
// scheduling. Without replacement, documents are consumed from a seeded
// global shuffle; running out raises ValidationError.
std::vector<corpus::StreamManifest> generate_streams(std::span<const std::string> collection_ids,
                                                     const GenConfig& cfg);
std::vector<corpus::StreamManifest> generate_streams(std::span<const corpus::DocumentRecord> collection,
                                                     const GenConfig& cfg);

// Relabels manifests by index ranges: the first train_frac of streams become
// train, the next validation_frac validation, the rest test.
void assign_splits(std::vector<corpus::StreamManifest>& streams, double train_frac,
                   double validation_frac);

// Synthetic document content. Every document draws from its topic's word
// list plus its own private word list; when header words are configured the
// first page starts with topic header tokens, which makes document starts
// linearly separable for the bag-of-words baseline.
struct VocabSpec {
    int num_topics = 2;
    int words_per_topic = 40;
    int doc_unique_words = 20;
    double topic_token_fraction = 0.2;   // body tokens drawn from the topic list
    int header_words_per_topic = 12;
    int header_tokens_on_first_page = 6; // 0 disables header markers
    double tokens_per_page = 20.0;       // zero-truncated Poisson mean
};

void validate(const VocabSpec& spec);

// Documents with zero-truncated Poisson(page_rate) page counts and synthetic
// OCR tokens laid out on a plausible grid.
std::vector<corpus::DocumentRecord> synth_collection(std::uint64_t num_docs, double page_rate,
                                                     const VocabSpec& spec, std::uint64_t seed);

// Expected page count M * lambda * nu under the generation model.
double expected_pages(double num_streams, double doc_rate, double page_rate);

// Table-style closed forms for the positive pair-sample ratio at duplicate
// ratio p and mean document length nu.
//   dedup = false: 1/nu
//   dedup = true:  p + (1-p)/nu
double model_positive_ratio(double p, double nu, bool dedup);

// Alternative derivation of the deduplicated ratio from sample counts:
// positives M*lambda over M*lambda*(1 + (1-p)(nu-1)) retained samples, i.e.
// 1 / (1 + (1-p)(nu-1)). Disagrees with model_positive_ratio(dedup=true) for
// 0 < p < 1; measurement arbitrates.
double model_positive_ratio_by_counts(double p, double nu);

// Fraction of document instances whose content key occurred earlier in the
// dataset (streams scanned by stream_id ascending, slots ascending).
double measured_duplicate_ratio(const std::vector<corpus::StreamManifest>& streams,
                                const corpus::Corpus& corpus);

struct PairSampleStats {
    std::uint64_t total_samples = 0;
    double unique_ratio = 0;   // |dedup(samples)| / |samples before dedup|
    double positive_ratio = 0; // over the (optionally deduplicated) set
};

// Counts the page-pair samples extract_windows(l=1, r=0) yields over all
// streams, optionally after dedup_pair_samples. Streaming implementation;
// matches the materialized pipeline exactly.
PairSampleStats measure_pair_stats(const std::vector<corpus::StreamManifest>& streams,
                                   const corpus::Corpus& corpus, bool dedup);

} // namespace pss::streamgen
