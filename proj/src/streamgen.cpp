#include "pss/streamgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "pss/corpus.hpp"
#include "pss/rng.hpp"
#include "pss/windows.hpp"

namespace pss::streamgen {

void validate(const GenConfig& cfg, std::size_t collection_size) {
    if (cfg.num_streams < 1) throw ValidationError("num_streams must be >= 1");
    if (!(cfg.doc_rate > 0)) throw ValidationError("doc_rate must be positive");
    if (!(cfg.page_rate > 0)) throw ValidationError("page_rate must be positive");
    if (collection_size == 0) throw ValidationError("document collection is empty");
    if (!cfg.doc_weights.empty()) {
        if (cfg.doc_weights.size() != collection_size)
            throw ValidationError("doc_weights size must match the collection");
        double sum = 0;
        for (double w : cfg.doc_weights) {
            if (!(w >= 0)) throw ValidationError("doc_weights must be nonnegative");
            sum += w;
        }
        if (!(sum > 0)) throw ValidationError("doc_weights must not be all zero");
        if (!cfg.with_replacement)
            throw ValidationError("doc_weights require sampling with replacement");
    }
}

namespace {

std::string stream_name(std::uint64_t index) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "s%08llu", static_cast<unsigned long long>(index));
    return buf;
}

// Weighted index draw by inverse CDF over cumulative weights.
std::size_t weighted_draw(const std::vector<double>& cum, Rng& rng) {
    const double u = rng.uniform01() * cum.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

} // namespace

std::vector<corpus::StreamManifest> generate_streams(std::span<const std::string> collection_ids,
                                                     const GenConfig& cfg) {
    validate(cfg, collection_ids.size());

    std::vector<corpus::StreamManifest> out(cfg.num_streams);

    if (!cfg.with_replacement) {
        // Document counts first (per-stream substreams), then contiguous
        // slices of one globally shuffled deck.
        std::vector<std::uint64_t> doc_counts(cfg.num_streams);
        std::uint64_t need = 0;
        for (std::uint64_t m = 0; m < cfg.num_streams; ++m) {
            Rng rng = Rng::substream(cfg.seed, m);
            doc_counts[m] = rng.poisson_zero_truncated(cfg.doc_rate);
            need += doc_counts[m];
        }
        if (need > collection_ids.size())
            throw ValidationError("collection exhausted: need " + std::to_string(need) +
                                  " documents, have " + std::to_string(collection_ids.size()));
        std::vector<std::size_t> deck(collection_ids.size());
        std::iota(deck.begin(), deck.end(), 0);
        // domain-separated from the per-stream substreams
        Rng shuffle_rng = Rng::substream(splitmix64(cfg.seed) ^ 0x736875666c65ULL, 0);
        for (std::size_t i = deck.size(); i > 1; --i)
            std::swap(deck[i - 1], deck[shuffle_rng.uniform_below(i)]);
        std::uint64_t cursor = 0;
        for (std::uint64_t m = 0; m < cfg.num_streams; ++m) {
            out[m].stream_id = stream_name(m);
            for (std::uint64_t k = 0; k < doc_counts[m]; ++k)
                out[m].doc_ids.push_back(collection_ids[deck[cursor++]]);
        }
        return out;
    }

    std::vector<double> cum;
    if (!cfg.doc_weights.empty()) {
        cum.resize(cfg.doc_weights.size());
        std::partial_sum(cfg.doc_weights.begin(), cfg.doc_weights.end(), cum.begin());
    }
    for (std::uint64_t m = 0; m < cfg.num_streams; ++m) {
        Rng rng = Rng::substream(cfg.seed, m);
        const std::uint64_t count = rng.poisson_zero_truncated(cfg.doc_rate);
        out[m].stream_id = stream_name(m);
        out[m].doc_ids.reserve(count);
        for (std::uint64_t k = 0; k < count; ++k) {
            const std::size_t pick = cum.empty()
                                         ? static_cast<std::size_t>(rng.uniform_below(collection_ids.size()))
                                         : weighted_draw(cum, rng);
            out[m].doc_ids.push_back(collection_ids[pick]);
        }
    }
    return out;
}

std::vector<corpus::StreamManifest> generate_streams(std::span<const corpus::DocumentRecord> collection,
                                                     const GenConfig& cfg) {
    std::vector<std::string> ids;
    ids.reserve(collection.size());
    for (const auto& d : collection) ids.push_back(d.doc_id);
    return generate_streams(ids, cfg);
}

void assign_splits(std::vector<corpus::StreamManifest>& streams, double train_frac,
                   double validation_frac) {
    if (train_frac < 0 || validation_frac < 0 || train_frac + validation_frac > 1.0)
        throw ValidationError("split fractions must be nonnegative and sum to <= 1");
    const auto n = static_cast<double>(streams.size());
    const auto n_train = static_cast<std::size_t>(std::floor(train_frac * n));
    const auto n_val = static_cast<std::size_t>(std::floor(validation_frac * n));
    for (std::size_t i = 0; i < streams.size(); ++i) {
        if (i < n_train) streams[i].split = corpus::Split::train;
        else if (i < n_train + n_val) streams[i].split = corpus::Split::validation;
        else streams[i].split = corpus::Split::test;
    }
}

void validate(const VocabSpec& spec) {
    if (spec.num_topics < 1) throw ValidationError("num_topics must be >= 1");
    if (spec.words_per_topic < 0 || spec.doc_unique_words < 0 ||
        spec.header_words_per_topic < 0 || spec.header_tokens_on_first_page < 0)
        throw ValidationError("vocab sizes must be nonnegative");
    if (spec.words_per_topic + spec.doc_unique_words == 0)
        throw ValidationError("need topic or document words to draw page text from");
    if (spec.topic_token_fraction < 0 || spec.topic_token_fraction > 1)
        throw ValidationError("topic_token_fraction must be in [0, 1]");
    if (spec.words_per_topic == 0 && spec.topic_token_fraction > 0)
        throw ValidationError("topic_token_fraction > 0 needs words_per_topic > 0");
    if (spec.doc_unique_words == 0 && spec.topic_token_fraction < 1)
        throw ValidationError("doc body tokens need doc_unique_words > 0");
    if (spec.header_tokens_on_first_page > 0 && spec.header_words_per_topic == 0)
        throw ValidationError("header tokens need header_words_per_topic > 0");
    if (!(spec.tokens_per_page > 0)) throw ValidationError("tokens_per_page must be positive");
}

namespace {

// Lays words onto the page left to right, wrapping lines; coordinates stay
// inside the unit square.
corpus::PageRecord make_page(const std::string& doc_id, int page_index,
                             const std::vector<std::string>& words) {
    corpus::PageRecord page;
    page.doc_id = doc_id;
    page.page_index = page_index;
    page.width = 1000;
    page.height = 1400;
    const double pitch = 0.01, line_h = 0.02;
    double x = 0.02, y = 0.05;
    for (const auto& w : words) {
        const double width = pitch * static_cast<double>(w.size());
        if (x + width > 0.98) {
            x = 0.02;
            y += line_h;
            if (y > 0.95) y = 0.95;
        }
        page.tokens.push_back({w, x, y, std::min(0.99, x + width), std::min(1.0, y + 0.015)});
        x += width + pitch;
    }
    return page;
}

} // namespace

std::vector<corpus::DocumentRecord> synth_collection(std::uint64_t num_docs, double page_rate,
                                                     const VocabSpec& spec, std::uint64_t seed) {
    if (num_docs < 1) throw ValidationError("num_docs must be >= 1");
    if (!(page_rate > 0)) throw ValidationError("page_rate must be positive");
    validate(spec);

    auto topic_word = [](int topic, int i) {
        return "t" + std::to_string(topic) + "w" + std::to_string(i);
    };
    auto header_word = [](int topic, int i) {
        return "h" + std::to_string(topic) + "x" + std::to_string(i);
    };

    const std::uint64_t synth_seed = splitmix64(seed) ^ 0x73796e7468646fULL;
    std::vector<corpus::DocumentRecord> docs(num_docs);
    for (std::uint64_t d = 0; d < num_docs; ++d) {
        Rng rng = Rng::substream(synth_seed, d);
        const int topic = static_cast<int>(d % static_cast<std::uint64_t>(spec.num_topics));
        auto& doc = docs[d];
        doc.doc_id = "doc" + std::to_string(d);

        const auto pages = rng.poisson_zero_truncated(page_rate);
        for (std::uint64_t p = 0; p < pages; ++p) {
            std::vector<std::string> words;
            const auto count = rng.poisson_zero_truncated(spec.tokens_per_page);
            if (p == 0 && spec.header_tokens_on_first_page > 0) {
                for (int k = 0; k < spec.header_tokens_on_first_page; ++k)
                    words.push_back(header_word(
                        topic, static_cast<int>(rng.uniform_below(
                                   static_cast<std::uint64_t>(spec.header_words_per_topic)))));
            }
            for (std::uint64_t k = 0; k < count; ++k) {
                const bool topical = spec.words_per_topic > 0 &&
                                     (spec.doc_unique_words == 0 ||
                                      rng.uniform01() < spec.topic_token_fraction);
                if (topical) {
                    words.push_back(topic_word(
                        topic, static_cast<int>(rng.uniform_below(
                                   static_cast<std::uint64_t>(spec.words_per_topic)))));
                } else {
                    words.push_back("d" + std::to_string(d) + "u" +
                                    std::to_string(rng.uniform_below(
                                        static_cast<std::uint64_t>(spec.doc_unique_words))));
                }
            }
            doc.pages.push_back(make_page(doc.doc_id, static_cast<int>(p), words));
        }
    }
    return docs;
}

double expected_pages(double num_streams, double doc_rate, double page_rate) {
    if (!(num_streams > 0) || !(doc_rate > 0) || !(page_rate > 0))
        throw ValidationError("expected_pages needs positive arguments");
    return num_streams * doc_rate * page_rate;
}

double model_positive_ratio(double p, double nu, bool dedup) {
    if (p < 0 || p >= 1) throw ValidationError("duplicate ratio p must be in [0, 1)");
    if (nu < 1) throw ValidationError("nu must be >= 1");
    if (!dedup) return 1.0 / nu;
    return p + (1.0 - p) / nu;
}

double model_positive_ratio_by_counts(double p, double nu) {
    if (p < 0 || p >= 1) throw ValidationError("duplicate ratio p must be in [0, 1)");
    if (nu < 1) throw ValidationError("nu must be >= 1");
    return 1.0 / (1.0 + (1.0 - p) * (nu - 1.0));
}

namespace {

// Shared scan over document instances in (stream_id asc, slot asc) order.
template <typename Fn>
void scan_instances(const std::vector<corpus::StreamManifest>& streams,
                    const corpus::Corpus& corpus, Fn&& fn) {
    std::vector<const corpus::StreamManifest*> order;
    order.reserve(streams.size());
    for (const auto& s : streams) order.push_back(&s);
    std::sort(order.begin(), order.end(),
              [](const auto* a, const auto* b) { return a->stream_id < b->stream_id; });

    std::unordered_map<std::string, std::uint64_t> key_cache;
    std::unordered_map<std::string, std::uint64_t> pages_cache;
    for (const auto* stream : order) {
        for (const auto& id : stream->doc_ids) {
            auto kit = key_cache.find(id);
            if (kit == key_cache.end()) {
                const auto& doc = corpus.doc(id);
                kit = key_cache.emplace(id, corpus::document_content_key(doc)).first;
                pages_cache.emplace(id, doc.pages.size());
            }
            fn(kit->second, pages_cache[id]);
        }
    }
}

} // namespace

double measured_duplicate_ratio(const std::vector<corpus::StreamManifest>& streams,
                                const corpus::Corpus& corpus) {
    std::unordered_set<std::uint64_t> seen;
    std::uint64_t instances = 0, repeats = 0;
    scan_instances(streams, corpus, [&](std::uint64_t key, std::uint64_t) {
        ++instances;
        if (!seen.insert(key).second) ++repeats;
    });
    if (instances == 0) throw ValidationError("no document instances in the stream set");
    return static_cast<double>(repeats) / static_cast<double>(instances);
}

PairSampleStats measure_pair_stats(const std::vector<corpus::StreamManifest>& streams,
                                   const corpus::Corpus& corpus, bool dedup) {
    // Mirrors extract_windows(l=1, r=0) + dedup_pair_samples without
    // materializing samples: each document instance contributes one positive
    // start sample plus pages-1 negatives; repeat occurrences keep only the
    // start after dedup.
    std::unordered_set<std::uint64_t> seen;
    std::uint64_t total_raw = 0, pos_raw = 0, total_dedup = 0, pos_dedup = 0;
    scan_instances(streams, corpus, [&](std::uint64_t key, std::uint64_t pages) {
        const bool first = seen.insert(key).second;
        total_raw += pages;
        pos_raw += 1;
        total_dedup += first ? pages : 1;
        pos_dedup += 1;
    });

    PairSampleStats stats;
    if (total_raw == 0) return stats;
    if (dedup) {
        stats.total_samples = total_dedup;
        stats.unique_ratio = 1.0;
        stats.positive_ratio = static_cast<double>(pos_dedup) / static_cast<double>(total_dedup);
    } else {
        stats.total_samples = total_raw;
        stats.unique_ratio = static_cast<double>(total_dedup) / static_cast<double>(total_raw);
        stats.positive_ratio = static_cast<double>(pos_raw) / static_cast<double>(total_raw);
    }
    return stats;
}

} // namespace pss::streamgen
