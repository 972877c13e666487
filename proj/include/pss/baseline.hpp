#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pss::baseline {

// Lowercased word unigrams: maximal runs of word characters, at least two
// codepoints long (ASCII alphanumerics, '_', and any codepoint >= U+0080).
std::vector<std::string> analyze(std::string_view text);

struct Vocabulary {
    std::vector<std::string> terms;  // lexicographic, index = position
    std::vector<std::uint32_t> df;   // document frequency per term
    std::uint64_t num_pages_fitted = 0;
    std::unordered_map<std::string, std::int32_t> index;

    std::int32_t term_index(std::string_view term) const {
        auto it = index.find(std::string(term));
        return it == index.end() ? -1 : it->second;
    }
    std::size_t size() const { return terms.size(); }
};

// Pages are the fitting unit; every kept term has df >= 1.
Vocabulary fit_vectorizer(std::span<const std::string> pages);

struct SparseVec {
    std::int32_t dim = 0;
    std::vector<std::pair<std::int32_t, double>> entries; // index ascending
};

// Raw counts over V dims followed by an L2-normalized TF-IDF block over V
// dims, idf(t) = ln((1+n)/(1+df)) + 1. Out-of-vocabulary terms are ignored.
struct PageVector {
    SparseVec counts;
    SparseVec tfidf;
};

PageVector vectorize_page(std::string_view text, const Vocabulary& vocab);

// [prev.counts | prev.tfidf | cur.counts | cur.tfidf], dimension 4V.
SparseVec pair_features(const PageVector& prev, const PageVector& cur);

struct TrainConfig {
    int n_estimators = 100;
    int max_depth = 6;
    double learning_rate = 0.3;
    double reg_lambda = 1.0;
    double min_child_weight = 1.0;
    double base_score = 0.5;
    double pos_weight = 0; // <= 0: derive #neg/#pos from the labels
    std::uint64_t seed = 0;
};

struct TreeNode {
    std::int32_t feature = -1; // -1: leaf
    double threshold = 0;
    std::int32_t left = -1, right = -1;
    std::uint8_t default_left = 0; // direction for zero/missing values
    double value = 0;              // leaf weight
};

struct BaselineModel {
    std::uint32_t version = 1;
    Vocabulary vocab;
    TrainConfig config;
    double base_margin = 0;
    std::vector<std::vector<TreeNode>> trees;
};

// Gradient-boosted regression trees with logistic loss, second-order exact
// greedy splits and sparsity-aware default directions. Both classes must be
// present. Deterministic for a fixed config.
BaselineModel train_baseline(std::span<const SparseVec> features,
                             std::span<const std::uint8_t> labels, Vocabulary vocab,
                             const TrainConfig& cfg = {});

double predict_score(const BaselineModel& model, const SparseVec& features);
std::vector<double> predict_scores(const BaselineModel& model, std::span<const SparseVec> features);
std::vector<std::uint8_t> scores_to_labels(std::span<const double> scores, double threshold = 0.5);

// Versioned little-endian binary serialization with embedded vocabulary.
void save_model(const BaselineModel& model, const std::filesystem::path& path);
BaselineModel load_model(const std::filesystem::path& path);

} // namespace pss::baseline
