#include <doctest.h>

#include <cmath>

#include "pss/baseline.hpp"
#include "pss/io.hpp"
#include "pss/layout.hpp"
#include "pss/metrics.hpp"
#include "pss/streamgen.hpp"
#include "pss/windows.hpp"

#include "test_util.hpp"

using namespace pss;
namespace tu = testutil;

TEST_CASE("analyze lowercases and keeps words of two or more characters") {
    CHECK(baseline::analyze("Alpha beta GAMMA") ==
          std::vector<std::string>{"alpha", "beta", "gamma"});
    CHECK(baseline::analyze("A a") == std::vector<std::string>{}); // single chars dropped
    CHECK(baseline::analyze("x1 y_2 z") == std::vector<std::string>{"x1", "y_2"});
    CHECK(baseline::analyze("one,two;three") == std::vector<std::string>{"one", "two", "three"});
    CHECK(baseline::analyze("").empty());
}

TEST_CASE("fit_vectorizer") {
    const std::vector<std::string> pages{"aa bb", "bb cc"};
    const auto vocab = baseline::fit_vectorizer(pages);
    CHECK(vocab.size() == 3);
    CHECK(vocab.terms == std::vector<std::string>{"aa", "bb", "cc"});
    CHECK(vocab.df[1] == 2); // bb in both pages
    CHECK(vocab.df[0] == 1);
    CHECK(vocab.num_pages_fitted == 2);

    SUBCASE("case folding merges terms") {
        const std::vector<std::string> folded{"AA aa"};
        const auto v = baseline::fit_vectorizer(folded);
        CHECK(v.size() == 1);
        CHECK(v.df[0] == 1); // df counts pages, not occurrences
    }
    SUBCASE("df matches a hand scan") {
        const std::vector<std::string> fixture{"cat dog", "dog fish", "dog", "fish cat cat"};
        const auto v = baseline::fit_vectorizer(fixture);
        CHECK(v.terms == std::vector<std::string>{"cat", "dog", "fish"});
        CHECK(v.df == std::vector<std::uint32_t>{2, 3, 2});
    }
    SUBCASE("empty corpus rejected") {
        CHECK_THROWS_AS(baseline::fit_vectorizer({}), ValidationError);
    }
}

TEST_CASE("vectorize_page") {
    const std::vector<std::string> pages{"alpha beta", "beta gamma", "beta"};
    const auto vocab = baseline::fit_vectorizer(pages);
    REQUIRE(vocab.terms == std::vector<std::string>{"alpha", "beta", "gamma"});

    SUBCASE("empty text gives the zero vector") {
        const auto pv = baseline::vectorize_page("", vocab);
        CHECK(pv.counts.entries.empty());
        CHECK(pv.tfidf.entries.empty());
        CHECK(pv.counts.dim == 3);
    }
    SUBCASE("single known term is a unit vector in the tfidf block") {
        const auto pv = baseline::vectorize_page("gamma gamma gamma", vocab);
        REQUIRE(pv.tfidf.entries.size() == 1);
        CHECK(pv.tfidf.entries[0].second == doctest::Approx(1.0));
        CHECK(pv.counts.entries[0].second == 3.0);
    }
    SUBCASE("hand-computed idf values") {
        // idf = ln((1+3)/(1+df)) + 1; frozen against independent arithmetic
        const auto pv = baseline::vectorize_page("alpha alpha beta", vocab);
        REQUIRE(pv.counts.entries.size() == 2);
        CHECK(pv.counts.entries[0] == std::pair<std::int32_t, double>{0, 2.0});
        CHECK(pv.counts.entries[1] == std::pair<std::int32_t, double>{1, 1.0});
        REQUIRE(pv.tfidf.entries.size() == 2);
        CHECK(pv.tfidf.entries[0].second == doctest::Approx(0.95905587605771003).epsilon(1e-12));
        CHECK(pv.tfidf.entries[1].second == doctest::Approx(0.28321692498715262).epsilon(1e-12));
    }
    SUBCASE("out-of-vocabulary terms are ignored") {
        const auto pv = baseline::vectorize_page("unknown words only", vocab);
        CHECK(pv.counts.entries.empty());
    }
    SUBCASE("scaling counts leaves the tfidf block unchanged") {
        const auto once = baseline::vectorize_page("alpha alpha beta", vocab);
        const auto twice = baseline::vectorize_page("alpha alpha alpha alpha beta beta", vocab);
        REQUIRE(once.tfidf.entries.size() == twice.tfidf.entries.size());
        for (std::size_t i = 0; i < once.tfidf.entries.size(); ++i)
            CHECK(once.tfidf.entries[i].second ==
                  doctest::Approx(twice.tfidf.entries[i].second).epsilon(1e-12));
        for (std::size_t i = 0; i < once.counts.entries.size(); ++i)
            CHECK(2.0 * once.counts.entries[i].second == twice.counts.entries[i].second);
    }
}

TEST_CASE("pair_features") {
    const std::vector<std::string> pages{"aa bb", "bb cc"};
    const auto vocab = baseline::fit_vectorizer(pages);
    const auto prev = baseline::vectorize_page("aa", vocab);
    const auto cur = baseline::vectorize_page("cc", vocab);
    const auto f = baseline::pair_features(prev, cur);
    CHECK(f.dim == 12); // 4V with V = 3
    // block layout: prev counts 0..2, prev tfidf 3..5, cur counts 6..8, cur tfidf 9..11
    REQUIRE(f.entries.size() == 4);
    CHECK(f.entries[0].first == 0);  // "aa" count in prev block
    CHECK(f.entries[1].first == 3);  // "aa" tfidf in prev block
    CHECK(f.entries[2].first == 8);  // "cc" count in cur block
    CHECK(f.entries[3].first == 11); // "cc" tfidf in cur block

    SUBCASE("zero pages make a zero vector") {
        const auto z = baseline::pair_features(baseline::vectorize_page("", vocab),
                                               baseline::vectorize_page("", vocab));
        CHECK(z.entries.empty());
        CHECK(z.dim == 12);
    }
    SUBCASE("vocabulary mismatch raises") {
        const auto other = baseline::fit_vectorizer(std::vector<std::string>{"xx yy zz qq"});
        CHECK_THROWS_AS(
            baseline::pair_features(prev, baseline::vectorize_page("xx", other)),
            ValidationError);
    }
}

namespace {

// Rendered pair samples for a small separable corpus.
struct Dataset {
    baseline::Vocabulary vocab;
    std::vector<baseline::SparseVec> features;
    std::vector<std::uint8_t> labels;
};

Dataset make_dataset(std::uint64_t gen_seed, int num_streams) {
    const auto docs = streamgen::synth_collection(30, 3.0, {}, 7);
    streamgen::GenConfig cfg;
    cfg.num_streams = static_cast<std::uint64_t>(num_streams);
    cfg.doc_rate = 4.0;
    cfg.seed = gen_seed;
    auto streams = streamgen::generate_streams(docs, cfg);
    auto c = tu::corpus(docs, streams);

    std::vector<std::string> pages;
    std::vector<std::pair<std::string, std::string>> texts;
    std::vector<std::uint8_t> labels;
    for (const auto& s : c.streams) {
        for (const auto& w : windows::extract_windows(s, c)) {
            const auto render = [&](const windows::PageRef& ref) -> std::string {
                if (ref.sentinel) return "";
                return layout::linearize(
                    c.doc(ref.doc_id).pages.at(static_cast<std::size_t>(ref.page_index)));
            };
            texts.emplace_back(render(w.context[0]), render(w.context[1]));
            pages.push_back(texts.back().second);
            labels.push_back(w.label);
        }
    }
    Dataset ds;
    ds.vocab = baseline::fit_vectorizer(pages);
    for (const auto& [prev, cur] : texts)
        ds.features.push_back(baseline::pair_features(baseline::vectorize_page(prev, ds.vocab),
                                                      baseline::vectorize_page(cur, ds.vocab)));
    ds.labels = labels;
    return ds;
}

} // namespace

TEST_CASE("train_baseline separates the synthetic corpus") {
    auto ds = make_dataset(101, 60);
    baseline::TrainConfig cfg;
    cfg.n_estimators = 40;
    const auto model = baseline::train_baseline(ds.features, ds.labels, ds.vocab, cfg);
    CHECK(model.trees.size() == 40);

    const auto scores = baseline::predict_scores(model, ds.features);
    std::uint64_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        correct += (scores[i] >= 0.5 ? 1 : 0) == ds.labels[i] ? 1 : 0;
    CHECK(static_cast<double>(correct) / static_cast<double>(scores.size()) >= 0.99);
}

TEST_CASE("train_baseline rejects single-class data") {
    auto ds = make_dataset(102, 10);
    std::fill(ds.labels.begin(), ds.labels.end(), 1);
    CHECK_THROWS_AS(baseline::train_baseline(ds.features, ds.labels, ds.vocab, {}),
                    ValidationError);
}

TEST_CASE("training is deterministic: identical model bytes across runs") {
    auto ds = make_dataset(103, 30);
    baseline::TrainConfig cfg;
    cfg.n_estimators = 15;
    const auto a = baseline::train_baseline(ds.features, ds.labels, ds.vocab, cfg);
    const auto b = baseline::train_baseline(ds.features, ds.labels, ds.vocab, cfg);
    tu::ScratchDir dir("model_det");
    baseline::save_model(a, dir.path() / "a.bin");
    baseline::save_model(b, dir.path() / "b.bin");
    CHECK(read_file(dir.path() / "a.bin") == read_file(dir.path() / "b.bin"));
}

TEST_CASE("predict_pairs behavior") {
    auto ds = make_dataset(104, 30);

    SUBCASE("zero estimators return the ensemble prior") {
        baseline::TrainConfig cfg;
        cfg.n_estimators = 0;
        const auto model = baseline::train_baseline(ds.features, ds.labels, ds.vocab, cfg);
        baseline::SparseVec zero;
        zero.dim = ds.features[0].dim;
        CHECK(baseline::predict_score(model, zero) == doctest::Approx(0.5));
    }
    SUBCASE("threshold zero labels everything positive") {
        baseline::TrainConfig cfg;
        cfg.n_estimators = 5;
        const auto model = baseline::train_baseline(ds.features, ds.labels, ds.vocab, cfg);
        const auto scores = baseline::predict_scores(model, ds.features);
        for (auto l : baseline::scores_to_labels(scores, 0.0)) REQUIRE(l == 1);
    }
    SUBCASE("scores stay in (0, 1)") {
        baseline::TrainConfig cfg;
        cfg.n_estimators = 10;
        const auto model = baseline::train_baseline(ds.features, ds.labels, ds.vocab, cfg);
        for (double s : baseline::predict_scores(model, ds.features)) {
            REQUIRE(s > 0.0);
            REQUIRE(s < 1.0);
        }
    }
}

TEST_CASE("model serialization round trip") {
    auto ds = make_dataset(105, 20);
    baseline::TrainConfig cfg;
    cfg.n_estimators = 8;
    const auto model = baseline::train_baseline(ds.features, ds.labels, ds.vocab, cfg);
    tu::ScratchDir dir("model_io");
    const auto path = dir.path() / "model.bin";
    baseline::save_model(model, path);
    const auto loaded = baseline::load_model(path);
    CHECK(loaded.vocab.terms == model.vocab.terms);
    CHECK(loaded.vocab.df == model.vocab.df);
    CHECK(loaded.trees.size() == model.trees.size());
    for (std::size_t i = 0; i < ds.features.size(); ++i)
        REQUIRE(baseline::predict_score(loaded, ds.features[i]) ==
                baseline::predict_score(model, ds.features[i]));

    SUBCASE("checksum catches corruption") {
        auto bytes = read_file(path);
        bytes[bytes.size() / 2] ^= 0x40;
        write_file(path, bytes);
        CHECK_THROWS_AS(baseline::load_model(path), ValidationError);
    }
    SUBCASE("wrong magic") {
        write_file(path, "definitely not a model");
        CHECK_THROWS_AS(baseline::load_model(path), ValidationError);
    }
}
