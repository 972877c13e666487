#include <doctest.h>

#include <random>

#include "pss/metrics.hpp"

#include "metric_oracles.hpp"

using namespace pss;
using metrics::Segmentation;

namespace {

Segmentation seg(std::initializer_list<std::pair<int, int>> docs) {
    Segmentation s;
    s.docs = docs;
    return s;
}

std::vector<std::uint8_t> labels(std::initializer_list<int> v) {
    std::vector<std::uint8_t> out;
    for (int x : v) out.push_back(static_cast<std::uint8_t>(x));
    return out;
}

} // namespace

TEST_CASE("segmentation_from_labels basics") {
    CHECK(metrics::segmentation_from_labels(labels({1, 0, 1, 1, 0})) ==
          seg({{0, 2}, {2, 3}, {3, 5}}));
    CHECK(metrics::segmentation_from_labels(labels({1})) == seg({{0, 1}}));
    CHECK_THROWS_AS(metrics::segmentation_from_labels({}), ValidationError);
    CHECK_THROWS_AS(metrics::segmentation_from_labels(labels({0, 1}), true), ValidationError);
    bool forced = false;
    const auto s = metrics::segmentation_from_labels(labels({0, 1}), false, &forced);
    CHECK(forced);
    CHECK(s == seg({{0, 1}, {1, 2}}));
}

TEST_CASE("segmentation_from_labels partitions for every suffix (N=8)") {
    for (const auto& lv : oracle::all_label_vectors(8)) {
        const auto s = metrics::segmentation_from_labels(lv);
        CHECK_NOTHROW(metrics::validate(s));
        CHECK(s.page_count() == 8);
        // cuts land exactly on the label-1 indices
        std::vector<std::uint8_t> rebuilt(8, 0);
        for (const auto& [b, e] : s.docs) rebuilt[static_cast<std::size_t>(b)] = 1;
        CHECK(rebuilt == lv);
    }
}

TEST_CASE("page_metrics hand examples") {
    const auto t = labels({1, 0, 1, 0, 0});
    SUBCASE("perfect") {
        const auto m = metrics::page_metrics(t, t, false);
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
    }
    SUBCASE("one extra break") {
        const auto c = metrics::page_counts(t, labels({1, 0, 1, 1, 0}), false);
        CHECK(c.tp == 2);
        CHECK(c.fp == 1);
        CHECK(c.fn == 0);
        const auto m = metrics::page_metrics(t, labels({1, 0, 1, 1, 0}), false);
        CHECK(m.precision == doctest::Approx(2.0 / 3.0));
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == doctest::Approx(0.8));
    }
    SUBCASE("forced leading one only") {
        // lenient forcing turns an all-zero prediction into [1,0,...]
        const auto truth = labels({1, 0, 1, 0, 1, 0}); // k = 3 starts
        const auto m = metrics::page_metrics(truth, labels({1, 0, 0, 0, 0, 0}), false);
        CHECK(m.recall == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("skip_first excludes index 0") {
        const auto c = metrics::page_counts(t, t, true);
        CHECK(c.tp == 1); // only the start at index 2 counts
        CHECK(c.fp == 0);
        CHECK(c.fn == 0);
    }
    CHECK_THROWS_AS(metrics::page_metrics(t, labels({1, 0}), false), ValidationError);
}

TEST_CASE("doc_metrics hand example") {
    const auto t = seg({{0, 2}, {2, 3}, {3, 5}});
    const auto p = seg({{0, 3}, {3, 5}});
    const auto c = metrics::doc_counts(t, p);
    CHECK(c.tp == 1);
    CHECK(c.fp == 1);
    CHECK(c.fn == 2);
    const auto m = metrics::doc_metrics(t, p);
    CHECK(m.precision == doctest::Approx(0.5));
    CHECK(m.recall == doctest::Approx(1.0 / 3.0));
    CHECK(m.f1 == doctest::Approx(0.4));
    CHECK(metrics::doc_metrics(t, t).f1 == 1.0);
    CHECK_THROWS_AS(metrics::doc_counts(t, seg({{0, 4}})), ValidationError);
}

TEST_CASE("mndd hand examples") {
    const auto t = seg({{0, 2}, {2, 3}, {3, 5}});
    CHECK(metrics::mndd(t, t) == 0);
    CHECK(metrics::mndd(t, seg({{0, 3}, {3, 5}})) == 1);
    // merging everything: drag 3 pages out of the big document
    CHECK(metrics::mndd(t, seg({{0, 5}})) == 3);
    // single true doc vs singleton prediction: 9 drags
    Segmentation one, singles;
    one.docs = {{0, 10}};
    for (int i = 0; i < 10; ++i) singles.docs.emplace_back(i, i + 1);
    CHECK(metrics::mndd(one, singles) == 9);
    CHECK(metrics::mndd(singles, one) == 9);
}

TEST_CASE("doc counts and mndd match the brute-force oracles (N<=6 exhaustive)") {
    for (int n = 1; n <= 6; ++n) {
        const auto all = oracle::all_label_vectors(n);
        for (const auto& t : all) {
            for (const auto& p : all) {
                const auto st = metrics::segmentation_from_labels(t);
                const auto sp = metrics::segmentation_from_labels(p);
                const auto got = metrics::doc_counts(st, sp);
                const auto want = oracle::doc_set_counts(t, p);
                REQUIRE(got.tp == want.tp);
                REQUIRE(got.fp == want.fp);
                REQUIRE(got.fn == want.fn);
                REQUIRE(metrics::mndd(st, sp) == oracle::mndd_brute(t, p));
            }
        }
    }
}

TEST_CASE("mndd properties on random pairs") {
    std::mt19937_64 rng(20240901);
    for (int iter = 0; iter < 2000; ++iter) {
        const int n = 1 + static_cast<int>(rng() % 24);
        std::vector<std::uint8_t> t(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n));
        t[0] = p[0] = 1;
        for (int i = 1; i < n; ++i) {
            t[static_cast<std::size_t>(i)] = rng() % 3 == 0;
            p[static_cast<std::size_t>(i)] = rng() % 3 == 0;
        }
        const auto st = metrics::segmentation_from_labels(t);
        const auto sp = metrics::segmentation_from_labels(p);
        const auto d = metrics::mndd(st, sp);

        // symmetry
        REQUIRE(metrics::mndd(sp, st) == d);
        // zero exactly on equality, and equality is doc F1 == 1
        const auto prf = metrics::doc_metrics(st, sp);
        REQUIRE((d == 0) == (st == sp));
        REQUIRE((d == 0) == (prf.f1 == 1.0));
        // the best single pairwise overlap bounds the matching from below
        std::int64_t best_overlap = 0;
        for (const auto& a : sp.docs)
            for (const auto& b : st.docs)
                best_overlap = std::max(best_overlap,
                                        static_cast<std::int64_t>(
                                            std::max(0, std::min(a.second, b.second) -
                                                            std::max(a.first, b.first))));
        REQUIRE(d <= n - best_overlap);
        // doc count identities
        const auto c = metrics::doc_counts(st, sp);
        REQUIRE(c.tp + c.fp == sp.docs.size());
        REQUIRE(c.tp + c.fn == st.docs.size());
    }
}

TEST_CASE("score_stream and stream report invariants") {
    windows::LabelVector truth{"s1", labels({1, 0, 1, 1, 0})};
    windows::LabelVector pred{"s1", labels({1, 0, 1, 1, 0})};
    auto rep = metrics::score_stream(truth, pred);
    CHECK(rep.perfect);
    CHECK(rep.mndd == 0);
    CHECK(rep.doc.fp == 0);
    CHECK(rep.doc.fn == 0);

    pred.labels = labels({0, 0, 1, 1, 0});
    SUBCASE("lenient forces the leading one") {
        rep = metrics::score_stream(truth, pred);
        CHECK(rep.forced_first);
        CHECK(rep.perfect);
        CHECK(rep.page.fn == 0); // never an FN at index 0
    }
    SUBCASE("strict rejects") {
        metrics::ScoreOptions opts;
        opts.strict = true;
        CHECK_THROWS_AS(metrics::score_stream(truth, pred, opts), ValidationError);
    }
    SUBCASE("length mismatch") {
        pred.labels = labels({1, 0});
        CHECK_THROWS_AS(metrics::score_stream(truth, pred), ValidationError);
    }
}

TEST_CASE("perfect <=> mndd zero <=> no doc errors on random streams") {
    std::mt19937_64 rng(77);
    for (int iter = 0; iter < 500; ++iter) {
        const int n = 1 + static_cast<int>(rng() % 12);
        windows::LabelVector t{"s", {}}, p{"s", {}};
        t.labels.assign(static_cast<std::size_t>(n), 0);
        p.labels.assign(static_cast<std::size_t>(n), 0);
        t.labels[0] = p.labels[0] = 1;
        for (int i = 1; i < n; ++i) {
            t.labels[static_cast<std::size_t>(i)] = rng() % 2;
            p.labels[static_cast<std::size_t>(i)] = rng() % 2;
        }
        const auto rep = metrics::score_stream(t, p);
        REQUIRE(rep.perfect == (rep.mndd == 0));
        REQUIRE(rep.perfect == (rep.doc.fp == 0 && rep.doc.fn == 0));
    }
}

TEST_CASE("stp") {
    metrics::StreamReport perfect, broken;
    perfect.perfect = true;
    broken.perfect = false;
    CHECK(metrics::stp({perfect, perfect}) == 1.0);
    CHECK(metrics::stp({perfect, perfect, broken}) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(metrics::stp({}), ValidationError);

    std::vector<metrics::StreamReport> ten(10, broken);
    for (int i = 0; i < 8; ++i) ten[static_cast<std::size_t>(i)].perfect = true;
    CHECK(metrics::stp(ten) == doctest::Approx(0.8));
}

TEST_CASE("aggregate pools micro-style") {
    windows::LabelVector t{"s1", labels({1, 0, 1})};
    const auto rep = metrics::score_stream(t, t);
    SUBCASE("single stream equals itself") {
        const auto agg = metrics::aggregate({rep});
        CHECK(agg.page.f1 == 1.0);
        CHECK(agg.doc.f1 == 1.0);
        CHECK(agg.mean_mndd == 0.0);
        CHECK(agg.stp == 1.0);
    }
    SUBCASE("hand pooling") {
        metrics::StreamReport a, b;
        a.doc = {1, 0, 0};
        b.doc = {0, 1, 1};
        a.mndd = 0;
        b.mndd = 2;
        a.perfect = true;
        b.perfect = false;
        const auto agg = metrics::aggregate({a, b});
        CHECK(agg.doc.precision == doctest::Approx(0.5));
        CHECK(agg.doc.recall == doctest::Approx(0.5));
        CHECK(agg.mean_mndd == doctest::Approx(1.0));
        CHECK(agg.stp == doctest::Approx(0.5));
    }
    CHECK_THROWS_AS(metrics::aggregate({}), ValidationError);
}

TEST_CASE("f1 zero convention") {
    const auto m = metrics::prf_from_counts({0, 3, 2});
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
}

TEST_CASE("report serialization carries all fields") {
    windows::LabelVector t{"s1", labels({1, 0, 1})};
    const auto rep = metrics::score_stream(t, t);
    const auto agg = metrics::aggregate({rep});
    const auto with = metrics::report_json(agg, nullptr);
    CHECK(with.find("\"stp\"") != std::string::npos);
    CHECK(with.find("\"mean_mndd\"") != std::string::npos);
    CHECK(with.find("per_stream") == std::string::npos);
    std::vector<metrics::StreamReport> reports{rep};
    CHECK(metrics::report_json(agg, &reports).find("per_stream") != std::string::npos);
    const auto csv = metrics::report_csv(agg);
    CHECK(csv.find("page_f1") != std::string::npos);
    CHECK(csv.find("\n1,1,1,1,1,1,0,1\n") != std::string::npos);
}
