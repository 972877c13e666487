#include "pss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "pss/error.hpp"
#include "pss/io.hpp"

namespace pss::metrics {

using nlohmann::json;

void validate(const Segmentation& seg) {
    int expect = 0;
    for (const auto& [begin, end] : seg.docs) {
        if (begin != expect || end <= begin)
            throw ValidationError("segmentation tuples must be contiguous and non-empty");
        expect = end;
    }
}

Segmentation segmentation_from_labels(const std::vector<std::uint8_t>& labels, bool strict,
                                      bool* forced) {
    if (labels.empty()) throw ValidationError("empty label vector");
    if (forced) *forced = false;
    if (labels[0] != 1) {
        if (strict) throw ValidationError("label vector must start with 1");
        if (forced) *forced = true;
    }
    Segmentation seg;
    int start = 0;
    const int n = static_cast<int>(labels.size());
    for (int i = 1; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == 1) {
            seg.docs.emplace_back(start, i);
            start = i;
        }
    }
    seg.docs.emplace_back(start, n);
    return seg;
}

Prf prf_from_counts(const Counts& c) {
    Prf r;
    if (c.tp + c.fp) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (r.precision + r.recall > 0)
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

Counts page_counts(const std::vector<std::uint8_t>& truth, const std::vector<std::uint8_t>& pred,
                   bool skip_first) {
    if (truth.size() != pred.size())
        throw ValidationError("label vectors differ in length: " + std::to_string(truth.size()) +
                              " vs " + std::to_string(pred.size()));
    Counts c;
    for (std::size_t i = skip_first ? 1 : 0; i < truth.size(); ++i) {
        const bool t = truth[i] == 1, p = pred[i] == 1;
        if (t && p) ++c.tp;
        else if (!t && p) ++c.fp;
        else if (t && !p) ++c.fn;
    }
    return c;
}

Prf page_metrics(const std::vector<std::uint8_t>& truth, const std::vector<std::uint8_t>& pred,
                 bool skip_first) {
    return prf_from_counts(page_counts(truth, pred, skip_first));
}

Counts doc_counts(const Segmentation& truth, const Segmentation& pred) {
    if (truth.page_count() != pred.page_count())
        throw ValidationError("segmentations cover different page ranges");
    // Both tuple lists are sorted by construction; set intersection by merge.
    std::uint64_t common = 0;
    std::size_t i = 0, j = 0;
    while (i < truth.docs.size() && j < pred.docs.size()) {
        if (truth.docs[i] == pred.docs[j]) {
            ++common, ++i, ++j;
        } else if (truth.docs[i] < pred.docs[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    Counts c;
    c.tp = common;
    c.fp = pred.docs.size() - common;
    c.fn = truth.docs.size() - common;
    return c;
}

Prf doc_metrics(const Segmentation& truth, const Segmentation& pred) {
    return prf_from_counts(doc_counts(truth, pred));
}

namespace {

// Exact max-weight assignment via the O(n^3) Hungarian algorithm with
// potentials (minimization on negated weights, rectangular input padded
// implicitly). Weights are nonnegative page overlaps, so leaving a document
// unmatched never beats matching it at weight >= 0.
std::int64_t max_weight_assignment(const std::vector<std::vector<std::int64_t>>& w) {
    const std::size_t rows = w.size();
    if (rows == 0) return 0;
    const std::size_t cols = w[0].size();
    const std::size_t n = std::max(rows, cols);
    const std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

    auto cost = [&](std::size_t i, std::size_t j) -> std::int64_t {
        if (i < rows && j < cols) return -w[i][j];
        return 0; // padding
    };

    std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> way(n + 1, 0), match(n + 1, 0); // match[j]: row for col j (1-based)
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<std::int64_t> minv(n + 1, kInf);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            std::int64_t delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const std::int64_t cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }

    std::int64_t total = 0;
    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = match[j];
        if (i >= 1 && i <= rows && j <= cols) total += w[i - 1][j - 1];
    }
    return total;
}

std::int64_t overlap(const std::pair<int, int>& a, const std::pair<int, int>& b) {
    return std::max(0, std::min(a.second, b.second) - std::max(a.first, b.first));
}

} // namespace

std::int64_t mndd(const Segmentation& truth, const Segmentation& pred) {
    const int n = truth.page_count();
    if (n != pred.page_count())
        throw ValidationError("segmentations cover different page ranges");
    std::vector<std::vector<std::int64_t>> w(pred.docs.size(),
                                             std::vector<std::int64_t>(truth.docs.size(), 0));
    for (std::size_t i = 0; i < pred.docs.size(); ++i)
        for (std::size_t j = 0; j < truth.docs.size(); ++j)
            w[i][j] = overlap(pred.docs[i], truth.docs[j]);
    return n - max_weight_assignment(w);
}

StreamReport score_stream(const windows::LabelVector& truth, const windows::LabelVector& pred,
                          const ScoreOptions& opts) {
    if (truth.labels.size() != pred.labels.size())
        throw ValidationError("stream " + truth.stream_id + ": prediction has " +
                              std::to_string(pred.labels.size()) + " labels, expected " +
                              std::to_string(truth.labels.size()));
    StreamReport rep;
    rep.stream_id = truth.stream_id;
    rep.pages = truth.labels.size();

    std::vector<std::uint8_t> fixed = pred.labels;
    if (!fixed.empty() && fixed[0] != 1) {
        if (opts.strict)
            throw ValidationError("stream " + truth.stream_id + ": prediction starts with 0");
        fixed[0] = 1;
        rep.forced_first = true;
    }

    rep.page = page_counts(truth.labels, fixed, opts.skip_first);
    const Segmentation t = segmentation_from_labels(truth.labels, true);
    const Segmentation p = segmentation_from_labels(fixed, true);
    rep.doc = doc_counts(t, p);
    rep.mndd = mndd(t, p);
    rep.perfect = rep.doc.fp == 0 && rep.doc.fn == 0;
    return rep;
}

double stp(const std::vector<StreamReport>& reports) {
    if (reports.empty()) throw ValidationError("stp over empty report list");
    std::uint64_t perfect = 0;
    for (const auto& r : reports) perfect += r.perfect ? 1 : 0;
    return static_cast<double>(perfect) / static_cast<double>(reports.size());
}

AggregateReport aggregate(const std::vector<StreamReport>& reports) {
    if (reports.empty()) throw ValidationError("aggregate over empty report list");
    AggregateReport agg;
    Counts page, doc;
    double mndd_sum = 0;
    for (const auto& r : reports) {
        page.tp += r.page.tp;
        page.fp += r.page.fp;
        page.fn += r.page.fn;
        doc.tp += r.doc.tp;
        doc.fp += r.doc.fp;
        doc.fn += r.doc.fn;
        mndd_sum += static_cast<double>(r.mndd);
        agg.pages += r.pages;
        agg.forced_first_pages += r.forced_first ? 1 : 0;
    }
    agg.page = prf_from_counts(page);
    agg.doc = prf_from_counts(doc);
    agg.mean_mndd = mndd_sum / static_cast<double>(reports.size());
    agg.stp = stp(reports);
    agg.streams = reports.size();
    return agg;
}

namespace {

json prf_json(const Prf& p) {
    return json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

} // namespace

std::string report_json(const AggregateReport& agg, const std::vector<StreamReport>* per_stream) {
    json j{{"streams", agg.streams},
           {"pages", agg.pages},
           {"page", prf_json(agg.page)},
           {"document", prf_json(agg.doc)},
           {"mean_mndd", agg.mean_mndd},
           {"stp", agg.stp},
           {"forced_first_pages", agg.forced_first_pages}};
    if (per_stream) {
        json arr = json::array();
        for (const auto& r : *per_stream) {
            arr.push_back(json{{"stream_id", r.stream_id},
                               {"pages", r.pages},
                               {"page", {{"tp", r.page.tp}, {"fp", r.page.fp}, {"fn", r.page.fn}}},
                               {"doc", {{"tp", r.doc.tp}, {"fp", r.doc.fp}, {"fn", r.doc.fn}}},
                               {"mndd", r.mndd},
                               {"perfect", r.perfect},
                               {"forced_first", r.forced_first}});
        }
        j["per_stream"] = std::move(arr);
    }
    return j.dump(2) + "\n";
}

std::string report_csv(const AggregateReport& agg) {
    std::string out =
        "page_precision,page_recall,page_f1,doc_precision,doc_recall,doc_f1,mean_mndd,stp\n";
    out += csv_row({format_double(agg.page.precision), format_double(agg.page.recall),
                    format_double(agg.page.f1), format_double(agg.doc.precision),
                    format_double(agg.doc.recall), format_double(agg.doc.f1),
                    format_double(agg.mean_mndd), format_double(agg.stp)});
    return out;
}

} // namespace pss::metrics
