#include "pss/windows.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "pss/corpus.hpp"

namespace pss::windows {

LabelVector label_stream(const corpus::StreamManifest& manifest, const corpus::Corpus& corpus) {
    LabelVector lv;
    lv.stream_id = manifest.stream_id;
    for (const auto& id : manifest.doc_ids) {
        const auto& doc = corpus.doc(id);
        lv.labels.push_back(1);
        for (std::size_t i = 1; i < doc.pages.size(); ++i) lv.labels.push_back(0);
    }
    return lv;
}

std::vector<WindowSample> extract_windows(const corpus::StreamManifest& manifest,
                                          const corpus::Corpus& corpus, int l, int r) {
    if (l < 0 || r < 0) throw ValidationError("window sizes must be nonnegative");

    // flatten the stream's pages with their document provenance
    struct Flat {
        const std::string* doc_id;
        int page_index;
        int slot;
    };
    std::vector<Flat> pages;
    int slot = 0;
    for (const auto& id : manifest.doc_ids) {
        const auto& doc = corpus.doc(id);
        for (std::size_t p = 0; p < doc.pages.size(); ++p)
            pages.push_back({&doc.doc_id, static_cast<int>(p), slot});
        ++slot;
    }

    const PageRef sentinel{std::string(kSentinelDocId), 0, true};
    std::vector<WindowSample> out;
    out.reserve(pages.size());
    const int n = static_cast<int>(pages.size());
    for (int i = 0; i < n; ++i) {
        WindowSample s;
        s.stream_id = manifest.stream_id;
        s.center_index = i;
        s.left = l;
        s.right = r;
        for (int k = i - l; k <= i + r; ++k) {
            if (k < 0 || k >= n) {
                s.context.push_back(sentinel);
            } else {
                s.context.push_back(
                    PageRef{*pages[static_cast<std::size_t>(k)].doc_id,
                            pages[static_cast<std::size_t>(k)].page_index, false});
            }
        }
        const Flat& cur = pages[static_cast<std::size_t>(i)];
        s.label = cur.page_index == 0 ? 1 : 0;
        s.cur_doc_id = *cur.doc_id;
        s.prev_doc_id =
            i > 0 ? *pages[static_cast<std::size_t>(i - 1)].doc_id : std::string(kSentinelDocId);
        s.doc_slot = cur.slot;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<WindowSample> dedup_pair_samples(const std::vector<WindowSample>& samples,
                                             const corpus::Corpus& corpus) {
    for (const auto& s : samples)
        if (s.left != 1 || s.right != 0)
            throw ValidationError("dedup_pair_samples requires samples extracted with l=1, r=0");

    std::unordered_map<std::string, std::uint64_t> key_of_doc;
    auto content_key = [&](const std::string& doc_id) {
        auto it = key_of_doc.find(doc_id);
        if (it != key_of_doc.end()) return it->second;
        const std::uint64_t k = corpus::document_content_key(corpus.doc(doc_id));
        key_of_doc.emplace(doc_id, k);
        return k;
    };

    // Document instances in deterministic first-occurrence order.
    std::map<std::pair<std::string, int>, std::uint64_t> instances; // (stream, slot) -> key
    for (const auto& s : samples)
        instances.emplace(std::make_pair(s.stream_id, s.doc_slot), content_key(s.cur_doc_id));

    std::unordered_set<std::uint64_t> seen;
    std::set<std::pair<std::string, int>> keep_all; // first occurrences
    for (const auto& [inst, key] : instances)
        if (seen.insert(key).second) keep_all.insert(inst);

    std::vector<WindowSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.label == 1 || keep_all.count({s.stream_id, s.doc_slot}))
            out.push_back(s);
    }
    return out;
}

std::pair<double, double> class_weights(const std::vector<WindowSample>& samples) {
    std::uint64_t pos = 0, neg = 0;
    for (const auto& s : samples) (s.label == 1 ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw ValidationError("class_weights needs at least one sample of each class");
    return {static_cast<double>(neg) / static_cast<double>(pos), 1.0};
}

} // namespace pss::windows
