#include "pss/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "pss/hash.hpp"
#include "pss/io.hpp"
#include "pss/layout.hpp"

namespace pss::corpus {

using nlohmann::json;

namespace {

// Collects files matching prefix*.jsonl under root, name ascending.
std::vector<std::filesystem::path> matching_files(const std::filesystem::path& root,
                                                  std::string_view prefix) {
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.rfind(prefix, 0) == 0 && name.size() >= 6 &&
            name.compare(name.size() - 6, 6, ".jsonl") == 0)
            out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

OcrToken parse_token(const json& j) {
    OcrToken t;
    t.text = j.at("text").get<std::string>();
    const auto& bbox = j.at("bbox");
    if (!bbox.is_array() || bbox.size() != 4) throw ValidationError("bbox must have 4 entries");
    t.x0 = bbox[0].get<double>();
    t.y0 = bbox[1].get<double>();
    t.x1 = bbox[2].get<double>();
    t.y1 = bbox[3].get<double>();
    if (t.text.empty()) throw ValidationError("token text is empty");
    if (!(t.x0 >= 0 && t.x0 <= t.x1 && t.x1 <= 1 && t.y0 >= 0 && t.y0 <= t.y1 && t.y1 <= 1))
        throw ValidationError("bbox out of range");
    return t;
}

struct PendingDoc {
    std::vector<PageRecord> pages;
    bool damaged = false;
};

} // namespace

Corpus load_corpus(const std::filesystem::path& root, bool strict, LoadReport* report) {
    if (!std::filesystem::is_directory(root))
        throw ValidationError("corpus root is not a directory: " + root.string());
    LoadReport local;
    LoadReport& rep = report ? *report : local;

    const auto doc_files = matching_files(root, "documents");
    const auto stream_files = matching_files(root, "streams");
    if (doc_files.empty())
        throw ValidationError("no documents*.jsonl under " + root.string());

    std::unordered_map<std::string, PendingDoc> pending;
    auto fail = [&](const std::string& msg) {
        if (strict) throw ValidationError(msg);
        ++rep.malformed_lines;
        rep.note(msg);
    };

    for (const auto& file : doc_files) {
        for_each_line(file, [&](std::size_t lineno, std::string_view line) {
            const std::string where = file.filename().string() + ":" + std::to_string(lineno);
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                fail("unparseable page record at " + where);
                return;
            }
            try {
                PageRecord page;
                page.doc_id = j.at("doc_id").get<std::string>();
                page.page_index = j.at("page_index").get<int>();
                page.width = j.at("width").get<int>();
                page.height = j.at("height").get<int>();
                if (page.doc_id.empty()) throw ValidationError("empty doc_id");
                if (page.page_index < 0) throw ValidationError("negative page_index");
                if (page.width <= 0 || page.height <= 0) throw ValidationError("bad page size");
                for (const auto& tj : j.at("tokens")) page.tokens.push_back(parse_token(tj));
                pending[page.doc_id].pages.push_back(std::move(page));
            } catch (const std::exception& e) {
                fail(std::string("invalid page record at ") + where + ": " + e.what());
                // the document is incomplete from here on
                auto it = j.find("doc_id");
                if (it != j.end() && it->is_string()) pending[it->get<std::string>()].damaged = true;
            }
        });
    }

    Corpus corpus;
    for (auto& [doc_id, pd] : pending) {
        std::sort(pd.pages.begin(), pd.pages.end(),
                  [](const PageRecord& a, const PageRecord& b) { return a.page_index < b.page_index; });
        bool ok = !pd.damaged && !pd.pages.empty();
        for (std::size_t i = 0; ok && i < pd.pages.size(); ++i)
            if (pd.pages[i].page_index != static_cast<int>(i)) ok = false;
        if (!ok) {
            const std::string msg = "document " + doc_id + " has missing/duplicate/damaged pages";
            if (strict) throw ValidationError(msg);
            ++rep.invalid_documents;
            rep.note(msg);
            continue;
        }
        DocumentRecord doc;
        doc.doc_id = doc_id;
        doc.pages = std::move(pd.pages);
        corpus.documents.emplace(doc_id, std::move(doc));
    }

    for (const auto& file : stream_files) {
        for_each_line(file, [&](std::size_t lineno, std::string_view line) {
            const std::string where = file.filename().string() + ":" + std::to_string(lineno);
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                fail("unparseable stream record at " + where);
                return;
            }
            StreamManifest m;
            try {
                m.stream_id = j.at("stream_id").get<std::string>();
                m.split = split_from_string(j.at("split").get<std::string>());
                for (const auto& d : j.at("doc_ids")) m.doc_ids.push_back(d.get<std::string>());
                if (m.stream_id.empty()) throw ValidationError("empty stream_id");
                if (m.doc_ids.empty()) throw ValidationError("empty doc_ids");
            } catch (const std::exception& e) {
                fail(std::string("invalid stream record at ") + where + ": " + e.what());
                return;
            }
            std::vector<std::string> resolved;
            for (auto& id : m.doc_ids) {
                if (corpus.documents.count(id)) {
                    resolved.push_back(std::move(id));
                } else {
                    const std::string msg = "stream " + m.stream_id + " references missing doc " + id;
                    if (strict) throw ValidationError(msg);
                    ++rep.dangling_doc_refs;
                    rep.note(msg);
                }
            }
            if (resolved.empty()) {
                ++rep.dropped_streams;
                rep.note("stream " + m.stream_id + " dropped: no resolvable docs");
                return;
            }
            m.doc_ids = std::move(resolved);
            corpus.streams.push_back(std::move(m));
        });
    }

    std::unordered_set<std::string> stream_ids;
    for (const auto& s : corpus.streams)
        if (!stream_ids.insert(s.stream_id).second)
            throw ValidationError("duplicate stream_id: " + s.stream_id);
    return corpus;
}

void write_documents_jsonl(const std::vector<const DocumentRecord*>& docs,
                           const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    for (const auto* doc : docs) {
        for (const auto& page : doc->pages) {
            json tokens = json::array();
            for (const auto& t : page.tokens)
                tokens.push_back({{"text", t.text}, {"bbox", {t.x0, t.y0, t.x1, t.y1}}});
            json j{{"doc_id", page.doc_id},
                   {"page_index", page.page_index},
                   {"width", page.width},
                   {"height", page.height},
                   {"tokens", std::move(tokens)}};
            out << j.dump() << '\n';
        }
    }
}

void write_streams_jsonl(const std::vector<StreamManifest>& streams,
                         const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    for (const auto& s : streams) {
        json j{{"stream_id", s.stream_id}, {"split", to_string(s.split)}, {"doc_ids", s.doc_ids}};
        out << j.dump() << '\n';
    }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& root) {
    std::filesystem::create_directories(root);
    std::vector<const DocumentRecord*> docs;
    docs.reserve(corpus.documents.size());
    for (const auto& [id, doc] : corpus.documents) docs.push_back(&doc);
    write_documents_jsonl(docs, root / "documents.jsonl");
    write_streams_jsonl(corpus.streams, root / "streams.jsonl");
}

std::uint64_t document_content_key(const DocumentRecord& doc) {
    Fnv1a64 h;
    h.update("pages=").update(std::to_string(doc.pages.size())).update('\x1f');
    for (const auto& page : doc.pages) {
        const std::string text = layout::linearize(page);
        h.update(std::to_string(text.size())).update(':').update(text).update('\x1e');
    }
    return h.digest();
}

namespace {

// Per-document quantities reused by stats and distributions.
struct DocSummary {
    std::uint64_t pages = 0;
    std::uint64_t tokens = 0;
    std::uint64_t key = 0;
};

std::unordered_map<std::string, DocSummary> summarize_docs(const Corpus& corpus,
                                                           const layout::Tokenizer& tokenizer) {
    std::unordered_map<std::string, DocSummary> out;
    out.reserve(corpus.documents.size());
    for (const auto& [id, doc] : corpus.documents) {
        DocSummary s;
        s.pages = doc.pages.size();
        for (const auto& page : doc.pages) s.tokens += tokenizer.count(layout::linearize(page));
        s.key = document_content_key(doc);
        out.emplace(id, s);
    }
    return out;
}

} // namespace

StatsTable corpus_stats(const Corpus& corpus, const layout::Tokenizer& tokenizer) {
    const auto summaries = summarize_docs(corpus, tokenizer);
    StatsTable t;
    t.streams_total = corpus.streams.size();

    std::uint64_t single_doc_streams = 0, single_page_docs = 0;
    std::unordered_set<std::uint64_t> seen_keys;
    for (const auto& stream : corpus.streams) {
        if (stream.doc_ids.size() == 1) ++single_doc_streams;
        for (const auto& id : stream.doc_ids) {
            auto it = summaries.find(id);
            if (it == summaries.end()) throw ValidationError("dangling document reference: " + id);
            const DocSummary& s = it->second;
            ++t.docs_total;
            if (s.pages == 1) ++single_page_docs;
            t.pages_total += s.pages;
            t.tokens_total += s.tokens;
            if (seen_keys.insert(s.key).second) {
                ++t.docs_unique;
                t.pages_unique += s.pages;
                t.tokens_unique += s.tokens;
            }
        }
    }
    if (t.streams_total)
        t.streams_pct_single_doc = 100.0 * static_cast<double>(single_doc_streams) /
                                   static_cast<double>(t.streams_total);
    if (t.docs_total)
        t.docs_pct_single_page =
            100.0 * static_cast<double>(single_page_docs) / static_cast<double>(t.docs_total);
    return t;
}

std::string stats_csv(const StatsTable& t) {
    std::string out =
        "streams_total,streams_pct_single_doc,docs_total,docs_unique,docs_pct_single_page,"
        "pages_total,pages_unique,tokens_total,tokens_unique\n";
    out += csv_row({std::to_string(t.streams_total), format_double(t.streams_pct_single_doc),
                    std::to_string(t.docs_total), std::to_string(t.docs_unique),
                    format_double(t.docs_pct_single_page), std::to_string(t.pages_total),
                    std::to_string(t.pages_unique), std::to_string(t.tokens_total),
                    std::to_string(t.tokens_unique)});
    return out;
}

std::pair<std::uint64_t, double> blank_page_census(const Corpus& corpus) {
    std::uint64_t blanks = 0, pages = 0;
    for (const auto& [id, doc] : corpus.documents) {
        for (const auto& page : doc.pages) {
            ++pages;
            bool blank = true;
            for (const auto& t : page.tokens) {
                if (layout::whitespace_tokenizer().count(t.text) > 0) {
                    blank = false;
                    break;
                }
            }
            if (blank) ++blanks;
        }
    }
    const double ratio = pages ? static_cast<double>(blanks) / static_cast<double>(pages) : 0.0;
    return {blanks, ratio};
}

Distribution distribution_from_string(std::string_view name) {
    if (name == "pages_per_doc") return Distribution::pages_per_doc;
    if (name == "pages_per_stream") return Distribution::pages_per_stream;
    if (name == "docs_per_stream") return Distribution::docs_per_stream;
    if (name == "tokens_per_doc") return Distribution::tokens_per_doc;
    if (name == "tokens_per_stream") return Distribution::tokens_per_stream;
    throw ValidationError("unknown distribution selector: " + std::string(name));
}

const char* to_string(Distribution which) {
    switch (which) {
        case Distribution::pages_per_doc: return "pages_per_doc";
        case Distribution::pages_per_stream: return "pages_per_stream";
        case Distribution::docs_per_stream: return "docs_per_stream";
        case Distribution::tokens_per_doc: return "tokens_per_doc";
        case Distribution::tokens_per_stream: return "tokens_per_stream";
    }
    return "?";
}

std::vector<std::pair<std::string, std::uint64_t>>
distribution_export(const Corpus& corpus, Distribution which, const layout::Tokenizer& tokenizer) {
    std::vector<std::pair<std::string, std::uint64_t>> rows;
    const bool per_doc =
        which == Distribution::pages_per_doc || which == Distribution::tokens_per_doc;
    if (per_doc) {
        for (const auto& [id, doc] : corpus.documents) {
            std::uint64_t v = 0;
            if (which == Distribution::pages_per_doc) {
                v = doc.pages.size();
            } else {
                for (const auto& page : doc.pages) v += tokenizer.count(layout::linearize(page));
            }
            rows.emplace_back(id, v);
        }
        return rows; // documents map is already id ascending
    }
    for (const auto& stream : corpus.streams) {
        std::uint64_t v = 0;
        switch (which) {
            case Distribution::docs_per_stream: v = stream.doc_ids.size(); break;
            case Distribution::pages_per_stream: v = corpus.stream_page_count(stream); break;
            case Distribution::tokens_per_stream:
                for (const auto& id : stream.doc_ids)
                    for (const auto& page : corpus.doc(id).pages)
                        v += tokenizer.count(layout::linearize(page));
                break;
            default: break;
        }
        rows.emplace_back(stream.stream_id, v);
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

std::string distribution_csv(Distribution which,
                             const std::vector<std::pair<std::string, std::uint64_t>>& rows) {
    std::string out = "entity_id," + std::string(to_string(which)) + "\n";
    for (const auto& [id, v] : rows) out += csv_row({id, std::to_string(v)});
    return out;
}

} // namespace pss::corpus
