// pss: page stream segmentation toolkit
//
// Subcommands: ingest, stats, gen-streams, windows, dedup, baseline
// train|predict, prompts build, infer, score. Exit codes: 0 ok, 1 internal
// error, 2 invalid input or config.

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <thread>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "pss/baseline.hpp"
#include "pss/corpus.hpp"
#include "pss/io.hpp"
#include "pss/layout.hpp"
#include "pss/llmpack.hpp"
#include "pss/metrics.hpp"
#include "pss/streamgen.hpp"
#include "pss/tokenizer.hpp"
#include "pss/windows.hpp"

namespace {

using nlohmann::json;

int g_log_level = 1; // 0 quiet, 1 info, 2 debug

void log_info(const std::string& msg) {
    if (g_log_level >= 1) std::cerr << "[pss] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (g_log_level >= 2) std::cerr << "[pss:debug] " << msg << "\n";
}

pss::corpus::Corpus load_corpus_logged(const std::string& root, bool strict = false) {
    pss::corpus::LoadReport report;
    auto corpus = pss::corpus::load_corpus(root, strict, &report);
    log_info("loaded " + std::to_string(corpus.documents.size()) + " documents, " +
             std::to_string(corpus.streams.size()) + " streams from " + root);
    if (report.total_problems()) {
        log_info("load report: " + std::to_string(report.malformed_lines) + " malformed lines, " +
                 std::to_string(report.invalid_documents) + " invalid documents, " +
                 std::to_string(report.dangling_doc_refs) + " dangling refs, " +
                 std::to_string(report.dropped_streams) + " dropped streams");
        for (const auto& issue : report.issues) log_debug(issue);
    }
    return corpus;
}

void write_text(const std::string& path, const std::string& data) {
    if (path.empty() || path == "-") {
        std::cout << data;
        return;
    }
    pss::write_file(path, data);
}

std::optional<pss::corpus::Split> parse_split_filter(const std::string& s) {
    if (s.empty() || s == "all") return std::nullopt;
    return pss::corpus::split_from_string(s);
}

// ---------------------------------------------------------------- windows io

struct SampleRow {
    std::string stream_id;
    int center_index = 0;
    std::uint8_t label = 0;
    std::string prev_doc_id, cur_doc_id;
    std::string prev_text, cur_text;
    bool has_text = false;
    std::string raw_line;
};

std::vector<SampleRow> read_samples_jsonl(const std::string& path, bool need_text) {
    std::vector<SampleRow> rows;
    pss::for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw pss::ValidationError(path + ":" + std::to_string(lineno) +
                                       ": unparseable sample row");
        SampleRow row;
        try {
            row.stream_id = j.at("stream_id").get<std::string>();
            row.center_index = j.at("center_index").get<int>();
            row.label = j.at("label").get<std::uint8_t>();
            if (j.contains("prev_doc_id") && j["prev_doc_id"].is_string())
                row.prev_doc_id = j["prev_doc_id"].get<std::string>();
            row.cur_doc_id = j.value("cur_doc_id", std::string());
            if (j.contains("cur_text")) {
                row.prev_text = j.value("prev_text", std::string());
                row.cur_text = j.at("cur_text").get<std::string>();
                row.has_text = true;
            }
        } catch (const std::exception& e) {
            throw pss::ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (need_text && !row.has_text)
            throw pss::ValidationError(path + ":" + std::to_string(lineno) +
                                       ": sample has no rendered texts; re-run the windows "
                                       "subcommand with --render");
        row.raw_line = std::string(line);
        rows.push_back(std::move(row));
    });
    return rows;
}

// Page text for a context reference under the chosen rendering.
std::string render_page(const pss::windows::PageRef& ref, const pss::corpus::Corpus& corpus,
                        const std::string& mode) {
    if (ref.sentinel) return "";
    const auto& doc = corpus.doc(ref.doc_id);
    const auto& page = doc.pages.at(static_cast<std::size_t>(ref.page_index));
    if (mode == "2d") return pss::layout::project_2d(page);
    if (mode == "linearize") return pss::layout::linearize(page);
    throw pss::ValidationError("unknown render mode: " + mode);
}

// ------------------------------------------------------------------- scoring

std::vector<pss::windows::LabelVector> read_predictions(const std::string& path) {
    std::vector<pss::windows::LabelVector> rows;
    pss::for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw pss::ValidationError(path + ":" + std::to_string(lineno) +
                                       ": unparseable prediction row");
        pss::windows::LabelVector lv;
        try {
            lv.stream_id = j.at("stream_id").get<std::string>();
            for (const auto& v : j.at("labels")) {
                const auto x = v.get<int>();
                if (x != 0 && x != 1) throw pss::ValidationError("labels must be 0 or 1");
                lv.labels.push_back(static_cast<std::uint8_t>(x));
            }
        } catch (const std::exception& e) {
            throw pss::ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        rows.push_back(std::move(lv));
    });
    return rows;
}

std::vector<pss::metrics::StreamReport> score_streams_parallel(
    const std::vector<std::pair<const pss::corpus::StreamManifest*, const pss::windows::LabelVector*>>& work,
    const pss::corpus::Corpus& corpus, const pss::metrics::ScoreOptions& opts, unsigned jobs) {
    std::vector<pss::metrics::StreamReport> reports(work.size());
    std::atomic<std::size_t> next{0};
    const std::size_t chunk = 64;
    auto run = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= work.size()) return;
            const std::size_t end = std::min(begin + chunk, work.size());
            for (std::size_t i = begin; i < end; ++i) {
                const auto truth = pss::windows::label_stream(*work[i].first, corpus);
                reports[i] = pss::metrics::score_stream(truth, *work[i].second, opts);
            }
        }
    };
    if (jobs <= 1 || work.size() < 2 * chunk) {
        run();
    } else {
        std::vector<std::future<void>> futures;
        for (unsigned t = 0; t < jobs; ++t) futures.push_back(std::async(std::launch::async, run));
        for (auto& f : futures) f.get();
    }
    return reports;
}

// --------------------------------------------------------------------- state

struct Options {
    std::string corpus_dir;
    std::string out;
    std::string tokenizer_id = "whitespace";
    std::string bpe_merges;
    std::string split = "all";
    std::uint64_t seed = 0;

    bool strict = false;
    std::string ingest_out;

    std::string which;

    std::string collection_dir;
    std::uint64_t synth_docs = 0;
    double synth_page_rate = 4.0;
    pss::streamgen::VocabSpec vocab;
    std::uint64_t num_streams = 1000;
    double doc_rate = 5.0;
    bool without_replacement = false;
    std::string emit_docs;
    std::vector<double> split_fractions;

    int win_left = 1, win_right = 0;
    std::string render = "none";

    std::string in_path;
    std::string model_path;
    pss::baseline::TrainConfig train;
    double threshold = 0.5;
    std::string scores_out;

    double subsample = 1.0;
    std::uint64_t budget = 0;
    pss::llmpack::InferenceConfig infer;
    std::string pack_path;
    std::string checkpoint = "inference_checkpoint.jsonl";

    bool skip_first = false;
    bool metrics_strict = false;
    bool per_stream = false;
    std::string csv_out;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

// ------------------------------------------------------------------ commands

int cmd_ingest(const Options& o) {
    pss::corpus::LoadReport report;
    auto corpus = pss::corpus::load_corpus(o.corpus_dir, o.strict, &report);
    std::uint64_t pages = 0;
    for (const auto& [id, doc] : corpus.documents) pages += doc.pages.size();
    std::cout << "documents=" << corpus.documents.size() << " pages=" << pages
              << " streams=" << corpus.streams.size()
              << " problems=" << report.total_problems() << "\n";
    for (const auto& issue : report.issues) log_info("issue: " + issue);
    if (!o.ingest_out.empty()) {
        pss::corpus::save_corpus(corpus, o.ingest_out);
        log_info("wrote normalized corpus to " + o.ingest_out);
    }
    return 0;
}

int cmd_stats(const Options& o) {
    auto corpus = load_corpus_logged(o.corpus_dir);
    auto tokenizer = pss::layout::make_tokenizer(o.tokenizer_id, o.bpe_merges);
    if (o.which.empty()) {
        const auto stats = pss::corpus::corpus_stats(corpus, *tokenizer);
        write_text(o.out, pss::corpus::stats_csv(stats));
        return 0;
    }
    const auto which = pss::corpus::distribution_from_string(o.which);
    const auto rows = pss::corpus::distribution_export(corpus, which, *tokenizer);
    write_text(o.out, pss::corpus::distribution_csv(which, rows));
    return 0;
}

int cmd_gen_streams(const Options& o) {
    std::vector<pss::corpus::DocumentRecord> synth;
    std::vector<std::string> ids;
    if (o.synth_docs > 0) {
        synth = pss::streamgen::synth_collection(o.synth_docs, o.synth_page_rate, o.vocab, o.seed);
        ids.reserve(synth.size());
        for (const auto& d : synth) ids.push_back(d.doc_id);
        if (!o.emit_docs.empty()) {
            std::vector<const pss::corpus::DocumentRecord*> ptrs;
            ptrs.reserve(synth.size());
            for (const auto& d : synth) ptrs.push_back(&d);
            pss::corpus::write_documents_jsonl(ptrs, o.emit_docs);
            log_info("wrote " + std::to_string(synth.size()) + " synthetic documents to " +
                     o.emit_docs);
        }
    } else if (!o.collection_dir.empty()) {
        auto corpus = load_corpus_logged(o.collection_dir);
        ids.reserve(corpus.documents.size());
        for (const auto& [id, doc] : corpus.documents) ids.push_back(id);
    } else {
        throw pss::ValidationError("gen-streams needs --collection or --synth-docs");
    }

    pss::streamgen::GenConfig cfg;
    cfg.num_streams = o.num_streams;
    cfg.doc_rate = o.doc_rate;
    cfg.page_rate = o.synth_page_rate;
    cfg.with_replacement = !o.without_replacement;
    cfg.seed = o.seed;
    auto streams = pss::streamgen::generate_streams(ids, cfg);
    if (!o.split_fractions.empty()) {
        if (o.split_fractions.size() != 2)
            throw pss::ValidationError("--split-fractions takes train,validation");
        pss::streamgen::assign_splits(streams, o.split_fractions[0], o.split_fractions[1]);
    }
    std::uint64_t docs = 0;
    for (const auto& s : streams) docs += s.doc_ids.size();
    pss::corpus::write_streams_jsonl(streams, o.out);
    log_info("wrote " + std::to_string(streams.size()) + " streams (" + std::to_string(docs) +
             " document draws) to " + o.out);
    return 0;
}

int cmd_windows(const Options& o) {
    auto corpus = load_corpus_logged(o.corpus_dir);
    const auto filter = parse_split_filter(o.split);
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw pss::ValidationError("cannot write " + o.out);
    std::uint64_t n = 0;
    for (const auto& stream : corpus.streams) {
        if (filter && stream.split != *filter) continue;
        const auto samples = pss::windows::extract_windows(stream, corpus, o.win_left, o.win_right);
        for (const auto& s : samples) {
            json j{{"stream_id", s.stream_id},
                   {"center_index", s.center_index},
                   {"label", s.label},
                   {"prev_doc_id", s.prev_doc_id == pss::windows::kSentinelDocId
                                       ? json(nullptr)
                                       : json(s.prev_doc_id)},
                   {"cur_doc_id", s.cur_doc_id}};
            if (o.render != "none") {
                j["prev_text"] = render_page(s.context.front(), corpus, o.render);
                j["cur_text"] =
                    render_page(s.context.at(static_cast<std::size_t>(s.left)), corpus, o.render);
            }
            out << j.dump() << '\n';
            ++n;
        }
    }
    log_info("wrote " + std::to_string(n) + " samples to " + o.out);
    return 0;
}

int cmd_dedup(const Options& o) {
    auto corpus = load_corpus_logged(o.corpus_dir);
    auto rows = read_samples_jsonl(o.in_path, false);

    std::set<std::string> wanted;
    for (const auto& r : rows) wanted.insert(r.stream_id);
    std::vector<pss::windows::WindowSample> samples;
    for (const auto& stream : corpus.streams) {
        if (!wanted.count(stream.stream_id)) continue;
        auto s = pss::windows::extract_windows(stream, corpus, 1, 0);
        samples.insert(samples.end(), std::make_move_iterator(s.begin()),
                       std::make_move_iterator(s.end()));
    }
    const auto kept = pss::windows::dedup_pair_samples(samples, corpus);
    std::set<std::pair<std::string, int>> keep_keys;
    for (const auto& s : kept) keep_keys.insert({s.stream_id, s.center_index});

    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw pss::ValidationError("cannot write " + o.out);
    std::uint64_t n = 0;
    for (const auto& r : rows) {
        if (keep_keys.count({r.stream_id, r.center_index})) {
            out << r.raw_line << '\n';
            ++n;
        }
    }
    log_info("kept " + std::to_string(n) + " of " + std::to_string(rows.size()) + " samples");
    return 0;
}

int cmd_baseline_train(const Options& o) {
    auto rows = read_samples_jsonl(o.in_path, true);
    if (rows.empty()) throw pss::ValidationError("no samples in " + o.in_path);

    // every page appears exactly once as a center, so the cur texts fit the
    // vectorizer without double counting
    std::vector<std::string> pages;
    pages.reserve(rows.size());
    for (const auto& r : rows) pages.push_back(r.cur_text);
    auto vocab = pss::baseline::fit_vectorizer(pages);
    log_info("vocabulary: " + std::to_string(vocab.size()) + " terms over " +
             std::to_string(vocab.num_pages_fitted) + " pages");

    std::vector<pss::baseline::SparseVec> feats;
    std::vector<std::uint8_t> labels;
    feats.reserve(rows.size());
    labels.reserve(rows.size());
    for (const auto& r : rows) {
        feats.push_back(
            pss::baseline::pair_features(pss::baseline::vectorize_page(r.prev_text, vocab),
                                         pss::baseline::vectorize_page(r.cur_text, vocab)));
        labels.push_back(r.label);
    }
    auto model = pss::baseline::train_baseline(feats, labels, std::move(vocab), o.train);

    std::uint64_t correct = 0;
    const auto scores = pss::baseline::predict_scores(model, feats);
    for (std::size_t i = 0; i < scores.size(); ++i)
        if ((scores[i] >= o.threshold ? 1 : 0) == labels[i]) ++correct;
    log_info("training accuracy " +
             pss::format_double(static_cast<double>(correct) / static_cast<double>(rows.size())));

    pss::baseline::save_model(model, o.model_path);
    log_info("wrote model to " + o.model_path);
    return 0;
}

int cmd_baseline_predict(const Options& o) {
    const auto model = pss::baseline::load_model(o.model_path);
    auto rows = read_samples_jsonl(o.in_path, true);

    std::vector<std::string> order; // first-appearance stream order
    std::map<std::string, std::map<int, std::uint8_t>> by_stream;
    std::ofstream scores_out;
    if (!o.scores_out.empty()) {
        scores_out.open(o.scores_out, std::ios::binary);
        if (!scores_out) throw pss::ValidationError("cannot write " + o.scores_out);
    }
    for (const auto& r : rows) {
        const auto features = pss::baseline::pair_features(
            pss::baseline::vectorize_page(r.prev_text, model.vocab),
            pss::baseline::vectorize_page(r.cur_text, model.vocab));
        const double score = pss::baseline::predict_score(model, features);
        if (!by_stream.count(r.stream_id)) order.push_back(r.stream_id);
        auto& labels = by_stream[r.stream_id];
        if (!labels.emplace(r.center_index, score >= o.threshold ? 1 : 0).second)
            throw pss::ValidationError("duplicate sample for stream " + r.stream_id + " center " +
                                       std::to_string(r.center_index));
        if (scores_out.is_open()) {
            json j{{"stream_id", r.stream_id}, {"center_index", r.center_index}, {"score", score}};
            scores_out << j.dump() << '\n';
        }
    }

    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw pss::ValidationError("cannot write " + o.out);
    for (const auto& id : order) {
        const auto& labels = by_stream[id];
        json arr = json::array();
        int expect = 0;
        for (const auto& [idx, label] : labels) {
            if (idx != expect++)
                throw pss::ValidationError("stream " + id + " is missing sample for center index " +
                                           std::to_string(expect - 1));
            arr.push_back(static_cast<int>(label));
        }
        out << json{{"stream_id", id}, {"labels", std::move(arr)}}.dump() << '\n';
    }
    log_info("wrote predictions for " + std::to_string(order.size()) + " streams to " + o.out);
    return 0;
}

int cmd_prompts_build(const Options& o) {
    auto corpus = load_corpus_logged(o.corpus_dir);
    const auto filter = parse_split_filter(o.split);
    std::vector<pss::corpus::StreamManifest> streams;
    for (const auto& s : corpus.streams)
        if (!filter || s.split == *filter) streams.push_back(s);
    if (streams.empty()) throw pss::ValidationError("no streams match the split filter");
    if (o.subsample < 1.0) streams = pss::llmpack::subsample_streams(streams, o.subsample, o.seed);

    auto tokenizer = pss::layout::make_tokenizer(o.tokenizer_id, o.bpe_merges);
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw pss::ValidationError("cannot write " + o.out);
    std::uint64_t n = 0, truncated = 0;
    for (const auto& stream : streams) {
        const auto samples = pss::windows::extract_windows(stream, corpus, 1, 0);
        for (const auto& s : samples) {
            std::string prev = render_page(s.context.front(), corpus, o.render);
            std::string cur = render_page(s.context.back(), corpus, o.render);
            bool was_truncated = false;
            if (o.budget > 0)
                std::tie(prev, cur) =
                    pss::llmpack::fit_budget(prev, cur, o.budget, *tokenizer, &was_truncated);
            auto inst =
                pss::llmpack::build_prompt(s.stream_id, s.center_index, prev, cur, tokenizer.get());
            json j{{"key", {{"stream_id", inst.stream_id}, {"center_index", inst.center_index}}},
                   {"prompt", inst.text}};
            if (was_truncated) j["truncated"] = true;
            if (inst.delimiter_collision) j["delimiter_collision"] = true;
            out << j.dump() << '\n';
            ++n;
            truncated += was_truncated ? 1 : 0;
        }
    }
    log_info("wrote " + std::to_string(n) + " prompts (" + std::to_string(truncated) +
             " truncated) to " + o.out);
    return 0;
}

int cmd_infer(const Options& o) {
    std::vector<pss::llmpack::PromptInstance> instances;
    pss::for_each_line(o.pack_path, [&](std::size_t lineno, std::string_view line) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw pss::ValidationError(o.pack_path + ":" + std::to_string(lineno) +
                                       ": unparseable prompt row");
        try {
            pss::llmpack::PromptInstance inst;
            inst.stream_id = j.at("key").at("stream_id").get<std::string>();
            inst.center_index = j.at("key").at("center_index").get<int>();
            inst.text = j.at("prompt").get<std::string>();
            instances.push_back(std::move(inst));
        } catch (const std::exception& e) {
            throw pss::ValidationError(o.pack_path + ":" + std::to_string(lineno) + ": " +
                                       e.what());
        }
    });
    log_info("running inference for " + std::to_string(instances.size()) + " prompts against " +
             o.infer.endpoint);

    const auto results = pss::llmpack::run_inference(instances, o.infer, o.checkpoint);

    std::uint64_t failed = 0, non_ok = 0;
    std::vector<std::string> order;
    std::map<std::string, std::map<int, std::uint8_t>> by_stream;
    for (const auto& r : results) {
        if (!by_stream.count(r.stream_id)) order.push_back(r.stream_id);
        by_stream[r.stream_id][r.center_index] = r.label;
        failed += r.failed ? 1 : 0;
        non_ok += r.status != pss::llmpack::ParseStatus::ok ? 1 : 0;
    }

    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw pss::ValidationError("cannot write " + o.out);
    for (const auto& id : order) {
        const auto& labels = by_stream[id];
        const int n = labels.rbegin()->first + 1;
        json arr = json::array();
        for (int i = 0; i < n; ++i) {
            auto it = labels.find(i);
            if (it == labels.end()) {
                log_info("stream " + id + " has no result for page " + std::to_string(i) +
                         "; defaulting to 0");
                arr.push_back(0);
            } else {
                arr.push_back(static_cast<int>(it->second));
            }
        }
        out << json{{"stream_id", id}, {"labels", std::move(arr)}}.dump() << '\n';
    }
    log_info("wrote predictions for " + std::to_string(order.size()) + " streams (" +
             std::to_string(non_ok) + " fallback labels, " + std::to_string(failed) +
             " failed requests) to " + o.out);
    return 0;
}

int cmd_score(const Options& o) {
    auto corpus = load_corpus_logged(o.corpus_dir);
    const auto filter = parse_split_filter(o.split);
    std::unordered_map<std::string, const pss::corpus::StreamManifest*> by_id;
    for (const auto& s : corpus.streams) by_id[s.stream_id] = &s;

    const auto preds = read_predictions(o.in_path);
    std::vector<std::pair<const pss::corpus::StreamManifest*, const pss::windows::LabelVector*>> work;
    for (const auto& lv : preds) {
        auto it = by_id.find(lv.stream_id);
        if (it == by_id.end())
            throw pss::ValidationError("prediction references unknown stream " + lv.stream_id);
        if (filter && it->second->split != *filter) continue;
        work.emplace_back(it->second, &lv);
    }
    if (work.empty()) throw pss::ValidationError("no predictions to score");

    pss::metrics::ScoreOptions opts;
    opts.skip_first = o.skip_first;
    opts.strict = o.metrics_strict;
    const auto reports = score_streams_parallel(work, corpus, opts, o.jobs);
    const auto agg = pss::metrics::aggregate(reports);

    write_text(o.out, pss::metrics::report_json(agg, o.per_stream ? &reports : nullptr));
    if (!o.csv_out.empty()) pss::write_file(o.csv_out, pss::metrics::report_csv(agg));
    log_info("scored " + std::to_string(agg.streams) + " streams / " + std::to_string(agg.pages) +
             " pages: page F1 " + pss::format_double(agg.page.f1) + ", doc F1 " +
             pss::format_double(agg.doc.f1) + ", mean MNDD " + pss::format_double(agg.mean_mndd) +
             ", STP " + pss::format_double(agg.stp));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"page stream segmentation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config")->description("TOML config file; flags override file values");
    app.add_option("--log-level", g_log_level, "0 quiet, 1 info, 2 debug");

    Options o;

    auto* ingest = app.add_subcommand("ingest", "load, validate and report a corpus");
    ingest->add_option("--corpus", o.corpus_dir, "corpus root directory")->required();
    ingest->add_flag("--strict", o.strict, "fail on the first invalid record");
    ingest->add_option("--out", o.ingest_out, "write a normalized copy to this directory");

    auto* stats = app.add_subcommand("stats", "summary statistics and distributions");
    stats->add_option("--corpus", o.corpus_dir)->required();
    stats->add_option("--tokenizer", o.tokenizer_id, "whitespace | bpe-gpt2-compatible");
    stats->add_option("--bpe-merges", o.bpe_merges, "merges.txt for the BPE tokenizer");
    stats->add_option("--which", o.which,
                      "emit one distribution (pages_per_doc, pages_per_stream, docs_per_stream, "
                      "tokens_per_doc, tokens_per_stream) instead of the stats table");
    stats->add_option("--out", o.out, "output file (default stdout)");

    auto* gen = app.add_subcommand("gen-streams", "synthesize stream manifests");
    gen->add_option("--collection", o.collection_dir, "corpus root to draw documents from");
    gen->add_option("--synth-docs", o.synth_docs, "generate a synthetic collection of this size");
    gen->add_option("--synth-page-rate", o.synth_page_rate, "mean pages per document");
    gen->add_option("--synth-topics", o.vocab.num_topics);
    gen->add_option("--synth-topic-words", o.vocab.words_per_topic);
    gen->add_option("--synth-doc-words", o.vocab.doc_unique_words);
    gen->add_option("--synth-topic-fraction", o.vocab.topic_token_fraction);
    gen->add_option("--synth-header-words", o.vocab.header_words_per_topic);
    gen->add_option("--synth-header-tokens", o.vocab.header_tokens_on_first_page);
    gen->add_option("--synth-tokens-per-page", o.vocab.tokens_per_page);
    gen->add_option("--emit-docs", o.emit_docs, "write the synthetic documents.jsonl here");
    gen->add_option("--num-streams", o.num_streams)->capture_default_str();
    gen->add_option("--doc-rate", o.doc_rate, "mean documents per stream")->capture_default_str();
    gen->add_flag("--without-replacement", o.without_replacement);
    gen->add_option("--seed", o.seed)->capture_default_str();
    gen->add_option("--split-fractions", o.split_fractions,
                    "train and validation fractions; the rest is test")
        ->expected(2);
    gen->add_option("--out", o.out, "streams.jsonl path")->required();

    auto* win = app.add_subcommand("windows", "extract labeled window samples");
    win->add_option("--corpus", o.corpus_dir)->required();
    win->add_option("--split", o.split, "train | validation | test | all");
    win->add_option("--l", o.win_left, "pages of left context")->capture_default_str();
    win->add_option("--r", o.win_right, "pages of right context")->capture_default_str();
    win->add_option("--render", o.render, "none | linearize | 2d")->capture_default_str();
    win->add_option("--out", o.out)->required();

    auto* dedup = app.add_subcommand("dedup", "drop repeat continuation samples");
    dedup->add_option("--corpus", o.corpus_dir)->required();
    dedup->add_option("--in", o.in_path, "pair samples JSONL (l=1, r=0)")->required();
    dedup->add_option("--out", o.out)->required();

    auto* base = app.add_subcommand("baseline", "bag-of-words page-pair classifier");
    base->require_subcommand(1);
    auto* train = base->add_subcommand("train");
    train->add_option("--windows", o.in_path, "rendered pair samples JSONL")->required();
    train->add_option("--model", o.model_path)->required();
    train->add_option("--estimators", o.train.n_estimators)->capture_default_str();
    train->add_option("--max-depth", o.train.max_depth)->capture_default_str();
    train->add_option("--learning-rate", o.train.learning_rate)->capture_default_str();
    train->add_option("--reg-lambda", o.train.reg_lambda)->capture_default_str();
    train->add_option("--pos-weight", o.train.pos_weight,
                      "override the automatic #neg/#pos class weight");
    train->add_option("--seed", o.train.seed);
    auto* predict = base->add_subcommand("predict");
    predict->add_option("--windows", o.in_path, "rendered pair samples JSONL")->required();
    predict->add_option("--model", o.model_path)->required();
    predict->add_option("--threshold", o.threshold)->capture_default_str();
    predict->add_option("--scores", o.scores_out, "also write per-pair scores JSONL");
    predict->add_option("--out", o.out, "predictions JSONL")->required();

    auto* prompts = app.add_subcommand("prompts", "LLM prompt packing");
    prompts->require_subcommand(1);
    auto* pbuild = prompts->add_subcommand("build");
    pbuild->add_option("--corpus", o.corpus_dir)->required();
    pbuild->add_option("--split", o.split)->capture_default_str();
    pbuild->add_option("--subsample", o.subsample, "stream fraction in (0, 1]")
        ->capture_default_str();
    pbuild->add_option("--seed", o.seed)->capture_default_str();
    pbuild->add_option("--budget", o.budget, "prompt token budget (0 = unlimited)");
    pbuild->add_option("--tokenizer", o.tokenizer_id)->capture_default_str();
    pbuild->add_option("--bpe-merges", o.bpe_merges);
    pbuild->add_option("--render", o.render, "linearize | 2d (default 2d)");
    pbuild->add_option("--out", o.out)->required();

    auto* infer = app.add_subcommand("infer", "run prompts against a chat endpoint");
    infer->add_option("--pack", o.pack_path)->required();
    infer->add_option("--endpoint", o.infer.endpoint, "chat-completions URL")->required();
    infer->add_option("--model", o.infer.model)->required();
    infer->add_option("--temperature", o.infer.temperature)->capture_default_str();
    infer->add_option("--max-output-tokens", o.infer.max_output_tokens)->capture_default_str();
    infer->add_option("--max-retries", o.infer.max_retries)->capture_default_str();
    infer->add_option("--backoff-base", o.infer.backoff_base_s)->capture_default_str();
    infer->add_option("--parallelism", o.infer.parallelism)->capture_default_str();
    infer->add_option("--timeout", o.infer.timeout_s)->capture_default_str();
    infer->add_option("--api-key-env", o.infer.api_key_env,
                      "environment variable holding the bearer token")
        ->capture_default_str();
    infer->add_option("--checkpoint", o.checkpoint)->capture_default_str();
    infer->add_option("--out", o.out, "assembled predictions JSONL")->required();

    auto* score = app.add_subcommand("score", "score a predictions file");
    score->add_option("--corpus", o.corpus_dir)->required();
    score->add_option("--predictions", o.in_path)->required();
    score->add_option("--split", o.split)->capture_default_str();
    score->add_flag("--skip-first", o.skip_first, "exclude each stream's first page");
    score->add_flag("--strict", o.metrics_strict, "reject predictions whose first label is 0");
    score->add_flag("--per-stream", o.per_stream, "include the per-stream breakdown");
    score->add_option("--jobs", o.jobs)->capture_default_str();
    score->add_option("--out", o.out, "report JSON (default stdout)");
    score->add_option("--csv", o.csv_out, "also write the aggregate as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (g_log_level >= 1) {
            std::string cfg = app.config_to_str(false, false);
            std::string flat;
            for (char c : cfg) flat += c == '\n' ? ' ' : c;
            log_info("resolved config: " + flat);
        }
        if (ingest->parsed()) return cmd_ingest(o);
        if (stats->parsed()) return cmd_stats(o);
        if (gen->parsed()) return cmd_gen_streams(o);
        if (win->parsed()) return cmd_windows(o);
        if (dedup->parsed()) return cmd_dedup(o);
        if (base->parsed()) {
            if (train->parsed()) return cmd_baseline_train(o);
            return cmd_baseline_predict(o);
        }
        if (prompts->parsed()) {
            if (o.render == "none") o.render = "2d";
            return cmd_prompts_build(o);
        }
        if (infer->parsed()) return cmd_infer(o);
        if (score->parsed()) return cmd_score(o);
        throw pss::ValidationError("no subcommand");
    } catch (const pss::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
