#include "pss/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "pss/error.hpp"
#include "pss/hash.hpp"

namespace pss::baseline {

namespace {

bool is_word_byte_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c >= 0x80;
}

char ascii_lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c; }

} // namespace

std::vector<std::string> analyze(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (!is_word_byte_start(c) || (c & 0xC0) == 0x80) {
            ++i;
            continue;
        }
        std::size_t j = i;
        std::size_t codepoints = 0;
        while (j < text.size()) {
            const auto b = static_cast<unsigned char>(text[j]);
            if (!is_word_byte_start(b)) break;
            if ((b & 0xC0) != 0x80) ++codepoints; // count codepoints, not bytes
            ++j;
        }
        if (codepoints >= 2) {
            std::string term(text.substr(i, j - i));
            for (auto& ch : term) ch = ascii_lower(ch);
            out.push_back(std::move(term));
        }
        i = j;
    }
    return out;
}

Vocabulary fit_vectorizer(std::span<const std::string> pages) {
    if (pages.empty()) throw ValidationError("fit_vectorizer needs at least one page");
    std::map<std::string, std::uint32_t> df; // ordered: term index = lexicographic rank
    std::vector<std::string> page_terms;
    for (const auto& page : pages) {
        page_terms = analyze(page);
        std::sort(page_terms.begin(), page_terms.end());
        page_terms.erase(std::unique(page_terms.begin(), page_terms.end()), page_terms.end());
        for (auto& t : page_terms) ++df[t];
    }
    Vocabulary vocab;
    vocab.num_pages_fitted = pages.size();
    vocab.terms.reserve(df.size());
    vocab.df.reserve(df.size());
    for (auto& [term, count] : df) {
        vocab.index.emplace(term, static_cast<std::int32_t>(vocab.terms.size()));
        vocab.terms.push_back(term);
        vocab.df.push_back(count);
    }
    return vocab;
}

PageVector vectorize_page(std::string_view text, const Vocabulary& vocab) {
    std::map<std::int32_t, double> counts;
    for (const auto& term : analyze(text)) {
        const auto idx = vocab.term_index(term);
        if (idx >= 0) counts[idx] += 1.0;
    }
    PageVector pv;
    const auto dim = static_cast<std::int32_t>(vocab.size());
    pv.counts.dim = dim;
    pv.tfidf.dim = dim;
    const double n = static_cast<double>(vocab.num_pages_fitted);
    double norm_sq = 0;
    for (const auto& [idx, count] : counts) {
        pv.counts.entries.emplace_back(idx, count);
        const double idf =
            std::log((1.0 + n) / (1.0 + static_cast<double>(vocab.df[static_cast<std::size_t>(idx)]))) + 1.0;
        const double w = count * idf;
        pv.tfidf.entries.emplace_back(idx, w);
        norm_sq += w * w;
    }
    if (norm_sq > 0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& [idx, w] : pv.tfidf.entries) w *= inv;
    }
    return pv;
}

SparseVec pair_features(const PageVector& prev, const PageVector& cur) {
    if (prev.counts.dim != cur.counts.dim)
        throw ValidationError("pair_features: page vectors come from different vocabularies");
    const std::int32_t v = prev.counts.dim;
    SparseVec out;
    out.dim = 4 * v;
    out.entries.reserve(prev.counts.entries.size() + prev.tfidf.entries.size() +
                        cur.counts.entries.size() + cur.tfidf.entries.size());
    for (const auto& [i, x] : prev.counts.entries) out.entries.emplace_back(i, x);
    for (const auto& [i, x] : prev.tfidf.entries) out.entries.emplace_back(i + v, x);
    for (const auto& [i, x] : cur.counts.entries) out.entries.emplace_back(i + 2 * v, x);
    for (const auto& [i, x] : cur.tfidf.entries) out.entries.emplace_back(i + 3 * v, x);
    return out;
}

namespace {

double sparse_lookup(const SparseVec& v, std::int32_t feature) {
    auto it = std::lower_bound(v.entries.begin(), v.entries.end(), feature,
                               [](const auto& e, std::int32_t f) { return e.first < f; });
    if (it != v.entries.end() && it->first == feature) return it->second;
    return 0.0;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GrowNode {
    double g_sum = 0, h_sum = 0;
    // column stats for the feature currently being scanned
    double col_g = 0, col_h = 0;
    double run_g = 0, run_h = 0;
    double last_val = 0;
    bool has_prev = false;
    // best split so far
    double best_gain = 0;
    std::int32_t best_feature = -1;
    double best_threshold = 0;
    bool best_default_left = false;
    // tree links
    std::int32_t left = -1, right = -1;
    std::int32_t parent = -1;
    bool active = false;
    double leaf = 0;
};

struct Column {
    std::vector<std::pair<std::int32_t, float>> entries; // (row, value), value ascending
};

} // namespace

BaselineModel train_baseline(std::span<const SparseVec> features,
                             std::span<const std::uint8_t> labels, Vocabulary vocab,
                             const TrainConfig& cfg) {
    if (features.size() != labels.size())
        throw ValidationError("feature/label count mismatch");
    if (cfg.n_estimators < 0 || cfg.max_depth < 1)
        throw ValidationError("bad training config");
    if (!(cfg.base_score > 0.0) || !(cfg.base_score < 1.0))
        throw ValidationError("base_score must be in (0, 1)");

    const std::size_t rows = features.size();
    std::uint64_t pos_n = 0, neg_n = 0;
    for (auto y : labels) (y ? pos_n : neg_n)++;
    if (cfg.n_estimators > 0 && (pos_n == 0 || neg_n == 0))
        throw ValidationError("training data must contain both classes");
    const double pos_weight =
        cfg.pos_weight > 0 ? cfg.pos_weight
                           : (pos_n ? static_cast<double>(neg_n) / static_cast<double>(pos_n) : 1.0);

    std::int32_t dim = 0;
    for (const auto& f : features) dim = std::max(dim, f.dim);

    // column-major copy, values ascending (ties by row) for exact greedy scans
    std::vector<Column> cols(static_cast<std::size_t>(dim));
    for (std::size_t row = 0; row < rows; ++row) {
        for (const auto& [idx, val] : features[row].entries) {
            if (val == 0.0) continue;
            cols[static_cast<std::size_t>(idx)].entries.emplace_back(static_cast<std::int32_t>(row),
                                                                     static_cast<float>(val));
        }
    }
    for (auto& c : cols)
        std::sort(c.entries.begin(), c.entries.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second < b.second;
            return a.first < b.first;
        });

    BaselineModel model;
    model.vocab = std::move(vocab);
    model.config = cfg;
    model.config.pos_weight = pos_weight;
    model.base_margin = std::log(cfg.base_score / (1.0 - cfg.base_score));

    std::vector<double> margin(rows, model.base_margin);
    std::vector<double> grad(rows), hess(rows);
    std::vector<std::int32_t> node_of(rows);

    const double lambda = cfg.reg_lambda;
    auto score = [&](double g, double h) { return g * g / (h + lambda); };

    for (int round = 0; round < cfg.n_estimators; ++round) {
        for (std::size_t i = 0; i < rows; ++i) {
            const double p = sigmoid(margin[i]);
            const double w = labels[i] ? pos_weight : 1.0;
            grad[i] = w * (p - (labels[i] ? 1.0 : 0.0));
            hess[i] = w * std::max(p * (1.0 - p), 1e-16);
        }

        std::vector<GrowNode> nodes(1);
        std::fill(node_of.begin(), node_of.end(), 0);
        nodes[0].active = true;
        for (std::size_t i = 0; i < rows; ++i) {
            nodes[0].g_sum += grad[i];
            nodes[0].h_sum += hess[i];
        }

        std::vector<std::int32_t> level{0};
        for (int depth = 0; depth < cfg.max_depth && !level.empty(); ++depth) {
            for (auto n : level) {
                nodes[static_cast<std::size_t>(n)].best_gain = 0;
                nodes[static_cast<std::size_t>(n)].best_feature = -1;
            }

            for (std::int32_t f = 0; f < dim; ++f) {
                const auto& col = cols[static_cast<std::size_t>(f)].entries;
                if (col.empty()) continue;
                // pass 1: per-node totals of the present entries
                for (auto n : level) {
                    auto& nd = nodes[static_cast<std::size_t>(n)];
                    nd.col_g = nd.col_h = nd.run_g = nd.run_h = 0;
                    nd.has_prev = false;
                }
                bool touches_level = false;
                for (const auto& [row, val] : col) {
                    auto& nd = nodes[static_cast<std::size_t>(node_of[static_cast<std::size_t>(row)])];
                    if (!nd.active) continue;
                    nd.col_g += grad[static_cast<std::size_t>(row)];
                    nd.col_h += hess[static_cast<std::size_t>(row)];
                    touches_level = true;
                }
                if (!touches_level) continue;

                auto consider = [&](GrowNode& nd, double thr) {
                    const double parent_score = score(nd.g_sum, nd.h_sum);
                    // missing follows the right child
                    {
                        const double gl = nd.run_g, hl = nd.run_h;
                        const double gr = nd.g_sum - gl, hr = nd.h_sum - hl;
                        if (hl >= cfg.min_child_weight && hr >= cfg.min_child_weight) {
                            const double gain = score(gl, hl) + score(gr, hr) - parent_score;
                            if (gain > nd.best_gain + 1e-12) {
                                nd.best_gain = gain;
                                nd.best_feature = f;
                                nd.best_threshold = thr;
                                nd.best_default_left = false;
                            }
                        }
                    }
                    // missing follows the left child
                    {
                        const double gl = nd.run_g + (nd.g_sum - nd.col_g);
                        const double hl = nd.run_h + (nd.h_sum - nd.col_h);
                        const double gr = nd.col_g - nd.run_g, hr = nd.col_h - nd.run_h;
                        if (hl >= cfg.min_child_weight && hr >= cfg.min_child_weight) {
                            const double gain = score(gl, hl) + score(gr, hr) - parent_score;
                            if (gain > nd.best_gain + 1e-12) {
                                nd.best_gain = gain;
                                nd.best_feature = f;
                                nd.best_threshold = thr;
                                nd.best_default_left = true;
                            }
                        }
                    }
                };

                // pass 2: running scan with split candidates between
                // distinct values and after the last one
                for (const auto& [row, val] : col) {
                    auto& nd = nodes[static_cast<std::size_t>(node_of[static_cast<std::size_t>(row)])];
                    if (!nd.active) continue;
                    const double v = static_cast<double>(val);
                    if (nd.has_prev && v > nd.last_val) consider(nd, (nd.last_val + v) / 2.0);
                    nd.run_g += grad[static_cast<std::size_t>(row)];
                    nd.run_h += hess[static_cast<std::size_t>(row)];
                    nd.last_val = v;
                    nd.has_prev = true;
                }
                for (auto n : level) {
                    auto& nd = nodes[static_cast<std::size_t>(n)];
                    if (nd.has_prev) consider(nd, nd.last_val + 1.0);
                }
            }

            // materialize accepted splits
            std::vector<std::int32_t> next_level;
            std::vector<char> feature_has_split(static_cast<std::size_t>(dim), 0);
            for (auto n : level) {
                auto& nd = nodes[static_cast<std::size_t>(n)];
                nd.active = false;
                if (nd.best_feature < 0) continue;
                const auto l = static_cast<std::int32_t>(nodes.size());
                nodes.emplace_back();
                const auto r = static_cast<std::int32_t>(nodes.size());
                nodes.emplace_back();
                auto& parent = nodes[static_cast<std::size_t>(n)]; // re-resolve after growth
                parent.left = l;
                parent.right = r;
                nodes[static_cast<std::size_t>(l)].parent = n;
                nodes[static_cast<std::size_t>(r)].parent = n;
                nodes[static_cast<std::size_t>(l)].active = true;
                nodes[static_cast<std::size_t>(r)].active = true;
                feature_has_split[static_cast<std::size_t>(parent.best_feature)] = 1;
                next_level.push_back(l);
                next_level.push_back(r);
            }
            if (next_level.empty()) break;

            // rows first follow the default direction, then entries with a
            // present value are rerouted explicitly
            for (std::size_t i = 0; i < rows; ++i) {
                auto& nd = nodes[static_cast<std::size_t>(node_of[i])];
                if (nd.best_feature >= 0)
                    node_of[i] = nd.best_default_left ? nd.left : nd.right;
            }
            for (std::int32_t f = 0; f < dim; ++f) {
                if (!feature_has_split[static_cast<std::size_t>(f)]) continue;
                for (const auto& [row, val] : cols[static_cast<std::size_t>(f)].entries) {
                    const auto child = node_of[static_cast<std::size_t>(row)];
                    const auto pi = nodes[static_cast<std::size_t>(child)].parent;
                    if (pi < 0) continue;
                    const auto& parent = nodes[static_cast<std::size_t>(pi)];
                    if (parent.best_feature != f || (parent.left != child && parent.right != child))
                        continue;
                    node_of[static_cast<std::size_t>(row)] =
                        static_cast<double>(val) < parent.best_threshold ? parent.left : parent.right;
                }
            }

            // per-node sums for the new level
            for (auto n : next_level) {
                nodes[static_cast<std::size_t>(n)].g_sum = 0;
                nodes[static_cast<std::size_t>(n)].h_sum = 0;
            }
            for (std::size_t i = 0; i < rows; ++i) {
                auto& nd = nodes[static_cast<std::size_t>(node_of[i])];
                if (nd.active) {
                    nd.g_sum += grad[i];
                    nd.h_sum += hess[i];
                }
            }
            level = std::move(next_level);
        }

        // leaf values and margin updates
        for (auto& nd : nodes) {
            if (nd.left < 0) nd.leaf = -cfg.learning_rate * nd.g_sum / (nd.h_sum + lambda);
        }
        for (std::size_t i = 0; i < rows; ++i)
            margin[i] += nodes[static_cast<std::size_t>(node_of[i])].leaf;

        std::vector<TreeNode> tree(nodes.size());
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            const auto& nd = nodes[n];
            TreeNode& t = tree[n];
            if (nd.left >= 0) {
                t.feature = nd.best_feature;
                t.threshold = nd.best_threshold;
                t.left = nd.left;
                t.right = nd.right;
                t.default_left = nd.best_default_left ? 1 : 0;
            } else {
                t.feature = -1;
                t.value = nd.leaf;
            }
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

double predict_score(const BaselineModel& model, const SparseVec& features) {
    double margin = model.base_margin;
    for (const auto& tree : model.trees) {
        std::int32_t n = 0;
        while (tree[static_cast<std::size_t>(n)].feature >= 0) {
            const TreeNode& t = tree[static_cast<std::size_t>(n)];
            const double v = sparse_lookup(features, t.feature);
            if (v == 0.0) n = t.default_left ? t.left : t.right;
            else n = v < t.threshold ? t.left : t.right;
        }
        margin += tree[static_cast<std::size_t>(n)].value;
    }
    return sigmoid(margin);
}

std::vector<double> predict_scores(const BaselineModel& model, std::span<const SparseVec> features) {
    std::vector<double> out;
    out.reserve(features.size());
    for (const auto& f : features) out.push_back(predict_score(model, f));
    return out;
}

std::vector<std::uint8_t> scores_to_labels(std::span<const double> scores, double threshold) {
    std::vector<std::uint8_t> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back(s >= threshold ? 1 : 0);
    return out;
}

namespace {

constexpr char kMagic[8] = {'P', 'S', 'S', 'B', 'A', 'S', 'E', '1'};

struct Writer {
    std::string buf;
    template <typename T>
    void raw(T v) {
        char tmp[sizeof(T)];
        std::memcpy(tmp, &v, sizeof(T));
        buf.append(tmp, sizeof(T));
    }
    void str(const std::string& s) {
        raw(static_cast<std::uint32_t>(s.size()));
        buf += s;
    }
};

struct Reader {
    std::string_view buf;
    std::size_t pos = 0;
    template <typename T>
    T raw() {
        if (pos + sizeof(T) > buf.size()) throw ValidationError("truncated model file");
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string str() {
        const auto len = raw<std::uint32_t>();
        if (pos + len > buf.size()) throw ValidationError("truncated model file");
        std::string s(buf.substr(pos, len));
        pos += len;
        return s;
    }
};

} // namespace

void save_model(const BaselineModel& model, const std::filesystem::path& path) {
    Writer w;
    w.buf.append(kMagic, sizeof(kMagic));
    w.raw<std::uint32_t>(model.version);
    w.raw<std::int32_t>(model.config.n_estimators);
    w.raw<std::int32_t>(model.config.max_depth);
    w.raw<double>(model.config.learning_rate);
    w.raw<double>(model.config.reg_lambda);
    w.raw<double>(model.config.min_child_weight);
    w.raw<double>(model.config.base_score);
    w.raw<double>(model.config.pos_weight);
    w.raw<std::uint64_t>(model.config.seed);
    w.raw<double>(model.base_margin);
    w.raw<std::uint64_t>(model.vocab.num_pages_fitted);
    w.raw<std::uint32_t>(static_cast<std::uint32_t>(model.vocab.terms.size()));
    for (std::size_t i = 0; i < model.vocab.terms.size(); ++i) {
        w.str(model.vocab.terms[i]);
        w.raw<std::uint32_t>(model.vocab.df[i]);
    }
    w.raw<std::uint32_t>(static_cast<std::uint32_t>(model.trees.size()));
    for (const auto& tree : model.trees) {
        w.raw<std::uint32_t>(static_cast<std::uint32_t>(tree.size()));
        for (const auto& t : tree) {
            w.raw<std::int32_t>(t.feature);
            w.raw<double>(t.threshold);
            w.raw<std::int32_t>(t.left);
            w.raw<std::int32_t>(t.right);
            w.raw<std::uint8_t>(t.default_left);
            w.raw<double>(t.value);
        }
    }
    w.raw<std::uint64_t>(fnv1a64(w.buf));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write model file: " + path.string());
    out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
    if (!out) throw Error("model write failed: " + path.string());
}

BaselineModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model file: " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < sizeof(kMagic) + 12 || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
        throw ValidationError("not a baseline model file: " + path.string());
    {
        Reader tail{data, data.size() - 8};
        const auto stored = tail.raw<std::uint64_t>();
        if (stored != fnv1a64(std::string_view(data).substr(0, data.size() - 8)))
            throw ValidationError("model file checksum mismatch: " + path.string());
    }
    Reader r{std::string_view(data).substr(0, data.size() - 8), sizeof(kMagic)};
    BaselineModel m;
    m.version = r.raw<std::uint32_t>();
    if (m.version != 1)
        throw ValidationError("unsupported model version " + std::to_string(m.version));
    m.config.n_estimators = r.raw<std::int32_t>();
    m.config.max_depth = r.raw<std::int32_t>();
    m.config.learning_rate = r.raw<double>();
    m.config.reg_lambda = r.raw<double>();
    m.config.min_child_weight = r.raw<double>();
    m.config.base_score = r.raw<double>();
    m.config.pos_weight = r.raw<double>();
    m.config.seed = r.raw<std::uint64_t>();
    m.base_margin = r.raw<double>();
    m.vocab.num_pages_fitted = r.raw<std::uint64_t>();
    const auto v = r.raw<std::uint32_t>();
    m.vocab.terms.reserve(v);
    m.vocab.df.reserve(v);
    for (std::uint32_t i = 0; i < v; ++i) {
        m.vocab.terms.push_back(r.str());
        m.vocab.df.push_back(r.raw<std::uint32_t>());
        m.vocab.index.emplace(m.vocab.terms.back(), static_cast<std::int32_t>(i));
    }
    const auto ntrees = r.raw<std::uint32_t>();
    m.trees.reserve(ntrees);
    for (std::uint32_t ti = 0; ti < ntrees; ++ti) {
        const auto nnodes = r.raw<std::uint32_t>();
        std::vector<TreeNode> tree(nnodes);
        for (auto& t : tree) {
            t.feature = r.raw<std::int32_t>();
            t.threshold = r.raw<double>();
            t.left = r.raw<std::int32_t>();
            t.right = r.raw<std::int32_t>();
            t.default_left = r.raw<std::uint8_t>();
            t.value = r.raw<double>();
        }
        m.trees.push_back(std::move(tree));
    }
    return m;
}

} // namespace pss::baseline
