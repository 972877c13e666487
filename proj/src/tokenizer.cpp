#include "pss/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "pss/error.hpp"
#include "pss/io.hpp"

namespace pss::layout {

namespace {

// Unicode whitespace as recognized by both tokenizers.
bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Decodes one UTF-8 codepoint starting at i; invalid bytes decode as
// themselves (latin-1 style) so tokenization is total on arbitrary bytes.
char32_t decode_utf8(std::string_view s, std::size_t i, std::size_t* len) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    *len = 1;
    if (b0 < 0x80) return b0;
    std::size_t need = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { need = 1; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { need = 2; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { need = 3; cp = b0 & 0x07; }
    else return b0;
    if (i + need >= s.size()) return b0;
    for (std::size_t k = 1; k <= need; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return b0;
        cp = (cp << 6) | (b & 0x3F);
    }
    *len = need + 1;
    return cp;
}

std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return out;
}

// GPT-2 byte <-> unit codepoint bijection.
const std::array<char32_t, 256>& byte_to_unit() {
    static const std::array<char32_t, 256> table = [] {
        std::array<char32_t, 256> t{};
        auto printable = [](int b) {
            return (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
        };
        char32_t next = 256;
        for (int b = 0; b < 256; ++b)
            t[static_cast<std::size_t>(b)] = printable(b) ? static_cast<char32_t>(b) : next++;
        return t;
    }();
    return table;
}

std::string map_bytes_to_units(std::string_view raw) {
    std::string out;
    out.reserve(raw.size() * 2);
    for (unsigned char b : raw) out += encode_utf8(byte_to_unit()[b]);
    return out;
}

} // namespace

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> out;
    std::string cur;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t len = 0;
        const char32_t cp = decode_utf8(text, i, &len);
        if (is_unicode_space(cp)) {
            if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.append(text.substr(i, len));
        }
        i += len;
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::uint64_t WhitespaceTokenizer::count(std::string_view text) const {
    std::uint64_t n = 0;
    bool in_token = false;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t len = 0;
        const bool space = is_unicode_space(decode_utf8(text, i, &len));
        if (!space && !in_token) ++n;
        in_token = !space;
        i += len;
    }
    return n;
}

std::string WhitespaceTokenizer::join(const std::vector<std::string>& tokens) const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

const WhitespaceTokenizer& whitespace_tokenizer() {
    static const WhitespaceTokenizer instance;
    return instance;
}

Gpt2BpeTokenizer Gpt2BpeTokenizer::load(const std::filesystem::path& merges_path) {
    Gpt2BpeTokenizer tok;
    std::uint32_t rank = 0;
    for_each_line(merges_path, [&](std::size_t lineno, std::string_view line) {
        if (line.front() == '#') return; // "#version" header
        const auto sep = line.find(' ');
        if (sep == std::string_view::npos || sep == 0 || sep + 1 >= line.size() ||
            line.find(' ', sep + 1) != std::string_view::npos)
            throw ValidationError("bad merges line " + std::to_string(lineno) + " in " +
                                  merges_path.string());
        tok.merge_ranks_.emplace(std::string(line), rank++);
    });
    return tok;
}

namespace {

constexpr std::uint32_t kNoRank = std::numeric_limits<std::uint32_t>::max();

// Greedy lowest-rank merge loop over one pre-token (symbols are byte-unit
// codepoint strings).
void bpe_merge(std::vector<std::string>& parts,
               const std::unordered_map<std::string, std::uint32_t>& ranks) {
    std::string key;
    while (parts.size() > 1) {
        std::uint32_t best = kNoRank;
        std::size_t best_at = 0;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            key.assign(parts[i]);
            key += ' ';
            key += parts[i + 1];
            auto it = ranks.find(key);
            if (it != ranks.end() && it->second < best) {
                best = it->second;
                best_at = i;
            }
        }
        if (best == kNoRank) break;
        // merge every occurrence of the winning pair, left to right
        const std::string a = parts[best_at], b = parts[best_at + 1];
        std::vector<std::string> merged;
        merged.reserve(parts.size());
        for (std::size_t i = 0; i < parts.size();) {
            if (i + 1 < parts.size() && parts[i] == a && parts[i + 1] == b) {
                merged.push_back(a + b);
                i += 2;
            } else {
                merged.push_back(parts[i]);
                ++i;
            }
        }
        parts.swap(merged);
    }
}

enum class CharClass { letter, digit, space, other };

CharClass classify(char32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return CharClass::letter;
    if (cp >= '0' && cp <= '9') return CharClass::digit;
    if (is_unicode_space(cp)) return CharClass::space;
    if (cp >= 0x80) return CharClass::letter; // approximation of \p{L}
    return CharClass::other;
}

// GPT-2 pre-tokenizer: contractions, " ?letters", " ?digits", " ?other",
// then whitespace runs that leave their final char to lead the next token.
std::vector<std::string> pretokenize(std::string_view text) {
    // decode once
    std::vector<char32_t> cps;
    std::vector<std::size_t> offs; // byte offset of each cp
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t len = 0;
        cps.push_back(decode_utf8(text, i, &len));
        offs.push_back(i);
        i += len;
    }
    offs.push_back(text.size());

    static const std::vector<std::u32string> contractions = {U"'s", U"'t", U"'re", U"'ve",
                                                             U"'m", U"'ll", U"'d"};
    std::vector<std::string> out;
    auto slice = [&](std::size_t a, std::size_t b) {
        return std::string(text.substr(offs[a], offs[b] - offs[a]));
    };
    std::size_t p = 0;
    const std::size_t n = cps.size();
    while (p < n) {
        if (cps[p] == U'\'') {
            bool matched = false;
            for (const auto& c : contractions) {
                if (p + c.size() <= n && std::equal(c.begin(), c.end(), cps.begin() + static_cast<std::ptrdiff_t>(p))) {
                    out.push_back(slice(p, p + c.size()));
                    p += c.size();
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        const std::size_t start = p;
        std::size_t q = p + (cps[p] == U' ' && p + 1 < n ? 1 : 0);
        const CharClass cls = q < n ? classify(cps[q]) : CharClass::space;
        if (q < n && cls != CharClass::space) {
            std::size_t k = q;
            while (k < n && classify(cps[k]) == cls) ++k;
            out.push_back(slice(start, k));
            p = k;
            continue;
        }
        // whitespace run
        std::size_t k = p;
        while (k < n && classify(cps[k]) == CharClass::space) ++k;
        if (k < n && k - p > 1) {
            out.push_back(slice(p, k - 1)); // final ws char leads the next token
            p = k - 1;
        } else {
            out.push_back(slice(p, k));
            p = k;
        }
    }
    return out;
}

} // namespace

std::vector<std::string> Gpt2BpeTokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> pieces;
    for (const auto& pre : pretokenize(text)) {
        const std::string mapped = map_bytes_to_units(pre);
        std::vector<std::string> parts;
        std::size_t i = 0;
        while (i < mapped.size()) {
            std::size_t len = 0;
            decode_utf8(mapped, i, &len);
            parts.emplace_back(mapped.substr(i, len));
            i += len;
        }
        bpe_merge(parts, merge_ranks_);
        for (auto& p : parts) pieces.push_back(std::move(p));
    }
    return pieces;
}

std::string Gpt2BpeTokenizer::decode_piece(std::string_view piece) const {
    static const auto unit_to_byte = [] {
        std::unordered_map<char32_t, unsigned char> m;
        for (int b = 0; b < 256; ++b) m[byte_to_unit()[static_cast<std::size_t>(b)]] = static_cast<unsigned char>(b);
        return m;
    }();
    std::string out;
    std::size_t i = 0;
    while (i < piece.size()) {
        std::size_t len = 0;
        const char32_t cp = decode_utf8(piece, i, &len);
        auto it = unit_to_byte.find(cp);
        if (it == unit_to_byte.end())
            throw ValidationError("not a BPE piece: " + std::string(piece));
        out += static_cast<char>(it->second);
        i += len;
    }
    return out;
}

std::string Gpt2BpeTokenizer::join(const std::vector<std::string>& tokens) const {
    std::string out;
    for (const auto& t : tokens) out += decode_piece(t);
    return out;
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view id,
                                          const std::filesystem::path& bpe_merges) {
    if (id == "whitespace") return std::make_unique<WhitespaceTokenizer>();
    if (id == "bpe-gpt2-compatible") {
        if (bpe_merges.empty())
            throw ValidationError("tokenizer bpe-gpt2-compatible needs a merges file");
        return std::make_unique<Gpt2BpeTokenizer>(Gpt2BpeTokenizer::load(bpe_merges));
    }
    throw ValidationError("unknown tokenizer id: " + std::string(id));
}

} // namespace pss::layout
