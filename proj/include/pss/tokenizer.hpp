#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pss::layout {

// Turns text into a token sequence. Implementations must be deterministic;
// join() re-renders a (possibly truncated) token sequence back into text.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::string id() const = 0;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    virtual std::uint64_t count(std::string_view text) const { return tokenize(text).size(); }
    virtual std::string join(const std::vector<std::string>& tokens) const = 0;
};

// Splits on Unicode whitespace, drops empties. join() uses single spaces.
class WhitespaceTokenizer final : public Tokenizer {
public:
    std::string id() const override { return "whitespace"; }
    std::vector<std::string> tokenize(std::string_view text) const override;
    std::uint64_t count(std::string_view text) const override;
    std::string join(const std::vector<std::string>& tokens) const override;
};

// Byte-level BPE in the GPT-2 vocabulary format: a merges.txt ranking file
// (and optionally vocab.json for ids). Pre-tokenization follows the GPT-2
// pattern with ASCII letter/digit classes; codepoints >= U+0080 outside the
// whitespace set are treated as letters. Pieces are returned in the
// byte-to-unicode alphabet and join() losslessly restores raw bytes.
class Gpt2BpeTokenizer final : public Tokenizer {
public:
    static Gpt2BpeTokenizer load(const std::filesystem::path& merges_path);

    std::string id() const override { return "bpe-gpt2-compatible"; }
    std::vector<std::string> tokenize(std::string_view text) const override;
    std::string join(const std::vector<std::string>& tokens) const override;

    // Decode a single piece back to raw bytes.
    std::string decode_piece(std::string_view piece) const;

private:
    Gpt2BpeTokenizer() = default;
    std::unordered_map<std::string, std::uint32_t> merge_ranks_; // "a b" -> rank
};

const WhitespaceTokenizer& whitespace_tokenizer();

// Resolves a tokenizer id from the registered set {whitespace,
// bpe-gpt2-compatible}. The BPE option needs a merges file; passing an empty
// path for it, or an unknown id, raises ValidationError.
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view id,
                                          const std::filesystem::path& bpe_merges = {});

} // namespace pss::layout
