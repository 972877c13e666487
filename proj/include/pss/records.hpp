#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pss/error.hpp"

namespace pss::corpus {

// One OCR word. Coordinates are fractions of the page width/height.
struct OcrToken {
    std::string text;
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    bool operator==(const OcrToken&) const = default;
};

struct PageRecord {
    std::string doc_id;
    int page_index = 0;
    int width = 0, height = 0; // pixels
    std::vector<OcrToken> tokens; // may be empty (blank page)

    bool operator==(const PageRecord&) const = default;
};

struct DocumentRecord {
    std::string doc_id;
    std::vector<PageRecord> pages; // page_index exactly 0..len-1

    bool operator==(const DocumentRecord&) const = default;
};

enum class Split { train, validation, test };

inline const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "train";
}

inline Split split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    throw ValidationError("invalid split: " + std::string(s));
}

struct StreamManifest {
    std::string stream_id;
    Split split = Split::train;
    std::vector<std::string> doc_ids; // ordered, non-empty

    bool operator==(const StreamManifest&) const = default;
};

struct Corpus {
    std::map<std::string, DocumentRecord> documents;
    std::vector<StreamManifest> streams; // file order preserved

    const DocumentRecord& doc(const std::string& id) const {
        auto it = documents.find(id);
        if (it == documents.end())
            throw ValidationError("dangling document reference: " + id);
        return it->second;
    }

    std::uint64_t stream_page_count(const StreamManifest& m) const {
        std::uint64_t n = 0;
        for (const auto& id : m.doc_ids) n += doc(id).pages.size();
        return n;
    }

    bool operator==(const Corpus&) const = default;
};

} // namespace pss::corpus
