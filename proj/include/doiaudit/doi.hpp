#pragma once

// Identifier data model. A DOI name is prefix "/" suffix; the prefix is the
// registrant code beginning "10." and the suffix is everything after the
// first slash (which may itself contain slashes). Normalization makes two
// dump lines comparable: trim, percent-decode once, case fold.

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "doiaudit/error.hpp"
#include "doiaudit/text.hpp"

namespace doiaudit {

struct NormalizedDoi {
    std::string full;   // prefix + "/" + suffix, decoded and folded
    size_t slash = 0;   // offset of the first '/'

    std::string_view prefix() const { return std::string_view(full).substr(0, slash); }
    std::string_view suffix() const { return std::string_view(full).substr(slash + 1); }

    friend bool operator==(const NormalizedDoi& a, const NormalizedDoi& b) {
        return a.full == b.full;
    }
    friend bool operator!=(const NormalizedDoi& a, const NormalizedDoi& b) {
        return a.full != b.full;
    }
    friend bool operator<(const NormalizedDoi& a, const NormalizedDoi& b) {
        return a.full < b.full;
    }
};

struct NormalizeDiagnostics {
    // %XX triplets still decodable after the single decoding pass, i.e.
    // evidence of double-encoded input. Never decoded further.
    uint64_t residual_escapes = 0;
};

// Core normalization: trim surrounding whitespace, percent-decode exactly
// once, case-fold per character. Returns nullopt unless the result has a
// '/' with a prefix starting "10.".
inline std::optional<NormalizedDoi> try_normalize_doi(std::string_view raw,
                                                      NormalizeDiagnostics* diag = nullptr) {
    std::string_view trimmed = trim(raw);
    if (trimmed.empty()) return std::nullopt;
    std::string decoded = percent_decode_once(trimmed);
    if (diag) diag->residual_escapes += count_decodable_triplets(decoded);
    std::string folded = fold_case(decoded);
    size_t slash = folded.find('/');
    if (slash == std::string::npos) return std::nullopt;
    if (folded.compare(0, 3, "10.") != 0 || slash < 3) return std::nullopt;
    return NormalizedDoi{std::move(folded), slash};
}

inline NormalizedDoi normalize_doi(std::string_view raw, NormalizeDiagnostics* diag = nullptr) {
    auto doi = try_normalize_doi(raw, diag);
    if (!doi) throw MalformedDoiError("malformed DOI: \"" + std::string(trim(raw)) + "\"");
    return *std::move(doi);
}

inline std::pair<std::string_view, std::string_view> split_doi(const NormalizedDoi& doi) {
    return {doi.prefix(), doi.suffix()};
}

// Prefix of an already-normalized identifier line (sorted-store entries).
inline std::string_view prefix_of(std::string_view normalized_full) {
    return normalized_full.substr(0, normalized_full.find('/'));
}

}  // namespace doiaudit
