#pragma once

// Byte- and codepoint-level helpers shared by DOI normalization and the
// suffix analytics: lenient UTF-8 decoding, single-pass percent-decoding
// and per-character case folding.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace doiaudit {

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
    return s;
}

inline int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

// Decodes every valid %XX triplet exactly once. Invalid triplets ("%zz",
// trailing "%") are copied through verbatim. No recursive decoding: bytes
// produced by the pass are never re-examined.
inline std::string percent_decode_once(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size();) {
        if (s[i] == '%' && i + 2 < s.size()) {
            int hi = hex_value(s[i + 1]);
            int lo = hex_value(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>((hi << 4) | lo));
                i += 3;
                continue;
            }
        }
        out.push_back(s[i]);
        ++i;
    }
    return out;
}

// Counts %XX triplets that would still decode. After percent_decode_once a
// non-zero count means the input was encoded more than once; surfaced as a
// diagnostics counter rather than decoded further.
inline uint64_t count_decodable_triplets(std::string_view s) {
    uint64_t n = 0;
    for (size_t i = 0; i + 2 < s.size(); ++i) {
        if (s[i] == '%' && hex_value(s[i + 1]) >= 0 && hex_value(s[i + 2]) >= 0) {
            ++n;
            i += 2;
        }
    }
    return n;
}

// Per-codepoint simple case folding over the scripts that occur in DOI
// dumps: ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic. Codepoints
// outside these ranges are returned unchanged.
inline char32_t fold_codepoint(char32_t cp) {
    if (cp < 0x80) return (cp >= U'A' && cp <= U'Z') ? cp + 0x20 : cp;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;  // Latin-1
    if (cp == 0x0178) return 0x00FF;                                     // Y with diaeresis
    if ((cp >= 0x0100 && cp <= 0x0136) || (cp >= 0x014A && cp <= 0x0176)) {
        return (cp % 2 == 0) ? cp + 1 : cp;  // Latin Extended-A, even/odd pairs
    }
    if ((cp >= 0x0139 && cp <= 0x0147) || (cp >= 0x0179 && cp <= 0x017D)) {
        return (cp % 2 == 1) ? cp + 1 : cp;
    }
    if (cp >= 0x0391 && cp <= 0x03A9 && cp != 0x03A2) return cp + 0x20;  // Greek capitals
    if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;                  // Cyrillic capitals
    if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;
    return cp;
}

// Lenient UTF-8 decode of the next scalar starting at s[i]. On malformed
// input the single byte value is returned as the codepoint so every input
// has a defined, deterministic segmentation. Advances i past the sequence.
inline char32_t next_codepoint(std::string_view s, size_t& i) {
    const auto byte = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    auto is_cont = [&](size_t k) { return k < s.size() && (byte(k) & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && is_cont(i + 1)) {
        char32_t cp = ((b0 & 0x1Fu) << 6) | (byte(i + 1) & 0x3Fu);
        if (cp >= 0x80) {
            i += 2;
            return cp;
        }
    } else if ((b0 & 0xF0) == 0xE0 && is_cont(i + 1) && is_cont(i + 2)) {
        char32_t cp = ((b0 & 0x0Fu) << 12) | ((byte(i + 1) & 0x3Fu) << 6) | (byte(i + 2) & 0x3Fu);
        if (cp >= 0x800) {
            i += 3;
            return cp;
        }
    } else if ((b0 & 0xF8) == 0xF0 && is_cont(i + 1) && is_cont(i + 2) && is_cont(i + 3)) {
        char32_t cp = ((b0 & 0x07u) << 18) | ((byte(i + 1) & 0x3Fu) << 12) |
                      ((byte(i + 2) & 0x3Fu) << 6) | (byte(i + 3) & 0x3Fu);
        if (cp >= 0x10000 && cp <= 0x10FFFF) {
            i += 4;
            return cp;
        }
    }
    ++i;  // malformed byte, taken literally
    return b0;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size();) out.push_back(next_codepoint(s, i));
    return out;
}

inline std::string encode_utf8(const std::u32string& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

// Case-folds a UTF-8 string per fold_codepoint.
inline std::string fold_case(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size();) append_utf8(out, fold_codepoint(next_codepoint(s, i)));
    return out;
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c += 0x20;
    return out;
}

// Case-insensitive ASCII substring search (for the "delete" keyword match).
inline bool contains_icase(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    if (haystack.size() < needle.size()) return false;
    auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 0x20) : c; };
    for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        size_t j = 0;
        while (j < needle.size() && lower(haystack[i + j]) == lower(needle[j])) ++j;
        if (j == needle.size()) return true;
    }
    return false;
}

}  // namespace doiaudit
