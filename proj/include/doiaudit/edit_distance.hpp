#pragma once

// Levenshtein distance and LCS character diffs over Unicode scalar values.
// The edit script mirrors diff-lcs hunk semantics: within a hunk, the k-th
// deletion pairs with the k-th addition as a replacement; leftovers stay
// plain deletes/adds.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "doiaudit/error.hpp"
#include "doiaudit/text.hpp"

namespace doiaudit {

// Unit-cost insert/delete/substitute, counted in Unicode scalar values.
inline uint32_t levenshtein(const std::u32string& a, const std::u32string& b) {
    const size_t m = a.size(), n = b.size();
    if (m == 0) return static_cast<uint32_t>(n);
    if (n == 0) return static_cast<uint32_t>(m);
    std::vector<uint32_t> row(n + 1);
    for (size_t j = 0; j <= n; ++j) row[j] = static_cast<uint32_t>(j);
    for (size_t i = 1; i <= m; ++i) {
        uint32_t diag = row[0];
        row[0] = static_cast<uint32_t>(i);
        for (size_t j = 1; j <= n; ++j) {
            uint32_t up = row[j];
            if (a[i - 1] == b[j - 1]) {
                row[j] = diag;
            } else {
                row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + 1});
            }
            diag = up;
        }
    }
    return row[n];
}

inline uint32_t levenshtein(std::string_view a, std::string_view b) {
    return levenshtein(decode_utf8(a), decode_utf8(b));
}

enum class EditKind { Add, Delete, Replace };

inline const char* edit_kind_name(EditKind k) {
    switch (k) {
        case EditKind::Add: return "add";
        case EditKind::Delete: return "delete";
        case EditKind::Replace: return "replace";
    }
    return "?";
}

struct EditOp {
    EditKind kind;
    size_t position;  // index into s1's scalar values; Add inserts before it
    std::optional<char32_t> old_char;  // Delete and Replace
    std::optional<char32_t> new_char;  // Add and Replace

    friend bool operator==(const EditOp&, const EditOp&) = default;
};

struct EditScript {
    std::vector<EditOp> ops;
};

// LCS-based character diff of s1 -> s2. Cells capped to keep pathological
// inputs from exhausting memory; DOI suffixes are tens of characters.
inline EditScript edit_script(std::string_view s1, std::string_view s2) {
    std::u32string a = decode_utf8(s1), b = decode_utf8(s2);
    const size_t m = a.size(), n = b.size();
    if ((m + 1) * (n + 1) > (64u << 20)) {
        throw std::length_error("edit_script: inputs too long for LCS table");
    }

    // L[i][j] = LCS length of a[i:], b[j:]
    std::vector<uint32_t> table((m + 1) * (n + 1), 0);
    auto L = [&](size_t i, size_t j) -> uint32_t& { return table[i * (n + 1) + j]; };
    for (size_t i = m; i-- > 0;) {
        for (size_t j = n; j-- > 0;) {
            L(i, j) = (a[i] == b[j]) ? L(i + 1, j + 1) + 1
                                     : std::max(L(i + 1, j), L(i, j + 1));
        }
    }

    EditScript script;
    std::vector<std::pair<size_t, char32_t>> dels;  // (s1 position, char)
    std::vector<char32_t> adds;
    auto flush_hunk = [&](size_t anchor_pos) {
        size_t paired = std::min(dels.size(), adds.size());
        for (size_t k = 0; k < paired; ++k) {
            script.ops.push_back({EditKind::Replace, dels[k].first, dels[k].second, adds[k]});
        }
        for (size_t k = paired; k < dels.size(); ++k) {
            script.ops.push_back({EditKind::Delete, dels[k].first, dels[k].second, std::nullopt});
        }
        for (size_t k = paired; k < adds.size(); ++k) {
            script.ops.push_back({EditKind::Add, anchor_pos, std::nullopt, adds[k]});
        }
        dels.clear();
        adds.clear();
    };

    size_t i = 0, j = 0;
    while (i < m && j < n) {
        if (a[i] == b[j] && L(i, j) == L(i + 1, j + 1) + 1) {
            flush_hunk(i);
            ++i;
            ++j;
        } else if (L(i + 1, j) >= L(i, j + 1)) {  // delete before add, like diff-lcs
            dels.emplace_back(i, a[i]);
            ++i;
        } else {
            adds.push_back(b[j]);
            ++j;
        }
    }
    for (; i < m; ++i) dels.emplace_back(i, a[i]);
    for (; j < n; ++j) adds.push_back(b[j]);
    flush_hunk(m);
    return script;
}

// Replays a script produced by edit_script(s1, s2) over s1; yields s2.
inline std::string apply_edit_script(std::string_view s1, const EditScript& script) {
    std::u32string a = decode_utf8(s1);
    std::u32string out;
    size_t i = 0, oi = 0;
    const auto& ops = script.ops;
    while (true) {
        while (oi < ops.size() && ops[oi].position == i && ops[oi].kind == EditKind::Add) {
            out.push_back(*ops[oi].new_char);
            ++oi;
        }
        if (oi < ops.size() && ops[oi].position == i && ops[oi].kind != EditKind::Add) {
            if (ops[oi].kind == EditKind::Replace) out.push_back(*ops[oi].new_char);
            ++i;  // Delete and Replace both consume one source char
            ++oi;
            continue;
        }
        if (i >= a.size()) break;
        out.push_back(a[i]);
        ++i;
    }
    return encode_utf8(out);
}

// Position-free multiset of (kind, characters) with counts; Table-7-style
// aggregation key. Ops ordered by (kind, character).
struct EditSignature {
    struct Item {
        EditKind kind;
        char32_t old_char;  // 0 when unused
        char32_t new_char;  // 0 when unused
        uint64_t count;

        friend bool operator==(const Item&, const Item&) = default;
        friend auto operator<=>(const Item&, const Item&) = default;
    };
    std::vector<Item> items;  // sorted

    friend bool operator==(const EditSignature&, const EditSignature&) = default;
    friend bool operator<(const EditSignature& a, const EditSignature& b) {
        return a.items < b.items;
    }

    std::string render() const {
        std::string out;
        for (const auto& item : items) {
            if (!out.empty()) out += "; ";
            out += edit_kind_name(item.kind);
            out += " '";
            append_char(out, item.kind == EditKind::Add ? item.new_char : item.old_char);
            out += "'";
            if (item.kind == EditKind::Replace) {
                out += " -> '";
                append_char(out, item.new_char);
                out += "'";
            }
            out += " x" + std::to_string(item.count);
        }
        return out;
    }

  private:
    static void append_char(std::string& out, char32_t c) {
        if (c >= 0x20 && c < 0x7F) {
            out.push_back(static_cast<char>(c));
        } else {
            char buf[16];
            snprintf(buf, sizeof(buf), "U+%04X", static_cast<unsigned>(c));
            out += buf;
        }
    }
};

inline EditSignature signature_of(const EditScript& script) {
    std::map<std::tuple<EditKind, char32_t, char32_t>, uint64_t> counts;
    for (const auto& op : script.ops) {
        char32_t oc = op.old_char.value_or(0);
        char32_t nc = op.new_char.value_or(0);
        if (op.kind == EditKind::Add) oc = 0;
        if (op.kind == EditKind::Delete) nc = 0;
        ++counts[{op.kind, oc, nc}];
    }
    EditSignature sig;
    for (const auto& [key, count] : counts) {
        sig.items.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), count});
    }
    return sig;
}

}  // namespace doiaudit
