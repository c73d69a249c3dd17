#pragma once

// Snapshot ingestion and set differencing. A snapshot dump (plain text or
// JSON-lines, optionally gzipped) is normalized, deduplicated through the
// external sorter and stored as a sorted unique identifier list plus a
// per-prefix census sidecar. Diffing is a single streaming merge of two
// sorted stores.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "doiaudit/doi.hpp"
#include "doiaudit/external_sort.hpp"
#include "doiaudit/io_util.hpp"

namespace doiaudit {

struct SnapshotHandle {
    std::string label;
    uint64_t lines_read = 0;      // every non-empty input line
    uint64_t record_count = 0;    // lines carrying a well-formed DOI (duplicates included)
    uint64_t unique_count = 0;    // after normalization + dedupe
    uint64_t malformed_count = 0;
    uint64_t residual_escapes = 0;  // still-decodable %XX after the single decode pass
    fs::path sorted_store;
    fs::path prefix_census;  // TSV: prefix <TAB> count
    fs::path meta_path;

    nlohmann::json to_json() const {
        return {{"label", label},
                {"lines_read", lines_read},
                {"record_count", record_count},
                {"unique_count", unique_count},
                {"malformed_count", malformed_count},
                {"residual_escapes", residual_escapes},
                {"sorted_store", sorted_store.string()},
                {"prefix_census", prefix_census.string()}};
    }

    static SnapshotHandle from_json(const nlohmann::json& j, const fs::path& meta_path) {
        SnapshotHandle h;
        h.label = j.at("label").get<std::string>();
        h.lines_read = j.at("lines_read").get<uint64_t>();
        h.record_count = j.at("record_count").get<uint64_t>();
        h.unique_count = j.at("unique_count").get<uint64_t>();
        h.malformed_count = j.at("malformed_count").get<uint64_t>();
        h.residual_escapes = j.at("residual_escapes").get<uint64_t>();
        h.sorted_store = j.at("sorted_store").get<std::string>();
        h.prefix_census = j.at("prefix_census").get<std::string>();
        h.meta_path = meta_path;
        return h;
    }

    static SnapshotHandle load(const fs::path& meta_path) {
        return from_json(nlohmann::json::parse(read_file(meta_path)), meta_path);
    }
};

struct IngestOptions {
    uint64_t chunk_budget_bytes = 1ull << 30;  // 1 GiB of text per chunk
    int sort_workers = 1;
    // Malformed lines are never silently dropped: all are counted, the
    // first N are logged with line numbers.
    size_t malformed_log_cap = 10000;
};

namespace detail {

// A JSON-lines record with a "DOI" member, e.g. from the Crossref public
// data file. Plain identifier lines start with "10.", never '{'.
inline bool extract_jsonl_doi(std::string_view line, std::string& out) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return false;
    auto it = j.find("DOI");
    if (it == j.end() || !it->is_string()) return false;
    out = it->get<std::string>();
    return true;
}

}  // namespace detail

// Reads, normalizes and deduplicates one snapshot dump. Peak memory is
// bounded by the chunk budget regardless of input size.
inline SnapshotHandle ingest_snapshot(const fs::path& source, const std::string& label,
                                      const fs::path& store_path,
                                      const IngestOptions& opt = {}) {
    if (!fs::exists(source)) throw IoError("snapshot file not found: " + source.string());
    ensure_dir(store_path.parent_path());

    SnapshotHandle handle;
    handle.label = label;
    handle.sorted_store = store_path;
    handle.prefix_census = store_path.string() + ".prefixes.tsv";
    handle.meta_path = store_path.string() + ".meta.json";

    ExternalSortOptions sort_opt;
    sort_opt.chunk_budget_bytes = opt.chunk_budget_bytes;
    sort_opt.sort_workers = opt.sort_workers;
    sort_opt.tmp_dir = store_path.parent_path() / (store_path.filename().string() + ".spill");
    ExternalSorter sorter(sort_opt);

    fs::path malformed_log = store_path.string() + ".malformed.log";
    LineWriter bad(malformed_log);
    NormalizeDiagnostics diag;

    LineReader reader(source);
    std::string_view line;
    std::string json_doi;
    uint64_t line_no = 0;
    while (reader.next(line)) {
        ++line_no;
        std::string_view content = trim(line);
        if (content.empty()) continue;
        ++handle.lines_read;
        std::string_view raw = content;
        if (content.front() == '{') {
            if (!detail::extract_jsonl_doi(content, json_doi)) {
                ++handle.malformed_count;
                if (handle.malformed_count <= opt.malformed_log_cap) {
                    bad.write_line(std::to_string(line_no) + "\tno DOI member\t" +
                                   std::string(content.substr(0, 200)));
                }
                continue;
            }
            raw = json_doi;
        }
        auto doi = try_normalize_doi(raw, &diag);
        if (!doi) {
            ++handle.malformed_count;
            if (handle.malformed_count <= opt.malformed_log_cap) {
                bad.write_line(std::to_string(line_no) + "\tmalformed DOI\t" +
                               std::string(content.substr(0, 200)));
            }
            continue;
        }
        ++handle.record_count;
        sorter.add(doi->full);
    }
    bad.close();

    // The census streams off the merge: identifiers sharing "prefix/" are
    // a contiguous range in lexicographic order, so flush-on-change yields
    // one row per prefix.
    LineWriter census(handle.prefix_census);
    std::string current_prefix;
    uint64_t current_count = 0;
    auto flush_prefix = [&] {
        if (current_count > 0)
            census.write_line(current_prefix + "\t" + std::to_string(current_count));
    };
    auto res = sorter.finish(store_path, [&](std::string_view unique_line) {
        std::string_view pfx = prefix_of(unique_line);
        if (pfx != current_prefix) {
            flush_prefix();
            current_prefix.assign(pfx);
            current_count = 0;
        }
        ++current_count;
    });
    flush_prefix();
    census.close();

    handle.unique_count = res.unique_count;
    handle.residual_escapes = diag.residual_escapes;
    atomic_write_file(handle.meta_path, handle.to_json().dump(2) + "\n");
    return handle;
}

struct DiffSets {
    fs::path only_in_a;
    fs::path only_in_b;
    uint64_t only_in_a_count = 0;
    uint64_t only_in_b_count = 0;
    uint64_t in_both = 0;

    nlohmann::json to_json() const {
        return {{"only_in_a", only_in_a.string()},   {"only_in_b", only_in_b.string()},
                {"only_in_a_count", only_in_a_count}, {"only_in_b_count", only_in_b_count},
                {"in_both", in_both}};
    }

    static DiffSets load(const fs::path& meta_path) {
        auto j = nlohmann::json::parse(read_file(meta_path));
        DiffSets d;
        d.only_in_a = j.at("only_in_a").get<std::string>();
        d.only_in_b = j.at("only_in_b").get<std::string>();
        d.only_in_a_count = j.at("only_in_a_count").get<uint64_t>();
        d.only_in_b_count = j.at("only_in_b_count").get<uint64_t>();
        d.in_both = j.at("in_both").get<uint64_t>();
        return d;
    }
};

// Streaming merge of two sorted unique stores. only_in_a is the deletion
// candidate stream.
inline DiffSets diff_snapshots(const SnapshotHandle& a, const SnapshotHandle& b,
                               const fs::path& out_dir) {
    ensure_dir(out_dir);
    DiffSets diff;
    diff.only_in_a = out_dir / "only_in_a.txt";
    diff.only_in_b = out_dir / "only_in_b.txt";

    LineReader ra(a.sorted_store);
    LineReader rb(b.sorted_store);
    LineWriter wa(diff.only_in_a);
    LineWriter wb(diff.only_in_b);

    std::string la, lb;
    std::string_view view;
    bool has_a = ra.next(view);
    if (has_a) la.assign(view);
    bool has_b = rb.next(view);
    if (has_b) lb.assign(view);
    while (has_a || has_b) {
        int cmp;
        if (!has_a) cmp = 1;
        else if (!has_b) cmp = -1;
        else cmp = la.compare(lb) < 0 ? -1 : (la == lb ? 0 : 1);
        if (cmp < 0) {
            wa.write_line(la);
            ++diff.only_in_a_count;
            has_a = ra.next(view);
            if (has_a) la.assign(view);
        } else if (cmp > 0) {
            wb.write_line(lb);
            ++diff.only_in_b_count;
            has_b = rb.next(view);
            if (has_b) lb.assign(view);
        } else {
            ++diff.in_both;
            has_a = ra.next(view);
            if (has_a) la.assign(view);
            has_b = rb.next(view);
            if (has_b) lb.assign(view);
        }
    }
    wa.close();
    wb.close();

    if (diff.only_in_a_count + diff.in_both != a.unique_count ||
        diff.only_in_b_count + diff.in_both != b.unique_count) {
        throw StageError("diff counts do not partition the snapshot counts");
    }
    atomic_write_file(out_dir / "diff.meta.json", diff.to_json().dump(2) + "\n");
    return diff;
}

// Loads a prefix census sidecar into a sorted (prefix, count) list.
inline std::vector<std::pair<std::string, uint64_t>> load_prefix_census(const fs::path& path) {
    std::vector<std::pair<std::string, uint64_t>> rows;
    LineReader reader(path);
    std::string_view line;
    while (reader.next(line)) {
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string_view::npos) throw IoError("bad census row in " + path.string());
        rows.emplace_back(std::string(line.substr(0, tab)),
                          std::stoull(std::string(line.substr(tab + 1))));
    }
    return rows;
}

}  // namespace doiaudit
