#pragma once

// Per-DOI evidence model: RA lookup, redirect trace, metadata probe and
// alias->primary resolution. Evidence is gathered lazily in the decision
// order (RA first; redirects and metadata only for Crossref DOIs).
// Sources are pluggable: an offline fixture store for replay, a live HTTP
// source (http_source.hpp) and a disk-cache decorator around either.

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "doiaudit/doi.hpp"
#include "doiaudit/error.hpp"
#include "doiaudit/io_util.hpp"
#include "doiaudit/text.hpp"

namespace doiaudit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Evidence types

enum class RaOutcome { Crossref, OtherRa, DoesNotExist, Indeterminate };

inline const char* ra_outcome_name(RaOutcome o) {
    switch (o) {
        case RaOutcome::Crossref: return "crossref";
        case RaOutcome::OtherRa: return "other_ra";
        case RaOutcome::DoesNotExist: return "does_not_exist";
        case RaOutcome::Indeterminate: return "indeterminate";
    }
    return "?";
}

inline RaOutcome ra_outcome_from_name(std::string_view s) {
    if (s == "crossref") return RaOutcome::Crossref;
    if (s == "other_ra") return RaOutcome::OtherRa;
    if (s == "does_not_exist") return RaOutcome::DoesNotExist;
    return RaOutcome::Indeterminate;
}

struct RaResult {
    RaOutcome outcome = RaOutcome::Indeterminate;
    std::string ra_name;     // non-empty iff outcome == OtherRa (or "Crossref")
    std::string fetched_at;  // empty in offline replay so runs stay byte-identical

    json to_json() const {
        return {{"outcome", ra_outcome_name(outcome)}, {"name", ra_name}, {"fetched_at", fetched_at}};
    }
    static RaResult from_json(const json& j) {
        return {ra_outcome_from_name(j.at("outcome").get<std::string>()),
                j.value("name", ""), j.value("fetched_at", "")};
    }
};

struct RedirectHop {
    int status = 0;        // 0 = transport error
    std::string location;  // empty when absent

    json to_json() const {
        json j = {{"status", status}};
        if (!location.empty()) j["location"] = location;
        return j;
    }
};

struct RedirectTrace {
    enum class Method { Head, Get };
    std::vector<RedirectHop> hops;
    std::optional<std::string> final_uri;
    Method method_used = Method::Head;
    bool incomplete = false;  // transport error mid-chain or hop cap reached

    bool has_redirect() const {
        for (const auto& h : hops)
            if (h.status >= 300 && h.status < 400 && !h.location.empty()) return true;
        return false;
    }

    json to_json() const {
        json hops_j = json::array();
        for (const auto& h : hops) hops_j.push_back(h.to_json());
        json j = {{"method", method_used == Method::Head ? "head" : "get"},
                  {"hops", hops_j},
                  {"incomplete", incomplete}};
        j["final_uri"] = final_uri ? json(*final_uri) : json(nullptr);
        return j;
    }
    static RedirectTrace from_json(const json& j) {
        RedirectTrace t;
        t.method_used = j.value("method", "head") == "get" ? Method::Get : Method::Head;
        t.incomplete = j.value("incomplete", false);
        for (const auto& h : j.at("hops")) {
            t.hops.push_back({h.at("status").get<int>(), h.value("location", "")});
        }
        if (j.contains("final_uri") && !j.at("final_uri").is_null())
            t.final_uri = j.at("final_uri").get<std::string>();
        return t;
    }
};

// Derives final_uri and the incomplete flag from a recorded hop chain.
// final_uri is none when no redirect was observed, or when the chain ended
// in an error (status 0 or >= 400) that carries no location of its own.
inline void finalize_trace(RedirectTrace& t) {
    t.final_uri.reset();
    if (t.hops.empty() || !t.has_redirect()) return;
    const RedirectHop& last = t.hops.back();
    if (last.status == 0) t.incomplete = true;
    if (last.status >= 300 && last.status < 400 && !last.location.empty()) {
        t.final_uri = last.location;  // hop cap reached mid-redirect
        t.incomplete = true;
        return;
    }
    if ((last.status == 0 || last.status >= 400) && last.location.empty()) return;
    if (!last.location.empty() && last.status >= 400) {
        t.final_uri = last.location;
        return;
    }
    // Terminal response reached normally: the final URI is the target of
    // the last redirect followed.
    for (auto it = t.hops.rbegin(); it != t.hops.rend(); ++it) {
        if (it->status >= 300 && it->status < 400 && !it->location.empty()) {
            t.final_uri = it->location;
            return;
        }
    }
}

enum class MetadataOutcome { Found, ResourceNotFound, OtherError };

inline const char* metadata_outcome_name(MetadataOutcome o) {
    switch (o) {
        case MetadataOutcome::Found: return "found";
        case MetadataOutcome::ResourceNotFound: return "resource_not_found";
        case MetadataOutcome::OtherError: return "other_error";
    }
    return "?";
}

struct MetadataRecord {
    std::string type;
    std::string title;
    std::string container_title;
    std::string volume, issue, page;

    json to_json() const {
        return {{"type", type},   {"title", title}, {"container_title", container_title},
                {"volume", volume}, {"issue", issue}, {"page", page}};
    }
    static MetadataRecord from_json(const json& j) {
        return {j.value("type", ""),   j.value("title", ""), j.value("container_title", ""),
                j.value("volume", ""), j.value("issue", ""), j.value("page", "")};
    }
};

struct MetadataResult {
    MetadataOutcome outcome = MetadataOutcome::OtherError;
    int error_code = 0;  // HTTP status for OtherError; 0 = transport
    std::optional<MetadataRecord> record;  // present iff outcome == Found
    // Alias target carried by the fixture/conflict record, when known.
    std::optional<std::string> primary_of_alias;

    json to_json() const {
        json j = {{"outcome", metadata_outcome_name(outcome)}, {"code", error_code}};
        if (record) j["record"] = record->to_json();
        if (primary_of_alias) j["primary_of_alias"] = *primary_of_alias;
        return j;
    }
    static MetadataResult from_json(const json& j) {
        MetadataResult m;
        std::string o = j.at("outcome").get<std::string>();
        m.outcome = o == "found" ? MetadataOutcome::Found
                    : o == "resource_not_found" ? MetadataOutcome::ResourceNotFound
                                                : MetadataOutcome::OtherError;
        m.error_code = j.value("code", 0);
        if (j.contains("record")) m.record = MetadataRecord::from_json(j.at("record"));
        if (j.contains("primary_of_alias"))
            m.primary_of_alias = j.at("primary_of_alias").get<std::string>();
        return m;
    }
};

struct PrimaryResolution {
    enum class Source { None, Conflict, Handle };
    std::optional<NormalizedDoi> primary;
    Source source = Source::None;

    const char* source_name() const {
        switch (source) {
            case Source::Conflict: return "conflict";
            case Source::Handle: return "handle";
            default: return "none";
        }
    }
};

struct ResolutionEvidence {
    NormalizedDoi doi;
    RaResult ra;
    std::optional<RedirectTrace> redirect;   // only gathered for Crossref DOIs
    std::optional<MetadataResult> metadata;  // only for Crossref DOIs with redirects
    PrimaryResolution primary;
    std::optional<MetadataResult> primary_metadata;

    json to_json() const {
        json j = {{"doi", doi.full}, {"ra", ra.to_json()}};
        if (redirect) j["redirect"] = redirect->to_json();
        if (metadata) j["metadata"] = metadata->to_json();
        if (primary.primary) {
            j["primary"] = {{"doi", primary.primary->full}, {"source", primary.source_name()}};
        }
        if (primary_metadata) j["primary_metadata"] = primary_metadata->to_json();
        return j;
    }
    static ResolutionEvidence from_json(const json& j) {
        ResolutionEvidence ev;
        ev.doi = normalize_doi(j.at("doi").get<std::string>());
        ev.ra = RaResult::from_json(j.at("ra"));
        if (j.contains("redirect")) ev.redirect = RedirectTrace::from_json(j.at("redirect"));
        if (j.contains("metadata")) ev.metadata = MetadataResult::from_json(j.at("metadata"));
        if (j.contains("primary")) {
            ev.primary.primary = normalize_doi(j.at("primary").at("doi").get<std::string>());
            ev.primary.source = j.at("primary").at("source").get<std::string>() == "handle"
                                    ? PrimaryResolution::Source::Handle
                                    : PrimaryResolution::Source::Conflict;
        }
        if (j.contains("primary_metadata"))
            ev.primary_metadata = MetadataResult::from_json(j.at("primary_metadata"));
        return ev;
    }
};

// ---------------------------------------------------------------------------
// Sources

class EvidenceSource {
  public:
    virtual ~EvidenceSource() = default;
    virtual RaResult lookup_ra(const NormalizedDoi& doi) = 0;
    virtual RedirectTrace trace_redirects(const NormalizedDoi& doi) = 0;
    virtual MetadataResult fetch_metadata(const NormalizedDoi& doi) = 0;
    // HS_ALIAS value from handle resolution, if the handle answers for
    // another DOI.
    virtual std::optional<std::string> handle_alias_target(const NormalizedDoi& doi) = 0;
};

// Shared response-shape parsing, used by the fixture source and the live
// HTTP source so both map service payloads identically.
namespace wire {

// "Which RA?" returns a JSON array: [{"DOI": ..., "RA": "Crossref"}] or
// [{"DOI": ..., "status": "DOI does not exist"}].
inline RaResult parse_ra_response(const json& body) {
    RaResult r;
    if (!body.is_array() || body.empty() || !body.front().is_object()) return r;
    const json& first = body.front();
    if (first.contains("RA") && first.at("RA").is_string()) {
        r.ra_name = first.at("RA").get<std::string>();
        r.outcome = r.ra_name == "Crossref" ? RaOutcome::Crossref : RaOutcome::OtherRa;
        return r;
    }
    if (first.contains("status") && first.at("status").is_string() &&
        contains_icase(first.at("status").get<std::string>(), "does not exist")) {
        r.outcome = RaOutcome::DoesNotExist;
        return r;
    }
    return r;  // Indeterminate
}

inline std::string join_string_array(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (!j.is_array()) return {};
    std::string out;
    for (const auto& item : j) {
        if (!item.is_string()) continue;
        if (!out.empty()) out += "; ";
        out += item.get<std::string>();
    }
    return out;
}

inline std::string string_or_empty(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) return {};
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<int64_t>());
    return {};
}

// Crossref works payload: {"status": "ok", "message": {...}}.
inline MetadataRecord parse_works_message(const json& body) {
    MetadataRecord rec;
    const json* msg = &body;
    if (body.contains("message") && body.at("message").is_object()) msg = &body.at("message");
    rec.type = string_or_empty(*msg, "type");
    if (msg->contains("title")) rec.title = join_string_array(msg->at("title"));
    if (msg->contains("container-title"))
        rec.container_title = join_string_array(msg->at("container-title"));
    rec.volume = string_or_empty(*msg, "volume");
    rec.issue = string_or_empty(*msg, "issue");
    rec.page = string_or_empty(*msg, "page");
    return rec;
}

// Handle API payload: {"responseCode": 1, "values": [{"type": "HS_ALIAS",
// "data": {"value": "10.x/y"}}, ...]}.
inline std::optional<std::string> parse_handle_alias(const json& body) {
    if (!body.is_object() || !body.contains("values") || !body.at("values").is_array())
        return std::nullopt;
    for (const auto& v : body.at("values")) {
        if (!v.is_object() || v.value("type", "") != "HS_ALIAS") continue;
        if (v.contains("data") && v.at("data").is_object() && v.at("data").contains("value") &&
            v.at("data").at("value").is_string()) {
            return v.at("data").at("value").get<std::string>();
        }
    }
    return std::nullopt;
}

}  // namespace wire

// Offline replay store: a directory of JSON-lines files, one object per
// DOI with the recorded service responses. Byte-identical fixtures yield
// byte-identical evidence.
class FixtureSource : public EvidenceSource {
  public:
    explicit FixtureSource(const fs::path& dir) {
        if (!fs::is_directory(dir)) throw IoError("fixture directory not found: " + dir.string());
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            LineReader reader(file);
            std::string_view line;
            while (reader.next(line)) {
                if (trim(line).empty()) continue;
                json rec = json::parse(line);
                std::string doi = normalize_doi(rec.at("doi").get<std::string>()).full;
                records_[doi] = std::move(rec);
            }
        }
    }

    RaResult lookup_ra(const NormalizedDoi& doi) override {
        ++ra_calls_;
        const json& rec = record_for(doi);
        if (!rec.contains("ra_response")) throw FixtureMissError(doi.full + " (ra_response)");
        const json& resp = rec.at("ra_response");
        if (resp.is_object() && resp.value("transport_error", false)) {
            return {};  // Indeterminate
        }
        return wire::parse_ra_response(resp);
    }

    RedirectTrace trace_redirects(const NormalizedDoi& doi) override {
        ++redirect_calls_;
        const json& rec = record_for(doi);
        if (!rec.contains("redirect_chain")) throw FixtureMissError(doi.full + " (redirect_chain)");
        RedirectTrace t;
        t.method_used = rec.value("redirect_method", "head") == "get" ? RedirectTrace::Method::Get
                                                                      : RedirectTrace::Method::Head;
        for (const auto& hop : rec.at("redirect_chain")) {
            t.hops.push_back({hop.at("status").get<int>(), hop.value("location", "")});
        }
        finalize_trace(t);
        return t;
    }

    MetadataResult fetch_metadata(const NormalizedDoi& doi) override {
        ++metadata_calls_;
        const json& rec = record_for(doi);
        if (!rec.contains("metadata_response"))
            throw FixtureMissError(doi.full + " (metadata_response)");
        const json& resp = rec.at("metadata_response");
        MetadataResult m;
        if (resp.is_object() && resp.value("transport_error", false)) {
            m.outcome = MetadataOutcome::OtherError;
            m.error_code = 0;
        } else {
            int status = resp.value("status", 0);
            if (status == 200) {
                m.outcome = MetadataOutcome::Found;
                m.record = wire::parse_works_message(resp.value("body", json::object()));
            } else if (status == 404) {
                m.outcome = MetadataOutcome::ResourceNotFound;
            } else {
                m.outcome = MetadataOutcome::OtherError;
                m.error_code = status;
            }
        }
        if (rec.contains("alias_of") && rec.at("alias_of").is_string())
            m.primary_of_alias = rec.at("alias_of").get<std::string>();
        return m;
    }

    std::optional<std::string> handle_alias_target(const NormalizedDoi& doi) override {
        ++handle_calls_;
        const json& rec = record_for(doi);
        if (!rec.contains("handle_response")) return std::nullopt;
        return wire::parse_handle_alias(rec.at("handle_response"));
    }

    bool has(const std::string& normalized_doi) const { return records_.count(normalized_doi) > 0; }
    size_t size() const { return records_.size(); }

    // Call counters, used to verify evidence gathering stays lazy.
    uint64_t ra_calls() const { return ra_calls_; }
    uint64_t redirect_calls() const { return redirect_calls_; }
    uint64_t metadata_calls() const { return metadata_calls_; }
    uint64_t handle_calls() const { return handle_calls_; }

  private:
    const json& record_for(const NormalizedDoi& doi) {
        auto it = records_.find(doi.full);
        if (it == records_.end()) throw FixtureMissError(doi.full);
        return it->second;
    }

    std::unordered_map<std::string, json> records_;
    std::atomic<uint64_t> ra_calls_{0}, redirect_calls_{0}, metadata_calls_{0}, handle_calls_{0};
};

// Content-addressed on-disk response cache keyed by (endpoint, DOI).
// Infinite TTL: the audit is a snapshot in time. Concurrent readers,
// serialized writers.
class DiskCache {
  public:
    explicit DiskCache(const fs::path& root) : root_(root) { ensure_dir(root_); }

    std::optional<json> get(std::string_view endpoint, std::string_view doi) const {
        fs::path p = path_for(endpoint, doi);
        if (!fs::exists(p)) return std::nullopt;
        return json::parse(read_file(p));
    }

    void put(std::string_view endpoint, std::string_view doi, const json& value) {
        std::lock_guard<std::mutex> lock(write_mutex_);
        fs::path p = path_for(endpoint, doi);
        ensure_dir(p.parent_path());
        atomic_write_file(p, value.dump());
    }

    fs::path path_for(std::string_view endpoint, std::string_view doi) const {
        uint64_t h = fnv1a(endpoint, doi);
        char buf[20];
        snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        std::string name(buf);
        return root_ / std::string(endpoint) / name.substr(0, 2) / (name + ".json");
    }

    static uint64_t fnv1a(std::string_view endpoint, std::string_view doi) {
        uint64_t h = 1469598103934665603ull;
        auto mix = [&](std::string_view s) {
            for (unsigned char c : s) {
                h ^= c;
                h *= 1099511628211ull;
            }
        };
        mix(endpoint);
        mix("\x1f");
        mix(doi);
        return h;
    }

  private:
    fs::path root_;
    mutable std::mutex write_mutex_;
};

// Decorator: memoizes another source's typed results on disk.
class CachedSource : public EvidenceSource {
  public:
    CachedSource(EvidenceSource& inner, const fs::path& cache_dir)
        : inner_(inner), cache_(cache_dir) {}

    RaResult lookup_ra(const NormalizedDoi& doi) override {
        if (auto hit = cache_.get("ra", doi.full)) return RaResult::from_json(*hit);
        RaResult r = inner_.lookup_ra(doi);
        cache_.put("ra", doi.full, r.to_json());
        return r;
    }
    RedirectTrace trace_redirects(const NormalizedDoi& doi) override {
        if (auto hit = cache_.get("redirect", doi.full)) return RedirectTrace::from_json(*hit);
        RedirectTrace t = inner_.trace_redirects(doi);
        cache_.put("redirect", doi.full, t.to_json());
        return t;
    }
    MetadataResult fetch_metadata(const NormalizedDoi& doi) override {
        if (auto hit = cache_.get("metadata", doi.full)) return MetadataResult::from_json(*hit);
        MetadataResult m = inner_.fetch_metadata(doi);
        cache_.put("metadata", doi.full, m.to_json());
        return m;
    }
    std::optional<std::string> handle_alias_target(const NormalizedDoi& doi) override {
        if (auto hit = cache_.get("handle", doi.full)) {
            if (hit->is_null()) return std::nullopt;
            return hit->get<std::string>();
        }
        auto target = inner_.handle_alias_target(doi);
        cache_.put("handle", doi.full, target ? json(*target) : json(nullptr));
        return target;
    }

  private:
    EvidenceSource& inner_;
    DiskCache cache_;
};

// ---------------------------------------------------------------------------
// Gathering

// Determines the primary a dead alias now answers for: an explicit target
// in the fixture/conflict record wins, handle resolution (HS_ALIAS) is the
// fallback. none when undeterminable.
inline PrimaryResolution resolve_primary(const NormalizedDoi& alias, const MetadataResult& metadata,
                                         EvidenceSource& source) {
    PrimaryResolution res;
    std::optional<std::string> raw;
    if (metadata.primary_of_alias) {
        raw = metadata.primary_of_alias;
        res.source = PrimaryResolution::Source::Conflict;
    } else if (auto target = source.handle_alias_target(alias)) {
        raw = target;
        res.source = PrimaryResolution::Source::Handle;
    }
    if (!raw) return res;
    auto primary = try_normalize_doi(*raw);
    if (!primary || primary->full == alias.full) {
        res.source = PrimaryResolution::Source::None;
        return res;
    }
    res.primary = std::move(primary);
    return res;
}

// Evidence provider interface shared by the live gatherer and the
// prematerialized evidence file.
class EvidenceProvider {
  public:
    virtual ~EvidenceProvider() = default;
    virtual ResolutionEvidence gather(const NormalizedDoi& doi) = 0;
};

// Lazy, ordered gather: RA first; redirect trace only for Crossref DOIs;
// metadata only when the trace saw a redirect and did not end at the
// deleted-content URI; primary resolution only on "Resource not found".
class EvidenceGatherer : public EvidenceProvider {
  public:
    static constexpr std::string_view kDeletedContentUriPrefix =
        "https://www.crossref.org/_deleted-doi/";

    explicit EvidenceGatherer(EvidenceSource& source) : source_(source) {}

    ResolutionEvidence gather(const NormalizedDoi& doi) override {
        ResolutionEvidence ev;
        ev.doi = doi;
        ev.ra = source_.lookup_ra(doi);
        if (ev.ra.outcome != RaOutcome::Crossref) return ev;
        ev.redirect = source_.trace_redirects(doi);
        if (is_deleted_content_uri(*ev.redirect) || !ev.redirect->has_redirect()) return ev;
        ev.metadata = source_.fetch_metadata(doi);
        if (ev.metadata->outcome == MetadataOutcome::ResourceNotFound) {
            ev.primary = resolve_primary(doi, *ev.metadata, source_);
            if (ev.primary.primary) {
                ev.primary_metadata = source_.fetch_metadata(*ev.primary.primary);
            }
        }
        return ev;
    }

    static bool is_deleted_content_uri(const RedirectTrace& t) {
        return t.final_uri &&
               std::string_view(*t.final_uri).substr(0, kDeletedContentUriPrefix.size()) ==
                   kDeletedContentUriPrefix;
    }

  private:
    EvidenceSource& source_;
};

// Replays evidence.jsonl produced by the resolve stage.
class FileEvidenceStore : public EvidenceProvider {
  public:
    explicit FileEvidenceStore(const fs::path& path) {
        LineReader reader(path);
        std::string_view line;
        while (reader.next(line)) {
            if (trim(line).empty()) continue;
            auto ev = ResolutionEvidence::from_json(json::parse(line));
            std::string key = ev.doi.full;
            records_.emplace(std::move(key), std::move(ev));
        }
    }

    ResolutionEvidence gather(const NormalizedDoi& doi) override {
        auto it = records_.find(doi.full);
        if (it == records_.end())
            throw StageError("evidence store has no record for " + doi.full);
        return it->second;
    }

    size_t size() const { return records_.size(); }

  private:
    std::unordered_map<std::string, ResolutionEvidence> records_;
};

}  // namespace doiaudit
