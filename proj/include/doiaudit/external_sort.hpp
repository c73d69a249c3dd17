#pragma once

// Chunked sort-spill-merge for identifier lists that exceed RAM. Lines are
// accumulated in fixed-size arena blocks; once a chunk reaches the
// configured text budget it is sorted (optionally on worker threads),
// deduplicated and spilled as a sorted run. finish() k-way merges the runs
// into one sorted, duplicate-free store.

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <future>
#include <memory>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "doiaudit/error.hpp"
#include "doiaudit/io_util.hpp"

namespace doiaudit {

struct ExternalSortOptions {
    // Text bytes buffered per chunk before spilling. The paper-scale dumps
    // (87M/120M rows) need a few runs even at the 1 GiB default.
    uint64_t chunk_budget_bytes = 1ull << 30;
    int sort_workers = 1;  // concurrent chunk sorts; peak memory scales with it
    fs::path tmp_dir;      // spill directory, defaults to the output's parent
};

class ExternalSorter {
  public:
    explicit ExternalSorter(ExternalSortOptions opt) : opt_(opt) {
        if (opt_.chunk_budget_bytes < 1024) opt_.chunk_budget_bytes = 1024;
        if (opt_.sort_workers < 1) opt_.sort_workers = 1;
    }

    void add(std::string_view line) {
        chunk_->add(line);
        if (chunk_->text_bytes() >= opt_.chunk_budget_bytes) spill();
    }

    struct Result {
        uint64_t unique_count = 0;
    };

    // Writes the merged, deduplicated store to out_path. on_unique, when
    // set, sees every output line in order (used for the prefix census).
    Result finish(const fs::path& out_path,
                  const std::function<void(std::string_view)>& on_unique = {}) {
        Result res;
        if (runs_.empty()) {
            // Single in-memory chunk.
            chunk_->sort();
            LineWriter out(out_path);
            std::string_view prev;
            bool first = true;
            for (std::string_view line : chunk_->entries()) {
                if (first || line != prev) {
                    out.write_line(line);
                    if (on_unique) on_unique(line);
                    ++res.unique_count;
                }
                prev = line;
                first = false;
            }
            out.close();
            chunk_ = std::make_unique<Chunk>();
            return res;
        }
        spill();  // flush the tail chunk
        wait_sorts();
        res.unique_count = merge_runs(out_path, on_unique);
        cleanup_runs();
        return res;
    }

  private:
    // One chunk: stable 4 MiB blocks + views into them.
    class Chunk {
      public:
        void add(std::string_view line) {
            if (blocks_.empty() || block_used_ + line.size() > kBlockSize) {
                blocks_.push_back(std::make_unique<char[]>(std::max(kBlockSize, line.size())));
                block_used_ = 0;
            }
            char* dst = blocks_.back().get() + block_used_;
            std::memcpy(dst, line.data(), line.size());
            block_used_ += line.size();
            text_bytes_ += line.size();
            entries_.emplace_back(dst, line.size());
        }
        void sort() { std::sort(entries_.begin(), entries_.end()); }
        uint64_t text_bytes() const { return text_bytes_; }
        bool empty() const { return entries_.empty(); }
        const std::vector<std::string_view>& entries() const { return entries_; }

      private:
        static constexpr size_t kBlockSize = 4u << 20;
        std::vector<std::unique_ptr<char[]>> blocks_;
        size_t block_used_ = 0;
        uint64_t text_bytes_ = 0;
        std::vector<std::string_view> entries_;
    };

    void spill() {
        if (chunk_->empty()) return;
        fs::path run = run_path(runs_.size());
        runs_.push_back(run);
        auto chunk = std::move(chunk_);
        chunk_ = std::make_unique<Chunk>();
        auto task = [run, c = std::shared_ptr<Chunk>(std::move(chunk))]() {
            c->sort();
            LineWriter out(run);
            std::string_view prev;
            bool first = true;
            for (std::string_view line : c->entries()) {
                if (first || line != prev) out.write_line(line);
                prev = line;
                first = false;
            }
            out.close();
        };
        if (opt_.sort_workers > 1) {
            if (static_cast<int>(pending_.size()) >= opt_.sort_workers) {
                pending_.front().get();
                pending_.erase(pending_.begin());
            }
            pending_.push_back(std::async(std::launch::async, task));
        } else {
            task();
        }
    }

    void wait_sorts() {
        for (auto& f : pending_) f.get();
        pending_.clear();
    }

    uint64_t merge_runs(const fs::path& out_path,
                        const std::function<void(std::string_view)>& on_unique) {
        struct Head {
            std::string line;
            size_t run;
        };
        struct Cmp {
            bool operator()(const Head& a, const Head& b) const {
                return a.line > b.line || (a.line == b.line && a.run > b.run);
            }
        };
        std::vector<std::unique_ptr<LineReader>> readers;
        readers.reserve(runs_.size());
        std::priority_queue<Head, std::vector<Head>, Cmp> heap;
        for (size_t i = 0; i < runs_.size(); ++i) {
            readers.push_back(std::make_unique<LineReader>(runs_[i]));
            std::string_view line;
            if (readers.back()->next(line)) heap.push({std::string(line), i});
        }
        LineWriter out(out_path);
        uint64_t unique = 0;
        std::string prev;
        bool first = true;
        while (!heap.empty()) {
            Head head = heap.top();
            heap.pop();
            if (first || head.line != prev) {
                out.write_line(head.line);
                if (on_unique) on_unique(head.line);
                ++unique;
                prev = head.line;
                first = false;
            }
            std::string_view line;
            if (readers[head.run]->next(line)) heap.push({std::string(line), head.run});
        }
        out.close();
        return unique;
    }

    fs::path run_path(size_t idx) {
        fs::path dir = opt_.tmp_dir;
        ensure_dir(dir);
        return dir / ("run-" + std::to_string(idx) + ".tmp");
    }

    void cleanup_runs() {
        for (const auto& r : runs_) {
            std::error_code ec;
            fs::remove(r, ec);
        }
        runs_.clear();
    }

    ExternalSortOptions opt_;
    std::unique_ptr<Chunk> chunk_ = std::make_unique<Chunk>();
    std::vector<fs::path> runs_;
    std::vector<std::future<void>> pending_;
};

}  // namespace doiaudit
