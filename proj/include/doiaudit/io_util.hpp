#pragma once

// File plumbing: gzip-transparent line reading (zlib detects the magic
// bytes and falls back to plain bytes), buffered line output and atomic
// write-temp-then-rename.

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "doiaudit/error.hpp"

namespace doiaudit {

namespace fs = std::filesystem;

// Reads LF or CRLF terminated lines from a plain or gzip-compressed file.
class LineReader {
  public:
    explicit LineReader(const fs::path& path) : path_(path.string()) {
        file_ = gzopen(path_.c_str(), "rb");
        if (!file_) throw IoError("cannot open " + path_);
        gzbuffer(file_, 1 << 18);
    }
    ~LineReader() {
        if (file_) gzclose(file_);
    }
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    // Returns false at end of input. The returned view is valid until the
    // next call.
    bool next(std::string_view& line) {
        line_.clear();
        while (true) {
            if (pos_ == len_) {
                len_ = gzread(file_, buf_, sizeof(buf_));
                pos_ = 0;
                if (len_ < 0) {
                    int errnum = 0;
                    const char* msg = gzerror(file_, &errnum);
                    throw IoError("read error on " + path_ + ": " + (msg ? msg : ""));
                }
                if (len_ == 0) {
                    if (line_.empty() && !pending_) return false;
                    pending_ = false;
                    strip_cr();
                    line = line_;
                    return true;
                }
            }
            char* nl = static_cast<char*>(memchr(buf_ + pos_, '\n', len_ - pos_));
            if (nl) {
                line_.append(buf_ + pos_, nl - (buf_ + pos_));
                pos_ = static_cast<int>(nl - buf_) + 1;
                pending_ = false;
                strip_cr();
                line = line_;
                return true;
            }
            line_.append(buf_ + pos_, len_ - pos_);
            pos_ = len_;
            pending_ = true;
        }
    }

  private:
    void strip_cr() {
        if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    }

    std::string path_;
    gzFile file_ = nullptr;
    char buf_[1 << 16];
    int pos_ = 0, len_ = 0;
    std::string line_;
    bool pending_ = false;
};

class LineWriter {
  public:
    explicit LineWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot create " + path.string());
    }
    void write_line(std::string_view line) {
        out_.write(line.data(), static_cast<std::streamsize>(line.size()));
        out_.put('\n');
    }
    void close() {
        out_.flush();
        if (!out_) throw IoError("write error on " + path_.string());
        out_.close();
    }

  private:
    fs::path path_;
    std::ofstream out_;
};

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

// write-temp-then-rename; rename within one directory is atomic on POSIX.
inline void atomic_write_file(const fs::path& path, std::string_view content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write error on " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec && !fs::is_directory(dir)) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

}  // namespace doiaudit
