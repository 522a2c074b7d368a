#pragma once

// Chunked external merge sort used for corpus-scale percentile ranking.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "wspam/error.hpp"

namespace wspam::detail {

/// Uniquely named directory removed with its contents on destruction.
class TempDir {
public:
    explicit TempDir(const std::filesystem::path& base) {
        const auto root = base.empty() ? std::filesystem::temp_directory_path() : base;
        std::random_device rd;
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto candidate = root / ("wspam-sort-" + std::to_string(rd()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = std::move(candidate);
                return;
            }
        }
        throw IoError("cannot create temporary directory under " + root.string());
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_string(std::ostream& out, const std::string& s) {
    const auto n = static_cast<std::uint32_t>(s.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(s.data(), static_cast<std::streamsize>(n));
}

inline bool read_string(std::istream& in, std::string& s) {
    std::uint32_t n = 0;
    if (!in.read(reinterpret_cast<char*>(&n), sizeof n)) return false;
    s.resize(n);
    return static_cast<bool>(in.read(s.data(), static_cast<std::streamsize>(n)));
}

/// Sorts records that may not fit in memory. Codec provides
///   static void write(std::ostream&, const Record&);
///   static bool read(std::istream&, Record&);
/// Less must be a strict total order so output is deterministic.
template <class Record, class Codec, class Less>
class ExternalSorter {
public:
    ExternalSorter(std::size_t max_in_memory, std::filesystem::path dir, std::string tag, Less less = {})
        : max_(std::max<std::size_t>(max_in_memory, 1)), dir_(std::move(dir)), tag_(std::move(tag)), less_(less) {}

    void add(Record r) {
        buffer_.push_back(std::move(r));
        if (buffer_.size() >= max_) spill();
    }

    void finish() {
        if (runs_.empty()) {
            std::sort(buffer_.begin(), buffer_.end(), less_);
            return;
        }
        if (!buffer_.empty()) spill();
        for (std::size_t i = 0; i < runs_.size(); ++i) {
            readers_.push_back(std::make_unique<std::ifstream>(runs_[i], std::ios::binary));
            if (!*readers_.back()) throw IoError("cannot reopen sort run " + runs_[i].string());
            Record r;
            if (Codec::read(*readers_.back(), r)) heap_.push({std::move(r), i});
        }
    }

    bool next(Record& out) {
        if (runs_.empty()) {
            if (memory_pos_ == buffer_.size()) return false;
            out = std::move(buffer_[memory_pos_++]);
            return true;
        }
        if (heap_.empty()) return false;
        Entry top = heap_.top();
        heap_.pop();
        out = std::move(top.record);
        Record r;
        if (Codec::read(*readers_[top.run], r)) heap_.push({std::move(r), top.run});
        return true;
    }

    std::size_t spilled_runs() const noexcept { return runs_.size(); }

private:
    struct Entry {
        Record record;
        std::size_t run;
    };
    struct EntryGreater {
        Less less;
        bool operator()(const Entry& a, const Entry& b) const { return less(b.record, a.record); }
    };

    void spill() {
        std::sort(buffer_.begin(), buffer_.end(), less_);
        auto path = dir_ / (tag_ + "-" + std::to_string(runs_.size()) + ".run");
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        for (const Record& r : buffer_) Codec::write(out, r);
        out.flush();
        if (!out) throw IoError("cannot write sort run " + path.string());
        runs_.push_back(std::move(path));
        buffer_.clear();
    }

    std::size_t max_;
    std::filesystem::path dir_;
    std::string tag_;
    Less less_;
    std::vector<Record> buffer_;
    std::size_t memory_pos_ = 0;
    std::vector<std::filesystem::path> runs_;
    std::vector<std::unique_ptr<std::ifstream>> readers_;
    std::priority_queue<Entry, std::vector<Entry>, EntryGreater> heap_{EntryGreater{less_}};
};

}  // namespace wspam::detail
