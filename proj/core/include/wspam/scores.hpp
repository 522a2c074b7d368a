#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "wspam/classifier.hpp"
#include "wspam/warc.hpp"

namespace wspam {

struct ScoreEntry {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const ScoreEntry&, const ScoreEntry&) = default;
};

/// Per-document log-odds scores, kept sorted by doc id.
class ScoreTable {
public:
    ScoreTable() = default;

    /// Throws DataError naming the id on duplicates, InvalidArgument on
    /// non-finite scores.
    explicit ScoreTable(std::vector<ScoreEntry> entries, std::string model_id = {});

    const std::vector<ScoreEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::string& model_id() const noexcept { return model_id_; }

    std::optional<double> find(std::string_view doc_id) const;

    friend bool operator==(const ScoreTable&, const ScoreTable&) = default;

private:
    std::vector<ScoreEntry> entries_;
    std::string model_id_;
};

struct PercentileEntry {
    std::string doc_id;
    int percentile = 0;

    friend bool operator==(const PercentileEntry&, const PercentileEntry&) = default;
};

/// Integer spam percentiles in [0, 100], sorted by doc id. Low values are
/// the spammiest pages: percentile < t selects the spammiest t%.
class PercentileTable {
public:
    PercentileTable() = default;
    PercentileTable(std::vector<PercentileEntry> entries, std::uint64_t corpus_size);

    const std::vector<PercentileEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::uint64_t corpus_size() const noexcept { return corpus_size_; }

    std::optional<int> find(std::string_view doc_id) const;

    friend bool operator==(const PercentileTable&, const PercentileTable&) = default;

private:
    std::vector<PercentileEntry> entries_;
    std::uint64_t corpus_size_ = 0;
};

struct ScoreOptions {
    unsigned threads = 1;
    std::size_t batch_size = 512;  // pages per worker per round
    std::string model_id;
};

/// Pull-style page stream; returns nullopt when exhausted.
using PageSource = std::function<std::optional<PageRecord>()>;

/// Scores every page. Work is spread over `threads` workers sharing the
/// read-only weights; the result does not depend on the thread count.
ScoreTable score_corpus(const WeightVector& w, const PageSource& pages, const ScoreOptions& options = {});
ScoreTable score_corpus(const WeightVector& w, std::span<const PageRecord> pages, const ScoreOptions& options = {});

/// percentile(p) = floor(100 * |{p' : score(p') >= score(p)}| / N).
/// Ties share a percentile. Throws InvalidArgument on an empty table.
PercentileTable percentile_rank(const ScoreTable& scores);

/// Per-document mean of two or more tables over identical doc id sets.
/// The mean is taken over sorted values, so argument order never matters.
ScoreTable fuse(std::span<const ScoreTable> tables);

/// "<doc_id> <score>" per line, score with 6 significant digits.
void write_scores(std::ostream& out, const ScoreTable& table);
void write_scores(const std::filesystem::path& path, const ScoreTable& table);
ScoreTable parse_scores(std::istream& in, const std::string& source_name = "<scores>");
ScoreTable read_scores(const std::filesystem::path& path);

/// "<percentile> <doc_id>" per line.
void write_percentiles(std::ostream& out, const PercentileTable& table);
void write_percentiles(const std::filesystem::path& path, const PercentileTable& table);

/// Parses a percentile file. With `wanted`, only those ids are kept, so
/// a corpus-wide file can be streamed against a small run.
PercentileTable parse_percentiles(std::istream& in, const std::string& source_name = "<percentiles>",
                                  const std::unordered_set<std::string>* wanted = nullptr);
PercentileTable read_percentiles(const std::filesystem::path& path,
                                 const std::unordered_set<std::string>* wanted = nullptr);

struct ExternalSortOptions {
    /// Entries held in memory per sorted run before spilling to disk.
    std::size_t max_in_memory = std::size_t{1} << 22;
    /// Spill directory; the system temp directory when empty.
    std::filesystem::path temp_dir;
};

/// Score file to percentile file with bounded memory (external merge
/// sort). Output is identical to percentile_rank + write_percentiles.
/// Returns the corpus size.
std::uint64_t percentile_rank_file(const std::filesystem::path& scores, const std::filesystem::path& output,
                                   const ExternalSortOptions& options = {});

}  // namespace wspam
