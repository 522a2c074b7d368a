#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wspam {

/// Where a reader can be reopened to reach a record again: a physical
/// file offset (start of a gzip member, or the record itself for plain
/// files) and the decoded stream offset at that point.
struct ResumePoint {
    std::uint64_t physical = 0;
    std::uint64_t decoded = 0;

    friend bool operator==(const ResumePoint&, const ResumePoint&) = default;
};

/// One response record, verbatim. `bytes` holds the WARC header block
/// followed by the content block (HTTP header and body); nothing is
/// truncated here.
struct PageRecord {
    std::string doc_id;
    std::string bytes;
    std::size_t header_size = 0;
    std::string target_uri;
    std::string source_file;
    std::uint64_t offset = 0;  // record start in the decoded stream
    ResumePoint resume;

    std::string_view block() const noexcept {
        return std::string_view(bytes).substr(header_size);
    }
};

struct CorpusStats {
    std::uint64_t pages = 0;
    std::uint64_t bytes_read = 0;  // decoded bytes consumed
    std::uint64_t malformed_records = 0;
    std::uint64_t skipped_records = 0;  // well-formed non-response records

    CorpusStats& operator+=(const CorpusStats& o) noexcept {
        pages += o.pages;
        bytes_read += o.bytes_read;
        malformed_records += o.malformed_records;
        skipped_records += o.skipped_records;
        return *this;
    }
};

struct WarcReaderOptions {
    /// Records whose content block is larger than this are skipped
    /// (streamed past, counted as malformed) so memory stays bounded.
    std::uint64_t max_record_size = std::uint64_t{256} << 20;
};

/// Streaming WARC reader (versions 0.18 and 1.0), plain or gzip, with
/// per-record or whole-file compression detected automatically.
///
/// Yields response records in file order. Non-response records are
/// skipped, malformed records are skipped and counted, and corruption of
/// the compressed stream itself throws FormatError with the physical
/// offset. Memory use is bounded by the largest record.
class WarcReader {
public:
    explicit WarcReader(const std::filesystem::path& path, WarcReaderOptions options = {});

    /// Reopens a file at a resume point previously reported in a PageRecord.
    WarcReader(const std::filesystem::path& path, ResumePoint start, WarcReaderOptions options = {});

    /// Reads from a caller-owned stream positioned at the start of an archive.
    WarcReader(std::istream& in, std::string source_name, WarcReaderOptions options = {});

    ~WarcReader();
    WarcReader(WarcReader&&) noexcept;
    WarcReader& operator=(WarcReader&&) noexcept;

    std::optional<PageRecord> next();

    const CorpusStats& stats() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Reads every response record of one archive.
std::vector<PageRecord> read_warc(const std::filesystem::path& path, CorpusStats* stats = nullptr);

/// Fetches one record given its id and resume point.
PageRecord fetch_record(const std::filesystem::path& path, ResumePoint where, std::string_view doc_id);

/// Input to the writer: the record's identity and its content block.
struct WarcDocument {
    std::string doc_id;
    std::string target_uri;
    std::string block;  // HTTP header + body
};

enum class WarcCompression { none, per_record, whole_file };

struct WarcWriteOptions {
    WarcCompression compression = WarcCompression::none;
    std::string version = "1.0";
    bool warcinfo = true;  // lead with a warcinfo record
};

/// The verbatim bytes a reader reports for this document when written
/// as a response record with the given WARC version.
std::string render_response_record(const WarcDocument& doc, std::string_view version = "1.0");

/// Writes an archive. Throws InvalidArgument on duplicate doc ids.
void write_warc(std::span<const WarcDocument> docs, std::ostream& out, const WarcWriteOptions& options = {});
void write_warc(std::span<const WarcDocument> docs, const std::filesystem::path& path,
                const WarcWriteOptions& options = {});

}  // namespace wspam
