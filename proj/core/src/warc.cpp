#include "wspam/warc.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "gzip.hpp"
#include "wspam/error.hpp"
#include "wspam/io.hpp"

namespace wspam {

namespace {

constexpr std::size_t kMaxLine = 1 << 16;
constexpr std::size_t kMaxHeader = 1 << 20;

bool is_blank(std::string_view line) noexcept {
    return line == "\n" || line == "\r\n";
}

bool iequals(std::string_view a, std::string_view b) noexcept {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
        s.remove_suffix(1);
    }
    return s;
}

struct HeaderField {
    std::string name;
    std::string value;
};

const std::string* find_field(const std::vector<HeaderField>& fields, std::string_view name) {
    for (const auto& f : fields) {
        if (iequals(f.name, name)) return &f.value;
    }
    return nullptr;
}

std::unique_ptr<detail::Decoder> make_decoder(std::istream& in, ResumePoint base) {
    char magic[2] = {0, 0};
    in.read(magic, 2);
    std::string prefix(magic, static_cast<std::size_t>(in.gcount()));
    if (prefix.size() == 2 && static_cast<unsigned char>(prefix[0]) == 0x1f &&
        static_cast<unsigned char>(prefix[1]) == 0x8b) {
        return std::make_unique<detail::GzipDecoder>(in, std::move(prefix), base);
    }
    return std::make_unique<detail::PlainDecoder>(in, std::move(prefix), base);
}

}  // namespace

struct WarcReader::Impl {
    std::unique_ptr<std::ifstream> owned;
    std::istream* in = nullptr;
    std::string source;
    WarcReaderOptions options;
    std::unique_ptr<detail::Decoder> decoder;
    CorpusStats stats;

    std::vector<char> buf = std::vector<char>(1 << 16);
    std::size_t pos = 0;
    std::size_t end = 0;
    std::uint64_t consumed = 0;  // decoded offset of buf[pos]
    std::uint64_t start_offset = 0;
    bool eof = false;
    bool recovering = false;  // junk already counted against a malformed record

    Impl(std::istream& stream, std::string name, ResumePoint base, WarcReaderOptions opts)
        : in(&stream), source(std::move(name)), options(opts), consumed(base.decoded), start_offset(base.decoded) {
        decoder = make_decoder(*in, base);
    }

    bool fill() {
        if (eof) return false;
        if (pos > 0) {
            std::memmove(buf.data(), buf.data() + pos, end - pos);
            end -= pos;
            pos = 0;
        }
        if (end == buf.size()) buf.resize(buf.size() * 2);
        const std::size_t got = decoder->read(buf.data() + end, buf.size() - end);
        if (got == 0) {
            eof = true;
            return false;
        }
        end += got;
        return true;
    }

    // Appends one line including its terminator. Lines longer than kMaxLine
    // are consumed but truncated. Returns false at end of input with nothing read.
    bool read_line(std::string& line) {
        line.clear();
        bool any = false;
        for (;;) {
            if (pos == end && !fill()) return any;
            any = true;
            const char* start = buf.data() + pos;
            const char* nl = static_cast<const char*>(std::memchr(start, '\n', end - pos));
            const std::size_t take = nl ? static_cast<std::size_t>(nl - start) + 1 : end - pos;
            if (line.size() < kMaxLine) line.append(start, std::min(take, kMaxLine - line.size()));
            pos += take;
            consumed += take;
            if (nl) return true;
        }
    }

    // Reads n bytes into out (or discards them when out is null).
    std::uint64_t read_exact(std::uint64_t n, std::string* out) {
        std::uint64_t done = 0;
        while (done < n) {
            if (pos == end && !fill()) break;
            const std::size_t take = static_cast<std::size_t>(std::min<std::uint64_t>(n - done, end - pos));
            if (out) out->append(buf.data() + pos, take);
            pos += take;
            consumed += take;
            done += take;
        }
        return done;
    }

    std::optional<PageRecord> finish() {
        stats.bytes_read = consumed - start_offset;
        return std::nullopt;
    }

    std::optional<PageRecord> next() {
        std::string line;
        for (;;) {
            // Locate the next version line, skipping blank separators and junk.
            std::uint64_t record_start = 0;
            bool junk = false;
            for (;;) {
                record_start = consumed;
                if (!read_line(line)) {
                    if (junk && !recovering) ++stats.malformed_records;
                    return finish();
                }
                if (is_blank(line)) continue;
                if (line.starts_with("WARC/")) break;
                junk = true;
            }
            if (junk && !recovering) ++stats.malformed_records;
            recovering = false;
            decoder->forget_before(record_start);

            std::string header = line;
            std::vector<HeaderField> fields;
            bool complete = false;
            while (header.size() <= kMaxHeader) {
                if (!read_line(line)) break;
                header += line;
                if (is_blank(line)) {
                    complete = true;
                    break;
                }
                if ((line[0] == ' ' || line[0] == '\t') && !fields.empty()) {
                    fields.back().value += ' ';
                    fields.back().value += trim(line);
                    continue;
                }
                const auto colon = line.find(':');
                if (colon == std::string::npos) continue;
                fields.push_back({std::string(trim(std::string_view(line).substr(0, colon))),
                                  std::string(trim(std::string_view(line).substr(colon + 1)))});
            }
            if (!complete) {
                ++stats.malformed_records;
                recovering = true;
                if (eof) return finish();
                continue;
            }

            long long length = -1;
            const std::string* length_field = find_field(fields, "Content-Length");
            if (!length_field || !parse_int(*length_field, length) || length < 0) {
                ++stats.malformed_records;
                recovering = true;
                continue;
            }

            const auto content_length = static_cast<std::uint64_t>(length);
            if (content_length > options.max_record_size) {
                const std::uint64_t skipped = read_exact(content_length, nullptr);
                ++stats.malformed_records;
                if (skipped < content_length) return finish();
                continue;
            }

            const std::string* type = find_field(fields, "WARC-Type");
            const bool response = type && iequals(*type, "response");

            PageRecord rec;
            rec.bytes = std::move(header);
            rec.header_size = rec.bytes.size();
            rec.bytes.reserve(rec.header_size + content_length);
            const std::uint64_t got = read_exact(content_length, response ? &rec.bytes : nullptr);
            if (got < content_length) {
                ++stats.malformed_records;
                return finish();
            }
            stats.bytes_read = consumed - start_offset;
            if (!response) {
                ++stats.skipped_records;
                continue;
            }

            const std::string* trec_id = find_field(fields, "WARC-TREC-ID");
            if (trec_id && !trec_id->empty()) {
                rec.doc_id = *trec_id;
            } else {
                rec.doc_id = std::filesystem::path(source).filename().string() + ":" + std::to_string(record_start);
            }
            if (const std::string* uri = find_field(fields, "WARC-Target-URI")) rec.target_uri = *uri;
            rec.source_file = source;
            rec.offset = record_start;
            rec.resume = decoder->resume_for(record_start);
            ++stats.pages;
            return rec;
        }
    }
};

WarcReader::WarcReader(const std::filesystem::path& path, WarcReaderOptions options)
    : WarcReader(path, ResumePoint{}, options) {}

WarcReader::WarcReader(const std::filesystem::path& path, ResumePoint start, WarcReaderOptions options) {
    auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file) throw IoError("cannot open " + path.string());
    if (start.physical != 0) {
        file->seekg(static_cast<std::streamoff>(start.physical));
        if (!*file) throw IoError("cannot seek " + path.string());
    }
    impl_ = std::make_unique<Impl>(*file, path.string(), start, options);
    impl_->owned = std::move(file);
}

WarcReader::WarcReader(std::istream& in, std::string source_name, WarcReaderOptions options)
    : impl_(std::make_unique<Impl>(in, std::move(source_name), ResumePoint{}, options)) {}

WarcReader::~WarcReader() = default;
WarcReader::WarcReader(WarcReader&&) noexcept = default;
WarcReader& WarcReader::operator=(WarcReader&&) noexcept = default;

std::optional<PageRecord> WarcReader::next() { return impl_->next(); }

const CorpusStats& WarcReader::stats() const noexcept { return impl_->stats; }

std::vector<PageRecord> read_warc(const std::filesystem::path& path, CorpusStats* stats) {
    WarcReader reader(path);
    std::vector<PageRecord> out;
    while (auto rec = reader.next()) out.push_back(std::move(*rec));
    if (stats) *stats = reader.stats();
    return out;
}

PageRecord fetch_record(const std::filesystem::path& path, ResumePoint where, std::string_view doc_id) {
    WarcReader reader(path, where);
    while (auto rec = reader.next()) {
        if (rec->doc_id == doc_id) return std::move(*rec);
    }
    throw DataError("record " + std::string(doc_id) + " not found at offset " + std::to_string(where.physical),
                    path.string());
}

std::string render_response_record(const WarcDocument& doc, std::string_view version) {
    std::string out;
    out.reserve(doc.block.size() + 256);
    out += "WARC/";
    out += version;
    out += "\r\nWARC-Type: response\r\n";
    if (!doc.target_uri.empty()) out += "WARC-Target-URI: " + doc.target_uri + "\r\n";
    out += "WARC-TREC-ID: " + doc.doc_id + "\r\n";
    out += "WARC-Date: 2009-01-01T00:00:00Z\r\n";
    out += "WARC-Record-ID: <urn:wspam:" + doc.doc_id + ">\r\n";
    out += "Content-Type: application/http; msgtype=response\r\n";
    out += "Content-Length: " + std::to_string(doc.block.size()) + "\r\n\r\n";
    out += doc.block;
    return out;
}

namespace {

std::string render_warcinfo(std::string_view version) {
    const std::string_view body = "software: wspam\r\nformat: WARC File Format\r\n";
    std::string out = "WARC/";
    out += version;
    out += "\r\nWARC-Type: warcinfo\r\nWARC-Date: 2009-01-01T00:00:00Z\r\n";
    out += "Content-Type: application/warc-fields\r\nContent-Length: " + std::to_string(body.size()) + "\r\n\r\n";
    out += body;
    return out;
}

void check_documents(std::span<const WarcDocument> docs) {
    std::unordered_set<std::string_view> seen;
    for (const auto& d : docs) {
        if (d.doc_id.empty() || d.doc_id.find_first_of("\r\n") != std::string::npos) {
            throw InvalidArgument("invalid doc id '" + d.doc_id + "'");
        }
        if (d.target_uri.find_first_of("\r\n") != std::string::npos) {
            throw InvalidArgument("invalid target URI for " + d.doc_id);
        }
        if (!seen.insert(d.doc_id).second) throw InvalidArgument("duplicate doc id " + d.doc_id);
    }
}

}  // namespace

void write_warc(std::span<const WarcDocument> docs, std::ostream& out, const WarcWriteOptions& options) {
    check_documents(docs);
    constexpr std::string_view separator = "\r\n\r\n";
    if (options.compression == WarcCompression::none) {
        if (options.warcinfo) out << render_warcinfo(options.version) << separator;
        for (const auto& d : docs) out << render_response_record(d, options.version) << separator;
    } else {
        detail::GzipEncoder gz(out);
        const bool per_record = options.compression == WarcCompression::per_record;
        auto emit = [&](const std::string& record) {
            gz.write(record);
            gz.write(separator);
            if (per_record) gz.finish_member();
        };
        if (options.warcinfo) emit(render_warcinfo(options.version));
        for (const auto& d : docs) emit(render_response_record(d, options.version));
        gz.finish_member();
    }
    if (!out) throw IoError("WARC write failed");
}

void write_warc(std::span<const WarcDocument> docs, const std::filesystem::path& path,
                const WarcWriteOptions& options) {
    AtomicFile file(path);
    write_warc(docs, file.stream(), options);
    file.commit();
}

}  // namespace wspam
