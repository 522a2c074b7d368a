#include "wspam/manifest.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "wspam/error.hpp"
#include "wspam/io.hpp"

namespace wspam {

namespace {

int hex_value(char c) noexcept {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string unescape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\\') {
            out += text[i];
            continue;
        }
        if (++i == text.size()) throw InvalidArgument("dangling escape in inline ref");
        switch (text[i]) {
            case '\\': out += '\\'; break;
            case 't': out += '\t'; break;
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            case 'x': {
                const int hi = i + 1 < text.size() ? hex_value(text[i + 1]) : -1;
                const int lo = i + 2 < text.size() ? hex_value(text[i + 2]) : -1;
                if (hi < 0 || lo < 0) throw InvalidArgument("bad \\x escape in inline ref");
                out += static_cast<char>(hi * 16 + lo);
                i += 2;
                break;
            }
            default: throw InvalidArgument("unknown escape in inline ref");
        }
    }
    return out;
}

std::filesystem::path resolve_path(std::string_view text, const std::filesystem::path& base_dir) {
    std::filesystem::path p{std::string(text)};
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::string& source_name) {
    std::vector<ManifestEntry> out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = chomp(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 4) throw DataError("expected 4 tab-separated fields", source_name, line_no);
        ManifestEntry e;
        if (!parse_label(fields[0], e.label)) {
            throw DataError("bad label '" + std::string(fields[0]) + "'", source_name, line_no);
        }
        if (!parse_source(fields[1], e.source)) {
            throw DataError("bad source tag '" + std::string(fields[1]) + "'", source_name, line_no);
        }
        if (fields[2].empty()) throw DataError("empty doc id", source_name, line_no);
        if (fields[3].empty()) throw DataError("empty byte reference", source_name, line_no);
        e.doc_id = fields[2];
        e.ref = fields[3];
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_manifest(in, path.string());
}

void write_manifest(std::ostream& out, std::span<const ManifestEntry> entries) {
    for (const auto& e : entries) {
        out << to_string(e.label) << '\t' << to_string(e.source) << '\t' << e.doc_id << '\t' << e.ref << '\n';
    }
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
    AtomicFile file(path);
    write_manifest(file.stream(), entries);
    file.commit();
}

std::string inline_ref(std::string_view bytes) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out = "inline:";
    for (unsigned char c : bytes) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default:
                if (c < 0x20 || c == 0x7f) {
                    out += "\\x";
                    out += kHex[c >> 4];
                    out += kHex[c & 15];
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    return out;
}

std::string warc_ref(const std::filesystem::path& archive, ResumePoint where) {
    return "warc:" + archive.string() + "@" + std::to_string(where.physical) + "," + std::to_string(where.decoded);
}

std::string resolve_ref(std::string_view ref, std::string_view doc_id, const std::filesystem::path& base_dir) {
    if (ref.starts_with("inline:")) return unescape(ref.substr(7));
    if (ref.starts_with("warc:")) {
        const std::string_view rest = ref.substr(5);
        const auto at = rest.rfind('@');
        const auto comma = rest.rfind(',');
        long long physical = 0;
        long long decoded = 0;
        if (at == std::string_view::npos || comma == std::string_view::npos || comma < at ||
            !parse_int(rest.substr(at + 1, comma - at - 1), physical) || !parse_int(rest.substr(comma + 1), decoded) ||
            physical < 0 || decoded < 0) {
            throw InvalidArgument("malformed warc ref '" + std::string(ref) + "'");
        }
        const ResumePoint where{static_cast<std::uint64_t>(physical), static_cast<std::uint64_t>(decoded)};
        return fetch_record(resolve_path(rest.substr(0, at), base_dir), where, doc_id).bytes;
    }
    if (ref.starts_with("file:")) ref.remove_prefix(5);
    return read_file(resolve_path(ref, base_dir));
}

void for_each_example(const std::filesystem::path& manifest, const std::function<void(const TrainingExample&)>& fn) {
    const auto entries = read_manifest(manifest);
    const auto base = manifest.parent_path();
    std::size_t index = 0;
    for (const auto& e : entries) {
        ++index;
        TrainingExample ex;
        ex.doc_id = e.doc_id;
        ex.label = e.label;
        ex.source = e.source;
        try {
            ex.bytes = resolve_ref(e.ref, e.doc_id, base);
        } catch (const InvalidArgument& err) {
            throw DataError(std::string(err.what()) + " (entry " + std::to_string(index) + ")", manifest.string());
        }
        fn(ex);
    }
}

std::vector<TrainingExample> load_examples(const std::filesystem::path& manifest) {
    std::vector<TrainingExample> out;
    for_each_example(manifest, [&](const TrainingExample& ex) { out.push_back(ex); });
    return out;
}

}  // namespace wspam
