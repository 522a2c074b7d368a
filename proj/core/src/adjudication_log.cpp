#include "wspam/adjudication_log.hpp"

#include "wspam/io.hpp"

namespace wspam {

const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::spam: return "spam";
        case Verdict::nonspam: return "nonspam";
        case Verdict::unknown: return "unknown";
    }
    return "unknown";
}

std::optional<Verdict> parse_verdict(std::string_view text) noexcept {
    if (text == "spam") return Verdict::spam;
    if (text == "nonspam") return Verdict::nonspam;
    if (text == "unknown") return Verdict::unknown;
    return std::nullopt;
}

bool valid_log_field(std::string_view field) noexcept {
    return !field.empty() && field.find_first_of("\t\r\n") == std::string_view::npos;
}

std::string format_log_line(const AdjudicationRecord& r) {
    std::string out;
    out.reserve(96);
    out += r.timestamp;
    out += '\t';
    out += r.task_id;
    out += '\t';
    out += r.doc_id;
    out += '\t';
    out += r.assessor;
    out += '\t';
    out += to_string(r.label);
    out += '\t';
    out += std::to_string(r.elapsed_ms);
    return out;
}

std::optional<AdjudicationRecord> parse_log_line(std::string_view line) {
    const auto f = split_tabs(chomp(line));
    if (f.size() != 6) return std::nullopt;
    for (std::size_t i = 0; i < 4; ++i) {
        if (f[i].empty()) return std::nullopt;
    }
    const auto verdict = parse_verdict(f[4]);
    long long elapsed = 0;
    if (!verdict || !parse_int(f[5], elapsed) || elapsed < 0) return std::nullopt;
    return AdjudicationRecord{std::string(f[0]), std::string(f[1]), std::string(f[2]),
                              std::string(f[3]), *verdict,           elapsed};
}

}  // namespace wspam
