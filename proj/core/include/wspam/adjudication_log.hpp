#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace wspam {

enum class Verdict : std::uint8_t { spam, nonspam, unknown };

const char* to_string(Verdict v) noexcept;
std::optional<Verdict> parse_verdict(std::string_view text) noexcept;

/// One persisted adjudication. The log holds one per line,
/// tab-separated and timestamp first:
///   timestamp  task_id  doc_id  assessor  label  elapsed_ms
struct AdjudicationRecord {
    std::string timestamp;  // ISO 8601 UTC
    std::string task_id;
    std::string doc_id;
    std::string assessor;
    Verdict label = Verdict::unknown;
    std::int64_t elapsed_ms = 0;

    friend bool operator==(const AdjudicationRecord&, const AdjudicationRecord&) = default;
};

std::string format_log_line(const AdjudicationRecord& r);

/// Parses one log line (without the newline); nullopt if malformed.
std::optional<AdjudicationRecord> parse_log_line(std::string_view line);

/// Assessor names and ids may not contain tabs or line breaks.
bool valid_log_field(std::string_view field) noexcept;

}  // namespace wspam
