#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wspam {

using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Reads a whole file into memory.
std::string read_file(const std::filesystem::path& path);

/// Output file that only appears at its final path after commit().
/// Data is written to a sibling temporary which is renamed into place;
/// an uncommitted file is removed on destruction.
class AtomicFile {
public:
    explicit AtomicFile(std::filesystem::path target);
    ~AtomicFile();

    AtomicFile(const AtomicFile&) = delete;
    AtomicFile& operator=(const AtomicFile&) = delete;

    std::ostream& stream() { return out_; }
    void commit();

private:
    std::filesystem::path target_;
    std::filesystem::path temp_;
    std::ofstream out_;
    bool committed_ = false;
};

/// Splits on runs of spaces and tabs, dropping empty fields.
std::vector<std::string_view> split_whitespace(std::string_view line);

/// Splits on single tab characters, keeping empty fields.
std::vector<std::string_view> split_tabs(std::string_view line);

/// Strips a trailing '\r' left by CRLF files.
inline std::string_view chomp(std::string_view line) noexcept {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool parse_int(std::string_view text, long long& out) noexcept;
bool parse_double(std::string_view text, double& out) noexcept;

/// Shortest decimal text that parses back to the same double.
std::string format_double_exact(double value);

/// printf-style "%.<digits>g" rendering.
std::string format_double_sig(double value, int digits);

/// Fixed-point rendering with the given number of decimals.
std::string format_fixed(double value, int decimals);

}  // namespace wspam
