#include "wspam/error.hpp"

#include <iostream>
#include <mutex>
#include <utility>

#include "wspam/diagnostics.hpp"

namespace wspam {

namespace {

std::string locate(const std::string& message, const std::string& source, std::size_t line) {
    if (source.empty() && line == 0) return message;
    std::string out = source.empty() ? std::string("<input>") : source;
    if (line != 0) out += ":" + std::to_string(line);
    return out + ": " + message;
}

std::mutex& handler_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& handler_slot() {
    static WarningHandler h;
    return h;
}

}  // namespace

DataError::DataError(const std::string& message, std::string source, std::size_t line)
    : Error(locate(message, source, line)), source_(std::move(source)), line_(line) {}

FormatError::FormatError(const std::string& message, std::uint64_t offset)
    : Error(message + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

void warn(std::string_view message) {
    WarningHandler h;
    {
        std::lock_guard lock(handler_mutex());
        h = handler_slot();
    }
    if (h) {
        h(message);
    } else {
        std::cerr << "warning: " << message << '\n';
    }
}

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(handler_mutex());
    return std::exchange(handler_slot(), std::move(handler));
}

}  // namespace wspam
