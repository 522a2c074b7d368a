#pragma once

#include <functional>
#include <string_view>

namespace wspam {

using WarningHandler = std::function<void(std::string_view)>;

/// Reports a non-fatal condition. The default handler writes to stderr.
void warn(std::string_view message);

/// Installs a handler and returns the previous one. Passing an empty
/// function restores the default.
WarningHandler set_warning_handler(WarningHandler handler);

/// Scoped handler replacement, mostly for tests that count warnings.
class ScopedWarningHandler {
public:
    explicit ScopedWarningHandler(WarningHandler handler)
        : previous_(set_warning_handler(std::move(handler))) {}
    ~ScopedWarningHandler() { set_warning_handler(std::move(previous_)); }

    ScopedWarningHandler(const ScopedWarningHandler&) = delete;
    ScopedWarningHandler& operator=(const ScopedWarningHandler&) = delete;

private:
    WarningHandler previous_;
};

}  // namespace wspam
