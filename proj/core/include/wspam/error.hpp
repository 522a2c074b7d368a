#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wspam {

/// Base of every exception thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data, located by source name and 1-based line number
/// (line 0 when the problem is not tied to a line).
class DataError : public Error {
public:
    DataError(const std::string& message, std::string source = {}, std::size_t line = 0);

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

/// Binary or container format violation at a byte offset.
class FormatError : public Error {
public:
    FormatError(const std::string& message, std::uint64_t offset);

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// Filesystem failures (open, write, rename).
class IoError : public Error {
public:
    using Error::Error;
};

/// Precondition violations on otherwise well-formed input
/// (empty training set, single-class AUC input, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace wspam
