#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tradespill {

/// Raised for problems in the input data: missing keys, invalid values,
/// inconsistent tables. The CLI maps these to exit code 1.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A malformed line in one of the CSV inputs.
class ParseError : public DataError {
public:
    ParseError(std::string source, std::size_t line, const std::string& what)
        : DataError(source + ":" + std::to_string(line) + ": " + what),
          source_(std::move(source)),
          line_(line) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

}  // namespace tradespill
