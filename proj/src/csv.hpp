#pragma once

// Minimal CSV plumbing shared by the readers. Fields are comma separated and
// unquoted; all inputs handled here are numeric or short codes.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "tradespill/error.hpp"

namespace tradespill::csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline void split(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

/// Line-numbered reader. Skips blank lines; strips a UTF-8 BOM on line 1.
class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    bool next(std::vector<std::string_view>& fields) {
        while (std::getline(in_, buffer_)) {
            ++line_;
            std::string_view view(buffer_);
            if (line_ == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
            if (trim(view).empty()) continue;
            current_ = view;
            split(view, fields);
            return true;
        }
        return false;
    }

    std::size_t line() const { return line_; }
    const std::string& source() const { return source_; }
    std::string_view raw() const { return current_; }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }

    double number(std::string_view field, const char* name) const {
        double v = 0.0;
        const auto* end = field.data() + field.size();
        auto [ptr, ec] = std::from_chars(field.data(), end, v);
        if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v)) {
            fail(std::string("invalid ") + name + " '" + std::string(field) + "'");
        }
        return v;
    }

    int integer(std::string_view field, const char* name) const {
        int v = 0;
        const auto* end = field.data() + field.size();
        auto [ptr, ec] = std::from_chars(field.data(), end, v);
        if (field.empty() || ec != std::errc{} || ptr != end) {
            fail(std::string("invalid ") + name + " '" + std::string(field) + "'");
        }
        return v;
    }

    bool flag(std::string_view field, const char* name) const {
        if (field == "0") return false;
        if (field == "1") return true;
        fail(std::string("invalid ") + name + " '" + std::string(field) + "' (expected 0 or 1)");
    }

private:
    std::istream& in_;
    std::string source_;
    std::string buffer_;
    std::string_view current_;
    std::size_t line_ = 0;
};

/// Maps required column names to their positions in a header row.
inline std::vector<std::size_t> locate_columns(const Reader& reader,
                                               const std::vector<std::string_view>& header,
                                               const std::vector<std::string_view>& wanted) {
    std::vector<std::size_t> index;
    index.reserve(wanted.size());
    for (auto name : wanted) {
        std::size_t found = header.size();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                found = i;
                break;
            }
        }
        if (found == header.size()) reader.fail("header is missing column '" + std::string(name) + "'");
        index.push_back(found);
    }
    return index;
}

/// Shortest text that parses back to exactly `v`.
inline std::string exact(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    std::string s(buf);
    // no "-0.000"
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

inline std::string significant(double v, int digits) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

}  // namespace tradespill::csv
