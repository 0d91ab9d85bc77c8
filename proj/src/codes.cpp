#include "tradespill/codes.hpp"

#include <charconv>

#include "tradespill/error.hpp"

namespace tradespill {

std::optional<CountryCode> CountryCode::parse(std::string_view text) {
    if (text.size() != 3) return std::nullopt;
    CountryCode code;
    for (std::size_t i = 0; i < 3; ++i) {
        const char c = text[i];
        if (c < 'A' || c > 'Z') return std::nullopt;
        code.chars_[i] = c;
    }
    return code;
}

CountryCode CountryCode::from(std::string_view text) {
    auto code = parse(text);
    if (!code) throw DataError("invalid country code '" + std::string(text) + "'");
    return *code;
}

std::optional<ProductCode> ProductCode::parse(std::string_view text) {
    if (text.size() != 4) return std::nullopt;
    ProductCode code;
    for (std::size_t i = 0; i < 4; ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') return std::nullopt;
        code.chars_[i] = c;
    }
    return code;
}

ProductCode ProductCode::from(std::string_view text) {
    auto code = parse(text);
    if (!code) throw DataError("invalid product code '" + std::string(text) + "'");
    return *code;
}

namespace {

int parse_year(std::string_view text, std::string_view whole) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw DataError("invalid year range '" + std::string(whole) + "'");
    }
    return value;
}

}  // namespace

YearRange YearRange::parse(std::string_view text) {
    const auto dash = text.find('-');
    YearRange range;
    if (dash == std::string_view::npos) {
        range.first = range.last = parse_year(text, text);
    } else {
        range.first = parse_year(text.substr(0, dash), text);
        range.last = parse_year(text.substr(dash + 1), text);
    }
    if (range.empty()) throw DataError("empty year range '" + std::string(text) + "'");
    return range;
}

std::string YearRange::str() const {
    return std::to_string(first) + "-" + std::to_string(last);
}

}  // namespace tradespill
