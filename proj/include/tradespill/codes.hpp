#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tradespill {

/// Three-letter ISO country code, stored inline.
class CountryCode {
public:
    CountryCode() = default;

    /// Accepts exactly three ASCII uppercase letters.
    static std::optional<CountryCode> parse(std::string_view text);
    /// Like parse() but throws DataError on invalid input.
    static CountryCode from(std::string_view text);

    std::string str() const { return {chars_.data(), chars_.size()}; }
    std::string_view view() const { return {chars_.data(), chars_.size()}; }

    auto operator<=>(const CountryCode&) const = default;
    bool operator==(const CountryCode&) const = default;

private:
    std::array<char, 3> chars_{'?', '?', '?'};
};

/// Four-digit HS product code ("0101" .. "9999"), stored inline.
class ProductCode {
public:
    ProductCode() = default;

    static std::optional<ProductCode> parse(std::string_view text);
    static ProductCode from(std::string_view text);

    std::string str() const { return {chars_.data(), chars_.size()}; }
    std::string_view view() const { return {chars_.data(), chars_.size()}; }

    auto operator<=>(const ProductCode&) const = default;
    bool operator==(const ProductCode&) const = default;

private:
    std::array<char, 4> chars_{'0', '0', '0', '0'};
};

/// Inclusive range of calendar years.
struct YearRange {
    int first = 0;
    int last = 0;

    bool contains(int year) const { return year >= first && year <= last; }
    int size() const { return last >= first ? last - first + 1 : 0; }
    bool empty() const { return last < first; }

    /// Parses "2000-2006" or a single year "2008".
    static YearRange parse(std::string_view text);
    std::string str() const;

    auto operator<=>(const YearRange&) const = default;
    bool operator==(const YearRange&) const = default;
};

}  // namespace tradespill
