#pragma once

#include <array>
#include <cstdint>

namespace tradespill {

/// Exact accumulator for sums of doubles.
///
/// Every finite double is an integer multiple of 2^-1074, so the running sum
/// is held as a wide fixed-point integer split into 32-bit digits stored in
/// int64 slots (the spare high bits absorb carries between normalisations).
/// The sum is therefore exact, and value() depends only on the multiset of
/// added terms: any order or partitioning of the inputs, merged in any order,
/// yields the same bits. value() rounds to nearest.
class ExactSum {
public:
    void add(double x) noexcept;
    void merge(const ExactSum& other) noexcept;
    double value() const noexcept;
    bool empty() const noexcept;

private:
    static constexpr int kDigitBits = 32;
    static constexpr int kMinExponent = -1074;
    // 2098 bits of double range + 53 mantissa + headroom for large totals.
    static constexpr int kDigits = 72;
    static constexpr std::uint32_t kNormalizeEvery = 1u << 29;

    void normalize() noexcept;

    std::array<std::int64_t, kDigits> digits_{};
    std::uint32_t pending_ = 0;
    // non-finite inputs are tracked outside the fixed-point range
    std::uint8_t nan_ = 0;
    std::uint8_t pos_inf_ = 0;
    std::uint8_t neg_inf_ = 0;
};

}  // namespace tradespill
