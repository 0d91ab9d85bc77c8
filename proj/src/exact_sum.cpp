#include "tradespill/exact_sum.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace tradespill {

namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

void ExactSum::add(double x) noexcept {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    const int biased = static_cast<int>((bits >> 52) & 0x7ff);
    std::uint64_t mantissa = bits & ((std::uint64_t{1} << 52) - 1);
    const bool negative = (bits >> 63) != 0;

    if (biased == 0x7ff) {
        if (mantissa != 0) {
            nan_ = 1;
        } else if (negative) {
            neg_inf_ = 1;
        } else {
            pos_inf_ = 1;
        }
        return;
    }
    if (biased == 0 && mantissa == 0) return;
    if (biased != 0) mantissa |= std::uint64_t{1} << 52;

    // x = mantissa * 2^(position + kMinExponent)
    const int position = (biased == 0 ? 1 : biased) - 1;
    const int index = position / kDigitBits;
    const int shift = position % kDigitBits;
    const u128 wide = static_cast<u128>(mantissa) << shift;
    const auto d0 = static_cast<std::int64_t>(static_cast<std::uint64_t>(wide) & 0xffffffffu);
    const auto d1 = static_cast<std::int64_t>(static_cast<std::uint64_t>(wide >> 32) & 0xffffffffu);
    const auto d2 = static_cast<std::int64_t>(static_cast<std::uint64_t>(wide >> 64));
    if (negative) {
        digits_[index] -= d0;
        digits_[index + 1] -= d1;
        digits_[index + 2] -= d2;
    } else {
        digits_[index] += d0;
        digits_[index + 1] += d1;
        digits_[index + 2] += d2;
    }
    if (++pending_ >= kNormalizeEvery) normalize();
}

void ExactSum::normalize() noexcept {
    for (int i = 0; i + 1 < kDigits; ++i) {
        const std::int64_t carry = digits_[i] >> kDigitBits;  // floor division
        digits_[i] -= carry * (std::int64_t{1} << kDigitBits);
        digits_[i + 1] += carry;
    }
    pending_ = 0;
}

void ExactSum::merge(const ExactSum& other) noexcept {
    ExactSum rhs = other;
    rhs.normalize();
    normalize();
    for (int i = 0; i < kDigits; ++i) digits_[i] += rhs.digits_[i];
    pending_ = 2;
    nan_ |= other.nan_;
    pos_inf_ |= other.pos_inf_;
    neg_inf_ |= other.neg_inf_;
}

bool ExactSum::empty() const noexcept {
    if (nan_ || pos_inf_ || neg_inf_) return false;
    for (auto d : digits_) {
        if (d != 0) return false;
    }
    return true;
}

double ExactSum::value() const noexcept {
    if (nan_ || (pos_inf_ && neg_inf_)) return std::numeric_limits<double>::quiet_NaN();
    if (pos_inf_) return std::numeric_limits<double>::infinity();
    if (neg_inf_) return -std::numeric_limits<double>::infinity();

    ExactSum work = *this;
    work.normalize();
    bool negative = work.digits_[kDigits - 1] < 0;
    if (negative) {
        for (auto& d : work.digits_) d = -d;
        work.normalize();
    }

    int top = kDigits - 1;
    while (top >= 0 && work.digits_[top] == 0) --top;
    if (top < 0) return 0.0;

    // Three leading digits give 65..96 significant bits; anything below is
    // folded into a sticky bit so the single conversion below rounds
    // correctly to nearest.
    auto digit = [&](int i) -> u128 {
        return i >= 0 ? static_cast<u128>(work.digits_[i]) : 0;
    };
    u128 head = (digit(top) << 64) | (digit(top - 1) << 32) | digit(top - 2);
    for (int i = top - 3; i >= 0; --i) {
        if (work.digits_[i] != 0) {
            head |= 1;
            break;
        }
    }
    const double magnitude =
        std::ldexp(static_cast<double>(head), (top - 2) * kDigitBits + kMinExponent);
    return negative ? -magnitude : magnitude;
}

}  // namespace tradespill
