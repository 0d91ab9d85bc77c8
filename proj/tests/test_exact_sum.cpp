#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "tradespill/exact_sum.hpp"

using tradespill::ExactSum;

namespace {

double sum_of(const std::vector<double>& v) {
    ExactSum s;
    for (double x : v) s.add(x);
    return s.value();
}

}  // namespace

TEST_SUITE("exact_sum") {
    TEST_CASE("empty sum is zero") {
        ExactSum s;
        CHECK(s.empty());
        CHECK(s.value() == 0.0);
    }

    TEST_CASE("sum is correctly rounded") {
        CHECK(sum_of(std::vector<double>(10, 0.1)) == 1.0);
        CHECK(sum_of({1e100, 1.0, -1e100}) == 1.0);
        CHECK(sum_of({1.0, 0x1.0p-53, 0x1.0p-106}) == std::nextafter(1.0, 2.0));
        CHECK(sum_of({1.0, 0x1.0p-53}) == 1.0);  // tie, round to even
        CHECK(sum_of({std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::denorm_min()}) ==
              2 * std::numeric_limits<double>::denorm_min());
        CHECK(sum_of({-3.5, 1.25}) == -2.25);
    }

    TEST_CASE("result is independent of order and partitioning") {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> scale(0.0, 20.0);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> v(5000);
        for (auto& x : v) x = u(rng) * std::exp2(std::round(scale(rng)));
        const double reference = sum_of(v);
        for (int round = 0; round < 5; ++round) {
            std::shuffle(v.begin(), v.end(), rng);
            CHECK(std::bit_cast<std::uint64_t>(sum_of(v)) == std::bit_cast<std::uint64_t>(reference));
            ExactSum a, b, c;
            for (std::size_t i = 0; i < v.size(); ++i) (i % 3 == 0 ? a : i % 3 == 1 ? b : c).add(v[i]);
            c.merge(a);
            c.merge(b);
            CHECK(std::bit_cast<std::uint64_t>(c.value()) == std::bit_cast<std::uint64_t>(reference));
        }
    }

    TEST_CASE("non-finite inputs propagate") {
        const double inf = std::numeric_limits<double>::infinity();
        CHECK(sum_of({1.0, inf}) == inf);
        CHECK(sum_of({1.0, -inf}) == -inf);
        CHECK(std::isnan(sum_of({inf, -inf})));
        CHECK(std::isnan(sum_of({std::nan(""), 1.0})));
    }

    TEST_CASE("large totals round to infinity only when they overflow") {
        const double big = std::numeric_limits<double>::max();
        CHECK(sum_of({big, big, -big}) == big);
        CHECK(sum_of({big, big}) == std::numeric_limits<double>::infinity());
    }
}
