#include <cmath>
#include <vector>

#include "doctest.h"
#include "tradespill/gravity.hpp"

using namespace tradespill;

namespace {

std::vector<TrendEstimate> series(std::vector<double> beta, std::vector<double> se) {
    std::vector<TrendEstimate> out;
    for (std::size_t i = 0; i < beta.size(); ++i) out.push_back({beta[i], se[i]});
    return out;
}

}  // namespace

TEST_SUITE("trend") {
    TEST_CASE("product relatedness rises with sophistication") {
        const auto r = trend_test(series({0.183, 0.164, 0.204, 0.203, 0.229}, {0.003, 0.002, 0.001, 0.003, 0.003}));
        CHECK(r.slope > 0.0);
        CHECK(r.p < 0.1);
        CHECK(r.significant);
    }

    TEST_CASE("importer relatedness shows no trend") {
        const auto r = trend_test(series({0.152, 0.144, 0.131, 0.154, 0.128}, {0.003, 0.002, 0.002, 0.003, 0.003}));
        CHECK(r.p >= 0.1);
        CHECK_FALSE(r.significant);
    }

    TEST_CASE("equal coefficients") {
        const auto r = trend_test(series({0.3, 0.3, 0.3, 0.3, 0.3}, {0.01, 0.01, 0.01, 0.01, 0.01}));
        CHECK(r.slope == 0.0);
        CHECK(r.p == 1.0);
        CHECK_FALSE(r.significant);
        CHECK(r.intercept == doctest::Approx(0.3));
    }

    TEST_CASE("linear coefficients with tiny errors") {
        const auto r = trend_test(series({0.1, 0.2, 0.3, 0.4, 0.5}, {1e-6, 1e-6, 1e-6, 1e-6, 1e-6}));
        CHECK(r.slope == doctest::Approx(0.1));
        CHECK(r.p < 1e-6);
        CHECK(r.significant);

        const auto noisy = trend_test(series({0.1, 0.201, 0.299, 0.4, 0.501}, {1e-4, 1e-4, 1e-4, 1e-4, 1e-4}));
        CHECK(noisy.p < 1e-4);
    }

    TEST_CASE("closed-form weighted fit") {
        const std::vector<double> b{0.5, 0.2, 0.9, 0.4, 1.1}, se{0.1, 0.2, 0.1, 0.3, 0.2};
        const auto r = trend_test(series(b, se));
        double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int i = 0; i < 5; ++i) {
            const double w = 1 / (se[i] * se[i]), x = i + 1;
            sw += w;
            sx += w * x;
            sy += w * b[i];
            sxx += w * x * x;
            sxy += w * x * b[i];
        }
        const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
        const double icpt = (sy - slope * sx) / sw;
        double ssr = 0;
        for (int i = 0; i < 5; ++i) {
            const double e = b[i] - icpt - slope * (i + 1);
            ssr += e * e / (se[i] * se[i]);
        }
        const double var = ssr / 3.0 / (sxx - sx * sx / sw);
        CHECK(r.slope == doctest::Approx(slope).epsilon(1e-12));
        CHECK(r.intercept == doctest::Approx(icpt).epsilon(1e-12));
        CHECK(r.se == doctest::Approx(std::sqrt(var)).epsilon(1e-10));
        CHECK(r.p == doctest::Approx(t_two_sided_p(slope / std::sqrt(var), 3)).epsilon(1e-8));
    }

    TEST_CASE("shifting every coefficient leaves slope and p unchanged") {
        const std::vector<double> b{0.5, 0.2, 0.9, 0.4, 1.1}, se{0.1, 0.2, 0.1, 0.3, 0.2};
        std::vector<double> shifted;
        for (double v : b) shifted.push_back(v + 3.0);
        const auto a = trend_test(series(b, se)), c = trend_test(series(shifted, se));
        CHECK(a.slope == doctest::Approx(c.slope).epsilon(1e-12));
        CHECK(a.p == doctest::Approx(c.p).epsilon(1e-10));
    }

    TEST_CASE("alpha") {
        const auto s = series({0.183, 0.164, 0.204, 0.203, 0.229}, {0.003, 0.002, 0.001, 0.003, 0.003});
        CHECK_FALSE(trend_test(s, 0.05).significant);
    }

    TEST_CASE("invalid input") {
        CHECK_THROWS_AS(trend_test(series({1, 2, 3, 4}, {1, 1, 1, 1})), std::invalid_argument);
        CHECK_THROWS_AS(trend_test(series({1, 2, 3, 4, 5}, {1, 1, 0, 1, 1})), std::invalid_argument);
        CHECK_THROWS_AS(trend_test(series({1, 2, 3, 4, 5}, {1, 1, -1, 1, 1})), std::invalid_argument);
    }

    TEST_CASE("coefficient trends over five results") {
        std::vector<RegressionResult> results(5);
        const auto names = coefficient_names();
        for (std::size_t r = 0; r < 5; ++r) {
            results[r].split_key = "k" + std::to_string(r);
            for (std::size_t j = 0; j < names.size(); ++j) {
                results[r].coefficients.push_back({names[j], 0.1 * double(j) + (j == 1 ? 0.05 * double(r) : 0.0), 0.01, 0, 0});
            }
        }
        const auto rows = coefficient_trends(results);
        REQUIRE(rows.size() == kRegressorCount);
        CHECK(rows[0].variable == "omega");
        CHECK(rows[0].trend.significant);
        CHECK_FALSE(rows[1].trend.significant);
        results.pop_back();
        CHECK_THROWS_AS(coefficient_trends(results), std::invalid_argument);
    }
}
