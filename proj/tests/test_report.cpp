#include <sstream>

#include "doctest.h"
#include "tradespill/report.hpp"

using namespace tradespill;

namespace {

RegressionResult sample() {
    RegressionResult r;
    r.split_key = "2000-2006";
    r.n = 1234;
    r.k = 3;
    r.adj_r2 = 0.5123456;
    r.resid_se = 1.25;
    r.coefficients = {{"constant", 2.0, 0.1, 20.0, 0.0}, {"omega", 0.2091234567, 0.003, 69.7, 1e-40},
                      {"border", -0.01, 0.02, -0.5, 0.6}};
    return r;
}

}  // namespace

TEST_SUITE("report") {
    TEST_CASE("stars") {
        CHECK(significance_stars(0.001) == "***");
        CHECK(significance_stars(0.03) == "**");
        CHECK(significance_stars(0.07) == "*");
        CHECK(significance_stars(0.1) == "");
    }

    TEST_CASE("json round trip at six decimals") {
        const std::vector<RegressionResult> in{sample()};
        std::ostringstream out;
        write_regressions_json(out, in);
        CHECK(out.str().find("0.209123") != std::string::npos);
        std::istringstream back(out.str());
        const auto read = read_regressions_json(back, "results.json");
        REQUIRE(read.size() == 1);
        CHECK(read[0].split_key == "2000-2006");
        CHECK(read[0].n == 1234);
        REQUIRE(read[0].coefficients.size() == 3);
        CHECK(read[0].coefficients[1].beta == 0.209123);

        std::ostringstream again;
        write_regressions_json(again, read);
        CHECK(again.str() == out.str());

        std::istringstream bad("{not json");
        CHECK_THROWS_AS(read_regressions_json(bad, "bad.json"), DataError);
    }

    TEST_CASE("regression table puts the constant last") {
        const std::vector<RegressionResult> in{sample()};
        std::ostringstream out;
        write_regression_table_csv(out, in);
        const auto s = out.str();
        CHECK(s.rfind("variable,2000-2006\n", 0) == 0);
        CHECK(s.find("omega,0.209***") != std::string::npos);
        CHECK(s.find("\n,(0.003)\n") != std::string::npos);
        CHECK(s.find("border") < s.find("constant"));
        CHECK(s.find("observations,1234") != std::string::npos);
    }

    TEST_CASE("trend csv") {
        const std::vector<TrendRow> rows{{"omega", {0.1, 0.01, 0.002, 5.0, 0.015, true}}};
        std::ostringstream out;
        write_trend_csv(out, rows);
        CHECK(out.str() == "variable,slope,se,p,significant\nomega,0.010000,0.002000,0.015000,1\n");
    }
}
