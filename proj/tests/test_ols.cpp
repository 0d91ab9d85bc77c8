#include <cmath>
#include <random>

#include "doctest.h"
#include "tradespill/ols.hpp"
#include "tradespill/oracle.hpp"

using namespace tradespill;

namespace {

std::vector<std::string> names(std::size_t k) {
    std::vector<std::string> out{"constant"};
    for (std::size_t j = 1; j < k; ++j) out.push_back("x" + std::to_string(j));
    return out;
}

struct Problem {
    std::size_t n, k;
    std::vector<double> x, y;
};

Problem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t k) {
    std::normal_distribution<double> z;
    Problem pr{n, k, {}, {}};
    std::vector<double> beta(k);
    for (auto& b : beta) b = z(rng);
    for (std::size_t i = 0; i < n; ++i) {
        double yi = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double v = j == 0 ? 1.0 : 3.0 * z(rng) + static_cast<double>(j);
            pr.x.push_back(v);
            yi += beta[j] * v;
        }
        pr.y.push_back(yi + z(rng));
    }
    return pr;
}

RegressionResult fit(const Problem& pr) {
    OlsAccumulator acc(pr.k);
    for (std::size_t i = 0; i < pr.n; ++i) acc.add(std::span(pr.x).subspan(i * pr.k, pr.k), pr.y[i]);
    return solve_ols(acc, names(pr.k));
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST_SUITE("ols") {
    TEST_CASE("exact line") {
        OlsAccumulator acc(2);
        for (int i = 0; i < 10; ++i) {
            const double x = i;
            acc.add(std::vector<double>{1.0, x}, 2.0 * x + 1.0);
        }
        const auto r = solve_ols(acc, {"constant", "x"});
        CHECK(r.coefficients[0].beta == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.coefficients[1].beta == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(r.r2 == doctest::Approx(1.0));
        CHECK(r.resid_se == doctest::Approx(0.0));
        CHECK(r.n == 10);
        CHECK(r.k == 2);
    }

    TEST_CASE("intercept only gives the mean") {
        OlsAccumulator acc(1);
        for (double v : {3.0, 5.0, 10.0}) acc.add(std::vector<double>{1.0}, v);
        const auto r = solve_ols(acc, {"constant"});
        CHECK(r.coefficients[0].beta == doctest::Approx(6.0));

        std::vector<double> x{1, 1, 1}, y{3, 5, 10};
        const auto b = oracle::brute_force_ols(x, y, 1, {"constant"});
        CHECK(b.coefficients[0].beta == doctest::Approx(6.0));
    }

    TEST_CASE("singular designs name the dependent column") {
        OlsAccumulator acc(4);
        std::mt19937_64 rng(1);
        std::normal_distribution<double> z;
        for (int i = 0; i < 50; ++i) {
            const double a = z(rng), b = z(rng);
            acc.add(std::vector<double>{1.0, a, b, a + 2.0 * b}, z(rng));
        }
        try {
            solve_ols(acc, {"constant", "a", "b", "a_plus_2b"});
            FAIL("expected SingularDesignError");
        } catch (const SingularDesignError& e) {
            REQUIRE(e.columns().size() == 1);
            CHECK(e.columns()[0] == "a_plus_2b");
        }

        OlsAccumulator small(3);
        small.add(std::vector<double>{1, 2, 3}, 1);
        CHECK_THROWS_AS(solve_ols(small, names(3)), DataError);
    }

    TEST_CASE("accumulation is bitwise independent of partition and order") {
        std::mt19937_64 rng(2);
        const auto pr = random_problem(rng, 2000, 6);
        OlsAccumulator whole(6), a(6), b(6), c(6), reversed(6);
        for (std::size_t i = 0; i < pr.n; ++i) {
            const auto row = std::span(pr.x).subspan(i * 6, 6);
            whole.add(row, pr.y[i]);
            (i % 3 == 0 ? a : i % 3 == 1 ? b : c).add(row, pr.y[i]);
        }
        for (std::size_t i = pr.n; i-- > 0;) reversed.add(std::span(pr.x).subspan(i * 6, 6), pr.y[i]);
        c.merge(a);
        c.merge(b);
        CHECK(whole.cross_products() == c.cross_products());
        CHECK(whole.cross_products() == reversed.cross_products());
        CHECK(c.n() == pr.n);
    }

    TEST_CASE("agrees with the dense reference") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            const auto pr = random_problem(rng, 200 + 97 * trial, 16);
            const auto fast = fit(pr);
            const auto ref = oracle::brute_force_ols(pr.x, pr.y, pr.k, names(pr.k));
            for (std::size_t j = 0; j < pr.k; ++j) {
                CHECK(rel(fast.coefficients[j].beta, ref.coefficients[j].beta) <= 1e-8);
                CHECK(rel(fast.coefficients[j].se, ref.coefficients[j].se) <= 1e-8);
            }
            CHECK(rel(fast.adj_r2, ref.adj_r2) <= 1e-8);
            CHECK(rel(fast.resid_se, ref.resid_se) <= 1e-8);
            CHECK(residual_orthogonality(pr.x, pr.y, pr.k,
                                         [&] {
                                             std::vector<double> b;
                                             for (const auto& c : fast.coefficients) b.push_back(c.beta);
                                             return b;
                                         }()) <= 1e-6);
        }
    }

    TEST_CASE("residual accumulator") {
        std::vector<double> beta{1.0, 2.0};
        ResidualAccumulator acc(beta), part(beta);
        acc.add(std::vector<double>{1.0, 1.0}, 3.5);
        part.add(std::vector<double>{1.0, 2.0}, 4.5);
        acc.merge(part);
        CHECK(acc.rss() == doctest::Approx(0.5));
    }

    TEST_CASE("t p-values") {
        CHECK(t_two_sided_p(0.0, 10) == doctest::Approx(1.0));
        CHECK(t_two_sided_p(2.228138852, 10) == doctest::Approx(0.05).epsilon(1e-6));
        CHECK(t_two_sided_p(-2.228138852, 10) == doctest::Approx(0.05).epsilon(1e-6));
    }

    TEST_CASE("dense reference rejects duplicate columns") {
        std::vector<double> x, y;
        for (int i = 0; i < 20; ++i) {
            x.insert(x.end(), {1.0, double(i), double(i)});
            y.push_back(i * 0.5);
        }
        CHECK_THROWS_AS(oracle::brute_force_ols(x, y, 3, {"constant", "a", "b"}), DataError);
    }
}
