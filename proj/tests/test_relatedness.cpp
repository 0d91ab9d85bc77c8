#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "tradespill/error.hpp"
#include "tradespill/oracle.hpp"
#include "tradespill/relatedness.hpp"

using namespace tradespill;
using fixtures::c;
using fixtures::p;

namespace {

ProximityMatrix proximity(std::vector<std::string> codes, std::vector<double> phi) {
    std::vector<ProductCode> products;
    for (const auto& s : codes) products.push_back(ProductCode::from(s));
    return ProximityMatrix(products, phi);
}

const RelatednessRow& row(const RelatednessTable& table, std::uint32_t o, std::uint32_t q, std::uint32_t d) {
    for (const auto& r : table.rows) {
        if (r.origin == o && r.product == q && r.destination == d) return r;
    }
    throw std::runtime_error("row not found");
}

// Equal pairwise distances among n countries.
DistanceWeights uniform_weights(std::size_t n) {
    std::vector<double> dist(n * n, 1000.0);
    return DistanceWeights::from_distances(n, dist);
}

bool close(double a, double b, double rel) {
    if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_SUITE("relatedness") {
    TEST_CASE("distance weights") {
        // 3 countries with distances 1-2: 100, 1-3: 200, 2-3: 300
        std::vector<double> d{0, 100, 200, 100, 0, 300, 200, 300, 0};
        const auto w = DistanceWeights::from_distances(3, d);
        CHECK(w(0, 0) == 0.0);
        CHECK(w(0, 1) == doctest::Approx((1.0 / 100) / (1.0 / 100 + 1.0 / 200)));
        for (std::size_t i = 0; i < 3; ++i) {
            double s = 0.0;
            for (double v : w.row(i)) s += v;
            CHECK(std::abs(s - 1.0) <= 1e-12);
        }
        std::vector<double> zero{0, 0, 0, 0};
        CHECK_THROWS_AS(DistanceWeights::from_distances(2, zero), DataError);
    }

    TEST_CASE("weights from dyads name the missing pair") {
        DyadTable dyads;
        dyads.insert(CountryCode::from("AAA"), CountryCode::from("BBB"), {100, false, false, false, 0});
        std::vector<CountryCode> cs{CountryCode::from("AAA"), CountryCode::from("BBB"), CountryCode::from("CCC")};
        try {
            DistanceWeights::from_dyads(cs, dyads);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("CCC") != std::string::npos);
        }
    }

    TEST_CASE("product relatedness examples") {
        SUBCASE("only product in the basket") {
            const auto t = fixtures::tensor({{2000, "AAA", "0101", "BBB", 10}, {2000, "BBB", "0102", "AAA", 10}});
            const auto phi = proximity({"0101", "0102"}, {0, 0.5, 0.5, 0});
            const auto omega = product_relatedness(t, phi, 2000);
            CHECK(omega[0] == 0.0);
        }
        SUBCASE("single related product is the whole basket") {
            const auto t = fixtures::tensor({{2000, "AAA", "0101", "BBB", 1e-9}, {2000, "AAA", "0102", "BBB", 10}});
            const auto phi = proximity({"0101", "0102"}, {0, 0.7, 0.7, 0});
            const auto table = compute_relatedness(t, phi, uniform_weights(2), 2000, {.dense = true});
            CHECK(row(table, 0, 0, 1).omega == doctest::Approx(1.0).epsilon(1e-9));
        }
        SUBCASE("three products") {
            const auto t = fixtures::tensor({{2000, "AAA", "0101", "BBB", 25},
                                             {2000, "AAA", "0102", "BBB", 50},
                                             {2000, "AAA", "0103", "BBB", 25}});
            const auto phi = proximity({"0101", "0102", "0103"}, {0, 0.6, 0.4, 0.6, 0, 0.2, 0.4, 0.2, 0});
            const auto omega = product_relatedness(t, phi, 2000);
            CHECK(omega[0] == doctest::Approx(0.4).epsilon(1e-15));
        }
    }

    TEST_CASE("products without proximity are skipped") {
        const auto t = fixtures::tensor({{2000, "AAA", "0101", "BBB", 25}, {2000, "AAA", "0102", "BBB", 25},
                                         {2000, "AAA", "0103", "BBB", 25}});
        const auto phi = proximity({"0101", "0102"}, {0, 0, 0, 0});
        const auto table = compute_relatedness(t, phi, uniform_weights(2), 2000);
        for (const auto& r : table.rows) CHECK(std::isnan(r.omega));
        CHECK(table.skipped_products.size() == 3);
    }

    TEST_CASE("importer relatedness examples") {
        std::vector<double> d{0, 100, 300, 100, 0, 200, 300, 200, 0};
        const auto w = DistanceWeights::from_distances(3, d);
        SUBCASE("exclusively to d") {
            const auto t = fixtures::tensor({{2000, "AAA", "0101", "BBB", 10}, {2000, "CCC", "0101", "AAA", 5}});
            const auto v = importer_relatedness(t, w, 2000);
            CHECK(v[0] == 0.0);
        }
        SUBCASE("exclusively to one other country") {
            const auto t = fixtures::tensor({{2000, "AAA", "0101", "CCC", 10}, {2000, "BBB", "0101", "AAA", 5}});
            const auto phi = proximity({"0101"}, {0});
            const auto table = compute_relatedness(t, phi, w, 2000, {.dense = true});
            CHECK(row(table, 0, 0, 1).omega_d == doctest::Approx(w(1, 2)).epsilon(1e-15));
        }
    }

    TEST_CASE("exporter relatedness examples") {
        std::vector<double> d{0, 100, 300, 100, 0, 200, 300, 200, 0};
        const auto w = DistanceWeights::from_distances(3, d);
        SUBCASE("sole exporter") {
            const auto t = fixtures::tensor({{2000, "AAA", "0101", "BBB", 10}, {2000, "CCC", "0102", "BBB", 10}});
            CHECK(exporter_relatedness(t, w, 2000)[0] == 0.0);
        }
        SUBCASE("one other exporter supplies the rest") {
            const auto t = fixtures::tensor({{2000, "AAA", "0101", "BBB", 30}, {2000, "CCC", "0101", "BBB", 10}});
            const auto v = exporter_relatedness(t, w, 2000);
            CHECK(v[0] == doctest::Approx(w(0, 2) * 0.25).epsilon(1e-15));
            CHECK(v[1] == doctest::Approx(w(2, 0) * 0.75).epsilon(1e-15));
        }
        SUBCASE("relabeling exporters swaps values") {
            std::vector<double> sym{0, 100, 100, 100, 0, 100, 100, 100, 0};
            const auto ws = DistanceWeights::from_distances(3, sym);
            const auto a = fixtures::tensor({{2000, "AAA", "0101", "CCC", 30}, {2000, "BBB", "0101", "CCC", 10}});
            const auto b = fixtures::tensor({{2000, "AAA", "0101", "CCC", 10}, {2000, "BBB", "0101", "CCC", 30}});
            const auto va = exporter_relatedness(a, ws, 2000), vb = exporter_relatedness(b, ws, 2000);
            CHECK(va[0] == vb[1]);
            CHECK(va[1] == vb[0]);
        }
    }

    TEST_CASE("weight mismatch and missing year") {
        const auto t = fixtures::tensor({{2000, "AAA", "0101", "BBB", 10}});
        const auto phi = proximity({"0101"}, {0});
        CHECK_THROWS_AS(compute_relatedness(t, phi, uniform_weights(3), 2000), DataError);
        CHECK_THROWS_AS(compute_relatedness(t, phi, uniform_weights(2), 2001), DataError);
    }

    TEST_CASE("matches the brute force on random worlds") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            oracle::SyntheticWorldConfig cfg;
            cfg.seed = seed;
            cfg.n_years = 3;
            cfg.horizon = 1;
            cfg.sparsity = 0.2 + 0.04 * static_cast<double>(seed);
            const auto world = oracle::generate_world(cfg);
            const auto w = DistanceWeights::from_distances(world.tensor.country_count(), world.distances_km);
            for (int y : world.tensor.years()) {
                const auto got = compute_relatedness(world.tensor, world.proximity, w, y, {.threads = 2});
                const auto ref = oracle::brute_force_relatedness(world.tensor, world.proximity, world.distances_km, y);
                REQUIRE(got.rows.size() == ref.size());
                for (std::size_t i = 0; i < ref.size(); ++i) {
                    REQUIRE(got.rows[i].origin == ref[i].origin);
                    REQUIRE(got.rows[i].product == ref[i].product);
                    REQUIRE(got.rows[i].destination == ref[i].destination);
                    REQUIRE(close(got.rows[i].omega, ref[i].omega, 1e-12));
                    REQUIRE(close(got.rows[i].omega_d, ref[i].omega_d, 1e-12));
                    REQUIRE(close(got.rows[i].omega_o, ref[i].omega_o, 1e-12));
                }
            }
        }
    }

    TEST_CASE("dense mode agrees with sparse mode on active cells") {
        oracle::SyntheticWorldConfig cfg;
        cfg.seed = 5;
        const auto world = oracle::generate_world(cfg);
        const auto w = DistanceWeights::from_distances(world.tensor.country_count(), world.distances_km);
        const int y = world.period.first;
        const auto sparse = compute_relatedness(world.tensor, world.proximity, w, y);
        const auto dense = compute_relatedness(world.tensor, world.proximity, w, y, {.dense = true});
        const std::size_t n = world.tensor.country_count();
        CHECK(dense.rows.size() == n * (n - 1) * world.tensor.product_count());
        for (const auto& r : sparse.rows) {
            const auto& q = row(dense, r.origin, r.product, r.destination);
            CHECK(close(q.omega, r.omega, 1e-12));
            CHECK(close(q.omega_d, r.omega_d, 1e-12));
            CHECK(close(q.omega_o, r.omega_o, 1e-12));
        }
    }

    TEST_CASE("scaling all flows leaves relatedness unchanged") {
        oracle::SyntheticWorldConfig cfg;
        cfg.seed = 9;
        const auto world = oracle::generate_world(cfg);
        const int y = world.period.first;
        std::map<int, std::vector<TradeCell>> scaled;
        for (const auto& cell : world.tensor.cells(y)) {
            auto s = cell;
            s.value *= 1024.0;
            scaled[y].push_back(s);
        }
        const TradeTensor t2(world.tensor.countries(), world.tensor.products(), scaled);
        const auto w = DistanceWeights::from_distances(world.tensor.country_count(), world.distances_km);
        const auto a = compute_relatedness(world.tensor, world.proximity, w, y);
        const auto b = compute_relatedness(t2, world.proximity, w, y);
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            CHECK(close(a.rows[i].omega, b.rows[i].omega, 1e-14));
            CHECK(close(a.rows[i].omega_d, b.rows[i].omega_d, 1e-14));
            CHECK(close(a.rows[i].omega_o, b.rows[i].omega_o, 1e-14));
        }
    }

    TEST_CASE("CSV round trip") {
        oracle::SyntheticWorldConfig cfg;
        cfg.seed = 3;
        const auto world = oracle::generate_world(cfg);
        const auto w = DistanceWeights::from_distances(world.tensor.country_count(), world.distances_km);
        std::vector<RelatednessTable> tables;
        for (int y : world.tensor.years()) tables.push_back(compute_relatedness(world.tensor, world.proximity, w, y));
        std::ostringstream out;
        write_relatedness_csv(out, world.tensor, tables);
        std::istringstream in(out.str());
        const auto back = read_relatedness_csv(in, "relatedness.csv", world.tensor);
        REQUIRE(back.size() == tables.size());
        for (std::size_t k = 0; k < tables.size(); ++k) {
            REQUIRE(back[k].rows.size() == tables[k].rows.size());
            for (std::size_t i = 0; i < tables[k].rows.size(); ++i) {
                CHECK(close(back[k].rows[i].omega, tables[k].rows[i].omega, 1e-9));
                CHECK(close(back[k].rows[i].omega_o, tables[k].rows[i].omega_o, 1e-9));
            }
        }
        std::istringstream bad("year,origin,product,destination,omega,omega_d,omega_o\n2000,ZZZ,0101,AAA,0,0,0\n");
        CHECK_THROWS_AS(read_relatedness_csv(bad, "relatedness.csv", world.tensor), DataError);
    }
}
