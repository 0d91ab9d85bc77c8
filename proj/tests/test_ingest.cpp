#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tradespill/error.hpp"
#include "tradespill/ingest.hpp"

using namespace tradespill;

namespace {

TradeLoad parse(const std::string& text, const TradeLoadOptions& options = {}) {
    std::istringstream in(text);
    return parse_trade_csv(in, "trade.csv", options);
}

TradeFlowRecord rec(int year, const char* o, const char* d, const char* p, double v, Reporter r) {
    return {year, CountryCode::from(o), CountryCode::from(d), ProductCode::from(p), v, r};
}

double cell(const TradeTensor& t, int year, const char* o, const char* p, const char* d) {
    return t.value(year, *t.country_index(CountryCode::from(o)), *t.product_index(ProductCode::from(p)),
                   *t.country_index(CountryCode::from(d)));
}

const char* kHeader = "year,origin,destination,product,value,reporter\n";

}  // namespace

TEST_SUITE("ingest") {
    TEST_CASE("codes") {
        CHECK(CountryCode::parse("KOR").has_value());
        CHECK_FALSE(CountryCode::parse("kor").has_value());
        CHECK_FALSE(CountryCode::parse("KO").has_value());
        CHECK(ProductCode::parse("0101").has_value());
        CHECK_FALSE(ProductCode::parse("62").has_value());
        CHECK_FALSE(ProductCode::parse("62a1").has_value());
        CHECK(YearRange::parse("2000-2006") == YearRange{2000, 2006});
        CHECK(YearRange::parse("2008") == YearRange{2008, 2008});
        CHECK(YearRange::parse("2000-2006").size() == 7);
        CHECK_THROWS_AS(YearRange::parse("2006-2000"), DataError);
        CHECK_THROWS_AS(YearRange::parse("20x0"), DataError);
    }

    TEST_CASE("a trade row maps field by field") {
        const auto load = parse(std::string(kHeader) + "2003,KOR,CHL,6201,152000,exporter\n");
        REQUIRE(load.records.size() == 1);
        CHECK(load.records[0] == rec(2003, "KOR", "CHL", "6201", 152000, Reporter::Exporter));
        CHECK(load.rows_read == 1);
    }

    TEST_CASE("column order is taken from the header") {
        const auto load = parse("reporter,value,product,destination,origin,year\nimporter,7.5,0101,USA,MEX,2001\n");
        REQUIRE(load.records.size() == 1);
        CHECK(load.records[0] == rec(2001, "MEX", "USA", "0101", 7.5, Reporter::Importer));
    }

    TEST_CASE("custom schema names") {
        TradeLoadOptions opts;
        opts.schema.value = "usd";
        const auto load = parse("year,origin,destination,product,usd,reporter\n2001,MEX,USA,0101,3,exporter\n", opts);
        CHECK(load.records.size() == 1);
        CHECK_THROWS_AS(parse(std::string(kHeader), opts), ParseError);
    }

    TEST_CASE("negative value is a parse error at its line") {
        try {
            parse(std::string(kHeader) + "2003,KOR,CHL,6201,10,exporter\n2003,KOR,CHL,6202,-5,exporter\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
            CHECK(e.source() == "trade.csv");
        }
    }

    TEST_CASE("malformed rows are parse errors") {
        CHECK_THROWS_AS(parse(std::string(kHeader) + "2003,KOR,CHL,6201,10\n"), ParseError);
        CHECK_THROWS_AS(parse(std::string(kHeader) + "2003,KOR,CHL,6201,ten,exporter\n"), ParseError);
        CHECK_THROWS_AS(parse(std::string(kHeader) + "2003,KOR,CHL,6201,10,customs\n"), ParseError);
        CHECK_THROWS_AS(parse(std::string(kHeader) + "20x3,KOR,CHL,6201,10,exporter\n"), ParseError);
        CHECK_THROWS_AS(parse("year,origin\n"), ParseError);
    }

    TEST_CASE("invalid codes go to the rejects report") {
        const auto load = parse(std::string(kHeader) +
                                "2003,KOR,CHL,62,10,exporter\n"
                                "2003,KOREA,CHL,6201,10,exporter\n"
                                "2003,KOR,KOR,6201,10,exporter\n"
                                "2003,KOR,CHL,6201,10,exporter\n");
        REQUIRE(load.rejects.size() == 3);
        CHECK(load.rejects[0].reason == reject_reason::kBadProduct);
        CHECK(load.rejects[0].line == 2);
        CHECK(load.rejects[1].reason == reject_reason::kBadCountry);
        CHECK(load.rejects[2].reason == reject_reason::kSelfFlow);
        CHECK(load.records.size() == 1);

        std::ostringstream out;
        write_rejects_csv(out, load.rejects);
        CHECK(out.str().find("bad_product") != std::string::npos);
    }

    TEST_CASE("unknown vocabulary is rejected when a vocabulary is given") {
        TradeLoadOptions opts;
        opts.known_countries = std::set<CountryCode>{CountryCode::from("KOR"), CountryCode::from("CHL")};
        opts.known_products = std::set<ProductCode>{ProductCode::from("6201")};
        const auto load = parse(std::string(kHeader) +
                                    "2003,KOR,PER,6201,10,exporter\n"
                                    "2003,KOR,CHL,6202,10,exporter\n"
                                    "2003,KOR,CHL,6201,10,exporter\n",
                                opts);
        REQUIRE(load.rejects.size() == 2);
        CHECK(load.rejects[0].reason == reject_reason::kUnknownCountry);
        CHECK(load.rejects[1].reason == reject_reason::kUnknownProduct);
    }

    TEST_CASE("zero values are dropped") {
        const auto load = parse(std::string(kHeader) + "2003,KOR,CHL,6201,0,exporter\n");
        CHECK(load.records.empty());
        CHECK(load.zero_dropped == 1);
    }

    TEST_CASE("reconcile policies") {
        std::vector<TradeFlowRecord> records{
            rec(2000, "AAA", "BBB", "0101", 100, Reporter::Exporter),
            rec(2000, "AAA", "BBB", "0101", 100, Reporter::Importer),
            rec(2000, "AAA", "CCC", "0101", 100, Reporter::Exporter),
            rec(2000, "BBB", "CCC", "0101", 100, Reporter::Exporter),
            rec(2000, "BBB", "CCC", "0101", 120, Reporter::Importer),
            rec(2000, "CCC", "AAA", "0101", 40, Reporter::Importer),
        };
        const auto r = reconcile(records);
        CHECK(cell(r.tensor, 2000, "AAA", "0101", "BBB") == 100);
        CHECK(cell(r.tensor, 2000, "AAA", "0101", "CCC") == 100);
        CHECK(cell(r.tensor, 2000, "BBB", "0101", "CCC") == 120);
        CHECK(cell(r.tensor, 2000, "CCC", "0101", "AAA") == 40);
        CHECK(r.audit == ReconcileAudit{1, 1, 1, 1});

        CHECK(cell(reconcile(records, ReconcilePolicy::ExporterPriority).tensor, 2000, "BBB", "0101", "CCC") == 100);
        CHECK(cell(reconcile(records, ReconcilePolicy::Max).tensor, 2000, "BBB", "0101", "CCC") == 120);
        CHECK(cell(reconcile(records, ReconcilePolicy::Mean).tensor, 2000, "BBB", "0101", "CCC") == 110);

        CHECK(parse_reconcile_policy("importer") == ReconcilePolicy::ImporterPriority);
        CHECK(parse_reconcile_policy("mean") == ReconcilePolicy::Mean);
        CHECK_THROWS(parse_reconcile_policy("median"));
    }

    TEST_CASE("reconcile is order independent and idempotent") {
        std::mt19937_64 rng(3);
        std::vector<TradeFlowRecord> records;
        const char* cs[] = {"AAA", "BBB", "CCC", "DDD"};
        const char* ps[] = {"0101", "0102", "0203"};
        std::uniform_real_distribution<double> u(1.0, 1000.0);
        for (int y = 2000; y < 2003; ++y) {
            for (auto o : cs) {
                for (auto d : cs) {
                    if (o == d) continue;
                    for (auto p : ps) {
                        if (rng() % 3 == 0) continue;
                        records.push_back(rec(y, o, d, p, u(rng), Reporter::Exporter));
                        if (rng() % 2) records.push_back(rec(y, o, d, p, u(rng), Reporter::Importer));
                        if (rng() % 5 == 0) records.push_back(rec(y, o, d, p, u(rng), Reporter::Exporter));
                    }
                }
            }
        }
        const auto first = reconcile(records);
        std::shuffle(records.begin(), records.end(), rng);
        const auto second = reconcile(records);
        REQUIRE(first.tensor.years() == second.tensor.years());
        for (int y : first.tensor.years()) {
            const auto a = first.tensor.cells(y), b = second.tensor.cells(y);
            REQUIRE(a.size() == b.size());
            for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value == b[i].value);
        }
        CHECK(first.audit == second.audit);

        // re-expand as single-source records
        std::vector<TradeFlowRecord> again;
        const auto& t = first.tensor;
        for (int y : t.years()) {
            for (const auto& c : t.cells(y)) {
                again.push_back({y, t.countries()[c.origin], t.countries()[c.destination], t.products()[c.product],
                                 c.value, Reporter::Exporter});
            }
        }
        const auto third = reconcile(again);
        for (int y : t.years()) {
            const auto a = t.cells(y), b = third.tensor.cells(y);
            REQUIRE(a.size() == b.size());
            for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value == b[i].value);
        }
    }

    TEST_CASE("tensor stores positive values and consistent marginals") {
        std::vector<CountryCode> cs{CountryCode::from("AAA"), CountryCode::from("BBB"), CountryCode::from("CCC")};
        std::vector<ProductCode> ps{ProductCode::from("0101"), ProductCode::from("0102")};
        std::map<int, std::vector<TradeCell>> cells;
        cells[2000] = {{0, 0, 1, 5.0}, {0, 1, 1, 3.0}, {0, 0, 2, 2.0}, {2, 1, 0, 0.0}, {0, 0, 1, 1.0}};
        TradeTensor t(cs, ps, cells);
        CHECK(t.cell_count() == 3);  // zero dropped, duplicate summed
        CHECK(t.value(2000, 0, 0, 1) == 6.0);
        const auto& m = t.marginals(2000);
        CHECK(m.x_od(0, 1) == 9.0);
        CHECK(m.x_op(0, 0) == 8.0);
        CHECK(m.x_pd(0, 1) == 6.0);
        CHECK(m == YearMarginals(3, 2, t.cells(2000)));
        CHECK(t.total_value() == 11.0);
        CHECK_THROWS_AS(t.marginals(1999), DataError);

        cells[2000].push_back({1, 0, 1, 1.0});
        CHECK_THROWS_AS(TradeTensor(cs, ps, cells), DataError);  // self flow
    }

    TEST_CASE("country and dyad tables") {
        std::istringstream cin("code,year,population,gdp_per_capita\nAAA,2000,5e6,1000\nBBB,2000,1e6,2000\n");
        const auto countries = parse_country_csv(cin, "countries.csv");
        REQUIRE(countries.find(CountryCode::from("AAA"), 2000));
        CHECK(countries.find(CountryCode::from("AAA"), 2000)->population == 5e6);
        CHECK(countries.find(CountryCode::from("AAA"), 2001) == nullptr);

        std::istringstream bad("code,year,population,gdp_per_capita\nAAA,2000,0,1000\n");
        CHECK_THROWS_AS(parse_country_csv(bad, "countries.csv"), DataError);
        std::istringstream dup("code,year,population,gdp_per_capita\nAAA,2000,1,1\nAAA,2000,2,2\n");
        CHECK_THROWS_AS(parse_country_csv(dup, "countries.csv"), DataError);

        std::istringstream din(
            "country_a,country_b,distance_km,border,colony,language,lang_proximity\n"
            "AAA,BBB,1200.5,1,0,1,3.5\n");
        const auto dyads = parse_dyad_csv(din, "dyads.csv");
        const auto* ab = dyads.find(CountryCode::from("AAA"), CountryCode::from("BBB"));
        const auto* ba = dyads.find(CountryCode::from("BBB"), CountryCode::from("AAA"));
        REQUIRE(ab);
        CHECK(ab == ba);
        CHECK(ab->border);
        CHECK_FALSE(ab->colony);

        std::istringstream zero(
            "country_a,country_b,distance_km,border,colony,language,lang_proximity\nAAA,BBB,0,1,0,1,3.5\n");
        CHECK_THROWS_AS(parse_dyad_csv(zero, "dyads.csv"), DataError);
        std::istringstream flag(
            "country_a,country_b,distance_km,border,colony,language,lang_proximity\nAAA,BBB,10,2,0,1,3.5\n");
        CHECK_THROWS_AS(parse_dyad_csv(flag, "dyads.csv"), ParseError);
        std::istringstream conflict(
            "country_a,country_b,distance_km,border,colony,language,lang_proximity\n"
            "AAA,BBB,10,1,0,1,3.5\nBBB,AAA,11,1,0,1,3.5\n");
        CHECK_THROWS_AS(parse_dyad_csv(conflict, "dyads.csv"), DataError);
    }

    TEST_CASE("country filter") {
        // AAA: small population; BBB: small trade; CCC, DDD: retained; IRQ excluded
        std::vector<TradeFlowRecord> records{
            rec(2008, "AAA", "CCC", "0101", 5e9, Reporter::Exporter),
            rec(2008, "BBB", "CCC", "0101", 0.9e9, Reporter::Exporter),
            rec(2008, "CCC", "DDD", "0101", 5e9, Reporter::Exporter),
            rec(2008, "IRQ", "DDD", "0101", 5e9, Reporter::Exporter),
            rec(2007, "DDD", "CCC", "0101", 1.0, Reporter::Exporter),
        };
        const auto tensor = reconcile(records).tensor;
        CountryTable meta;
        for (int y : {2007, 2008}) {
            meta.insert(CountryCode::from("AAA"), y, {1.0e6, 1000});
            meta.insert(CountryCode::from("BBB"), y, {5e7, 1000});
            meta.insert(CountryCode::from("CCC"), y, {5e7, 1000});
            meta.insert(CountryCode::from("DDD"), y, {5e7, 1000});
            meta.insert(CountryCode::from("IRQ"), y, {5e7, 1000});
        }
        const auto result = filter_countries(tensor, meta);
        std::map<std::string, std::string> removed;
        for (const auto& r : result.removed) removed[r.code.str()] = r.reason;
        CHECK(removed.size() == 3);
        CHECK(removed["AAA"] == "population");
        CHECK(removed["BBB"] == "trade");
        CHECK(removed["IRQ"] == "excluded");
        CHECK(result.tensor.countries().size() == 2);

        // conservation
        double removed_total = 0.0;
        for (int y : tensor.years()) {
            for (const auto& c : tensor.cells(y)) {
                const auto o = tensor.countries()[c.origin].str(), d = tensor.countries()[c.destination].str();
                if (removed.count(o) || removed.count(d)) removed_total += c.value;
            }
        }
        CHECK(result.tensor.total_value() == doctest::Approx(tensor.total_value() - removed_total));
        for (int y : result.tensor.years()) {
            for (const auto& c : result.tensor.cells(y)) {
                CHECK(removed.count(result.tensor.countries()[c.origin].str()) == 0);
                CHECK(removed.count(result.tensor.countries()[c.destination].str()) == 0);
            }
        }

        FilterConfig no2008;
        no2008.trade_year = 2010;
        CHECK_THROWS_AS(filter_countries(tensor, meta, no2008), DataError);

        CountryTable partial;
        partial.insert(CountryCode::from("AAA"), 2007, {5e7, 1});
        try {
            filter_countries(tensor, partial);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("BBB") != std::string::npos);
        }
    }
}
