#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>

#include "tradespill/complexity.hpp"
#include "tradespill/error.hpp"
#include "tradespill/gravity.hpp"
#include "tradespill/ingest.hpp"
#include "tradespill/oracle.hpp"
#include "tradespill/relatedness.hpp"

namespace py = pybind11;
using namespace tradespill;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<std::string> strings(const std::vector<CountryCode>& codes) {
    std::vector<std::string> out;
    for (const auto& c : codes) out.push_back(c.str());
    return out;
}

std::vector<std::string> strings(const std::vector<ProductCode>& codes) {
    std::vector<std::string> out;
    for (const auto& c : codes) out.push_back(c.str());
    return out;
}

std::vector<ProductCode> product_codes(const std::vector<std::string>& names) {
    std::vector<ProductCode> out;
    for (const auto& s : names) out.push_back(ProductCode::from(s));
    return out;
}

YearRange years(int first, std::optional<int> last) { return {first, last.value_or(first)}; }

py::dict cells_dict(const TradeTensor& t, int year) {
    const auto cells = t.cells(year);
    py::array_t<std::uint32_t> o(cells.size()), p(cells.size()), d(cells.size());
    py::array_t<double> v(cells.size());
    auto oo = o.mutable_unchecked<1>(), pp = p.mutable_unchecked<1>(), dd = d.mutable_unchecked<1>();
    auto vv = v.mutable_unchecked<1>();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        oo(i) = cells[i].origin;
        pp(i) = cells[i].product;
        dd(i) = cells[i].destination;
        vv(i) = cells[i].value;
    }
    py::dict out;
    out["origin"] = o;
    out["product"] = p;
    out["destination"] = d;
    out["value"] = v;
    return out;
}

py::array_t<double> matrix(std::span<const double> values, std::size_t rows, std::size_t cols) {
    py::array_t<double> out({rows, cols});
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

py::dict result_dict(const RegressionResult& r) {
    py::dict coefs;
    for (const auto& c : r.coefficients) {
        py::dict e;
        e["beta"] = c.beta;
        e["se"] = c.se;
        e["t"] = c.t;
        e["p"] = c.p;
        coefs[py::str(c.name)] = e;
    }
    py::dict out;
    out["split_key"] = r.split_key;
    out["n"] = r.n;
    out["coefficients"] = coefs;
    out["r2"] = r.r2;
    out["adj_r2"] = r.adj_r2;
    out["resid_se"] = r.resid_se;
    out["orthogonality"] = r.orthogonality;
    return out;
}

ProximityMatrix proximity_from(DoubleArray phi, const std::vector<std::string>& products) {
    if (phi.ndim() != 2 || phi.shape(0) != phi.shape(1) || static_cast<std::size_t>(phi.shape(0)) != products.size()) {
        throw std::invalid_argument("phi must be square with one row per product code");
    }
    return ProximityMatrix(product_codes(products), std::vector<double>(phi.data(), phi.data() + phi.size()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Trade relatedness, product space and extended gravity regressions";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

    py::class_<TradeTensor>(m, "TradeTensor")
        .def_property_readonly("countries", [](const TradeTensor& t) { return strings(t.countries()); })
        .def_property_readonly("products", [](const TradeTensor& t) { return strings(t.products()); })
        .def_property_readonly("years", &TradeTensor::years)
        .def_property_readonly("cell_count", &TradeTensor::cell_count)
        .def("total_value", &TradeTensor::total_value)
        .def("cells", &cells_dict, py::arg("year"),
             "Active cells of a year as arrays of origin, product and destination indices and values.")
        .def("__repr__", [](const TradeTensor& t) {
            return "<TradeTensor " + std::to_string(t.country_count()) + " countries, " +
                   std::to_string(t.product_count()) + " products, " + std::to_string(t.cell_count()) + " cells>";
        });

    m.def(
        "load_trade",
        [](const std::filesystem::path& path, const std::string& policy) {
            const auto load = load_trade_csv(path);
            return reconcile(load.records, parse_reconcile_policy(policy)).tensor;
        },
        py::arg("path"), py::arg("policy") = "importer",
        "Read a trade CSV and reconcile the two reporting sides into one value per cell.");

    m.def(
        "rca",
        [](const TradeTensor& t, int first, std::optional<int> last) {
            const auto r = compute_rca(t, years(first, last));
            return matrix(r.values(), r.countries().size(), r.products().size());
        },
        py::arg("tensor"), py::arg("first"), py::arg("last") = py::none(),
        "Countries x products RCA pooled over the years first..last.");

    m.def(
        "proximity",
        [](py::array_t<bool, py::array::c_style | py::array::forcecast> advantage, unsigned threads) {
            if (advantage.ndim() != 2) throw std::invalid_argument("advantage must be 2-D (countries x products)");
            const auto nc = static_cast<std::size_t>(advantage.shape(0));
            const auto np = static_cast<std::size_t>(advantage.shape(1));
            std::vector<std::uint8_t> e(advantage.data(), advantage.data() + advantage.size());
            std::vector<ProductCode> codes;
            for (std::size_t j = 0; j < np; ++j) {
                char buf[16];
                std::snprintf(buf, sizeof buf, "%04zu", 101 + j);
                codes.push_back(ProductCode::from(buf));
            }
            const auto phi = compute_proximity(AdvantageMatrix(codes, nc, e, 1.0), threads);
            py::array_t<double> out({np, np});
            for (std::size_t i = 0; i < np; ++i) {
                const auto row = phi.row(i);
                std::copy(row.begin(), row.end(), out.mutable_data() + i * np);
            }
            return out;
        },
        py::arg("advantage"), py::arg("threads") = 1,
        "Product proximity from a boolean countries x products advantage matrix.");

    m.def(
        "relatedness",
        [](const TradeTensor& t, DoubleArray phi, const std::vector<std::string>& products, DoubleArray distances,
           int year, unsigned threads) {
            const auto n = t.country_count();
            if (distances.ndim() != 2 || static_cast<std::size_t>(distances.shape(0)) != n ||
                static_cast<std::size_t>(distances.shape(1)) != n) {
                throw std::invalid_argument("distances must be countries x countries");
            }
            const auto w = DistanceWeights::from_distances(
                n, std::span<const double>(distances.data(), static_cast<std::size_t>(distances.size())));
            RelatednessOptions opts;
            opts.threads = threads;
            const auto table = compute_relatedness(t, proximity_from(phi, products), w, year, opts);
            py::array_t<double> om(table.rows.size()), od(table.rows.size()), oo(table.rows.size());
            for (std::size_t i = 0; i < table.rows.size(); ++i) {
                om.mutable_data()[i] = table.rows[i].omega;
                od.mutable_data()[i] = table.rows[i].omega_d;
                oo.mutable_data()[i] = table.rows[i].omega_o;
            }
            py::dict out = cells_dict(t, year);
            out["omega"] = om;
            out["omega_d"] = od;
            out["omega_o"] = oo;
            return out;
        },
        py::arg("tensor"), py::arg("phi"), py::arg("products"), py::arg("distances_km"), py::arg("year"),
        py::arg("threads") = 1,
        "Product, importer and exporter relatedness of every active cell of a year.");

    m.def(
        "fit_ols",
        [](DoubleArray x, DoubleArray y, std::optional<std::vector<std::string>> names) {
            if (x.ndim() != 2 || y.ndim() != 1 || x.shape(0) != y.shape(0)) {
                throw std::invalid_argument("x must be n x k and y of length n");
            }
            const auto n = static_cast<std::size_t>(x.shape(0)), k = static_cast<std::size_t>(x.shape(1));
            std::vector<std::string> labels = names.value_or(std::vector<std::string>{});
            if (labels.empty()) {
                for (std::size_t j = 0; j < k; ++j) labels.push_back("x" + std::to_string(j));
            }
            if (labels.size() != k) throw std::invalid_argument("one name per column");
            OlsAccumulator acc(k);
            std::span<const double> xs(x.data(), n * k), ys(y.data(), n);
            {
                py::gil_scoped_release release;
                for (std::size_t i = 0; i < n; ++i) acc.add(xs.subspan(i * k, k), ys[i]);
            }
            return result_dict(solve_ols(acc, labels));
        },
        py::arg("x"), py::arg("y"), py::arg("names") = py::none(),
        "Least squares through the streaming accumulator; column 0 is taken as the constant.");

    m.def(
        "fit_gravity",
        [](const std::filesystem::path& trade, const std::filesystem::path& relatedness,
           const std::filesystem::path& countries, const std::filesystem::path& dyads, int first, int last,
           int horizon, unsigned threads) {
            const auto tensor = reconcile(load_trade_csv(trade).records).tensor;
            std::ifstream rel_in(relatedness);
            if (!rel_in) throw DataError("cannot open " + relatedness.string());
            const auto tables = read_relatedness_csv(rel_in, relatedness.string(), tensor);
            const auto meta = load_country_csv(countries);
            const auto dy = load_dyad_csv(dyads);
            const auto dataset = build_dataset({tensor, tables, meta, dy}, {first, last}, {horizon});
            FitOptions opts;
            opts.threads = threads;
            auto result = fit_gravity(dataset.rows, opts);
            result.split_key = YearRange{first, last}.str();
            return result_dict(result);
        },
        py::arg("trade"), py::arg("relatedness"), py::arg("countries"), py::arg("dyads"), py::arg("first") = 2000,
        py::arg("last") = 2006, py::arg("horizon") = 2, py::arg("threads") = 1,
        "Pooled gravity regression on standardised regressors, from the pipeline's CSV files.");

    m.def(
        "trend_test",
        [](const std::vector<double>& beta, const std::vector<double>& se, double alpha) {
            if (beta.size() != se.size()) throw std::invalid_argument("beta and se differ in length");
            std::vector<TrendEstimate> est;
            for (std::size_t i = 0; i < beta.size(); ++i) est.push_back({beta[i], se[i]});
            const auto r = trend_test(est, alpha);
            py::dict out;
            out["slope"] = r.slope;
            out["intercept"] = r.intercept;
            out["se"] = r.se;
            out["p"] = r.p;
            out["significant"] = r.significant;
            return out;
        },
        py::arg("beta"), py::arg("se"), py::arg("alpha") = 0.1,
        "Weighted trend of five coefficients over category rank.");

    m.def(
        "classify_exporter", [](double rca) { return to_string(classify_exporter(rca)); }, py::arg("rca"));

    m.def(
        "synth",
        [](const std::filesystem::path& out_dir, std::uint64_t seed, int countries, int products, int n_years,
           int horizon, double sparsity, double sigma) {
            oracle::SyntheticWorldConfig cfg;
            cfg.seed = seed;
            cfg.n_countries = countries;
            cfg.n_products = products;
            cfg.n_years = n_years;
            cfg.horizon = horizon;
            cfg.sparsity = sparsity;
            cfg.noise_sigma = sigma;
            const auto files = oracle::write_world(out_dir, oracle::generate_world(cfg));
            py::dict out;
            out["trade"] = files.trade;
            out["countries"] = files.countries;
            out["dyads"] = files.dyads;
            out["lall"] = files.lall;
            out["planted"] = files.planted;
            return out;
        },
        py::arg("out_dir"), py::arg("seed") = 42, py::arg("countries") = 8, py::arg("products") = 12,
        py::arg("years") = 4, py::arg("horizon") = 2, py::arg("sparsity") = 0.5, py::arg("sigma") = 1.0,
        "Write a synthetic world with planted coefficients in the ingest CSV formats.");
}
