#include "tradespill/report.hpp"

#include <cmath>
#include <iomanip>

#include "csv.hpp"
#include "json.hpp"
#include "tradespill/error.hpp"

namespace tradespill {

namespace {

using nlohmann::json;

/// Rounds to 6 decimals through text so the JSON holds exactly what a
/// fixed-precision rendering shows.
json rounded(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::stod(csv::fixed(v, 6));
}

double number_or_nan(const json& j) {
    return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string significance_stars(double p) {
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.1) return "*";
    return "";
}

void write_regressions_json(std::ostream& out, std::span<const RegressionResult> results) {
    json doc = json::array();
    for (const auto& r : results) {
        json coefs = json::array();
        for (const auto& c : r.coefficients) {
            coefs.push_back({{"name", c.name}, {"beta", rounded(c.beta)}, {"se", rounded(c.se)},
                             {"t", rounded(c.t)}, {"p", rounded(c.p)}});
        }
        doc.push_back({{"split_key", r.split_key},
                       {"n", r.n},
                       {"adj_r2", rounded(r.adj_r2)},
                       {"resid_se", rounded(r.resid_se)},
                       {"coefficients", std::move(coefs)}});
    }
    out << doc.dump(2) << '\n';
}

std::vector<RegressionResult> read_regressions_json(std::istream& in, const std::string& source_name) {
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError(source_name + ": invalid JSON: " + e.what());
    }
    if (doc.is_object()) doc = json::array({doc});
    if (!doc.is_array()) throw DataError(source_name + ": expected a JSON array of regression results");
    std::vector<RegressionResult> out;
    try {
        for (const auto& item : doc) {
            RegressionResult r;
            r.split_key = item.value("split_key", "");
            r.n = item.at("n").get<std::size_t>();
            r.adj_r2 = number_or_nan(item.at("adj_r2"));
            r.resid_se = number_or_nan(item.at("resid_se"));
            for (const auto& c : item.at("coefficients")) {
                r.coefficients.push_back({c.at("name").get<std::string>(), number_or_nan(c.at("beta")),
                                          number_or_nan(c.at("se")), number_or_nan(c.at("t")),
                                          number_or_nan(c.at("p"))});
            }
            r.k = r.coefficients.size();
            out.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw DataError(source_name + ": malformed regression result: " + e.what());
    }
    return out;
}

void write_regression_table_csv(std::ostream& out, std::span<const RegressionResult> results) {
    out << "variable";
    for (const auto& r : results) out << ',' << r.split_key;
    out << '\n';

    // Rows follow the first result's coefficient order with the constant last.
    std::vector<std::string> names;
    if (!results.empty()) {
        for (const auto& c : results.front().coefficients) {
            if (c.name != "constant") names.push_back(c.name);
        }
        for (const auto& c : results.front().coefficients) {
            if (c.name == "constant") names.push_back(c.name);
        }
    }
    auto lookup = [](const RegressionResult& r, const std::string& name) -> const Coefficient* {
        for (const auto& c : r.coefficients) {
            if (c.name == name) return &c;
        }
        return nullptr;
    };
    for (const auto& name : names) {
        out << name;
        for (const auto& r : results) {
            const auto* c = lookup(r, name);
            out << ',';
            if (c) out << csv::fixed(c->beta, 3) << significance_stars(c->p);
        }
        out << "\n";
        for (const auto& r : results) {
            const auto* c = lookup(r, name);
            out << ',';
            if (c) out << '(' << csv::fixed(c->se, 3) << ')';
        }
        out << '\n';
    }
    out << "observations";
    for (const auto& r : results) out << ',' << r.n;
    out << "\nadj_r2";
    for (const auto& r : results) out << ',' << csv::fixed(r.adj_r2, 3);
    out << "\nresid_se";
    for (const auto& r : results) out << ',' << csv::fixed(r.resid_se, 3);
    out << '\n';
}

void write_trend_csv(std::ostream& out, std::span<const TrendRow> rows) {
    out << "variable,slope,se,p,significant\n";
    for (const auto& r : rows) {
        out << r.variable << ',' << csv::fixed(r.trend.slope, 6) << ',' << csv::fixed(r.trend.se, 6) << ','
            << csv::fixed(r.trend.p, 6) << ',' << (r.trend.significant ? 1 : 0) << '\n';
    }
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
    out << "variable,n,mean,sd,min,max,zero_variance\n";
    for (const auto& r : rows) {
        out << r.variable << ',' << r.n << ',' << csv::fixed(r.mean, 3) << ',' << csv::fixed(r.sd, 3) << ','
            << csv::fixed(r.min, 3) << ',' << csv::fixed(r.max, 3) << ',' << (r.zero_variance ? 1 : 0) << '\n';
    }
}

void write_correlation_csv(std::ostream& out, std::span<const double> corr) {
    constexpr std::size_t k = kRegressorCount;
    if (corr.size() != k * k) throw std::invalid_argument("correlation matrix must be 15 x 15");
    out << "variable";
    for (auto name : kRegressorNames) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < k; ++i) {
        out << kRegressorNames[i];
        for (std::size_t j = 0; j < k; ++j) {
            out << ',';
            if (j <= i) out << csv::fixed(corr[i * k + j], 3);
        }
        out << '\n';
    }
}

}  // namespace tradespill
