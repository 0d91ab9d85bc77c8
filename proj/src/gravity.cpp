#include "tradespill/gravity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>
#include <tuple>

#include "csv.hpp"
#include "parallel.hpp"
#include "tradespill/error.hpp"
#include "tradespill/exact_sum.hpp"

namespace tradespill {

namespace {

constexpr std::size_t kCoefficients = kRegressorCount + 1;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string cell_key(const TradeTensor& tensor, int year, std::uint32_t o, std::uint32_t p, std::uint32_t d) {
    return std::to_string(year) + "/" + tensor.countries()[o].str() + "/" + tensor.products()[p].str() + "/" +
           tensor.countries()[d].str();
}

bool key_less(const RelatednessRow& r, const TradeCell& c) {
    return std::tie(r.origin, r.product, r.destination) < std::tie(c.origin, c.product, c.destination);
}

bool same_key(const RelatednessRow& r, const TradeCell& c) {
    return r.origin == c.origin && r.product == c.product && r.destination == c.destination;
}

bool cell_less(const TradeCell& a, const TradeCell& b) {
    return std::tie(a.origin, a.product, a.destination) < std::tie(b.origin, b.product, b.destination);
}

/// Dyad covariates for every ordered country pair, resolved once.
struct DyadGrid {
    std::size_t n = 0;
    std::vector<const DyadRecord*> records;

    DyadGrid(const TradeTensor& tensor, const DyadTable& dyads) : n(tensor.country_count()), records(n * n) {
        const auto& codes = tensor.countries();
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                if (a != b) records[a * n + b] = dyads.find(codes[a], codes[b]);
            }
        }
    }

    const DyadRecord& at(const TradeTensor& tensor, std::uint32_t o, std::uint32_t d) const {
        const auto* rec = records[o * n + d];
        if (!rec) {
            throw DataError("missing dyad covariates for " + tensor.countries()[o].str() + "-" +
                            tensor.countries()[d].str());
        }
        return *rec;
    }
};

struct CountryLogs {
    std::vector<double> log_gdp;
    std::vector<double> log_pop;
};

CountryLogs country_logs(const TradeTensor& tensor, const CountryTable& countries, int year) {
    CountryLogs out{std::vector<double>(tensor.country_count(), kNaN),
                    std::vector<double>(tensor.country_count(), kNaN)};
    for (std::size_t c = 0; c < tensor.country_count(); ++c) {
        if (const auto* row = countries.find(tensor.countries()[c], year)) {
            out.log_gdp[c] = std::log(row->gdp_per_capita);
            out.log_pop[c] = std::log(row->population);
        }
    }
    return out;
}

double country_value(const std::vector<double>& v, const TradeTensor& tensor, std::uint32_t c, int year,
                     const char* what) {
    const double x = v[c];
    if (std::isnan(x)) {
        throw DataError(std::string("missing ") + what + " for " + tensor.countries()[c].str() + " in " +
                        std::to_string(year));
    }
    return x;
}

}  // namespace

std::vector<std::string> coefficient_names() {
    std::vector<std::string> names{"constant"};
    for (auto n : kRegressorNames) names.emplace_back(n);
    return names;
}

// ---------------------------------------------------------------------------

GravityDataset build_dataset(const GravityInputs& inputs, YearRange period, const DatasetOptions& options) {
    if (options.horizon <= 0) throw std::invalid_argument("horizon must be positive");
    if (period.empty()) throw std::invalid_argument("empty period");
    const auto& tensor = inputs.tensor;

    GravityDataset out;
    out.period = period;
    for (int t = period.first; t + options.horizon <= period.last; ++t) {
        if (tensor.has_year(t) && tensor.has_year(t + options.horizon)) out.base_years.push_back(t);
    }

    std::size_t capacity = 0;
    for (int t : out.base_years) capacity += tensor.cells(t).size();
    out.rows.reserve(capacity);

    const DyadGrid dyads(tensor, inputs.dyads);

    for (int t : out.base_years) {
        const RelatednessTable* rel = nullptr;
        for (const auto& table : inputs.relatedness) {
            if (table.year == t) rel = &table;
        }
        if (!rel) throw DataError("no relatedness computed for year " + std::to_string(t));

        const auto cells = tensor.cells(t);
        const auto future = tensor.cells(t + options.horizon);
        const auto& m = tensor.marginals(t);
        const auto logs = country_logs(tensor, inputs.countries, t);

        auto r = rel->rows.begin();
        auto f = future.begin();
        for (const auto& cell : cells) {
            while (r != rel->rows.end() && key_less(*r, cell)) ++r;
            if (r == rel->rows.end() || !same_key(*r, cell)) {
                throw DataError("missing relatedness row for " +
                                cell_key(tensor, t, cell.origin, cell.product, cell.destination));
            }
            while (f != future.end() && cell_less(*f, cell)) ++f;
            const bool survives = f != future.end() && !cell_less(cell, *f);
            const double x_future = survives ? f->value : 0.0;

            if (!survives && options.zeros == ZeroPolicy::Drop) {
                ++out.dropped_exits;
                continue;
            }
            if (std::isnan(r->omega) || std::isnan(r->omega_d) || std::isnan(r->omega_o)) {
                ++out.dropped_undefined;
                continue;
            }

            const auto o = cell.origin, p = cell.product, d = cell.destination;
            const auto& dyad = dyads.at(tensor, o, d);

            GravityObservation row;
            row.year = t;
            row.origin = o;
            row.product = p;
            row.destination = d;
            row.response = options.zeros == ZeroPolicy::Drop ? std::log(x_future) : std::log1p(x_future);
            auto& x = row.x;
            x[kOmega] = r->omega;
            x[kOmegaImporter] = r->omega_d;
            x[kOmegaExporter] = r->omega_o;
            x[kLogFlow] = std::log(cell.value);
            x[kLogProductExports] = std::log(m.x_op(o, p));
            x[kLogProductImports] = std::log(m.x_pd(p, d));
            x[kLogDistance] = std::log(dyad.distance_km);
            x[kLogGdpOrigin] = country_value(logs.log_gdp, tensor, o, t, "GDP per capita");
            x[kLogGdpDestination] = country_value(logs.log_gdp, tensor, d, t, "GDP per capita");
            x[kLogPopOrigin] = country_value(logs.log_pop, tensor, o, t, "population");
            x[kLogPopDestination] = country_value(logs.log_pop, tensor, d, t, "population");
            x[kBorder] = dyad.border ? 1.0 : 0.0;
            x[kColony] = dyad.colony ? 1.0 : 0.0;
            x[kLanguage] = dyad.language ? 1.0 : 0.0;
            x[kLogLangProximity] = std::log1p(dyad.lang_proximity);
            out.rows.push_back(row);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

template <class Get>
ColumnMoments moments(std::span<const GravityObservation> rows, const std::vector<std::uint32_t>* index, Get get,
                      const std::string& name) {
    const std::size_t n = index ? index->size() : rows.size();
    if (n < 2) throw DataError("column '" + name + "' needs at least two observations");
    auto each = [&](auto&& f) {
        if (index) {
            for (auto i : *index) f(rows[i]);
        } else {
            for (const auto& r : rows) f(r);
        }
    };
    ExactSum sum;
    each([&](const GravityObservation& r) { sum.add(get(r)); });
    const double mean = sum.value() / static_cast<double>(n);
    ExactSum sq;
    each([&](const GravityObservation& r) {
        const double c = get(r) - mean;
        sq.add(c * c);
    });
    const double var = sq.value() / static_cast<double>(n - 1);
    if (!(var > 0.0)) throw DataError("column '" + name + "' has zero variance");
    return {mean, std::sqrt(var)};
}

}  // namespace

StandardizationSpec compute_standardization(std::span<const GravityObservation> rows, bool include_response,
                                            const std::vector<std::uint32_t>* index) {
    StandardizationSpec spec;
    for (std::size_t j = 0; j < kRegressorCount; ++j) {
        if (is_binary(j)) continue;
        spec.regressors[j] = moments(
            rows, index, [j](const GravityObservation& r) { return r.x[j]; }, std::string(kRegressorNames[j]));
    }
    if (include_response) {
        spec.response = moments(
            rows, index, [](const GravityObservation& r) { return r.response; }, "response");
    }
    return spec;
}

void apply_standardization(const StandardizationSpec& spec, std::span<GravityObservation> rows) {
    for (auto& r : rows) {
        for (std::size_t j = 0; j < kRegressorCount; ++j) {
            if (const auto& m = spec.regressors[j]) r.x[j] = (r.x[j] - m->mean) / m->sd;
        }
        if (spec.response) r.response = (r.response - spec.response->mean) / spec.response->sd;
    }
}

StandardizationSpec standardize(std::span<GravityObservation> rows, bool include_response) {
    auto spec = compute_standardization(rows, include_response);
    apply_standardization(spec, rows);
    return spec;
}

// ---------------------------------------------------------------------------

namespace {

struct DesignRow {
    std::array<double, kCoefficients> x;
    double y;
};

inline DesignRow design_row(const GravityObservation& r, const StandardizationSpec* spec) {
    DesignRow out;
    out.x[0] = 1.0;
    for (std::size_t j = 0; j < kRegressorCount; ++j) {
        double v = r.x[j];
        if (spec && spec->regressors[j]) v = (v - spec->regressors[j]->mean) / spec->regressors[j]->sd;
        out.x[j + 1] = v;
    }
    out.y = r.response;
    if (spec && spec->response) out.y = (out.y - spec->response->mean) / spec->response->sd;
    return out;
}

RegressionResult fit_rows(std::span<const GravityObservation> rows, const std::vector<std::uint32_t>* index,
                          const StandardizationSpec* spec, unsigned threads) {
    const std::size_t n = index ? index->size() : rows.size();
    auto row_at = [&](std::size_t i) -> const GravityObservation& { return index ? rows[(*index)[i]] : rows[i]; };

    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = row_at(i);
        if (!std::isfinite(r.response)) throw DataError("non-finite response in regression sample");
        for (double v : r.x) {
            if (!std::isfinite(v)) throw DataError("non-finite regressor in regression sample");
        }
    }

    // Partial accumulators merge exactly, so the split into blocks does not
    // change the result.
    const unsigned workers = std::max<unsigned>(1, std::min<std::size_t>(detail::resolve_threads(threads),
                                                                         std::max<std::size_t>(n / 4096, 1)));
    const std::size_t block = (n + workers - 1) / workers;

    std::vector<OlsAccumulator> parts(workers, OlsAccumulator(kCoefficients));
    detail::parallel_for(workers, workers, [&](std::size_t w0, std::size_t w1) {
        for (std::size_t w = w0; w < w1; ++w) {
            for (std::size_t i = w * block; i < std::min(n, (w + 1) * block); ++i) {
                const auto d = design_row(row_at(i), spec);
                parts[w].add(d.x, d.y);
            }
        }
    });
    for (std::size_t w = 1; w < parts.size(); ++w) parts[0].merge(parts[w]);

    auto names = coefficient_names();
    auto probe = solve_ols(parts[0], names);
    std::vector<double> beta;
    for (const auto& c : probe.coefficients) beta.push_back(c.beta);

    std::vector<ResidualAccumulator> resid(workers, ResidualAccumulator(beta));
    detail::parallel_for(workers, workers, [&](std::size_t w0, std::size_t w1) {
        for (std::size_t w = w0; w < w1; ++w) {
            for (std::size_t i = w * block; i < std::min(n, (w + 1) * block); ++i) {
                const auto d = design_row(row_at(i), spec);
                resid[w].add(d.x, d.y);
            }
        }
    });
    for (std::size_t w = 1; w < resid.size(); ++w) resid[0].merge(resid[w]);

    OlsSolveOptions options;
    options.rss = resid[0].rss();
    auto result = solve_ols(parts[0], names, options);
    result.orthogonality = resid[0].orthogonality();
    return result;
}

}  // namespace

RegressionResult fit_ols(std::span<const GravityObservation> rows) { return fit_rows(rows, nullptr, nullptr, 1); }

RegressionResult fit_gravity(std::span<const GravityObservation> rows, const FitOptions& options,
                             const std::vector<std::uint32_t>* index) {
    if (!options.standardize_regressors && !options.standardize_response) {
        return fit_rows(rows, index, nullptr, options.threads);
    }
    auto spec = compute_standardization(rows, options.standardize_response, index);
    if (!options.standardize_regressors) spec.regressors = {};
    return fit_rows(rows, index, &spec, options.threads);
}

// ---------------------------------------------------------------------------

ExporterClass classify_exporter(double rca, const ExporterThresholds& thresholds) {
    if (std::isnan(rca) || rca < 0.0) throw std::invalid_argument("RCA must be a non-negative number");
    if (rca < thresholds.new_below) return ExporterClass::New;
    if (rca <= thresholds.experienced_above) return ExporterClass::Nascent;
    return ExporterClass::Experienced;
}

std::string to_string(ExporterClass c) {
    switch (c) {
        case ExporterClass::New: return "new";
        case ExporterClass::Nascent: return "nascent";
        case ExporterClass::Experienced: return "experienced";
    }
    return "?";
}

LallCategory parse_lall_category(std::string_view code) {
    if (code == "PP") return LallCategory::Primary;
    if (code == "RB") return LallCategory::ResourceBased;
    if (code == "LT") return LallCategory::LowTech;
    if (code == "MT") return LallCategory::MediumTech;
    if (code == "HT") return LallCategory::HighTech;
    if (code == "SP") return LallCategory::Excluded;
    throw DataError("unknown technology category '" + std::string(code) + "'");
}

std::string to_string(LallCategory c) {
    switch (c) {
        case LallCategory::Primary: return "primary";
        case LallCategory::ResourceBased: return "resource_based";
        case LallCategory::LowTech: return "low_tech";
        case LallCategory::MediumTech: return "medium_tech";
        case LallCategory::HighTech: return "high_tech";
        case LallCategory::Excluded: return "excluded";
    }
    return "?";
}

namespace {

const char* category_code(LallCategory c) {
    switch (c) {
        case LallCategory::Primary: return "PP";
        case LallCategory::ResourceBased: return "RB";
        case LallCategory::LowTech: return "LT";
        case LallCategory::MediumTech: return "MT";
        case LallCategory::HighTech: return "HT";
        case LallCategory::Excluded: return "SP";
    }
    return "?";
}

}  // namespace

void LallConcordance::insert(const ProductCode& hs4, std::string sitc3, LallCategory category) {
    auto [it, inserted] = entries_.try_emplace(hs4, Entry{std::move(sitc3), category});
    if (!inserted && it->second.category != category) {
        throw DataError("conflicting technology categories for HS " + hs4.str() + ": " +
                        category_code(it->second.category) + " and " + category_code(category));
    }
}

const LallConcordance::Entry* LallConcordance::find(const ProductCode& hs4) const {
    auto it = entries_.find(hs4);
    return it == entries_.end() ? nullptr : &it->second;
}

LallConcordance parse_lall_csv(std::istream& in, const std::string& source_name) {
    csv::Reader reader(in, source_name);
    std::vector<std::string_view> fields;
    if (!reader.next(fields)) reader.fail("missing header");
    const auto col = csv::locate_columns(reader, fields, {"hs4", "sitc3", "category"});
    LallConcordance out;
    while (reader.next(fields)) {
        if (fields.size() < 3) reader.fail("expected 3 fields");
        const auto hs = ProductCode::parse(fields[col[0]]);
        if (!hs) reader.fail("invalid HS code '" + std::string(fields[col[0]]) + "'");
        LallCategory category;
        try {
            category = parse_lall_category(fields[col[2]]);
        } catch (const DataError& e) {
            reader.fail(e.what());
        }
        try {
            out.insert(*hs, std::string(fields[col[1]]), category);
        } catch (const DataError& e) {
            reader.fail(e.what());
        }
    }
    return out;
}

LallConcordance load_lall_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return parse_lall_csv(in, path.string());
}

void write_lall_csv(std::ostream& out, const LallConcordance& concordance) {
    out << "hs4,sitc3,category\n";
    concordance.for_each([&](const ProductCode& code, const LallConcordance::Entry& e) {
        out << code.str() << ',' << e.sitc3 << ',' << category_code(e.category) << '\n';
    });
}

LallCategory map_lall(const ProductCode& product, const LallConcordance& concordance) {
    const auto* e = concordance.find(product);
    if (!e) throw DataError("HS product " + product.str() + " is not in the technology concordance");
    return e->category;
}

std::vector<ProductCode> lall_coverage_report(std::span<const ProductCode> products,
                                              const LallConcordance& concordance) {
    std::vector<ProductCode> missing;
    for (const auto& p : products) {
        if (!concordance.find(p)) missing.push_back(p);
    }
    return missing;
}

// ---------------------------------------------------------------------------

SplitAssignment assign_exporter_classes(const GravityDataset& dataset, const RcaMatrix& rca,
                                        const ExporterThresholds& thresholds) {
    SplitAssignment out;
    for (auto c : {ExporterClass::New, ExporterClass::Nascent, ExporterClass::Experienced}) {
        out.keys.push_back(to_string(c));
    }
    out.key_of_row.reserve(dataset.rows.size());
    for (const auto& r : dataset.rows) {
        out.key_of_row.push_back(
            static_cast<std::int16_t>(classify_exporter(rca(r.origin, r.product), thresholds)));
    }
    return out;
}

SplitAssignment assign_lall_categories(const GravityDataset& dataset, const std::vector<ProductCode>& products,
                                       const LallConcordance& concordance) {
    std::vector<std::int16_t> by_product(products.size(), -1);
    std::vector<bool> used(products.size(), false);
    for (const auto& r : dataset.rows) used[r.product] = true;
    std::vector<ProductCode> wanted;
    for (std::size_t p = 0; p < products.size(); ++p) {
        if (used[p]) wanted.push_back(products[p]);
    }
    const auto missing = lall_coverage_report(wanted, concordance);
    if (!missing.empty()) {
        std::string what = std::to_string(missing.size()) + " product(s) missing from the technology concordance:";
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) what += " " + missing[i].str();
        if (missing.size() > 20) what += " ...";
        throw DataError(what);
    }
    for (std::size_t p = 0; p < products.size(); ++p) {
        if (!used[p]) continue;
        const auto c = map_lall(products[p], concordance);
        by_product[p] = c == LallCategory::Excluded ? -1 : static_cast<std::int16_t>(c);
    }

    SplitAssignment out;
    for (auto c : {LallCategory::Primary, LallCategory::ResourceBased, LallCategory::LowTech,
                   LallCategory::MediumTech, LallCategory::HighTech}) {
        out.keys.push_back(to_string(c));
    }
    out.key_of_row.reserve(dataset.rows.size());
    for (const auto& r : dataset.rows) out.key_of_row.push_back(by_product[r.product]);
    return out;
}

SplitRun run_split_regressions(const GravityDataset& dataset, const SplitAssignment& split,
                               const FitOptions& options) {
    if (split.key_of_row.size() != dataset.rows.size()) {
        throw std::invalid_argument("split assignment does not cover the dataset");
    }
    std::vector<std::vector<std::uint32_t>> members(split.keys.size());
    for (std::size_t i = 0; i < split.key_of_row.size(); ++i) {
        const auto k = split.key_of_row[i];
        if (k < 0) continue;
        if (static_cast<std::size_t>(k) >= members.size()) throw std::invalid_argument("split key out of range");
        members[static_cast<std::size_t>(k)].push_back(static_cast<std::uint32_t>(i));
    }

    SplitRun run;
    for (std::size_t k = 0; k < split.keys.size(); ++k) {
        const auto& key = split.keys[k];
        if (members[k].size() <= kCoefficients) {
            run.warnings.push_back("split '" + key + "' skipped: " + std::to_string(members[k].size()) +
                                   " rows, need more than " + std::to_string(kCoefficients));
            continue;
        }
        try {
            auto result = fit_gravity(dataset.rows, options, &members[k]);
            result.split_key = key;
            run.results.push_back(std::move(result));
        } catch (const DataError& e) {
            run.warnings.push_back("split '" + key + "' skipped: " + e.what());
        }
    }
    return run;
}

SplitRun run_period_regressions(const GravityInputs& inputs, std::span<const YearRange> periods,
                                const DatasetOptions& dataset_options, const FitOptions& options) {
    SplitRun run;
    for (const auto& period : periods) {
        const auto dataset = build_dataset(inputs, period, dataset_options);
        if (dataset.rows.size() <= kCoefficients) {
            run.warnings.push_back("period " + period.str() + " skipped: " + std::to_string(dataset.rows.size()) +
                                   " rows, need more than " + std::to_string(kCoefficients));
            continue;
        }
        try {
            auto result = fit_gravity(dataset.rows, options);
            result.split_key = period.str();
            run.results.push_back(std::move(result));
        } catch (const DataError& e) {
            run.warnings.push_back("period " + period.str() + " skipped: " + e.what());
        }
    }
    return run;
}

// ---------------------------------------------------------------------------

std::vector<SummaryRow> summary_stats(std::span<const GravityObservation> rows) {
    if (rows.empty()) throw DataError("summary statistics of an empty sample");
    const double n = static_cast<double>(rows.size());
    std::vector<SummaryRow> out;
    for (std::size_t j = 0; j < kRegressorCount; ++j) {
        SummaryRow s;
        s.variable = std::string(kRegressorNames[j]);
        s.n = rows.size();
        ExactSum sum;
        s.min = s.max = rows.front().x[j];
        for (const auto& r : rows) {
            sum.add(r.x[j]);
            s.min = std::min(s.min, r.x[j]);
            s.max = std::max(s.max, r.x[j]);
        }
        s.mean = sum.value() / n;
        ExactSum sq;
        for (const auto& r : rows) {
            const double c = r.x[j] - s.mean;
            sq.add(c * c);
        }
        s.sd = rows.size() > 1 ? std::sqrt(sq.value() / (n - 1.0)) : 0.0;
        s.zero_variance = !(s.sd > 0.0);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<double> correlation_matrix(std::span<const GravityObservation> rows) {
    constexpr std::size_t k = kRegressorCount;
    if (rows.size() < 2) throw DataError("correlation needs at least two observations");
    std::array<double, k> mean{};
    for (std::size_t j = 0; j < k; ++j) {
        ExactSum s;
        for (const auto& r : rows) s.add(r.x[j]);
        mean[j] = s.value() / static_cast<double>(rows.size());
    }
    std::vector<ExactSum> cross(k * (k + 1) / 2);
    std::array<double, k> c{};
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < k; ++j) c[j] = r.x[j] - mean[j];
        std::size_t slot = 0;
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i; j < k; ++j) cross[slot++].add(c[i] * c[j]);
        }
    }
    std::vector<double> cov(k * k);
    std::size_t slot = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) cov[i * k + j] = cov[j * k + i] = cross[slot++].value();
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (!(cov[j * k + j] > 0.0)) {
            throw DataError("column '" + std::string(kRegressorNames[j]) + "' has zero variance");
        }
    }
    std::vector<double> corr(k * k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            corr[i * k + j] = i == j ? 1.0 : cov[i * k + j] / std::sqrt(cov[i * k + i] * cov[j * k + j]);
        }
    }
    return corr;
}

}  // namespace tradespill
