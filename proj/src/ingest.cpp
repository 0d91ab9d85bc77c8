#include "tradespill/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "csv.hpp"
#include "tradespill/error.hpp"

namespace tradespill {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file " + path.string());
    return in;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c; };
        if (lower(a[i]) != lower(b[i])) return false;
    }
    return true;
}

}  // namespace

TradeLoad parse_trade_csv(std::istream& in, const std::string& source_name,
                          const TradeLoadOptions& options) {
    csv::Reader reader(in, source_name);
    std::vector<std::string_view> fields;
    if (!reader.next(fields)) throw DataError(source_name + ": missing header row");

    const auto& s = options.schema;
    const auto col = csv::locate_columns(
        reader, fields, {s.year, s.origin, s.destination, s.product, s.value, s.reporter});
    const std::size_t width = fields.size();

    TradeLoad out;
    while (reader.next(fields)) {
        ++out.rows_read;
        if (fields.size() != width) {
            reader.fail("expected " + std::to_string(width) + " fields, found " +
                        std::to_string(fields.size()));
        }
        TradeFlowRecord rec;
        rec.year = reader.integer(fields[col[0]], "year");
        rec.value = reader.number(fields[col[4]], "value");
        if (rec.value < 0.0) reader.fail("negative trade value '" + std::string(fields[col[4]]) + "'");

        const auto reporter = fields[col[5]];
        if (iequals(reporter, "exporter")) {
            rec.reporter = Reporter::Exporter;
        } else if (iequals(reporter, "importer")) {
            rec.reporter = Reporter::Importer;
        } else {
            reader.fail("unknown reporter '" + std::string(reporter) + "'");
        }

        auto reject = [&](const char* reason) {
            out.rejects.push_back({reader.line(), reason, std::string(reader.raw())});
        };
        const auto origin = CountryCode::parse(fields[col[1]]);
        const auto destination = CountryCode::parse(fields[col[2]]);
        if (!origin || !destination) {
            reject(reject_reason::kBadCountry);
            continue;
        }
        if (options.known_countries && (!options.known_countries->count(*origin) ||
                                        !options.known_countries->count(*destination))) {
            reject(reject_reason::kUnknownCountry);
            continue;
        }
        const auto product = ProductCode::parse(fields[col[3]]);
        if (!product) {
            reject(reject_reason::kBadProduct);
            continue;
        }
        if (options.known_products && !options.known_products->count(*product)) {
            reject(reject_reason::kUnknownProduct);
            continue;
        }
        if (*origin == *destination) {
            reject(reject_reason::kSelfFlow);
            continue;
        }
        if (rec.value == 0.0) {
            ++out.zero_dropped;
            continue;
        }
        rec.origin = *origin;
        rec.destination = *destination;
        rec.product = *product;
        out.records.push_back(rec);
    }
    return out;
}

TradeLoad load_trade_csv(const std::filesystem::path& path, const TradeLoadOptions& options) {
    auto in = open_input(path);
    return parse_trade_csv(in, path.string(), options);
}

void write_rejects_csv(std::ostream& out, const std::vector<RejectedRow>& rejects) {
    out << "line,reason,row\n";
    for (const auto& r : rejects) {
        // the raw row goes last and is quoted since it contains commas
        std::string quoted;
        quoted.reserve(r.raw.size() + 2);
        quoted += '"';
        for (char c : r.raw) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        quoted += '"';
        out << r.line << ',' << r.reason << ',' << quoted << '\n';
    }
}

void write_tensor_csv(std::ostream& out, const TradeTensor& tensor) {
    out << "year,origin,destination,product,value,reporter\n";
    const auto& countries = tensor.countries();
    const auto& products = tensor.products();
    for (int year : tensor.years()) {
        for (const auto& c : tensor.cells(year)) {
            out << year << ',' << countries[c.origin].view() << ',' << countries[c.destination].view()
                << ',' << products[c.product].view() << ',' << csv::exact(c.value) << ",exporter\n";
        }
    }
}

// ---------------------------------------------------------------------------

ReconcilePolicy parse_reconcile_policy(std::string_view text) {
    if (text == "importer" || text == "importer-priority") return ReconcilePolicy::ImporterPriority;
    if (text == "exporter" || text == "exporter-priority") return ReconcilePolicy::ExporterPriority;
    if (text == "max") return ReconcilePolicy::Max;
    if (text == "mean") return ReconcilePolicy::Mean;
    throw DataError("unknown reconciliation policy '" + std::string(text) + "'");
}

std::string to_string(ReconcilePolicy policy) {
    switch (policy) {
        case ReconcilePolicy::ImporterPriority: return "importer";
        case ReconcilePolicy::ExporterPriority: return "exporter";
        case ReconcilePolicy::Max: return "max";
        case ReconcilePolicy::Mean: return "mean";
    }
    return "?";
}

namespace {

template <class Code>
std::uint32_t index_of(const std::vector<Code>& vocab, const Code& code) {
    return static_cast<std::uint32_t>(std::lower_bound(vocab.begin(), vocab.end(), code) -
                                      vocab.begin());
}

struct Report {
    int year;
    std::uint32_t origin;
    std::uint32_t product;
    std::uint32_t destination;
    Reporter reporter;
    double value;

    auto key() const { return std::tie(year, origin, product, destination); }
};

}  // namespace

Reconciled reconcile(const std::vector<TradeFlowRecord>& records, ReconcilePolicy policy) {
    std::vector<CountryCode> countries;
    std::vector<ProductCode> products;
    countries.reserve(records.size() * 2);
    for (const auto& r : records) {
        countries.push_back(r.origin);
        countries.push_back(r.destination);
        products.push_back(r.product);
    }
    std::sort(countries.begin(), countries.end());
    countries.erase(std::unique(countries.begin(), countries.end()), countries.end());
    std::sort(products.begin(), products.end());
    products.erase(std::unique(products.begin(), products.end()), products.end());

    std::vector<Report> reports;
    reports.reserve(records.size());
    for (const auto& r : records) {
        reports.push_back({r.year, index_of(countries, r.origin), index_of(products, r.product),
                           index_of(countries, r.destination), r.reporter, r.value});
    }
    // Sorting on the value as well fixes the summation order of repeated
    // reports, so the result does not depend on input order.
    std::sort(reports.begin(), reports.end(), [](const Report& a, const Report& b) {
        if (a.key() != b.key()) return a.key() < b.key();
        if (a.reporter != b.reporter) return a.reporter < b.reporter;
        return a.value < b.value;
    });

    Reconciled out;
    std::map<int, std::vector<TradeCell>> cells;
    for (std::size_t i = 0; i < reports.size();) {
        std::size_t j = i;
        double exported = 0.0, imported = 0.0;
        bool has_exporter = false, has_importer = false;
        while (j < reports.size() && reports[j].key() == reports[i].key()) {
            if (reports[j].reporter == Reporter::Exporter) {
                exported += reports[j].value;
                has_exporter = true;
            } else {
                imported += reports[j].value;
                has_importer = true;
            }
            ++j;
        }

        double value = 0.0;
        if (has_exporter && has_importer) {
            if (exported == imported) {
                ++out.audit.both;
            } else {
                ++out.audit.discrepant_both;
            }
            switch (policy) {
                case ReconcilePolicy::ImporterPriority: value = imported; break;
                case ReconcilePolicy::ExporterPriority: value = exported; break;
                case ReconcilePolicy::Max: value = std::max(exported, imported); break;
                case ReconcilePolicy::Mean: value = 0.5 * (exported + imported); break;
            }
        } else if (has_exporter) {
            ++out.audit.exporter_only;
            value = exported;
        } else {
            ++out.audit.importer_only;
            value = imported;
        }

        const auto& r = reports[i];
        cells[r.year].push_back({r.origin, r.product, r.destination, value});
        i = j;
    }
    std::vector<Report>().swap(reports);

    out.tensor = TradeTensor(std::move(countries), std::move(products), std::move(cells));
    return out;
}

// ---------------------------------------------------------------------------

void CountryTable::insert(const CountryCode& code, int year, CountryYear row) {
    if (!(row.population > 0.0) || !std::isfinite(row.population)) {
        throw DataError("population must be positive for " + code.str() + " in " +
                        std::to_string(year));
    }
    if (!(row.gdp_per_capita > 0.0) || !std::isfinite(row.gdp_per_capita)) {
        throw DataError("gdp_per_capita must be positive for " + code.str() + " in " +
                        std::to_string(year));
    }
    auto [it, inserted] = rows_[code].emplace(year, row);
    if (!inserted) {
        throw DataError("duplicate country row for " + code.str() + " in " + std::to_string(year));
    }
}

const CountryYear* CountryTable::find(const CountryCode& code, int year) const {
    auto it = rows_.find(code);
    if (it == rows_.end()) return nullptr;
    auto jt = it->second.find(year);
    return jt == it->second.end() ? nullptr : &jt->second;
}

std::set<CountryCode> CountryTable::codes() const {
    std::set<CountryCode> out;
    for (const auto& [code, _] : rows_) out.insert(code);
    return out;
}

std::size_t CountryTable::size() const {
    std::size_t n = 0;
    for (const auto& [_, years] : rows_) n += years.size();
    return n;
}

CountryTable parse_country_csv(std::istream& in, const std::string& source_name) {
    csv::Reader reader(in, source_name);
    std::vector<std::string_view> fields;
    if (!reader.next(fields)) throw DataError(source_name + ": missing header row");
    const auto col = csv::locate_columns(reader, fields, {"code", "year", "population", "gdp_per_capita"});
    const std::size_t width = fields.size();

    CountryTable table;
    while (reader.next(fields)) {
        if (fields.size() != width) reader.fail("wrong number of fields");
        const auto code = CountryCode::parse(fields[col[0]]);
        if (!code) reader.fail("invalid country code '" + std::string(fields[col[0]]) + "'");
        const int year = reader.integer(fields[col[1]], "year");
        CountryYear row{reader.number(fields[col[2]], "population"),
                        reader.number(fields[col[3]], "gdp_per_capita")};
        try {
            table.insert(*code, year, row);
        } catch (const DataError& e) {
            reader.fail(e.what());
        }
    }
    return table;
}

CountryTable load_country_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_country_csv(in, path.string());
}

void write_country_csv(std::ostream& out, const CountryTable& table) {
    out << "code,year,population,gdp_per_capita\n";
    table.for_each([&](const CountryCode& code, int year, const CountryYear& row) {
        out << code.view() << ',' << year << ',' << csv::exact(row.population) << ','
            << csv::exact(row.gdp_per_capita) << '\n';
    });
}

// ---------------------------------------------------------------------------

void DyadTable::insert(const CountryCode& a, const CountryCode& b, const DyadRecord& record) {
    if (a == b) throw DataError("dyad row pairs " + a.str() + " with itself");
    if (!(record.distance_km > 0.0) || !std::isfinite(record.distance_km)) {
        throw DataError("distance must be positive for " + a.str() + "-" + b.str());
    }
    if (!(record.lang_proximity >= 0.0) || !std::isfinite(record.lang_proximity)) {
        throw DataError("lang_proximity must be non-negative for " + a.str() + "-" + b.str());
    }
    const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto [it, inserted] = rows_.emplace(key, record);
    if (!inserted && !(it->second == record)) {
        throw DataError("conflicting dyad rows for " + a.str() + "-" + b.str());
    }
}

const DyadRecord* DyadTable::find(const CountryCode& a, const CountryCode& b) const {
    const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = rows_.find(key);
    return it == rows_.end() ? nullptr : &it->second;
}

DyadTable parse_dyad_csv(std::istream& in, const std::string& source_name) {
    csv::Reader reader(in, source_name);
    std::vector<std::string_view> fields;
    if (!reader.next(fields)) throw DataError(source_name + ": missing header row");
    const auto col = csv::locate_columns(
        reader, fields,
        {"country_a", "country_b", "distance_km", "border", "colony", "language", "lang_proximity"});
    const std::size_t width = fields.size();

    DyadTable table;
    while (reader.next(fields)) {
        if (fields.size() != width) reader.fail("wrong number of fields");
        const auto a = CountryCode::parse(fields[col[0]]);
        const auto b = CountryCode::parse(fields[col[1]]);
        if (!a || !b) reader.fail("invalid country code");
        DyadRecord rec;
        rec.distance_km = reader.number(fields[col[2]], "distance_km");
        rec.border = reader.flag(fields[col[3]], "border");
        rec.colony = reader.flag(fields[col[4]], "colony");
        rec.language = reader.flag(fields[col[5]], "language");
        rec.lang_proximity = reader.number(fields[col[6]], "lang_proximity");
        try {
            table.insert(*a, *b, rec);
        } catch (const DataError& e) {
            reader.fail(e.what());
        }
    }
    return table;
}

DyadTable load_dyad_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_dyad_csv(in, path.string());
}

void write_dyad_csv(std::ostream& out, const DyadTable& table) {
    out << "country_a,country_b,distance_km,border,colony,language,lang_proximity\n";
    table.for_each([&](const CountryCode& a, const CountryCode& b, const DyadRecord& r) {
        out << a.view() << ',' << b.view() << ',' << csv::exact(r.distance_km) << ','
            << int(r.border) << ',' << int(r.colony) << ',' << int(r.language) << ','
            << csv::exact(r.lang_proximity) << '\n';
    });
}

// ---------------------------------------------------------------------------

FilterResult filter_countries(const TradeTensor& tensor, const CountryTable& meta,
                              const FilterConfig& rules) {
    const auto& countries = tensor.countries();
    const auto n = countries.size();
    std::vector<std::string> reason(n);

    for (std::size_t c = 0; c < n; ++c) {
        if (std::find(rules.exclude.begin(), rules.exclude.end(), countries[c]) != rules.exclude.end()) {
            reason[c] = "excluded";
        }
    }

    const auto years = tensor.years();
    if (rules.apply_population_rule && !years.empty()) {
        const int year = rules.population_year.value_or(years.front());
        for (std::size_t c = 0; c < n; ++c) {
            const auto* row = meta.find(countries[c], year);
            if (!row) {
                throw DataError("country " + countries[c].str() + " has no covariates for " +
                                std::to_string(year));
            }
            if (reason[c].empty() && row->population < rules.min_population) reason[c] = "population";
        }
    }

    if (rules.apply_trade_rule) {
        if (!tensor.has_year(rules.trade_year)) {
            throw DataError("trade-volume rule needs year " + std::to_string(rules.trade_year) +
                            ", which is not in the trade data");
        }
        std::vector<double> volume(n, 0.0);
        for (const auto& cell : tensor.cells(rules.trade_year)) {
            volume[cell.origin] += cell.value;
            volume[cell.destination] += cell.value;
        }
        for (std::size_t c = 0; c < n; ++c) {
            if (reason[c].empty() && volume[c] < rules.min_trade) reason[c] = "trade";
        }
    }

    FilterResult out;
    std::vector<CountryCode> kept;
    std::vector<std::uint32_t> remap(n, UINT32_MAX);
    for (std::size_t c = 0; c < n; ++c) {
        if (reason[c].empty()) {
            remap[c] = static_cast<std::uint32_t>(kept.size());
            kept.push_back(countries[c]);
        } else {
            out.removed.push_back({countries[c], reason[c]});
        }
    }

    std::map<int, std::vector<TradeCell>> cells;
    for (int year : years) {
        auto& dst = cells[year];
        for (const auto& cell : tensor.cells(year)) {
            const auto o = remap[cell.origin];
            const auto d = remap[cell.destination];
            if (o == UINT32_MAX || d == UINT32_MAX) continue;
            dst.push_back({o, cell.product, d, cell.value});
        }
    }
    out.tensor = TradeTensor(std::move(kept), tensor.products(), std::move(cells));
    return out;
}

}  // namespace tradespill
