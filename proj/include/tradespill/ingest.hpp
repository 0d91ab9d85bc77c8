#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tradespill/codes.hpp"
#include "tradespill/trade_tensor.hpp"

namespace tradespill {

enum class Reporter : std::uint8_t { Exporter, Importer };

/// One raw line of the trade CSV, as reported by one side of the flow.
struct TradeFlowRecord {
    int year = 0;
    CountryCode origin;
    CountryCode destination;
    ProductCode product;
    double value = 0.0;
    Reporter reporter = Reporter::Exporter;

    bool operator==(const TradeFlowRecord&) const = default;
};

/// Header names for each trade CSV field. The defaults match the canonical
/// `year,origin,destination,product,value,reporter` layout; column order in
/// the file is free.
struct TradeCsvSchema {
    std::string year = "year";
    std::string origin = "origin";
    std::string destination = "destination";
    std::string product = "product";
    std::string value = "value";
    std::string reporter = "reporter";
};

/// A row that parsed but was set aside; `reason` is a stable machine code.
struct RejectedRow {
    std::size_t line = 0;
    std::string reason;
    std::string raw;
};

namespace reject_reason {
inline constexpr const char* kBadCountry = "bad_country";
inline constexpr const char* kUnknownCountry = "unknown_country";
inline constexpr const char* kBadProduct = "bad_product";
inline constexpr const char* kUnknownProduct = "unknown_product";
inline constexpr const char* kSelfFlow = "self_flow";
}  // namespace reject_reason

struct TradeLoadOptions {
    TradeCsvSchema schema;
    /// When set, countries outside the set are rejected as unknown.
    std::optional<std::set<CountryCode>> known_countries;
    /// When set, products outside the set are rejected as unknown.
    std::optional<std::set<ProductCode>> known_products;
};

struct TradeLoad {
    std::vector<TradeFlowRecord> records;
    std::vector<RejectedRow> rejects;
    std::size_t rows_read = 0;
    std::size_t zero_dropped = 0;
};

/// Parses a trade CSV. Malformed rows (bad field count, unparsable or
/// negative numbers, unknown reporter) throw ParseError with the line
/// number; structurally valid rows with invalid codes go to `rejects`.
TradeLoad load_trade_csv(const std::filesystem::path& path, const TradeLoadOptions& options = {});
TradeLoad parse_trade_csv(std::istream& in, const std::string& source_name,
                          const TradeLoadOptions& options = {});

void write_rejects_csv(std::ostream& out, const std::vector<RejectedRow>& rejects);

/// Writes cells in the trade CSV layout, one exporter-reported row per cell,
/// with values printed to round-trip exactly.
void write_tensor_csv(std::ostream& out, const TradeTensor& tensor);

enum class ReconcilePolicy : std::uint8_t { ImporterPriority, ExporterPriority, Max, Mean };

ReconcilePolicy parse_reconcile_policy(std::string_view text);
std::string to_string(ReconcilePolicy policy);

/// Per-cell provenance counts. `both` and `discrepant_both` are disjoint.
struct ReconcileAudit {
    std::size_t exporter_only = 0;
    std::size_t importer_only = 0;
    std::size_t both = 0;
    std::size_t discrepant_both = 0;

    bool operator==(const ReconcileAudit&) const = default;
};

struct Reconciled {
    TradeTensor tensor;
    ReconcileAudit audit;
};

/// Collapses exporter- and importer-reported records into one value per
/// (year, origin, product, destination). Repeated reports from the same side
/// are summed before the policy is applied. Result is independent of the
/// order of `records`.
Reconciled reconcile(const std::vector<TradeFlowRecord>& records,
                     ReconcilePolicy policy = ReconcilePolicy::ImporterPriority);

// ---------------------------------------------------------------------------
// Covariate tables

struct CountryYear {
    double population = 0.0;
    double gdp_per_capita = 0.0;
};

/// Country covariates keyed by (code, year).
class CountryTable {
public:
    void insert(const CountryCode& code, int year, CountryYear row);
    const CountryYear* find(const CountryCode& code, int year) const;
    bool contains(const CountryCode& code) const { return rows_.count(code) != 0; }
    std::set<CountryCode> codes() const;
    std::size_t size() const;

    template <class F>
    void for_each(F&& f) const {
        for (const auto& [code, years] : rows_) {
            for (const auto& [year, row] : years) f(code, year, row);
        }
    }

private:
    std::map<CountryCode, std::map<int, CountryYear>> rows_;
};

/// Reads `code,year,population,gdp_per_capita`. Population and GDP must be
/// positive; duplicate (code, year) rows are an error.
CountryTable load_country_csv(const std::filesystem::path& path);
CountryTable parse_country_csv(std::istream& in, const std::string& source_name);
void write_country_csv(std::ostream& out, const CountryTable& table);

struct DyadRecord {
    double distance_km = 0.0;
    bool border = false;
    bool colony = false;
    bool language = false;
    double lang_proximity = 0.0;

    bool operator==(const DyadRecord&) const = default;
};

/// Symmetric pairwise covariates. Lookups are order-insensitive.
class DyadTable {
public:
    /// Throws DataError for a == b, non-positive distance, negative language
    /// proximity, or a conflicting record for the same unordered pair.
    void insert(const CountryCode& a, const CountryCode& b, const DyadRecord& record);
    const DyadRecord* find(const CountryCode& a, const CountryCode& b) const;
    std::size_t size() const { return rows_.size(); }

    template <class F>
    void for_each(F&& f) const {
        for (const auto& [key, rec] : rows_) f(key.first, key.second, rec);
    }

private:
    std::map<std::pair<CountryCode, CountryCode>, DyadRecord> rows_;
};

/// Reads `country_a,country_b,distance_km,border,colony,language,lang_proximity`.
DyadTable load_dyad_csv(const std::filesystem::path& path);
DyadTable parse_dyad_csv(std::istream& in, const std::string& source_name);
void write_dyad_csv(std::ostream& out, const DyadTable& table);

// ---------------------------------------------------------------------------
// Country exclusion

struct FilterConfig {
    double min_population = 1.2e6;
    double min_trade = 1e9;
    int trade_year = 2008;
    /// Year at which population is checked; defaults to the first year present.
    std::optional<int> population_year;
    std::vector<CountryCode> exclude = {CountryCode::from("IRQ"), CountryCode::from("TCD"),
                                        CountryCode::from("MAC")};
    bool apply_population_rule = true;
    bool apply_trade_rule = true;
};

struct RemovedCountry {
    CountryCode code;
    std::string reason;  // "excluded", "population", "trade"
};

struct FilterResult {
    TradeTensor tensor;
    std::vector<RemovedCountry> removed;
};

/// Drops small or explicitly excluded countries, as origin and destination,
/// and re-indexes the country vocabulary over the survivors.
FilterResult filter_countries(const TradeTensor& tensor, const CountryTable& meta,
                              const FilterConfig& rules = {});

}  // namespace tradespill
