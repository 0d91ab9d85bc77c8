#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tradespill/codes.hpp"
#include "tradespill/complexity.hpp"
#include "tradespill/ingest.hpp"
#include "tradespill/ols.hpp"
#include "tradespill/relatedness.hpp"
#include "tradespill/trade_tensor.hpp"

namespace tradespill {

// ---------------------------------------------------------------------------
// Regression rows

inline constexpr std::size_t kRegressorCount = 15;

/// Regressor order of the extended gravity equation; the constant comes first
/// in every coefficient list.
enum Regressor : std::size_t {
    kOmega,
    kOmegaImporter,
    kOmegaExporter,
    kLogFlow,
    kLogProductExports,
    kLogProductImports,
    kLogDistance,
    kLogGdpOrigin,
    kLogGdpDestination,
    kLogPopOrigin,
    kLogPopDestination,
    kBorder,
    kColony,
    kLanguage,
    kLogLangProximity,
};

inline constexpr std::array<std::string_view, kRegressorCount> kRegressorNames = {
    "omega",     "omega_d",   "omega_o",   "log_x_opd", "log_x_op",    "log_x_pd",     "log_distance",
    "log_gdp_o", "log_gdp_d", "log_pop_o", "log_pop_d", "border",      "colony",       "language",
    "log_lang_proximity"};

inline constexpr bool is_binary(std::size_t regressor) {
    return regressor == kBorder || regressor == kColony || regressor == kLanguage;
}

/// Coefficient names: "constant" followed by kRegressorNames.
std::vector<std::string> coefficient_names();

/// One (t, o, p, d) row: log flow two years ahead and the 15 regressors at t.
struct GravityObservation {
    std::int32_t year = 0;
    std::uint32_t origin = 0;
    std::uint32_t product = 0;
    std::uint32_t destination = 0;
    double response = 0.0;
    std::array<double, kRegressorCount> x{};
};

enum class ZeroPolicy : std::uint8_t {
    /// Keep only cells still trading at t + horizon; response log(x).
    Drop,
    /// Keep exits too; response log(1 + x).
    Log1p,
};

struct DatasetOptions {
    int horizon = 2;
    ZeroPolicy zeros = ZeroPolicy::Drop;
};

struct GravityInputs {
    const TradeTensor& tensor;
    std::span<const RelatednessTable> relatedness;
    const CountryTable& countries;
    const DyadTable& dyads;
};

struct GravityDataset {
    YearRange period;
    std::vector<int> base_years;  // every t pooled into the sample
    std::vector<GravityObservation> rows;
    std::size_t dropped_exits = 0;
    std::size_t dropped_undefined = 0;
};

/// Pools all cross-sections t in `period` with t + horizon also in `period`
/// and present in the data. Rows come from cells active at t; covariates are
/// taken at t. Throws DataError naming the key when a relatedness row,
/// country covariate or dyad needed by a sampled row is missing.
GravityDataset build_dataset(const GravityInputs& inputs, YearRange period, const DatasetOptions& options = {});

// ---------------------------------------------------------------------------
// Standardisation

struct ColumnMoments {
    double mean = 0.0;
    double sd = 1.0;
};

/// Moments of every continuous column (binary columns have none).
struct StandardizationSpec {
    std::array<std::optional<ColumnMoments>, kRegressorCount> regressors{};
    std::optional<ColumnMoments> response;
};

/// Sample (n - 1) moments over `rows` (or over `rows[index]` when given).
/// Throws DataError naming any continuous column with zero variance.
StandardizationSpec compute_standardization(std::span<const GravityObservation> rows, bool include_response,
                                            const std::vector<std::uint32_t>* index = nullptr);

void apply_standardization(const StandardizationSpec& spec, std::span<GravityObservation> rows);

/// Z-scores every continuous regressor (and the response when asked) in
/// place; binary columns are untouched.
StandardizationSpec standardize(std::span<GravityObservation> rows, bool include_response = false);

// ---------------------------------------------------------------------------
// Fitting

/// OLS of response on a constant plus the 15 regressors, as stored.
RegressionResult fit_ols(std::span<const GravityObservation> rows);

struct FitOptions {
    bool standardize_regressors = true;
    bool standardize_response = false;
    /// Workers for accumulation; 0 picks the hardware concurrency. The
    /// result does not depend on it.
    unsigned threads = 1;
};

/// Standardises within the selected rows (all rows when `index` is null)
/// on the fly, then fits. `rows` is not modified.
RegressionResult fit_gravity(std::span<const GravityObservation> rows, const FitOptions& options = {},
                             const std::vector<std::uint32_t>* index = nullptr);

// ---------------------------------------------------------------------------
// Exporter experience and technology classes

enum class ExporterClass : std::uint8_t { New, Nascent, Experienced };

struct ExporterThresholds {
    double new_below = 0.2;
    double experienced_above = 1.0;
};

/// New below 0.2, Nascent on [0.2, 1], Experienced above 1. Throws
/// std::invalid_argument for negative or NaN input.
ExporterClass classify_exporter(double rca, const ExporterThresholds& thresholds = {});
std::string to_string(ExporterClass c);

enum class LallCategory : std::uint8_t { Primary, ResourceBased, LowTech, MediumTech, HighTech, Excluded };

/// Two-letter codes PP, RB, LT, MT, HT, SP (special transactions -> Excluded).
LallCategory parse_lall_category(std::string_view code);
std::string to_string(LallCategory c);

/// HS-4 -> (SITC rev 2 three-digit group, technology category).
class LallConcordance {
public:
    struct Entry {
        std::string sitc3;
        LallCategory category = LallCategory::Excluded;
    };

    /// An HS code may appear on several rows only if they agree on the
    /// category; otherwise DataError.
    void insert(const ProductCode& hs4, std::string sitc3, LallCategory category);
    const Entry* find(const ProductCode& hs4) const;
    std::size_t size() const { return entries_.size(); }

    template <class F>
    void for_each(F&& f) const {
        for (const auto& [code, e] : entries_) f(code, e);
    }

private:
    std::map<ProductCode, Entry> entries_;
};

/// Reads `hs4,sitc3,category`.
LallConcordance load_lall_csv(const std::filesystem::path& path);
LallConcordance parse_lall_csv(std::istream& in, const std::string& source_name);
void write_lall_csv(std::ostream& out, const LallConcordance& concordance);

/// Throws DataError for products missing from the concordance.
LallCategory map_lall(const ProductCode& product, const LallConcordance& concordance);
/// Products of `products` that the concordance does not map.
std::vector<ProductCode> lall_coverage_report(std::span<const ProductCode> products,
                                              const LallConcordance& concordance);

// ---------------------------------------------------------------------------
// Split regressions

/// Ordered split keys and the key of each dataset row (-1 drops the row).
struct SplitAssignment {
    std::vector<std::string> keys;
    std::vector<std::int16_t> key_of_row;
};

/// Classes from RCA of (origin, product) in `rca`.
SplitAssignment assign_exporter_classes(const GravityDataset& dataset, const RcaMatrix& rca,
                                        const ExporterThresholds& thresholds = {});
/// Five technology categories in increasing sophistication; Excluded rows
/// dropped. Throws DataError listing unmapped products.
SplitAssignment assign_lall_categories(const GravityDataset& dataset, const std::vector<ProductCode>& products,
                                       const LallConcordance& concordance);

struct SplitRun {
    std::vector<RegressionResult> results;
    std::vector<std::string> warnings;
};

/// One regression per key, each standardised within its own sample. Cells
/// that are too small or degenerate are skipped with a warning.
SplitRun run_split_regressions(const GravityDataset& dataset, const SplitAssignment& split,
                               const FitOptions& options = {});

/// One dataset and regression per period.
SplitRun run_period_regressions(const GravityInputs& inputs, std::span<const YearRange> periods,
                                const DatasetOptions& dataset_options = {}, const FitOptions& options = {});

// ---------------------------------------------------------------------------
// Descriptive tables

struct SummaryRow {
    std::string variable;
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double max = 0.0;
    bool zero_variance = false;
};

/// N, mean, sample sd, min and max of each regressor.
std::vector<SummaryRow> summary_stats(std::span<const GravityObservation> rows);

/// Pearson correlations of the 15 regressors, row-major 15 x 15 with unit
/// diagonal. Throws DataError naming any zero-variance column.
std::vector<double> correlation_matrix(std::span<const GravityObservation> rows);

// ---------------------------------------------------------------------------
// Trend across technology categories

struct TrendEstimate {
    double beta = 0.0;
    double se = 0.0;
};

struct TrendResult {
    double intercept = 0.0;
    double slope = 0.0;
    double se = 0.0;
    double t = 0.0;
    double p = 1.0;
    bool significant = false;
};

/// Weighted least-squares line through five coefficients against their
/// category rank 1..5, weights 1/se^2. The slope variance is scaled by the
/// weighted residual variance and tested against t with 3 degrees of
/// freedom; significant iff p < alpha. Throws std::invalid_argument unless
/// there are exactly five estimates with positive SEs.
TrendResult trend_test(std::span<const TrendEstimate> estimates, double alpha = 0.1);

struct TrendRow {
    std::string variable;
    TrendResult trend;
};

/// Trend of each coefficient over five category regressions given in rank
/// order (e.g. the output of a Lall split).
std::vector<TrendRow> coefficient_trends(std::span<const RegressionResult> by_rank, double alpha = 0.1);

}  // namespace tradespill
