#pragma once

// Synthetic worlds with a known data-generating process, and deliberately
// naive reference implementations to check the production code against.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tradespill/complexity.hpp"
#include "tradespill/gravity.hpp"
#include "tradespill/ingest.hpp"
#include "tradespill/ols.hpp"
#include "tradespill/relatedness.hpp"
#include "tradespill/trade_tensor.hpp"

namespace tradespill::oracle {

/// Seeded mt19937_64 with hand-rolled transforms, so a seed yields the same
/// stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    bool bernoulli(double p) { return uniform() < p; }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
    /// Standard normal by Box-Muller (both variates used).
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

/// Constant followed by the 15 regressors, on the raw (unstandardised) scale.
using PlantedBeta = std::array<double, kRegressorCount + 1>;

/// A moderate, stable choice of raw-scale coefficients.
PlantedBeta default_planted_beta();

struct SyntheticWorldConfig {
    int n_countries = 8;
    int n_products = 12;
    /// Years generated, starting at first_year. The first `horizon` years are
    /// drawn log-normally; each later year t + horizon follows the gravity
    /// equation evaluated at t.
    int n_years = 4;
    int first_year = 2000;
    int horizon = 2;
    /// Row-major n x n distances in km; random cities on a sphere when absent.
    std::optional<std::vector<double>> distances_km;
    PlantedBeta planted_beta = default_planted_beta();
    double noise_sigma = 1.0;
    /// Fraction of (o, p, d), o != d, cells active in the drawn years.
    double sparsity = 0.5;
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

struct SyntheticWorld {
    SyntheticWorldConfig config;
    TradeTensor tensor;
    CountryTable countries;
    DyadTable dyads;
    LallConcordance lall;
    std::vector<double> distances_km;
    /// Window the proximity matrix was pooled over (the drawn years).
    YearRange proximity_window;
    /// All generated years.
    YearRange period;
    /// Proximity used to generate later years, rounded to 6 decimals exactly
    /// as the edge CSV stores it.
    ProximityMatrix proximity;
};

/// Throws std::invalid_argument for an invalid configuration.
SyntheticWorld generate_world(const SyntheticWorldConfig& config);

/// Standardised-scale coefficients implied by the raw planted ones for a
/// sample with the given moments: slope_j * sd_j for continuous columns, and
/// the constant shifted by sum_j slope_j * mean_j.
PlantedBeta standardized_beta(const PlantedBeta& raw, const StandardizationSpec& spec);

struct WorldFiles {
    std::filesystem::path trade;
    std::filesystem::path countries;
    std::filesystem::path dyads;
    std::filesystem::path lall;
    std::filesystem::path planted;
};

/// Writes trade.csv, countries.csv, dyads.csv, lall.csv and planted.json into
/// `dir`. Part of the flows are reported by both sides, with the exporter
/// figure perturbed, so only importer-priority reconciliation recovers the
/// generated tensor exactly.
WorldFiles write_world(const std::filesystem::path& dir, const SyntheticWorld& world);

// ---------------------------------------------------------------------------
// Reference implementations

/// Literal nested-loop evaluation of the three relatedness measures for every
/// active cell of `year`, rows sorted by (origin, product, destination).
/// Weights are rebuilt from the row-major distance matrix. Undefined values
/// are NaN.
std::vector<RelatednessRow> brute_force_relatedness(const TradeTensor& tensor, const ProximityMatrix& phi,
                                                    std::span<const double> distances_km, int year);

/// min(P(i | j), P(j | i)) over countries, straight from the definition.
std::vector<double> brute_force_proximity(const std::vector<std::vector<bool>>& advantage);

/// Dense least squares via explicit inversion of the Gram matrix by
/// Gauss-Jordan elimination with full pivoting. `design` is row-major n x k;
/// column 0 is taken to be the constant when `intercept_first`. Throws
/// DataError on a singular design.
RegressionResult brute_force_ols(std::span<const double> design, std::span<const double> y, std::size_t k,
                                 const std::vector<std::string>& names, bool intercept_first = true);

/// Same, on gravity rows with a constant prepended (regressors as stored).
RegressionResult brute_force_ols(std::span<const GravityObservation> rows);

}  // namespace tradespill::oracle
