#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "tradespill/codes.hpp"
#include "tradespill/complexity.hpp"
#include "tradespill/ingest.hpp"
#include "tradespill/trade_tensor.hpp"

namespace tradespill {

/// Row-stochastic inverse-distance weights over a country vocabulary:
/// w(c, c') = (1/D_cc') / sum_{c'' != c} 1/D_cc'', with w(c, c) = 0.
class DistanceWeights {
public:
    DistanceWeights() = default;

    /// Throws DataError naming the first pair missing from `dyads`.
    static DistanceWeights from_dyads(const std::vector<CountryCode>& countries, const DyadTable& dyads);
    /// `distance_km` is a row-major n x n matrix; the diagonal is ignored.
    static DistanceWeights from_distances(std::size_t n, std::span<const double> distance_km);

    double operator()(std::size_t c, std::size_t other) const { return w_[c * n_ + other]; }
    std::span<const double> row(std::size_t c) const {
        return std::span<const double>(w_).subspan(c * n_, n_);
    }
    std::size_t size() const { return n_; }

private:
    std::size_t n_ = 0;
    std::vector<double> w_;
};

/// The three relatedness measures of one (origin, product, destination) cell.
/// A measure is NaN where it is undefined: omega when the product has no
/// usable proximity row, the others when their denominator is zero.
struct RelatednessRow {
    std::uint32_t origin = 0;
    std::uint32_t product = 0;
    std::uint32_t destination = 0;
    double omega = 0.0;
    double omega_d = 0.0;
    double omega_o = 0.0;
};

/// Relatedness for one year, rows sorted by (origin, product, destination).
struct RelatednessTable {
    int year = 0;
    std::vector<RelatednessRow> rows;
    /// Tensor product indices whose omega could not be computed because the
    /// proximity matrix gives them phi_p = 0 or does not list them.
    std::vector<std::uint32_t> skipped_products;
};

struct RelatednessOptions {
    /// Evaluate every (o, p, d) with o != d instead of only active cells.
    bool dense = false;
    unsigned threads = 1;
};

/// omega_opd = sum_{p' != p} (phi_pp' / phi_p) * (x_op'd / x_od), one value per
/// cell of `tensor.cells(year)` (same order). NaN for skipped products.
std::vector<double> product_relatedness(const TradeTensor& tensor, const ProximityMatrix& phi, int year,
                                        unsigned threads = 1);

/// Omega^(d)_opd = sum_{d' != d} w(d, d') * (x_opd' / x_op), aligned with
/// `tensor.cells(year)`.
std::vector<double> importer_relatedness(const TradeTensor& tensor, const DistanceWeights& weights, int year,
                                         unsigned threads = 1);

/// Omega^(o)_opd = sum_{o' != o} w(o, o') * (x_o'pd / x_pd), aligned with
/// `tensor.cells(year)`.
std::vector<double> exporter_relatedness(const TradeTensor& tensor, const DistanceWeights& weights, int year,
                                         unsigned threads = 1);

/// All three measures for a year. Every defined value is checked to lie in
/// [0, 1] (std::logic_error otherwise).
RelatednessTable compute_relatedness(const TradeTensor& tensor, const ProximityMatrix& phi,
                                     const DistanceWeights& weights, int year,
                                     const RelatednessOptions& options = {});

/// `year,origin,product,destination,omega,omega_d,omega_o`, 10 significant
/// digits, NA for undefined values.
void write_relatedness_csv(std::ostream& out, const TradeTensor& tensor, std::span<const RelatednessTable> tables);

/// Reads relatedness rows back, resolving codes against `tensor`. Rows
/// naming codes outside the tensor vocabulary are an error.
std::vector<RelatednessTable> read_relatedness_csv(std::istream& in, const std::string& source_name,
                                                   const TradeTensor& tensor);

}  // namespace tradespill
