#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "tradespill/codes.hpp"
#include "tradespill/trade_tensor.hpp"

namespace tradespill {

/// Balassa revealed comparative advantage, country x product, pooled over a
/// window of years. Rows of countries with no exports in the window are
/// inactive and hold zeros.
class RcaMatrix {
public:
    RcaMatrix() = default;
    RcaMatrix(std::vector<CountryCode> countries, std::vector<ProductCode> products, YearRange window,
              std::vector<double> values, std::vector<bool> active);

    double operator()(std::size_t country, std::size_t product) const {
        return values_[country * products_.size() + product];
    }
    bool active(std::size_t country) const { return active_[country]; }

    const std::vector<CountryCode>& countries() const { return countries_; }
    const std::vector<ProductCode>& products() const { return products_; }
    const YearRange& window() const { return window_; }
    std::span<const double> values() const { return values_; }

private:
    std::vector<CountryCode> countries_;
    std::vector<ProductCode> products_;
    YearRange window_;
    std::vector<double> values_;
    std::vector<bool> active_;
};

/// RCA_op = (x_op / sum_p x_op) / (sum_o x_op / sum_op x_op), with x_op summed
/// over destinations and over every year in `window`. Throws DataError when
/// the window holds no flows.
RcaMatrix compute_rca(const TradeTensor& tensor, YearRange window);

/// Binary country x product matrix M with M_op = 1 iff RCA_op >= threshold.
class AdvantageMatrix {
public:
    AdvantageMatrix() = default;
    AdvantageMatrix(std::vector<ProductCode> products, std::size_t countries,
                    std::vector<std::uint8_t> entries, double threshold);

    bool operator()(std::size_t country, std::size_t product) const {
        return entries_[country * products_.size() + product] != 0;
    }
    std::size_t country_count() const { return countries_; }
    std::size_t product_count() const { return products_.size(); }
    const std::vector<ProductCode>& products() const { return products_; }
    double threshold() const { return threshold_; }

private:
    std::vector<ProductCode> products_;
    std::size_t countries_ = 0;
    std::vector<std::uint8_t> entries_;
    double threshold_ = 1.0;
};

/// Throws std::invalid_argument unless threshold > 0.
AdvantageMatrix binarize(const RcaMatrix& rca, double threshold = 1.0);

/// Symmetric product x product proximity phi in [0, 1] with zero diagonal,
/// plus the row sums phi_p used to normalise product relatedness.
class ProximityMatrix {
public:
    ProximityMatrix() = default;
    /// `phi` is row-major n x n. Throws DataError if it is not symmetric,
    /// leaves [0, 1], or has a non-zero diagonal.
    ProximityMatrix(std::vector<ProductCode> products, std::vector<double> phi);

    double operator()(std::size_t i, std::size_t j) const { return phi_[i * products_.size() + j]; }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(phi_).subspan(i * products_.size(), products_.size());
    }
    double marginal(std::size_t i) const { return marginals_[i]; }
    std::size_t size() const { return products_.size(); }
    const std::vector<ProductCode>& products() const { return products_; }

private:
    std::vector<ProductCode> products_;
    std::vector<double> phi_;
    std::vector<double> marginals_;
};

/// phi_ij = |{o : M_oi = M_oj = 1}| / max(|{o : M_oi}|, |{o : M_oj}|), i.e. the
/// smaller of the two conditional co-advantage probabilities. Pairs where
/// either product has zero ubiquity get 0. `threads` = 0 picks the hardware
/// concurrency; the result does not depend on it.
ProximityMatrix compute_proximity(const AdvantageMatrix& advantage, unsigned threads = 1);

struct ProductEdge {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    double phi = 0.0;
};

/// Pairs i < j with phi_ij >= cutoff. Throws std::invalid_argument unless
/// 0 <= cutoff.
std::vector<ProductEdge> export_product_space(const ProximityMatrix& phi, double cutoff);

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double cumulative_fraction = 0.0;
};

/// Distribution of phi over all pairs i < j on `bins` equal-width bins of
/// [0, 1]; the last bin is closed on the right.
std::vector<HistogramBin> proximity_histogram(const ProximityMatrix& phi, std::size_t bins = 50);

/// `product_i,product_j,phi` with phi printed to 6 decimals.
void write_edges_csv(std::ostream& out, const ProximityMatrix& phi, std::span<const ProductEdge> edges);
/// `bin_lower,bin_upper,count,cumulative_fraction`.
void write_histogram_csv(std::ostream& out, std::span<const HistogramBin> bins);
/// Reads an edge CSV back into a full matrix; missing pairs are 0. The
/// product vocabulary is the union of products named in the file.
ProximityMatrix read_proximity_csv(std::istream& in, const std::string& source_name);

/// `country,product,rca` for every active cell with RCA > 0.
void write_rca_csv(std::ostream& out, const RcaMatrix& rca);

}  // namespace tradespill
