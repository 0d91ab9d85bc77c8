#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tradespill/codes.hpp"

namespace tradespill {

/// One stored flow x_opd for a year, with dense country/product indices.
struct TradeCell {
    std::uint32_t origin = 0;
    std::uint32_t product = 0;
    std::uint32_t destination = 0;
    double value = 0.0;
};

/// Dense per-year marginals of the trade tensor.
///   exports_to(o, d)  = x_od = sum_p x_opd
///   product_exports(o, p) = x_op = sum_d x_opd
///   product_imports(p, d) = x_pd = sum_o x_opd
class YearMarginals {
public:
    YearMarginals() = default;
    YearMarginals(std::size_t countries, std::size_t products, std::span<const TradeCell> cells);

    double x_od(std::uint32_t o, std::uint32_t d) const { return od_[o * countries_ + d]; }
    double x_op(std::uint32_t o, std::uint32_t p) const { return op_[o * products_ + p]; }
    double x_pd(std::uint32_t p, std::uint32_t d) const { return pd_[p * countries_ + d]; }

    bool operator==(const YearMarginals&) const = default;

private:
    std::size_t countries_ = 0;
    std::size_t products_ = 0;
    std::vector<double> od_;
    std::vector<double> op_;
    std::vector<double> pd_;
};

/// Immutable sparse panel of bilateral product flows, year -> (o, p, d) -> USD.
///
/// Vocabularies are frozen at construction: countries and products are sorted
/// by code and addressed by dense indices. Only strictly positive values are
/// stored; cells of each year are sorted by (origin, product, destination).
class TradeTensor {
public:
    TradeTensor() = default;

    /// Builds a tensor from indexed cells. Duplicate cells within a year are
    /// summed and non-positive values are dropped. Throws DataError on
    /// out-of-range indices, self flows or non-finite values.
    TradeTensor(std::vector<CountryCode> countries, std::vector<ProductCode> products,
                std::map<int, std::vector<TradeCell>> cells_by_year);

    const std::vector<CountryCode>& countries() const { return countries_; }
    const std::vector<ProductCode>& products() const { return products_; }
    std::vector<int> years() const;

    std::size_t country_count() const { return countries_.size(); }
    std::size_t product_count() const { return products_.size(); }

    bool has_year(int year) const { return slices_.count(year) != 0; }
    /// Cells of a year, sorted by (origin, product, destination); empty if absent.
    std::span<const TradeCell> cells(int year) const;
    /// Marginals of a year; throws DataError if the year is absent.
    const YearMarginals& marginals(int year) const;

    /// x_opd, or 0 when the cell is absent.
    double value(int year, std::uint32_t o, std::uint32_t p, std::uint32_t d) const;

    std::optional<std::uint32_t> country_index(const CountryCode& code) const;
    std::optional<std::uint32_t> product_index(const ProductCode& code) const;

    std::size_t cell_count() const;
    double total_value() const;

private:
    struct Slice {
        std::vector<TradeCell> cells;
        YearMarginals marginals;
    };

    std::vector<CountryCode> countries_;
    std::vector<ProductCode> products_;
    std::map<int, Slice> slices_;
};

}  // namespace tradespill
