#include "tradespill/trade_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tradespill/error.hpp"
#include "tradespill/exact_sum.hpp"

namespace tradespill {

YearMarginals::YearMarginals(std::size_t countries, std::size_t products,
                             std::span<const TradeCell> cells)
    : countries_(countries),
      products_(products),
      od_(countries * countries, 0.0),
      op_(countries * products, 0.0),
      pd_(products * countries, 0.0) {
    for (const auto& c : cells) {
        od_[c.origin * countries_ + c.destination] += c.value;
        op_[c.origin * products_ + c.product] += c.value;
        pd_[c.product * countries_ + c.destination] += c.value;
    }
}

namespace {

bool cell_less(const TradeCell& a, const TradeCell& b) {
    if (a.origin != b.origin) return a.origin < b.origin;
    if (a.product != b.product) return a.product < b.product;
    return a.destination < b.destination;
}

bool same_cell(const TradeCell& a, const TradeCell& b) {
    return a.origin == b.origin && a.product == b.product && a.destination == b.destination;
}

template <class Code>
void require_sorted_unique(const std::vector<Code>& codes, const char* what) {
    for (std::size_t i = 1; i < codes.size(); ++i) {
        if (!(codes[i - 1] < codes[i])) {
            throw DataError(std::string(what) + " vocabulary must be sorted and unique (at '" +
                            codes[i].str() + "')");
        }
    }
}

}  // namespace

TradeTensor::TradeTensor(std::vector<CountryCode> countries, std::vector<ProductCode> products,
                         std::map<int, std::vector<TradeCell>> cells_by_year)
    : countries_(std::move(countries)), products_(std::move(products)) {
    require_sorted_unique(countries_, "country");
    require_sorted_unique(products_, "product");

    const auto n_countries = countries_.size();
    const auto n_products = products_.size();
    for (auto& [year, cells] : cells_by_year) {
        for (const auto& c : cells) {
            if (c.origin >= n_countries || c.destination >= n_countries || c.product >= n_products) {
                throw DataError("trade cell index out of range in year " + std::to_string(year));
            }
            if (c.origin == c.destination) {
                throw DataError("self flow for " + countries_[c.origin].str() + " in year " +
                                std::to_string(year));
            }
            if (!std::isfinite(c.value)) {
                throw DataError("non-finite trade value in year " + std::to_string(year));
            }
        }
        std::sort(cells.begin(), cells.end(), cell_less);

        std::vector<TradeCell> merged;
        merged.reserve(cells.size());
        for (const auto& c : cells) {
            if (!merged.empty() && same_cell(merged.back(), c)) {
                merged.back().value += c.value;
            } else {
                merged.push_back(c);
            }
        }
        std::erase_if(merged, [](const TradeCell& c) { return !(c.value > 0.0); });
        std::vector<TradeCell>().swap(cells);
        if (merged.empty()) continue;

        Slice slice;
        slice.marginals = YearMarginals(n_countries, n_products, merged);
        slice.cells = std::move(merged);
        slices_.emplace(year, std::move(slice));
    }
}

std::vector<int> TradeTensor::years() const {
    std::vector<int> out;
    out.reserve(slices_.size());
    for (const auto& [year, _] : slices_) out.push_back(year);
    return out;
}

std::span<const TradeCell> TradeTensor::cells(int year) const {
    auto it = slices_.find(year);
    if (it == slices_.end()) return {};
    return it->second.cells;
}

const YearMarginals& TradeTensor::marginals(int year) const {
    auto it = slices_.find(year);
    if (it == slices_.end()) throw DataError("year " + std::to_string(year) + " not in trade data");
    return it->second.marginals;
}

double TradeTensor::value(int year, std::uint32_t o, std::uint32_t p, std::uint32_t d) const {
    const auto cells = this->cells(year);
    const TradeCell key{o, p, d, 0.0};
    auto it = std::lower_bound(cells.begin(), cells.end(), key, cell_less);
    if (it != cells.end() && same_cell(*it, key)) return it->value;
    return 0.0;
}

std::optional<std::uint32_t> TradeTensor::country_index(const CountryCode& code) const {
    auto it = std::lower_bound(countries_.begin(), countries_.end(), code);
    if (it == countries_.end() || *it != code) return std::nullopt;
    return static_cast<std::uint32_t>(it - countries_.begin());
}

std::optional<std::uint32_t> TradeTensor::product_index(const ProductCode& code) const {
    auto it = std::lower_bound(products_.begin(), products_.end(), code);
    if (it == products_.end() || *it != code) return std::nullopt;
    return static_cast<std::uint32_t>(it - products_.begin());
}

std::size_t TradeTensor::cell_count() const {
    std::size_t n = 0;
    for (const auto& [_, slice] : slices_) n += slice.cells.size();
    return n;
}

double TradeTensor::total_value() const {
    ExactSum total;
    for (const auto& [_, slice] : slices_) {
        for (const auto& c : slice.cells) total.add(c.value);
    }
    return total.value();
}

}  // namespace tradespill
