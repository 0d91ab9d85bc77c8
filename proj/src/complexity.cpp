#include "tradespill/complexity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

#include "csv.hpp"
#include "parallel.hpp"
#include "tradespill/error.hpp"
#include "tradespill/exact_sum.hpp"

namespace tradespill {

RcaMatrix::RcaMatrix(std::vector<CountryCode> countries, std::vector<ProductCode> products,
                     YearRange window, std::vector<double> values, std::vector<bool> active)
    : countries_(std::move(countries)),
      products_(std::move(products)),
      window_(window),
      values_(std::move(values)),
      active_(std::move(active)) {
    if (values_.size() != countries_.size() * products_.size() || active_.size() != countries_.size()) {
        throw std::invalid_argument("RcaMatrix: shape mismatch");
    }
}

RcaMatrix compute_rca(const TradeTensor& tensor, YearRange window) {
    if (window.empty()) throw DataError("RCA window is empty");
    const auto nc = tensor.country_count();
    const auto np = tensor.product_count();

    std::vector<double> exports(nc * np, 0.0);
    bool any = false;
    for (int year : tensor.years()) {
        if (!window.contains(year)) continue;
        for (const auto& c : tensor.cells(year)) {
            exports[c.origin * np + c.product] += c.value;
            any = true;
        }
    }
    if (!any) throw DataError("no trade flows in RCA window " + window.str());

    std::vector<double> country_total(nc, 0.0);
    std::vector<double> product_total(np, 0.0);
    ExactSum world;
    for (std::size_t o = 0; o < nc; ++o) {
        for (std::size_t p = 0; p < np; ++p) {
            const double x = exports[o * np + p];
            country_total[o] += x;
            product_total[p] += x;
            world.add(x);
        }
    }
    const double world_total = world.value();

    std::vector<double> rca(nc * np, 0.0);
    std::vector<bool> active(nc, false);
    for (std::size_t o = 0; o < nc; ++o) {
        if (!(country_total[o] > 0.0)) continue;
        active[o] = true;
        for (std::size_t p = 0; p < np; ++p) {
            const double x = exports[o * np + p];
            if (x == 0.0) continue;
            const double country_share = x / country_total[o];
            const double world_share = product_total[p] / world_total;
            rca[o * np + p] = country_share / world_share;
        }
    }
    return RcaMatrix(tensor.countries(), tensor.products(), window, std::move(rca), std::move(active));
}

AdvantageMatrix::AdvantageMatrix(std::vector<ProductCode> products, std::size_t countries,
                                 std::vector<std::uint8_t> entries, double threshold)
    : products_(std::move(products)), countries_(countries), entries_(std::move(entries)), threshold_(threshold) {
    if (entries_.size() != countries_ * products_.size()) {
        throw std::invalid_argument("AdvantageMatrix: shape mismatch");
    }
}

AdvantageMatrix binarize(const RcaMatrix& rca, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("binarization threshold must be positive");
    const auto values = rca.values();
    std::vector<std::uint8_t> entries(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) entries[i] = values[i] >= threshold ? 1 : 0;
    return AdvantageMatrix(rca.products(), rca.countries().size(), std::move(entries), threshold);
}

ProximityMatrix::ProximityMatrix(std::vector<ProductCode> products, std::vector<double> phi)
    : products_(std::move(products)), phi_(std::move(phi)), marginals_(products_.size(), 0.0) {
    const auto n = products_.size();
    if (phi_.size() != n * n) throw std::invalid_argument("ProximityMatrix: shape mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (phi_[i * n + i] != 0.0) {
            throw DataError("proximity diagonal must be zero (product " + products_[i].str() + ")");
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double v = phi_[i * n + j];
            if (!(v >= 0.0 && v <= 1.0)) {
                throw DataError("proximity out of [0,1] for " + products_[i].str() + "," +
                                products_[j].str());
            }
            if (v != phi_[j * n + i]) {
                throw DataError("proximity not symmetric for " + products_[i].str() + "," +
                                products_[j].str());
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += phi_[i * n + j];
        marginals_[i] = sum;
    }
}

ProximityMatrix compute_proximity(const AdvantageMatrix& m, unsigned threads) {
    const auto nc = m.country_count();
    const auto np = m.product_count();
    if (np == 0) throw DataError("advantage matrix has no products");

    // One bitset over countries per product.
    const std::size_t words = (nc + 63) / 64;
    std::vector<std::uint64_t> bits(np * words, 0);
    std::vector<std::uint32_t> ubiquity(np, 0);
    for (std::size_t o = 0; o < nc; ++o) {
        for (std::size_t p = 0; p < np; ++p) {
            if (m(o, p)) {
                bits[p * words + o / 64] |= std::uint64_t{1} << (o % 64);
                ++ubiquity[p];
            }
        }
    }

    std::vector<double> phi(np * np, 0.0);
    detail::parallel_for(np, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto* bi = &bits[i * words];
            for (std::size_t j = 0; j < np; ++j) {
                if (j == i) continue;
                const auto denom = std::max(ubiquity[i], ubiquity[j]);
                if (ubiquity[i] == 0 || ubiquity[j] == 0) continue;
                const auto* bj = &bits[j * words];
                std::uint32_t joint = 0;
                for (std::size_t w = 0; w < words; ++w) joint += std::popcount(bi[w] & bj[w]);
                phi[i * np + j] = static_cast<double>(joint) / static_cast<double>(denom);
            }
        }
    });
    return ProximityMatrix(m.products(), std::move(phi));
}

std::vector<ProductEdge> export_product_space(const ProximityMatrix& phi, double cutoff) {
    if (!(cutoff >= 0.0)) throw std::invalid_argument("cutoff must be non-negative");
    std::vector<ProductEdge> edges;
    const auto n = phi.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (phi(i, j) >= cutoff) {
                edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), phi(i, j)});
            }
        }
    }
    return edges;
}

std::vector<HistogramBin> proximity_histogram(const ProximityMatrix& phi, std::size_t bins) {
    if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
    std::vector<HistogramBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].lower = static_cast<double>(b) / static_cast<double>(bins);
        out[b].upper = static_cast<double>(b + 1) / static_cast<double>(bins);
    }
    std::size_t total = 0;
    const auto n = phi.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            auto b = static_cast<std::size_t>(phi(i, j) * static_cast<double>(bins));
            out[std::min(b, bins - 1)].count += 1;
            ++total;
        }
    }
    std::size_t running = 0;
    for (auto& bin : out) {
        running += bin.count;
        bin.cumulative_fraction = total ? static_cast<double>(running) / static_cast<double>(total) : 0.0;
    }
    return out;
}

void write_edges_csv(std::ostream& out, const ProximityMatrix& phi, std::span<const ProductEdge> edges) {
    out << "product_i,product_j,phi\n";
    const auto& products = phi.products();
    for (const auto& e : edges) {
        out << products[e.i].view() << ',' << products[e.j].view() << ',' << csv::fixed(e.phi, 6) << '\n';
    }
}

void write_histogram_csv(std::ostream& out, std::span<const HistogramBin> bins) {
    out << "bin_lower,bin_upper,count,cumulative_fraction\n";
    for (const auto& b : bins) {
        out << csv::fixed(b.lower, 6) << ',' << csv::fixed(b.upper, 6) << ',' << b.count << ','
            << csv::fixed(b.cumulative_fraction, 6) << '\n';
    }
}

ProximityMatrix read_proximity_csv(std::istream& in, const std::string& source_name) {
    csv::Reader reader(in, source_name);
    std::vector<std::string_view> fields;
    if (!reader.next(fields)) throw DataError(source_name + ": missing header row");
    const auto col = csv::locate_columns(reader, fields, {"product_i", "product_j", "phi"});
    const std::size_t width = fields.size();

    std::vector<std::tuple<ProductCode, ProductCode, double>> triplets;
    std::vector<ProductCode> products;
    while (reader.next(fields)) {
        if (fields.size() != width) reader.fail("wrong number of fields");
        const auto a = ProductCode::parse(fields[col[0]]);
        const auto b = ProductCode::parse(fields[col[1]]);
        if (!a || !b) reader.fail("invalid product code");
        if (*a == *b) reader.fail("self-proximity row for " + a->str());
        const double v = reader.number(fields[col[2]], "phi");
        if (v < 0.0 || v > 1.0) reader.fail("phi outside [0,1]");
        triplets.emplace_back(*a, *b, v);
        products.push_back(*a);
        products.push_back(*b);
    }
    std::sort(products.begin(), products.end());
    products.erase(std::unique(products.begin(), products.end()), products.end());
    const auto n = products.size();
    auto index = [&](const ProductCode& c) {
        return static_cast<std::size_t>(std::lower_bound(products.begin(), products.end(), c) - products.begin());
    };
    std::vector<double> phi(n * n, 0.0);
    for (const auto& [a, b, v] : triplets) {
        const auto i = index(a), j = index(b);
        phi[i * n + j] = v;
        phi[j * n + i] = v;
    }
    return ProximityMatrix(std::move(products), std::move(phi));
}

void write_rca_csv(std::ostream& out, const RcaMatrix& rca) {
    out << "country,product,rca\n";
    const auto& countries = rca.countries();
    const auto& products = rca.products();
    for (std::size_t o = 0; o < countries.size(); ++o) {
        if (!rca.active(o)) continue;
        for (std::size_t p = 0; p < products.size(); ++p) {
            const double v = rca(o, p);
            if (v > 0.0) out << countries[o].view() << ',' << products[p].view() << ',' << csv::significant(v, 10) << '\n';
        }
    }
}

}  // namespace tradespill
