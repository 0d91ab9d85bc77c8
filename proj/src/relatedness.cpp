#include "tradespill/relatedness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "csv.hpp"
#include "parallel.hpp"
#include "tradespill/error.hpp"

namespace tradespill {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kBoundSlack = 1e-12;

}  // namespace

DistanceWeights DistanceWeights::from_distances(std::size_t n, std::span<const double> distance_km) {
    if (distance_km.size() != n * n) throw std::invalid_argument("distance matrix shape mismatch");
    DistanceWeights out;
    out.n_ = n;
    out.w_.assign(n * n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == c) continue;
            const double d = distance_km[c * n + k];
            if (!(d > 0.0) || !std::isfinite(d)) {
                throw DataError("distance must be positive between countries " + std::to_string(c) +
                                " and " + std::to_string(k));
            }
            out.w_[c * n + k] = 1.0 / d;
            total += 1.0 / d;
        }
        if (total > 0.0) {
            for (std::size_t k = 0; k < n; ++k) out.w_[c * n + k] /= total;
        }
    }
    return out;
}

DistanceWeights DistanceWeights::from_dyads(const std::vector<CountryCode>& countries, const DyadTable& dyads) {
    const auto n = countries.size();
    std::vector<double> distance(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const auto* rec = dyads.find(countries[a], countries[b]);
            if (!rec) {
                throw DataError("missing distance for country pair " + countries[a].str() + "-" +
                                countries[b].str());
            }
            distance[a * n + b] = distance[b * n + a] = rec->distance_km;
        }
    }
    return from_distances(n, distance);
}

namespace {

/// Cell indices of a year regrouped by a key, preserving cell order inside
/// each group, plus the group boundaries.
struct Grouping {
    std::vector<std::uint32_t> order;
    std::vector<std::size_t> bounds;  // group g is order[bounds[g], bounds[g+1])
};

template <class KeyFn>
Grouping group_cells(std::span<const TradeCell> cells, std::size_t key_count, KeyFn key) {
    std::vector<std::size_t> start(key_count + 1, 0);
    for (const auto& c : cells) ++start[key(c) + 1];
    for (std::size_t k = 0; k < key_count; ++k) start[k + 1] += start[k];

    Grouping g;
    g.order.resize(cells.size());
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        g.order[fill[key(cells[i])]++] = static_cast<std::uint32_t>(i);
    }
    g.bounds.push_back(0);
    for (std::size_t k = 0; k < key_count; ++k) {
        if (start[k + 1] > start[k]) g.bounds.push_back(start[k + 1]);
    }
    return g;
}

/// Groups of consecutive cells sharing (origin, product).
Grouping contiguous_op_groups(std::span<const TradeCell> cells) {
    Grouping g;
    g.order.resize(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) g.order[i] = static_cast<std::uint32_t>(i);
    g.bounds.push_back(0);
    for (std::size_t i = 1; i <= cells.size(); ++i) {
        if (i == cells.size() || cells[i].origin != cells[i - 1].origin ||
            cells[i].product != cells[i - 1].product) {
            g.bounds.push_back(i);
        }
    }
    if (cells.empty()) g.bounds.assign(1, 0);
    return g;
}

std::vector<std::int64_t> map_products(const TradeTensor& tensor, const ProximityMatrix& phi) {
    std::vector<std::int64_t> to_phi(tensor.product_count(), -1);
    const auto& have = phi.products();
    for (std::size_t p = 0; p < tensor.product_count(); ++p) {
        auto it = std::lower_bound(have.begin(), have.end(), tensor.products()[p]);
        if (it != have.end() && *it == tensor.products()[p]) to_phi[p] = it - have.begin();
    }
    return to_phi;
}

void check_year(const TradeTensor& tensor, int year) {
    if (!tensor.has_year(year)) throw DataError("year " + std::to_string(year) + " not in trade data");
}

}  // namespace

std::vector<double> product_relatedness(const TradeTensor& tensor, const ProximityMatrix& phi, int year,
                                        unsigned threads) {
    check_year(tensor, year);
    const auto cells = tensor.cells(year);
    const auto& margins = tensor.marginals(year);
    const auto nc = tensor.country_count();
    const auto to_phi = map_products(tensor, phi);

    const auto groups = group_cells(cells, nc * nc, [nc](const TradeCell& c) {
        return static_cast<std::size_t>(c.origin) * nc + c.destination;
    });
    std::vector<double> out(cells.size(), kNaN);
    detail::parallel_for(groups.bounds.size() - 1, threads, [&](std::size_t g0, std::size_t g1) {
        for (std::size_t g = g0; g < g1; ++g) {
            const auto begin = groups.bounds[g], end = groups.bounds[g + 1];
            const auto& head = cells[groups.order[begin]];
            const double x_od = margins.x_od(head.origin, head.destination);
            for (auto a = begin; a < end; ++a) {
                const auto i = groups.order[a];
                const auto pi = to_phi[cells[i].product];
                if (pi < 0 || !(phi.marginal(pi) > 0.0)) continue;
                const auto row = phi.row(pi);
                double sum = 0.0;
                for (auto b = begin; b < end; ++b) {
                    if (b == a) continue;
                    const auto& other = cells[groups.order[b]];
                    const auto pj = to_phi[other.product];
                    if (pj < 0) continue;
                    sum += row[pj] * other.value;
                }
                out[i] = sum / (phi.marginal(pi) * x_od);
            }
        }
    });
    return out;
}

namespace {

/// Shared kernel of the two geographic measures: for each cell in a group,
/// the weight-averaged value of the other cells in the group over `total`.
template <class MemberFn, class TotalFn>
std::vector<double> neighbour_share(std::span<const TradeCell> cells, const Grouping& groups,
                                    const DistanceWeights& weights, MemberFn member, TotalFn total,
                                    unsigned threads) {
    std::vector<double> out(cells.size(), kNaN);
    detail::parallel_for(groups.bounds.size() - 1, threads, [&](std::size_t g0, std::size_t g1) {
        for (std::size_t g = g0; g < g1; ++g) {
            const auto begin = groups.bounds[g], end = groups.bounds[g + 1];
            const double denom = total(cells[groups.order[begin]]);
            for (auto a = begin; a < end; ++a) {
                const auto i = groups.order[a];
                const auto w = weights.row(member(cells[i]));
                double sum = 0.0;
                for (auto b = begin; b < end; ++b) {
                    if (b == a) continue;
                    const auto& other = cells[groups.order[b]];
                    sum += w[member(other)] * other.value;
                }
                out[i] = sum / denom;
            }
        }
    });
    return out;
}

}  // namespace

std::vector<double> importer_relatedness(const TradeTensor& tensor, const DistanceWeights& weights, int year,
                                         unsigned threads) {
    check_year(tensor, year);
    if (weights.size() != tensor.country_count()) throw DataError("distance weights do not match countries");
    const auto cells = tensor.cells(year);
    const auto& margins = tensor.marginals(year);
    return neighbour_share(
        cells, contiguous_op_groups(cells), weights, [](const TradeCell& c) { return c.destination; },
        [&](const TradeCell& c) { return margins.x_op(c.origin, c.product); }, threads);
}

std::vector<double> exporter_relatedness(const TradeTensor& tensor, const DistanceWeights& weights, int year,
                                         unsigned threads) {
    check_year(tensor, year);
    if (weights.size() != tensor.country_count()) throw DataError("distance weights do not match countries");
    const auto cells = tensor.cells(year);
    const auto& margins = tensor.marginals(year);
    const auto nc = tensor.country_count();
    const auto groups = group_cells(cells, tensor.product_count() * nc, [nc](const TradeCell& c) {
        return static_cast<std::size_t>(c.product) * nc + c.destination;
    });
    return neighbour_share(
        cells, groups, weights, [](const TradeCell& c) { return c.origin; },
        [&](const TradeCell& c) { return margins.x_pd(c.product, c.destination); }, threads);
}

namespace {

void check_bounds(const RelatednessRow& r, const TradeTensor& tensor, int year) {
    for (double v : {r.omega, r.omega_d, r.omega_o}) {
        if (std::isnan(v)) continue;
        if (!(v >= 0.0 && v <= 1.0 + kBoundSlack)) {
            throw std::logic_error("relatedness outside [0,1] for " + tensor.countries()[r.origin].str() + "/" +
                                   tensor.products()[r.product].str() + "/" +
                                   tensor.countries()[r.destination].str() + " in " + std::to_string(year));
        }
    }
}

std::vector<std::uint32_t> skipped_products(const TradeTensor& tensor, const ProximityMatrix& phi) {
    std::vector<std::uint32_t> out;
    const auto to_phi = map_products(tensor, phi);
    for (std::size_t p = 0; p < to_phi.size(); ++p) {
        if (to_phi[p] < 0 || !(phi.marginal(to_phi[p]) > 0.0)) out.push_back(static_cast<std::uint32_t>(p));
    }
    return out;
}

/// Dense evaluation: every (o, p, d) with o != d, measures computed from the
/// active cells of the relevant group and NaN where a denominator vanishes.
RelatednessTable dense_relatedness(const TradeTensor& tensor, const ProximityMatrix& phi,
                                   const DistanceWeights& weights, int year) {
    const auto cells = tensor.cells(year);
    const auto& m = tensor.marginals(year);
    const auto nc = tensor.country_count();
    const auto np = tensor.product_count();
    const auto to_phi = map_products(tensor, phi);
    auto at = [&](std::size_t o, std::size_t p, std::size_t d) { return (o * np + p) * nc + d; };

    std::vector<double> omega(nc * np * nc, kNaN), omega_d(nc * np * nc, kNaN), omega_o(nc * np * nc, kNaN);

    const auto by_od = group_cells(cells, nc * nc, [nc](const TradeCell& c) {
        return static_cast<std::size_t>(c.origin) * nc + c.destination;
    });
    for (std::size_t g = 0; g + 1 < by_od.bounds.size(); ++g) {
        const auto begin = by_od.bounds[g], end = by_od.bounds[g + 1];
        const auto& head = cells[by_od.order[begin]];
        const double x_od = m.x_od(head.origin, head.destination);
        for (std::size_t p = 0; p < np; ++p) {
            const auto pi = to_phi[p];
            if (pi < 0 || !(phi.marginal(pi) > 0.0)) continue;
            double sum = 0.0;
            for (auto b = begin; b < end; ++b) {
                const auto& other = cells[by_od.order[b]];
                if (other.product == p || to_phi[other.product] < 0) continue;
                sum += phi(pi, to_phi[other.product]) * other.value;
            }
            omega[at(head.origin, p, head.destination)] = sum / (phi.marginal(pi) * x_od);
        }
    }

    const auto by_op = contiguous_op_groups(cells);
    for (std::size_t g = 0; g + 1 < by_op.bounds.size(); ++g) {
        const auto begin = by_op.bounds[g], end = by_op.bounds[g + 1];
        const auto& head = cells[begin];
        const double x_op = m.x_op(head.origin, head.product);
        for (std::size_t d = 0; d < nc; ++d) {
            if (d == head.origin) continue;
            const auto w = weights.row(d);
            double sum = 0.0;
            for (auto b = begin; b < end; ++b) {
                if (cells[b].destination == d) continue;
                sum += w[cells[b].destination] * cells[b].value;
            }
            omega_d[at(head.origin, head.product, d)] = sum / x_op;
        }
    }

    const auto by_pd = group_cells(cells, np * nc, [nc](const TradeCell& c) {
        return static_cast<std::size_t>(c.product) * nc + c.destination;
    });
    for (std::size_t g = 0; g + 1 < by_pd.bounds.size(); ++g) {
        const auto begin = by_pd.bounds[g], end = by_pd.bounds[g + 1];
        const auto& head = cells[by_pd.order[begin]];
        const double x_pd = m.x_pd(head.product, head.destination);
        for (std::size_t o = 0; o < nc; ++o) {
            if (o == head.destination) continue;
            const auto w = weights.row(o);
            double sum = 0.0;
            for (auto b = begin; b < end; ++b) {
                const auto& other = cells[by_pd.order[b]];
                if (other.origin == o) continue;
                sum += w[other.origin] * other.value;
            }
            omega_o[at(o, head.product, head.destination)] = sum / x_pd;
        }
    }

    RelatednessTable table;
    table.year = year;
    for (std::size_t o = 0; o < nc; ++o) {
        for (std::size_t p = 0; p < np; ++p) {
            for (std::size_t d = 0; d < nc; ++d) {
                if (o == d) continue;
                const auto k = at(o, p, d);
                if (std::isnan(omega[k]) && std::isnan(omega_d[k]) && std::isnan(omega_o[k])) continue;
                table.rows.push_back({static_cast<std::uint32_t>(o), static_cast<std::uint32_t>(p),
                                      static_cast<std::uint32_t>(d), omega[k], omega_d[k], omega_o[k]});
            }
        }
    }
    return table;
}

}  // namespace

RelatednessTable compute_relatedness(const TradeTensor& tensor, const ProximityMatrix& phi,
                                     const DistanceWeights& weights, int year, const RelatednessOptions& options) {
    check_year(tensor, year);
    if (weights.size() != tensor.country_count()) throw DataError("distance weights do not match countries");

    RelatednessTable table;
    if (options.dense) {
        table = dense_relatedness(tensor, phi, weights, year);
    } else {
        const auto cells = tensor.cells(year);
        const auto omega = product_relatedness(tensor, phi, year, options.threads);
        const auto omega_d = importer_relatedness(tensor, weights, year, options.threads);
        const auto omega_o = exporter_relatedness(tensor, weights, year, options.threads);
        table.year = year;
        table.rows.resize(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            table.rows[i] = {cells[i].origin, cells[i].product, cells[i].destination, omega[i], omega_d[i], omega_o[i]};
        }
    }
    for (const auto& r : table.rows) check_bounds(r, tensor, year);
    table.skipped_products = skipped_products(tensor, phi);
    return table;
}

void write_relatedness_csv(std::ostream& out, const TradeTensor& tensor, std::span<const RelatednessTable> tables) {
    out << "year,origin,product,destination,omega,omega_d,omega_o\n";
    const auto& countries = tensor.countries();
    const auto& products = tensor.products();
    for (const auto& t : tables) {
        for (const auto& r : t.rows) {
            out << t.year << ',' << countries[r.origin].view() << ',' << products[r.product].view() << ','
                << countries[r.destination].view() << ',' << csv::significant(r.omega, 10) << ','
                << csv::significant(r.omega_d, 10) << ',' << csv::significant(r.omega_o, 10) << '\n';
        }
    }
}

std::vector<RelatednessTable> read_relatedness_csv(std::istream& in, const std::string& source_name,
                                                   const TradeTensor& tensor) {
    csv::Reader reader(in, source_name);
    std::vector<std::string_view> fields;
    if (!reader.next(fields)) throw DataError(source_name + ": missing header row");
    const auto col = csv::locate_columns(
        reader, fields, {"year", "origin", "product", "destination", "omega", "omega_d", "omega_o"});
    const std::size_t width = fields.size();

    auto measure = [&](std::string_view f, const char* name) {
        if (f == "NA" || f == "nan") return kNaN;
        return reader.number(f, name);
    };

    std::map<int, RelatednessTable> by_year;
    while (reader.next(fields)) {
        if (fields.size() != width) reader.fail("wrong number of fields");
        const int year = reader.integer(fields[col[0]], "year");
        const auto o = CountryCode::parse(fields[col[1]]);
        const auto p = ProductCode::parse(fields[col[2]]);
        const auto d = CountryCode::parse(fields[col[3]]);
        if (!o || !p || !d) reader.fail("invalid code");
        const auto oi = tensor.country_index(*o);
        const auto pi = tensor.product_index(*p);
        const auto di = tensor.country_index(*d);
        if (!oi || !pi || !di) reader.fail("code not present in the trade data");
        auto& table = by_year[year];
        table.year = year;
        table.rows.push_back({*oi, *pi, *di, measure(fields[col[4]], "omega"), measure(fields[col[5]], "omega_d"),
                              measure(fields[col[6]], "omega_o")});
    }

    std::vector<RelatednessTable> out;
    for (auto& [year, table] : by_year) {
        std::sort(table.rows.begin(), table.rows.end(), [](const RelatednessRow& a, const RelatednessRow& b) {
            return std::tie(a.origin, a.product, a.destination) < std::tie(b.origin, b.product, b.destination);
        });
        out.push_back(std::move(table));
    }
    return out;
}

}  // namespace tradespill
