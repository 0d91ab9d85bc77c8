#include "tradespill/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "csv.hpp"
#include "json.hpp"
#include "tradespill/error.hpp"

namespace tradespill::oracle {

double Rng::normal() {
    if (spare_) {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    return r * std::cos(a);
}

PlantedBeta default_planted_beta() {
    PlantedBeta b{};
    b[0] = 1.0;
    b[1 + kOmega] = 30.0;
    b[1 + kOmegaImporter] = 8.0;
    b[1 + kOmegaExporter] = 6.0;
    b[1 + kLogFlow] = 0.7;
    b[1 + kLogProductExports] = 0.1;
    b[1 + kLogProductImports] = 0.1;
    b[1 + kLogDistance] = -0.4;
    b[1 + kLogGdpOrigin] = 0.2;
    b[1 + kLogGdpDestination] = 0.15;
    b[1 + kLogPopOrigin] = 0.1;
    b[1 + kLogPopDestination] = 0.08;
    b[1 + kBorder] = 0.5;
    b[1 + kColony] = 0.3;
    b[1 + kLanguage] = 0.4;
    b[1 + kLogLangProximity] = 0.05;
    return b;
}

namespace {

constexpr double kEarthRadiusKm = 6371.0;

std::string country_name(int i) {
    std::string s(3, 'A');
    for (int pos = 2; pos >= 0; --pos) {
        s[pos] = static_cast<char>('A' + i % 26);
        i /= 26;
    }
    return s;
}

std::string product_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", 101 + i);
    return buf;
}

std::vector<double> random_cities(int n, Rng& rng) {
    std::vector<double> lat, lon;
    auto distance = [&](std::size_t a, std::size_t b) {
        const double dlat = lat[b] - lat[a], dlon = lon[b] - lon[a];
        const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                         std::cos(lat[a]) * std::cos(lat[b]) * std::sin(dlon / 2) * std::sin(dlon / 2);
        return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
    };
    while (static_cast<int>(lat.size()) < n) {
        lat.push_back(std::asin(rng.uniform(-1.0, 1.0)));
        lon.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
        bool clash = false;
        for (std::size_t j = 0; j + 1 < lat.size(); ++j) clash = clash || distance(j, lat.size() - 1) < 1.0;
        if (clash) {
            lat.pop_back();
            lon.pop_back();
        }
    }
    std::vector<double> d(static_cast<std::size_t>(n) * n, 0.0);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a != b) d[a * n + b] = distance(a, b);
        }
    }
    return d;
}

ProximityMatrix round_through_text(const ProximityMatrix& phi) {
    std::vector<double> v(phi.size() * phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        for (std::size_t j = 0; j < phi.size(); ++j) v[i * phi.size() + j] = std::stod(csv::fixed(phi(i, j), 6));
    }
    return ProximityMatrix(phi.products(), std::move(v));
}

}  // namespace

SyntheticWorld generate_world(const SyntheticWorldConfig& config) {
    if (config.n_countries < 2) throw std::invalid_argument("synthetic world needs at least two countries");
    if (config.n_products < 1 || config.n_products > 9899) {
        throw std::invalid_argument("synthetic world needs 1..9899 products");
    }
    if (config.n_countries > 26 * 26 * 26) throw std::invalid_argument("too many countries");
    if (config.horizon < 1 || config.n_years < config.horizon) {
        throw std::invalid_argument("synthetic world needs n_years >= horizon >= 1");
    }
    if (!(config.sparsity > 0.0) || config.sparsity > 1.0) throw std::invalid_argument("sparsity must be in (0, 1]");
    if (!(config.noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be non-negative");

    const int nc = config.n_countries, np = config.n_products;
    Rng rng(config.seed);

    SyntheticWorld world;
    world.config = config;
    world.period = {config.first_year, config.first_year + config.n_years - 1};
    world.proximity_window = {config.first_year, config.first_year + config.horizon - 1};

    std::vector<CountryCode> countries;
    for (int i = 0; i < nc; ++i) countries.push_back(CountryCode::from(country_name(i)));
    std::vector<ProductCode> products;
    for (int i = 0; i < np; ++i) products.push_back(ProductCode::from(product_name(i)));

    if (config.distances_km) {
        if (config.distances_km->size() != static_cast<std::size_t>(nc) * nc) {
            throw std::invalid_argument("distance matrix must be n_countries x n_countries");
        }
        world.distances_km = *config.distances_km;
    } else {
        world.distances_km = random_cities(nc, rng);
    }

    for (int a = 0; a < nc; ++a) {
        for (int b = a + 1; b < nc; ++b) {
            DyadRecord rec;
            rec.distance_km = world.distances_km[a * nc + b];
            rec.border = rng.bernoulli(rec.distance_km < 2000.0 ? 0.5 : 0.03);
            rec.colony = rng.bernoulli(0.08);
            rec.language = rng.bernoulli(0.15);
            rec.lang_proximity = rng.bernoulli(0.4) ? 0.0 : std::exp(rng.normal(4.0, 1.5));
            world.dyads.insert(countries[a], countries[b], rec);
        }
    }

    for (int c = 0; c < nc; ++c) {
        double log_gdp = rng.normal(9.0, 1.0);
        double log_pop = std::max(rng.normal(16.5, 1.2), std::log(2.0e6));
        for (int y = world.period.first; y <= world.period.last; ++y) {
            world.countries.insert(countries[c], y, {std::exp(log_pop), std::exp(log_gdp)});
            log_gdp += rng.normal(0.02, 0.05);
            log_pop += rng.normal(0.01, 0.005);
        }
    }

    for (int p = 0; p < np; ++p) {
        const double u = rng.uniform();
        LallCategory c = u < 0.03 ? LallCategory::Excluded : static_cast<LallCategory>(rng.index(5));
        char sitc[16];
        std::snprintf(sitc, sizeof(sitc), "%03d", 1 + static_cast<int>(rng.index(899)));
        world.lall.insert(products[p], sitc, c);
    }

    // Drawn years: a fixed activity pattern with log-normal values carrying
    // exporter-product specialisation, so RCA and proximity have structure.
    std::vector<double> specialisation(static_cast<std::size_t>(nc) * np);
    for (auto& s : specialisation) s = rng.normal(0.0, 1.5);
    std::vector<TradeCell> pattern;
    for (int o = 0; o < nc; ++o) {
        for (int p = 0; p < np; ++p) {
            for (int d = 0; d < nc; ++d) {
                if (o == d) continue;
                if (config.sparsity >= 1.0 || rng.bernoulli(config.sparsity)) {
                    pattern.push_back({static_cast<std::uint32_t>(o), static_cast<std::uint32_t>(p),
                                       static_cast<std::uint32_t>(d), 0.0});
                }
            }
        }
    }
    std::map<int, std::vector<TradeCell>> cells;
    for (int y = world.proximity_window.first; y <= world.proximity_window.last; ++y) {
        auto& slice = cells[y];
        slice = pattern;
        for (auto& c : slice) c.value = std::exp(rng.normal(12.0, 2.0) + specialisation[c.origin * np + c.product]);
    }
    pattern = {};

    {
        TradeTensor drawn(countries, products, cells);
        const auto rca = compute_rca(drawn, world.proximity_window);
        world.proximity = round_through_text(compute_proximity(binarize(rca), config.threads));
    }
    const auto weights = DistanceWeights::from_distances(static_cast<std::size_t>(nc), world.distances_km);
    const auto& beta = config.planted_beta;

    // Later years follow the gravity equation. The year being generated is
    // stood in by a placeholder copy of year t so the production row builder
    // can assemble the regressors at t.
    for (int t = world.period.first; t + config.horizon <= world.period.last; ++t) {
        const int target = t + config.horizon;
        auto& placeholder = cells[target];
        placeholder = cells.at(t);
        for (auto& c : placeholder) c.value = 1.0;

        TradeTensor partial(countries, products, cells);
        RelatednessOptions ropts;
        ropts.threads = config.threads;
        std::vector<RelatednessTable> rel;
        rel.push_back(compute_relatedness(partial, world.proximity, weights, t, ropts));
        GravityInputs inputs{partial, rel, world.countries, world.dyads};
        auto dataset = build_dataset(inputs, {t, target}, {config.horizon, ZeroPolicy::Drop});
        rel.clear();

        // Cells whose regressors are undefined (a product with no proximity
        // row) stay in the world with an off-model draw; the fit drops them
        // by the same rule, so they never enter a regression as a base row.
        std::vector<TradeCell> next;
        next.reserve(placeholder.size());
        std::size_t r = 0;
        for (const auto& cell : placeholder) {
            const auto& rows = dataset.rows;
            if (r < rows.size() && rows[r].origin == cell.origin && rows[r].product == cell.product &&
                rows[r].destination == cell.destination) {
                double eta = beta[0];
                for (std::size_t j = 0; j < kRegressorCount; ++j) eta += beta[j + 1] * rows[r].x[j];
                eta += config.noise_sigma * rng.normal();
                next.push_back({cell.origin, cell.product, cell.destination, std::exp(eta)});
                ++r;
            } else {
                const double v = std::exp(rng.normal(12.0, 2.0) + specialisation[cell.origin * np + cell.product]);
                next.push_back({cell.origin, cell.product, cell.destination, v});
            }
        }
        if (r != dataset.rows.size()) throw std::logic_error("synthetic rows out of step with cells");
        cells[target] = std::move(next);
    }

    world.tensor = TradeTensor(countries, products, std::move(cells));
    return world;
}

PlantedBeta standardized_beta(const PlantedBeta& raw, const StandardizationSpec& spec) {
    PlantedBeta out = raw;
    for (std::size_t j = 0; j < kRegressorCount; ++j) {
        if (const auto& m = spec.regressors[j]) {
            out[j + 1] = raw[j + 1] * m->sd;
            out[0] += raw[j + 1] * m->mean;
        }
    }
    if (spec.response) {
        out[0] = (out[0] - spec.response->mean) / spec.response->sd;
        for (std::size_t j = 1; j < out.size(); ++j) out[j] /= spec.response->sd;
    }
    return out;
}

WorldFiles write_world(const std::filesystem::path& dir, const SyntheticWorld& world) {
    std::filesystem::create_directories(dir);
    WorldFiles files{dir / "trade.csv", dir / "countries.csv", dir / "dyads.csv", dir / "lall.csv",
                     dir / "planted.json"};
    auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p);
        if (!out) throw DataError("cannot write " + p.string());
        return out;
    };

    // Reporting is drawn from its own stream so the world itself does not
    // depend on how it is written.
    Rng rng(world.config.seed ^ 0x9e3779b97f4a7c15ull);
    {
        auto out = open(files.trade);
        out << "year,origin,destination,product,value,reporter\n";
        const auto& cc = world.tensor.countries();
        const auto& pc = world.tensor.products();
        for (int year : world.tensor.years()) {
            for (const auto& c : world.tensor.cells(year)) {
                const std::string head = std::to_string(year) + "," + cc[c.origin].str() + "," +
                                         cc[c.destination].str() + "," + pc[c.product].str() + ",";
                const double u = rng.uniform();
                if (u < 0.3) {
                    const double skewed = c.value * rng.uniform(0.8, 1.2);
                    out << head << csv::exact(skewed) << ",exporter\n";
                    out << head << csv::exact(c.value) << ",importer\n";
                } else if (u < 0.65) {
                    out << head << csv::exact(c.value) << ",exporter\n";
                } else {
                    out << head << csv::exact(c.value) << ",importer\n";
                }
            }
        }
    }
    {
        auto out = open(files.countries);
        write_country_csv(out, world.countries);
    }
    {
        auto out = open(files.dyads);
        write_dyad_csv(out, world.dyads);
    }
    {
        auto out = open(files.lall);
        write_lall_csv(out, world.lall);
    }
    {
        nlohmann::json doc;
        const auto names = coefficient_names();
        nlohmann::json beta = nlohmann::json::object();
        for (std::size_t j = 0; j < names.size(); ++j) beta[names[j]] = world.config.planted_beta[j];
        doc["seed"] = world.config.seed;
        doc["noise_sigma"] = world.config.noise_sigma;
        doc["horizon"] = world.config.horizon;
        doc["period"] = world.period.str();
        doc["proximity_window"] = world.proximity_window.str();
        doc["planted_beta_raw"] = beta;
        auto out = open(files.planted);
        out << doc.dump(2) << '\n';
    }
    return files;
}

// ---------------------------------------------------------------------------

std::vector<RelatednessRow> brute_force_relatedness(const TradeTensor& tensor, const ProximityMatrix& phi,
                                                    std::span<const double> distances_km, int year) {
    const std::size_t C = tensor.country_count(), P = tensor.product_count();
    if (distances_km.size() != C * C) throw std::invalid_argument("distance matrix must be n x n");
    const double nan = std::numeric_limits<double>::quiet_NaN();

    // dense cube x[o][p][d]
    std::vector<double> x(C * P * C, 0.0);
    auto X = [&](std::size_t o, std::size_t p, std::size_t d) -> double& { return x[(o * P + p) * C + d]; };
    for (const auto& c : tensor.cells(year)) X(c.origin, c.product, c.destination) = c.value;

    // phi in tensor product order; -1 where the product is not in phi
    std::vector<long> at(P, -1);
    for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t q = 0; q < phi.size(); ++q) {
            if (phi.products()[q] == tensor.products()[p]) at[p] = static_cast<long>(q);
        }
    }
    auto PHI = [&](std::size_t p, std::size_t q) {
        if (at[p] < 0 || at[q] < 0) return 0.0;
        return phi(static_cast<std::size_t>(at[p]), static_cast<std::size_t>(at[q]));
    };

    std::vector<double> w(C * C, 0.0);
    for (std::size_t a = 0; a < C; ++a) {
        long double total = 0.0L;
        for (std::size_t b = 0; b < C; ++b) {
            if (b != a) total += 1.0L / distances_km[a * C + b];
        }
        for (std::size_t b = 0; b < C; ++b) {
            if (b != a) w[a * C + b] = static_cast<double>((1.0L / distances_km[a * C + b]) / total);
        }
    }

    std::vector<RelatednessRow> out;
    for (std::size_t o = 0; o < C; ++o) {
        for (std::size_t p = 0; p < P; ++p) {
            for (std::size_t d = 0; d < C; ++d) {
                if (!(X(o, p, d) > 0.0)) continue;
                long double x_od = 0.0L, x_op = 0.0L, x_pd = 0.0L, phi_p = 0.0L;
                for (std::size_t q = 0; q < P; ++q) x_od += X(o, q, d);
                for (std::size_t e = 0; e < C; ++e) x_op += X(o, p, e);
                for (std::size_t e = 0; e < C; ++e) x_pd += X(e, p, d);
                for (std::size_t q = 0; q < P; ++q) phi_p += PHI(p, q);

                RelatednessRow r;
                r.origin = static_cast<std::uint32_t>(o);
                r.product = static_cast<std::uint32_t>(p);
                r.destination = static_cast<std::uint32_t>(d);

                if (at[p] < 0 || phi_p <= 0.0L || x_od <= 0.0L) {
                    r.omega = nan;
                } else {
                    long double s = 0.0L;
                    for (std::size_t q = 0; q < P; ++q) {
                        if (q != p) s += (PHI(p, q) / phi_p) * (X(o, q, d) / x_od);
                    }
                    r.omega = static_cast<double>(s);
                }
                if (x_op <= 0.0L) {
                    r.omega_d = nan;
                } else {
                    long double s = 0.0L;
                    for (std::size_t e = 0; e < C; ++e) {
                        if (e != d) s += w[d * C + e] * (X(o, p, e) / x_op);
                    }
                    r.omega_d = static_cast<double>(s);
                }
                if (x_pd <= 0.0L) {
                    r.omega_o = nan;
                } else {
                    long double s = 0.0L;
                    for (std::size_t e = 0; e < C; ++e) {
                        if (e != o) s += w[o * C + e] * (X(e, p, d) / x_pd);
                    }
                    r.omega_o = static_cast<double>(s);
                }
                out.push_back(r);
            }
        }
    }
    return out;
}

std::vector<double> brute_force_proximity(const std::vector<std::vector<bool>>& advantage) {
    if (advantage.empty()) return {};
    const std::size_t P = advantage.front().size();
    std::vector<double> phi(P * P, 0.0);
    for (std::size_t i = 0; i < P; ++i) {
        for (std::size_t j = 0; j < P; ++j) {
            if (i == j) continue;
            int has_i = 0, has_j = 0, both = 0;
            for (const auto& row : advantage) {
                has_i += row[i];
                has_j += row[j];
                both += row[i] && row[j];
            }
            if (has_i == 0 || has_j == 0) continue;
            const double given_j = static_cast<double>(both) / has_j;  // P(i | j)
            const double given_i = static_cast<double>(both) / has_i;  // P(j | i)
            phi[i * P + j] = std::min(given_i, given_j);
        }
    }
    return phi;
}

RegressionResult brute_force_ols(std::span<const double> design, std::span<const double> y, std::size_t k,
                                 const std::vector<std::string>& names, bool intercept_first) {
    const std::size_t n = y.size();
    if (design.size() != n * k || names.size() != k) throw std::invalid_argument("brute_force_ols: shape");
    if (n <= k) throw DataError("brute_force_ols: need n > k");

    using real = long double;
    std::vector<real> g(k * k, 0.0L), xy(k, 0.0L);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
            xy[i] += static_cast<real>(design[r * k + i]) * y[r];
            for (std::size_t j = 0; j < k; ++j) g[i * k + j] += static_cast<real>(design[r * k + i]) * design[r * k + j];
        }
    }

    // Gauss-Jordan on [G | I] with full pivoting.
    std::vector<real> a = g, inv(k * k, 0.0L);
    for (std::size_t i = 0; i < k; ++i) inv[i * k + i] = 1.0L;
    std::vector<std::size_t> col_of(k);
    for (std::size_t i = 0; i < k; ++i) col_of[i] = i;
    real scale = 0.0L;
    for (std::size_t i = 0; i < k; ++i) scale = std::max(scale, std::fabs(g[i * k + i]));

    for (std::size_t step = 0; step < k; ++step) {
        std::size_t pr = step, pc = step;
        real best = -1.0L;
        for (std::size_t r = step; r < k; ++r) {
            for (std::size_t c = step; c < k; ++c) {
                if (std::fabs(a[r * k + c]) > best) {
                    best = std::fabs(a[r * k + c]);
                    pr = r;
                    pc = c;
                }
            }
        }
        if (best <= 1e-13L * scale) throw DataError("brute_force_ols: singular design");
        if (pr != step) {
            for (std::size_t c = 0; c < k; ++c) {
                std::swap(a[pr * k + c], a[step * k + c]);
                std::swap(inv[pr * k + c], inv[step * k + c]);
            }
        }
        if (pc != step) {
            for (std::size_t r = 0; r < k; ++r) std::swap(a[r * k + pc], a[r * k + step]);
            std::swap(col_of[pc], col_of[step]);
        }
        const real piv = a[step * k + step];
        for (std::size_t c = 0; c < k; ++c) {
            a[step * k + c] /= piv;
            inv[step * k + c] /= piv;
        }
        for (std::size_t r = 0; r < k; ++r) {
            if (r == step) continue;
            const real f = a[r * k + step];
            if (f == 0.0L) continue;
            for (std::size_t c = 0; c < k; ++c) {
                a[r * k + c] -= f * a[step * k + c];
                inv[r * k + c] -= f * inv[step * k + c];
            }
        }
    }
    // Column swaps permute the rows of the inverse: row `step` of `inv` is
    // row col_of[step] of G^{-1}.
    std::vector<real> ginv(k * k);
    for (std::size_t s = 0; s < k; ++s) {
        for (std::size_t c = 0; c < k; ++c) ginv[col_of[s] * k + c] = inv[s * k + c];
    }

    std::vector<real> beta(k, 0.0L);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) beta[i] += ginv[i * k + j] * xy[j];
    }

    real rss = 0.0L, ysum = 0.0L;
    for (std::size_t r = 0; r < n; ++r) ysum += y[r];
    const real ybar = ysum / static_cast<real>(n);
    real tss = 0.0L;
    for (std::size_t r = 0; r < n; ++r) {
        real fit = 0.0L;
        for (std::size_t j = 0; j < k; ++j) fit += beta[j] * design[r * k + j];
        rss += (y[r] - fit) * (y[r] - fit);
        const real c = intercept_first ? y[r] - ybar : static_cast<real>(y[r]);
        tss += c * c;
    }

    RegressionResult out;
    out.n = n;
    out.k = k;
    out.rss = static_cast<double>(rss);
    const real df = static_cast<real>(n - k);
    const real sigma2 = rss / df;
    out.resid_se = static_cast<double>(std::sqrt(sigma2));
    out.r2 = tss > 0.0L ? static_cast<double>(1.0L - rss / tss) : std::numeric_limits<double>::quiet_NaN();
    out.adj_r2 = static_cast<double>(1.0L - (1.0L - out.r2) * (static_cast<real>(n) - 1.0L) / df);
    boost::math::students_t dist(static_cast<double>(df));
    for (std::size_t j = 0; j < k; ++j) {
        Coefficient c;
        c.name = names[j];
        c.beta = static_cast<double>(beta[j]);
        c.se = static_cast<double>(std::sqrt(sigma2 * ginv[j * k + j]));
        c.t = c.se > 0.0 ? c.beta / c.se : 0.0;
        c.p = c.se > 0.0 ? 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(c.t))) : 0.0;
        out.coefficients.push_back(std::move(c));
    }
    return out;
}

RegressionResult brute_force_ols(std::span<const GravityObservation> rows) {
    const std::size_t k = kRegressorCount + 1;
    std::vector<double> design(rows.size() * k), y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        design[r * k] = 1.0;
        for (std::size_t j = 0; j < kRegressorCount; ++j) design[r * k + j + 1] = rows[r].x[j];
        y[r] = rows[r].response;
    }
    return brute_force_ols(design, y, k, coefficient_names(), true);
}

}  // namespace tradespill::oracle
