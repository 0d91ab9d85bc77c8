#include "tradespill/ols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace tradespill {

OlsAccumulator::OlsAccumulator(std::size_t k)
    : k_(k), upper_((k + 1) * (k + 2) / 2), scratch_(k + 1) {
    if (k == 0) throw std::invalid_argument("OlsAccumulator needs at least one column");
}

void OlsAccumulator::add(std::span<const double> x, double y) {
    if (x.size() != k_) throw std::invalid_argument("OlsAccumulator::add: wrong row width");
    std::copy(x.begin(), x.end(), scratch_.begin());
    scratch_[k_] = y;
    const std::size_t m = k_ + 1;
    auto* slot = upper_.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double zi = scratch_[i];
        for (std::size_t j = i; j < m; ++j) (slot++)->add(zi * scratch_[j]);
    }
    ++n_;
}

void OlsAccumulator::merge(const OlsAccumulator& other) {
    if (other.k_ != k_) throw std::invalid_argument("OlsAccumulator::merge: width mismatch");
    for (std::size_t i = 0; i < upper_.size(); ++i) upper_[i].merge(other.upper_[i]);
    n_ += other.n_;
}

std::vector<double> OlsAccumulator::cross_products() const {
    const std::size_t m = k_ + 1;
    std::vector<double> a(m * m);
    std::size_t slot = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            a[i * m + j] = a[j * m + i] = upper_[slot++].value();
        }
    }
    return a;
}

double t_two_sided_p(double t, double df) {
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

RegressionResult solve_ols(const OlsAccumulator& acc, const std::vector<std::string>& names,
                           const OlsSolveOptions& options) {
    const std::size_t k = acc.k();
    const std::size_t n = acc.n();
    if (names.size() != k) throw std::invalid_argument("solve_ols: one name per column required");
    if (n <= k) {
        throw DataError("regression needs more observations than coefficients (n=" + std::to_string(n) +
                        ", k=" + std::to_string(k) + ")");
    }

    const std::size_t m = k + 1;
    const auto a = acc.cross_products();

    // Lower-triangular factor of the augmented matrix; the last row is
    // L^{-1} X'y and its final diagonal entry squares to the RSS.
    std::vector<double> l(m * m, 0.0);
    std::vector<std::string> dependent;
    for (std::size_t j = 0; j < k; ++j) {
        double d = a[j * m + j];
        for (std::size_t q = 0; q < j; ++q) d -= l[j * m + q] * l[j * m + q];
        if (!(a[j * m + j] > 0.0) || d <= options.singular_tolerance * a[j * m + j]) {
            dependent.push_back(names[j]);
            continue;  // column of L stays zero so later pivots are still checked
        }
        const double pivot = std::sqrt(d);
        l[j * m + j] = pivot;
        for (std::size_t i = j + 1; i < m; ++i) {
            double s = a[i * m + j];
            for (std::size_t q = 0; q < j; ++q) s -= l[i * m + q] * l[j * m + q];
            l[i * m + j] = s / pivot;
        }
    }
    if (!dependent.empty()) {
        std::string what = "design matrix is singular; dependent column(s):";
        for (const auto& c : dependent) what += " " + c;
        throw SingularDesignError(dependent, what);
    }

    // beta from L' beta = L^{-1} X'y
    std::vector<double> beta(k, 0.0);
    for (std::size_t jj = k; jj-- > 0;) {
        double s = l[k * m + jj];
        for (std::size_t i = jj + 1; i < k; ++i) s -= l[i * m + jj] * beta[i];
        beta[jj] = s / l[jj * m + jj];
    }

    // diag((X'X)^{-1}) = column sums of squares of L^{-1}
    std::vector<double> linv(k * k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = c; i < k; ++i) {
            double s = (i == c) ? 1.0 : 0.0;
            for (std::size_t q = c; q < i; ++q) s -= l[i * m + q] * linv[q * k + c];
            linv[i * k + c] = s / l[i * m + i];
        }
    }

    double rss = 0.0;
    if (options.rss) {
        rss = *options.rss;
    } else {
        rss = a[k * m + k];
        for (std::size_t q = 0; q < k; ++q) rss -= l[k * m + q] * l[k * m + q];
    }
    rss = std::max(rss, 0.0);

    const double df = static_cast<double>(n - k);
    const double sigma2 = rss / df;

    RegressionResult out;
    out.n = n;
    out.k = k;
    out.rss = rss;
    out.resid_se = std::sqrt(sigma2);
    for (std::size_t j = 0; j < k; ++j) {
        double inv_jj = 0.0;
        for (std::size_t i = j; i < k; ++i) inv_jj += linv[i * k + j] * linv[i * k + j];
        Coefficient c;
        c.name = names[j];
        c.beta = beta[j];
        c.se = std::sqrt(sigma2 * inv_jj);
        if (c.se > 0.0) {
            c.t = c.beta / c.se;
            c.p = t_two_sided_p(c.t, df);
        } else {
            c.t = c.beta == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), c.beta);
            c.p = c.beta == 0.0 ? 1.0 : 0.0;
        }
        out.coefficients.push_back(std::move(c));
    }

    double tss = a[k * m + k];
    if (options.intercept_first) tss -= a[k * m + 0] * a[k * m + 0] / a[0];
    if (tss > 0.0) {
        out.r2 = 1.0 - rss / tss;
    } else {
        out.r2 = rss == 0.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
    }
    out.adj_r2 = 1.0 - (1.0 - out.r2) * (static_cast<double>(n) - 1.0) / df;
    return out;
}

ResidualAccumulator::ResidualAccumulator(std::span<const double> beta)
    : beta_(beta.begin(), beta.end()), xr_(beta.size()), xy_(beta.size()) {}

void ResidualAccumulator::add(std::span<const double> x, double y) {
    const std::size_t k = beta_.size();
    if (x.size() != k) throw std::invalid_argument("ResidualAccumulator::add: wrong row width");
    double fitted = 0.0;
    for (std::size_t j = 0; j < k; ++j) fitted += x[j] * beta_[j];
    const double resid = y - fitted;
    rss_.add(resid * resid);
    for (std::size_t j = 0; j < k; ++j) {
        xr_[j].add(x[j] * resid);
        xy_[j].add(x[j] * y);
    }
}

void ResidualAccumulator::merge(const ResidualAccumulator& other) {
    if (other.beta_.size() != beta_.size()) throw std::invalid_argument("ResidualAccumulator::merge: width mismatch");
    rss_.merge(other.rss_);
    for (std::size_t j = 0; j < beta_.size(); ++j) {
        xr_[j].merge(other.xr_[j]);
        xy_[j].merge(other.xy_[j]);
    }
}

double ResidualAccumulator::orthogonality() const {
    double worst = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < beta_.size(); ++j) {
        worst = std::max(worst, std::fabs(xr_[j].value()));
        scale = std::max(scale, std::fabs(xy_[j].value()));
    }
    return scale > 0.0 ? worst / scale : worst;
}

double residual_orthogonality(std::span<const double> design, std::span<const double> y, std::size_t k,
                              std::span<const double> beta) {
    const std::size_t n = y.size();
    if (design.size() != n * k || beta.size() != k) throw std::invalid_argument("residual_orthogonality: shape");
    ResidualAccumulator acc(beta);
    for (std::size_t r = 0; r < n; ++r) acc.add(design.subspan(r * k, k), y[r]);
    return acc.orthogonality();
}

}  // namespace tradespill
