#include <cmath>
#include <stdexcept>

#include "tradespill/gravity.hpp"

namespace tradespill {

TrendResult trend_test(std::span<const TrendEstimate> estimates, double alpha) {
    if (estimates.size() != 5) throw std::invalid_argument("trend test needs exactly five estimates");
    for (const auto& e : estimates) {
        if (!(e.se > 0.0)) throw std::invalid_argument("trend test needs positive standard errors");
        if (!std::isfinite(e.beta)) throw std::invalid_argument("trend test needs finite coefficients");
    }

    // Work with coefficients relative to the first one; equal inputs then
    // give an exactly zero slope.
    const double ref = estimates[0].beta;
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double w = 1.0 / (estimates[i].se * estimates[i].se);
        sw += w;
        sx += w * static_cast<double>(i + 1);
        sy += w * (estimates[i].beta - ref);
    }
    const double xbar = sx / sw, ybar = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double w = 1.0 / (estimates[i].se * estimates[i].se);
        const double dx = static_cast<double>(i + 1) - xbar;
        sxx += w * dx * dx;
        sxy += w * dx * (estimates[i].beta - ref - ybar);
    }

    TrendResult out;
    out.slope = sxy / sxx;
    out.intercept = ref + ybar - out.slope * xbar;

    double ssr = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double w = 1.0 / (estimates[i].se * estimates[i].se);
        const double r = estimates[i].beta - ref - ybar - out.slope * (static_cast<double>(i + 1) - xbar);
        ssr += w * r * r;
    }
    constexpr double df = 3.0;
    out.se = std::sqrt(ssr / df / sxx);

    if (out.slope == 0.0) {
        out.t = 0.0;
        out.p = 1.0;
    } else if (out.se == 0.0) {
        out.t = std::copysign(INFINITY, out.slope);
        out.p = 0.0;
    } else {
        out.t = out.slope / out.se;
        out.p = t_two_sided_p(out.t, df);
    }
    out.significant = out.p < alpha;
    return out;
}

std::vector<TrendRow> coefficient_trends(std::span<const RegressionResult> by_rank, double alpha) {
    if (by_rank.size() != 5) throw std::invalid_argument("coefficient trends need five category regressions");
    std::vector<TrendRow> out;
    for (auto name : kRegressorNames) {
        std::vector<TrendEstimate> series;
        for (const auto& result : by_rank) {
            const Coefficient* found = nullptr;
            for (const auto& c : result.coefficients) {
                if (c.name == name) found = &c;
            }
            if (!found) throw std::invalid_argument("regression '" + result.split_key + "' lacks " + std::string(name));
            series.push_back({found->beta, found->se});
        }
        out.push_back({std::string(name), trend_test(series, alpha)});
    }
    return out;
}

}  // namespace tradespill
