#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tradespill/gravity.hpp"
#include "tradespill/ols.hpp"

namespace tradespill {

/// JSON array of {split_key, n, adj_r2, resid_se, coefficients: [{name, beta,
/// se, t, p}]}; reals rounded to 6 decimals.
void write_regressions_json(std::ostream& out, std::span<const RegressionResult> results);
/// Reads the JSON written above (extra keys are ignored).
std::vector<RegressionResult> read_regressions_json(std::istream& in, const std::string& source_name);

/// Table layout: one line per coefficient with significance stars, the
/// standard error on the line below in parentheses, then observations,
/// adjusted R^2 and residual standard error. One column per result.
void write_regression_table_csv(std::ostream& out, std::span<const RegressionResult> results);

/// `variable,slope,se,p,significant`.
void write_trend_csv(std::ostream& out, std::span<const TrendRow> rows);

/// `variable,n,mean,sd,min,max,zero_variance`, 3 decimals.
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

/// Lower-triangular 15 x 15 correlation table, 3 decimals.
void write_correlation_csv(std::ostream& out, std::span<const double> corr);

/// `***` for p < 0.01, `**` for p < 0.05, `*` for p < 0.1.
std::string significance_stars(double p);

}  // namespace tradespill
