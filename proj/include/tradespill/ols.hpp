#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tradespill/error.hpp"
#include "tradespill/exact_sum.hpp"

namespace tradespill {

/// Design columns that are linearly dependent on earlier columns.
class SingularDesignError : public DataError {
public:
    SingularDesignError(std::vector<std::string> columns, const std::string& what)
        : DataError(what), columns_(std::move(columns)) {}
    const std::vector<std::string>& columns() const noexcept { return columns_; }

private:
    std::vector<std::string> columns_;
};

/// Streaming accumulator for the normal equations of y ~ X.
///
/// Keeps the upper triangle of [X y]'[X y] as exact sums, so memory is
/// O(k^2) whatever the number of rows, and the accumulated system is
/// bitwise independent of row order and of how rows are partitioned across
/// accumulators that are later merged.
class OlsAccumulator {
public:
    explicit OlsAccumulator(std::size_t k);

    void add(std::span<const double> x, double y);
    void merge(const OlsAccumulator& other);

    std::size_t k() const { return k_; }
    std::size_t n() const { return n_; }

    /// Rounded (k+1) x (k+1) row-major [X y]'[X y]; the last row/column
    /// holds X'y and y'y.
    std::vector<double> cross_products() const;

private:
    std::size_t k_;
    std::size_t n_ = 0;
    std::vector<ExactSum> upper_;
    std::vector<double> scratch_;
};

struct Coefficient {
    std::string name;
    double beta = 0.0;
    double se = 0.0;
    double t = 0.0;
    double p = 0.0;
};

struct RegressionResult {
    std::string split_key;
    std::vector<Coefficient> coefficients;
    std::size_t n = 0;
    std::size_t k = 0;
    double rss = 0.0;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double resid_se = 0.0;
    /// max_j |X'(y - X beta)|_j / max_j |X'y|_j when a residual pass was run,
    /// NaN otherwise.
    double orthogonality = std::numeric_limits<double>::quiet_NaN();
};

struct OlsSolveOptions {
    /// Column 0 is the constant term; R^2 is then computed about the mean.
    bool intercept_first = true;
    /// Relative tolerance on the Cholesky pivot, d_jj <= tol * A_jj.
    double singular_tolerance = 1e-10;
    /// Residual sum of squares from a separate residual pass; when absent
    /// it is taken from the augmented factorisation.
    std::optional<double> rss;
};

/// Solves the accumulated normal equations by a pivot-free Cholesky
/// factorisation. Classical homoskedastic standard errors; two-sided
/// p-values on n - k degrees of freedom. Throws SingularDesignError listing
/// every column found dependent, and DataError when n <= k.
RegressionResult solve_ols(const OlsAccumulator& acc, const std::vector<std::string>& names,
                           const OlsSolveOptions& options = {});

/// Second pass over the data once beta is known: exact RSS plus the
/// residual orthogonality audit.
class ResidualAccumulator {
public:
    explicit ResidualAccumulator(std::span<const double> beta);

    void add(std::span<const double> x, double y);
    void merge(const ResidualAccumulator& other);

    double rss() const { return rss_.value(); }
    /// max_j |X'r|_j relative to max_j |X'y|_j.
    double orthogonality() const;

private:
    std::vector<double> beta_;
    ExactSum rss_;
    std::vector<ExactSum> xr_;
    std::vector<ExactSum> xy_;
};

/// max_j |(X'(y - X beta))_j| relative to max_j |(X'y)_j|, from a second
/// pass over the data. Used to audit fits.
double residual_orthogonality(std::span<const double> design, std::span<const double> y, std::size_t k,
                              std::span<const double> beta);

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

}  // namespace tradespill
