#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace crowddyn {

/// Gini coefficient of a non-negative vector, pairwise-difference definition
/// sum_ij |x_i - x_j| / (2 n^2 mean). Zeros are included in the calculation.
/// Throws EmptyInput and AllZero.
double gini(const std::vector<double>& values);

enum class TestMethod { ExactBinomial, NormalApprox };

const char* to_string(TestMethod method);

struct ProportionTestResult {
    long successes = 0;
    long trials = 0;
    double observed = 0.0;   // successes / trials (first sample, if two)
    double reference = 0.0;  // null proportion, or the second sample's proportion
    double p_value = 1.0;    // two-sided
    TestMethod method = TestMethod::ExactBinomial;
};

/// One-sample two-sided test of successes/trials against null_p. Exact
/// binomial (doubled smaller tail, capped at 1) for trials <= 200, normal
/// approximation with continuity correction above.
ProportionTestResult proportion_test(long successes, long trials, double null_p);

/// Two-sample two-sided pooled-variance z-test with continuity correction.
ProportionTestResult proportion_test_2(long successes1, long trials1,
                                       long successes2, long trials2);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Exact (Clopper-Pearson) confidence interval for a binomial proportion.
Interval binomial_ci(long successes, long trials, double confidence = 0.95);

/// Maximum-likelihood logistic regression fit.
struct LogisticFit {
    std::vector<double> coefficients;
    std::vector<double> standard_errors;
    std::vector<std::vector<double>> covariance;
    double log_likelihood = 0.0;
    bool converged = false;
    std::size_t n_obs = 0;

    double deviance() const { return -2.0 * log_likelihood; }
    double aic() const { return 2.0 * double(coefficients.size()) + deviance(); }
    double bic() const;
};

/// Fits P(y=1) = logistic(x . beta) by iteratively reweighted least squares
/// (convergence: max coefficient change <= 1e-10, at most 100 iterations).
/// The caller supplies the full design matrix, intercept column(s) included.
///
/// Covariance is the inverse Fisher information, or — when cluster labels are
/// given — the CR0 sandwich summed within clusters with a G/(G-1)
/// small-sample factor. Throws Separation (coefficients diverging past 1e6),
/// Singular (rank-deficient design) and NoConvergence.
LogisticFit logistic_fit(const std::vector<std::vector<double>>& design,
                         const std::vector<int>& outcomes,
                         const std::vector<int>* clusters = nullptr);

/// JSON block with the regression-table quantities: coefficients, standard
/// errors, log-likelihood, AIC, BIC, deviance, n_obs.
std::string logistic_fit_to_json(const LogisticFit& fit);

/// Rank-based quartile labels in {1,2,3,4}; ties share the bin of their
/// average rank (floor convention). Needs at least 4 values.
std::vector<int> quartile_bins(const std::vector<double>& values);

/// Pearson product-moment correlation. Throws LengthMismatch, TooFew (< 3
/// pairs) and ZeroVariance.
double correlation(const std::vector<double>& x, const std::vector<double>& y);

/// Standard normal CDF and its inverse (Acklam's rational approximation,
/// relative error below 1.2e-9 — ample for rank-based scores).
double normal_cdf(double z);
double normal_quantile(double p);

}  // namespace crowddyn
