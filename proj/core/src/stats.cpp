#include "crowddyn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "crowddyn/error.hpp"

#include <json.hpp>

namespace crowddyn {

namespace {

double log_binomial_pmf(long k, long n, double p) {
    return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
           std::lgamma(double(n - k) + 1.0) + double(k) * std::log(p) +
           double(n - k) * std::log1p(-p);
}

/// P(X <= k) for X ~ Binomial(n, p), by direct summation. n stays small
/// enough here (test sizes, CI bisection) that this is never the bottleneck.
double binomial_cdf(long k, long n, double p) {
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    double acc = 0.0;
    for (long j = 0; j <= k; ++j) acc += std::exp(log_binomial_pmf(j, n, p));
    return std::min(acc, 1.0);
}

double binomial_upper_tail(long k, long n, double p) {
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    double acc = 0.0;
    for (long j = k; j <= n; ++j) acc += std::exp(log_binomial_pmf(j, n, p));
    return std::min(acc, 1.0);
}

void check_counts(long successes, long trials) {
    if (trials < 1) throw OutOfRange("trials must be >= 1");
    if (successes < 0 || successes > trials) {
        throw OutOfRange("successes must lie in [0, trials]");
    }
}

}  // namespace

double gini(const std::vector<double>& values) {
    if (values.empty()) throw EmptyInput("gini needs at least one value");
    double total = 0.0;
    for (double v : values) {
        if (!(v >= 0.0)) throw OutOfRange("gini needs non-negative values");
        total += v;
    }
    if (total == 0.0) throw AllZero("gini is undefined when every value is zero");

    // Sorted form of the pairwise-difference definition:
    // sum_ij |x_i - x_j| = 2 * sum_i (2i - n - 1) x_(i) with 1-based ranks.
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double n = double(sorted.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        acc += (2.0 * double(i + 1) - n - 1.0) * sorted[i];
    }
    return acc / (n * total);
}

const char* to_string(TestMethod method) {
    switch (method) {
        case TestMethod::ExactBinomial: return "exact-binomial";
        case TestMethod::NormalApprox: return "normal-approx-cc";
    }
    return "unknown";
}

ProportionTestResult proportion_test(long successes, long trials, double null_p) {
    check_counts(successes, trials);
    if (!(null_p > 0.0 && null_p < 1.0)) {
        throw OutOfRange("null proportion must be strictly inside (0, 1)");
    }

    ProportionTestResult result;
    result.successes = successes;
    result.trials = trials;
    result.observed = double(successes) / double(trials);
    result.reference = null_p;

    if (trials <= 200) {
        const double lower = binomial_cdf(successes, trials, null_p);
        const double upper = binomial_upper_tail(successes, trials, null_p);
        result.p_value = std::min(1.0, 2.0 * std::min(lower, upper));
        result.method = TestMethod::ExactBinomial;
        return result;
    }

    const double mean = double(trials) * null_p;
    const double sd = std::sqrt(double(trials) * null_p * (1.0 - null_p));
    const double z = std::max(0.0, std::abs(double(successes) - mean) - 0.5) / sd;
    result.p_value = std::erfc(z / std::sqrt(2.0));
    result.method = TestMethod::NormalApprox;
    return result;
}

ProportionTestResult proportion_test_2(long successes1, long trials1, long successes2,
                                       long trials2) {
    check_counts(successes1, trials1);
    check_counts(successes2, trials2);

    ProportionTestResult result;
    result.successes = successes1;
    result.trials = trials1;
    result.observed = double(successes1) / double(trials1);
    result.reference = double(successes2) / double(trials2);
    result.method = TestMethod::NormalApprox;

    const double pooled = double(successes1 + successes2) / double(trials1 + trials2);
    if (pooled == 0.0 || pooled == 1.0) {
        result.p_value = 1.0;  // both samples unanimous and identical
        return result;
    }
    const double inv = 1.0 / double(trials1) + 1.0 / double(trials2);
    const double se = std::sqrt(pooled * (1.0 - pooled) * inv);
    const double correction = 0.5 * inv;
    const double z =
        std::max(0.0, std::abs(result.observed - result.reference) - correction) / se;
    result.p_value = std::erfc(z / std::sqrt(2.0));
    return result;
}

Interval binomial_ci(long successes, long trials, double confidence) {
    check_counts(successes, trials);
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw OutOfRange("confidence must be in (0, 1)");
    }
    const double alpha = 1.0 - confidence;

    // Clopper-Pearson bounds by bisection on tail functions arranged to be
    // increasing in p; 80 halvings pin the bound far below visible noise.
    const auto solve = [&](auto increasing_tail, double target) {
        double lo = 0.0, hi = 1.0;
        for (int iter = 0; iter < 80; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (increasing_tail(mid) < target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    Interval ci;
    if (successes == 0) {
        ci.lo = 0.0;
    } else {
        // Largest p with P(X >= k | p) <= alpha/2; tail increases with p.
        ci.lo = solve(
            [&](double p) { return binomial_upper_tail(successes, trials, p); },
            alpha / 2.0);
    }
    if (successes == trials) {
        ci.hi = 1.0;
    } else {
        // Smallest p with P(X <= k | p) <= alpha/2; tail decreases with p.
        const double hi = solve(
            [&](double p) { return 1.0 - binomial_cdf(successes, trials, p); },
            1.0 - alpha / 2.0);
        ci.hi = hi;
    }
    return ci;
}

namespace {

/// Cholesky factorization in place; returns false on a non-positive pivot.
bool cholesky(std::vector<std::vector<double>>& a) {
    const std::size_t k = a.size();
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i][j];
            for (std::size_t m = 0; m < j; ++m) sum -= a[i][m] * a[j][m];
            if (i == j) {
                if (!(sum > 1e-12)) return false;
                a[i][i] = std::sqrt(sum);
            } else {
                a[i][j] = sum / a[j][j];
            }
        }
    }
    return true;
}

std::vector<double> cholesky_solve(const std::vector<std::vector<double>>& chol,
                                   std::vector<double> b) {
    const std::size_t k = chol.size();
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < i; ++j) b[i] -= chol[i][j] * b[j];
        b[i] /= chol[i][i];
    }
    for (std::size_t i = k; i-- > 0;) {
        for (std::size_t j = i + 1; j < k; ++j) b[i] -= chol[j][i] * b[j];
        b[i] /= chol[i][i];
    }
    return b;
}

std::vector<std::vector<double>> cholesky_inverse(
    const std::vector<std::vector<double>>& chol) {
    const std::size_t k = chol.size();
    std::vector<std::vector<double>> inv(k, std::vector<double>(k, 0.0));
    for (std::size_t col = 0; col < k; ++col) {
        std::vector<double> e(k, 0.0);
        e[col] = 1.0;
        const auto x = cholesky_solve(chol, std::move(e));
        for (std::size_t row = 0; row < k; ++row) inv[row][col] = x[row];
    }
    // Symmetrize away the last-bit asymmetry from the two triangular solves.
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double v = 0.5 * (inv[i][j] + inv[j][i]);
            inv[i][j] = v;
            inv[j][i] = v;
        }
    }
    return inv;
}

}  // namespace

double LogisticFit::bic() const {
    return double(coefficients.size()) * std::log(double(n_obs)) + deviance();
}

LogisticFit logistic_fit(const std::vector<std::vector<double>>& design,
                         const std::vector<int>& outcomes,
                         const std::vector<int>* clusters) {
    const std::size_t n = design.size();
    if (n == 0) throw EmptyInput("logistic_fit needs observations");
    const std::size_t k = design.front().size();
    if (k == 0) throw EmptyInput("logistic_fit needs at least one regressor");
    if (outcomes.size() != n) {
        throw LengthMismatch("outcomes length does not match the design matrix");
    }
    if (clusters && clusters->size() != n) {
        throw LengthMismatch("cluster labels length does not match the design matrix");
    }
    if (n <= k) throw TooFew("logistic_fit needs more observations than regressors");
    for (const auto& row : design) {
        if (row.size() != k) throw LengthMismatch("ragged design matrix");
    }
    for (int y : outcomes) {
        if (y != 0 && y != 1) throw OutOfRange("outcomes must be 0/1");
    }

    std::vector<double> beta(k, 0.0);
    std::vector<double> prob(n, 0.5);
    std::vector<std::vector<double>> info(k, std::vector<double>(k, 0.0));
    bool converged = false;

    for (int iter = 0; iter < 100 && !converged; ++iter) {
        for (auto& row : info) std::fill(row.begin(), row.end(), 0.0);
        std::vector<double> score(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& x = design[i];
            double eta = 0.0;
            for (std::size_t j = 0; j < k; ++j) eta += x[j] * beta[j];
            eta = std::clamp(eta, -35.0, 35.0);
            const double p = 1.0 / (1.0 + std::exp(-eta));
            prob[i] = p;
            const double w = std::max(p * (1.0 - p), 1e-12);
            const double resid = double(outcomes[i]) - p;
            for (std::size_t a = 0; a < k; ++a) {
                score[a] += x[a] * resid;
                for (std::size_t b = 0; b <= a; ++b) info[a][b] += w * x[a] * x[b];
            }
        }
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = a + 1; b < k; ++b) info[a][b] = info[b][a];
        }

        auto chol = info;
        if (!cholesky(chol)) {
            throw Singular("design matrix is rank deficient");
        }
        const auto delta = cholesky_solve(chol, score);

        double max_step = 0.0;
        double max_beta = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            beta[j] += delta[j];
            max_step = std::max(max_step, std::abs(delta[j]));
            max_beta = std::max(max_beta, std::abs(beta[j]));
        }
        if (max_beta > 1e6) {
            throw Separation("coefficients diverging; outcomes look perfectly separated");
        }
        converged = max_step <= 1e-10;
    }
    if (!converged) {
        throw NoConvergence("IRLS did not converge within 100 iterations");
    }

    LogisticFit fit;
    fit.coefficients = beta;
    fit.converged = true;
    fit.n_obs = n;

    fit.log_likelihood = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::clamp(prob[i], 1e-15, 1.0 - 1e-15);
        fit.log_likelihood += outcomes[i] ? std::log(p) : std::log1p(-p);
    }

    // Refresh the information matrix at the final coefficients (prob holds
    // the fitted values from the last completed iteration).
    for (auto& row : info) std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& x = design[i];
        const double w = std::max(prob[i] * (1.0 - prob[i]), 1e-12);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b <= a; ++b) info[a][b] += w * x[a] * x[b];
        }
    }
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) info[a][b] = info[b][a];
    }
    auto chol = info;
    if (!cholesky(chol)) throw Singular("information matrix is singular at the optimum");
    const auto bread = cholesky_inverse(chol);

    if (!clusters) {
        fit.covariance = bread;
    } else {
        // CR0 sandwich: sum score contributions within each cluster, then
        // bread * meat * bread with a G/(G-1) small-sample factor.
        std::unordered_map<int, std::vector<double>> cluster_scores;
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = cluster_scores.try_emplace((*clusters)[i], k, 0.0).first->second;
            const double resid = double(outcomes[i]) - prob[i];
            for (std::size_t j = 0; j < k; ++j) s[j] += design[i][j] * resid;
        }
        std::vector<std::vector<double>> meat(k, std::vector<double>(k, 0.0));
        for (const auto& [label, s] : cluster_scores) {
            (void)label;
            for (std::size_t a = 0; a < k; ++a) {
                for (std::size_t b = 0; b < k; ++b) meat[a][b] += s[a] * s[b];
            }
        }
        const double groups = double(cluster_scores.size());
        const double factor = groups > 1.0 ? groups / (groups - 1.0) : 1.0;

        std::vector<std::vector<double>> half(k, std::vector<double>(k, 0.0));
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) {
                double acc = 0.0;
                for (std::size_t m = 0; m < k; ++m) acc += bread[a][m] * meat[m][b];
                half[a][b] = acc;
            }
        }
        fit.covariance.assign(k, std::vector<double>(k, 0.0));
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) {
                double acc = 0.0;
                for (std::size_t m = 0; m < k; ++m) acc += half[a][m] * bread[m][b];
                fit.covariance[a][b] = factor * acc;
            }
        }
    }

    fit.standard_errors.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        fit.standard_errors[j] = std::sqrt(std::max(fit.covariance[j][j], 0.0));
    }
    return fit;
}

std::string logistic_fit_to_json(const LogisticFit& fit) {
    nlohmann::ordered_json j;
    j["coefficients"] = fit.coefficients;
    j["standard_errors"] = fit.standard_errors;
    j["log_likelihood"] = fit.log_likelihood;
    j["aic"] = fit.aic();
    j["bic"] = fit.bic();
    j["deviance"] = fit.deviance();
    j["n_obs"] = fit.n_obs;
    j["converged"] = fit.converged;
    return j.dump();
}

std::vector<int> quartile_bins(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 4) throw TooFew("quartile_bins needs at least 4 values");
    for (double v : values) {
        if (!std::isfinite(v)) throw OutOfRange("quartile_bins needs finite values");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    // Walk tie groups; each member takes the bin of the group's average rank.
    // With r2 = 2 * average 1-based rank (always an integer), the floor
    // convention is bin = floor(4 * (rank - 1) / n) + 1 = (2*r2 - 4)/n + 1.
    std::vector<int> bins(n, 0);
    std::size_t start = 0;
    while (start < n) {
        std::size_t stop = start + 1;
        while (stop < n && values[order[stop]] == values[order[start]]) ++stop;
        const long r2 = long(start + 1) + long(stop);  // first rank + last rank
        const int bin = int((2 * r2 - 4) / long(n)) + 1;
        for (std::size_t i = start; i < stop; ++i) bins[order[i]] = bin;
        start = stop;
    }
    return bins;
}

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw LengthMismatch("correlation needs equal lengths");
    if (x.size() < 3) throw TooFew("correlation needs at least 3 pairs");
    const double n = double(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw ZeroVariance("correlation is undefined for a constant input");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw OutOfRange("normal_quantile needs p in (0, 1)");

    // Acklam's rational approximation.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace crowddyn
