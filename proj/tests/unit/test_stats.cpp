#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "crowddyn/error.hpp"
#include "crowddyn/rng.hpp"
#include "crowddyn/stats.hpp"

using namespace crowddyn;

namespace {

double gini_brute_force(const std::vector<double>& x) {
    double acc = 0.0;
    double total = 0.0;
    for (double v : x) total += v;
    for (double a : x) {
        for (double b : x) acc += std::abs(a - b);
    }
    const double n = double(x.size());
    return acc / (2.0 * n * n * (total / n));
}

double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

double log_likelihood(const std::vector<std::vector<double>>& design,
                      const std::vector<int>& outcomes, const std::vector<double>& beta) {
    double ll = 0.0;
    for (std::size_t i = 0; i < design.size(); ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < beta.size(); ++j) eta += design[i][j] * beta[j];
        const double p = std::clamp(sigmoid(eta), 1e-15, 1.0 - 1e-15);
        ll += outcomes[i] ? std::log(p) : std::log1p(-p);
    }
    return ll;
}

struct Synthetic {
    std::vector<std::vector<double>> design;
    std::vector<int> outcomes;
};

Synthetic synthetic_logit(std::size_t n, double b0, double b1, std::uint64_t seed) {
    Rng rng(seed);
    Synthetic data;
    data.design.reserve(n);
    data.outcomes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.normal();
        data.design.push_back({1.0, x});
        data.outcomes.push_back(rng.uniform01() < sigmoid(b0 + b1 * x) ? 1 : 0);
    }
    return data;
}

}  // namespace

TEST_CASE("gini") {
    CHECK(gini({3.0, 3.0, 3.0, 3.0}) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(gini({0.0, 0.0, 1.0}) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(gini({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(0.25).epsilon(1e-14));

    CHECK_THROWS_AS(gini({}), EmptyInput);
    CHECK_THROWS_AS(gini({0.0, 0.0}), AllZero);
    CHECK_THROWS_AS(gini({1.0, -0.5}), OutOfRange);

    SUBCASE("matches the pairwise-difference oracle on random data") {
        Rng rng(1234);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> x(2 + rng.below(40));
            for (double& v : x) v = rng.below(5) == 0 ? 0.0 : rng.uniform(0.0, 20.0);
            x[rng.below(x.size())] += 0.5;  // never all-zero
            CHECK(std::abs(gini(x) - gini_brute_force(x)) <= 1e-12);
        }
    }
    SUBCASE("scale and permutation invariant") {
        Rng rng(8);
        std::vector<double> x(12);
        for (double& v : x) v = rng.uniform(0.0, 9.0);
        x[0] += 1.0;
        const double base = gini(x);

        std::vector<double> scaled(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = 7.25 * x[i];
        CHECK(gini(scaled) == doctest::Approx(base).epsilon(1e-12));

        std::vector<double> shuffled = x;
        std::reverse(shuffled.begin(), shuffled.end());
        CHECK(gini(shuffled) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("one-sample proportion test") {
    SUBCASE("observed equals null") {
        const auto r = proportion_test(5, 10, 0.5);
        CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.method == TestMethod::ExactBinomial);
    }
    SUBCASE("six of ten, doubled upper tail") {
        const auto r = proportion_test(6, 10, 0.5);
        CHECK(r.p_value == doctest::Approx(772.0 / 1024.0).epsilon(1e-10));
    }
    SUBCASE("large sample switches to the normal approximation") {
        const auto r = proportion_test(182, 299, 0.5);
        CHECK(r.method == TestMethod::NormalApprox);
        CHECK(r.p_value < 0.001);
    }
    CHECK_THROWS_AS(proportion_test(1, 0, 0.5), OutOfRange);
    CHECK_THROWS_AS(proportion_test(5, 4, 0.5), OutOfRange);
    CHECK_THROWS_AS(proportion_test(1, 10, 0.0), OutOfRange);
    CHECK_THROWS_AS(proportion_test(1, 10, 1.0), OutOfRange);
}

TEST_CASE("exact and approximate tests agree on mid-size samples") {
    for (long n : {100L, 150L, 200L}) {
        for (double null_p : {0.3, 0.5}) {
            for (long k = 0; k <= n; ++k) {
                const auto exact = proportion_test(k, n, null_p);
                REQUIRE(exact.method == TestMethod::ExactBinomial);
                if (exact.p_value < 0.01 || exact.p_value > 0.99) continue;
                const double mean = double(n) * null_p;
                const double sd = std::sqrt(double(n) * null_p * (1.0 - null_p));
                const double z = std::max(0.0, std::abs(double(k) - mean) - 0.5) / sd;
                const double approx = std::erfc(z / std::sqrt(2.0));
                CHECK(std::abs(exact.p_value - approx) <= 0.02);
            }
        }
    }
}

TEST_CASE("two-sample proportion test") {
    CHECK(proportion_test_2(30, 60, 50, 100).p_value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(proportion_test_2(1, 2, 1, 2).p_value == doctest::Approx(1.0).epsilon(1e-12));

    const auto gap = proportion_test_2(69, 100, 40, 100);
    CHECK(gap.p_value < 0.01);
    CHECK(gap.observed == doctest::Approx(0.69));
    CHECK(gap.reference == doctest::Approx(0.40));

    CHECK_THROWS_AS(proportion_test_2(1, 0, 1, 2), OutOfRange);
}

TEST_CASE("Clopper-Pearson interval") {
    const auto none = binomial_ci(0, 20);
    CHECK(none.lo == 0.0);
    CHECK(none.hi > 0.0);
    const auto all = binomial_ci(20, 20);
    CHECK(all.hi == 1.0);

    // Reference values for 50/100 at 95%: (0.39832, 0.60168).
    const auto half = binomial_ci(50, 100);
    CHECK(half.lo == doctest::Approx(0.39832).epsilon(5e-4));
    CHECK(half.hi == doctest::Approx(0.60168).epsilon(5e-4));
    CHECK_THROWS_AS(binomial_ci(5, 10, 1.5), OutOfRange);
}

TEST_CASE("logistic fit recovers known coefficients") {
    const auto data = synthetic_logit(5000, -1.0, 2.0, 31337);
    const auto fit = logistic_fit(data.design, data.outcomes);
    REQUIRE(fit.converged);
    REQUIRE(fit.coefficients.size() == 2);
    CHECK(std::abs(fit.coefficients[0] - (-1.0)) <= 3.0 * fit.standard_errors[0]);
    CHECK(std::abs(fit.coefficients[1] - 2.0) <= 3.0 * fit.standard_errors[1]);

    SUBCASE("score equations hold at the optimum") {
        double score0 = 0.0, score1 = 0.0;
        for (std::size_t i = 0; i < data.design.size(); ++i) {
            const double p =
                sigmoid(fit.coefficients[0] + fit.coefficients[1] * data.design[i][1]);
            score0 += data.outcomes[i] - p;
            score1 += data.design[i][1] * (data.outcomes[i] - p);
        }
        CHECK(std::abs(score0) <= 1e-6);
        CHECK(std::abs(score1) <= 1e-6);
    }

    SUBCASE("fit beats a coarse grid search of the likelihood") {
        double best = -1e300;
        std::vector<double> best_beta(2, 0.0);
        for (double b0 = -2.0; b0 <= 0.0 + 1e-9; b0 += 0.05) {
            for (double b1 = 1.0; b1 <= 3.0 + 1e-9; b1 += 0.05) {
                const double ll = log_likelihood(data.design, data.outcomes, {b0, b1});
                if (ll > best) {
                    best = ll;
                    best_beta = {b0, b1};
                }
            }
        }
        CHECK(std::abs(fit.coefficients[0] - best_beta[0]) <= 0.051);
        CHECK(std::abs(fit.coefficients[1] - best_beta[1]) <= 0.051);
        CHECK(fit.log_likelihood >= best - 1e-9);
    }

    SUBCASE("finite differences match the analytic score") {
        const std::vector<double> beta{0.3, -0.2};
        const double h = 1e-6;
        for (std::size_t j = 0; j < 2; ++j) {
            auto up = beta, down = beta;
            up[j] += h;
            down[j] -= h;
            const double numeric = (log_likelihood(data.design, data.outcomes, up) -
                                    log_likelihood(data.design, data.outcomes, down)) /
                                   (2.0 * h);
            double analytic = 0.0;
            for (std::size_t i = 0; i < data.design.size(); ++i) {
                const double p = sigmoid(beta[0] + beta[1] * data.design[i][1]);
                analytic += data.design[i][j] * (data.outcomes[i] - p);
            }
            CHECK(std::abs(numeric - analytic) <= 1e-4 * std::max(1.0, std::abs(analytic)));
        }
    }
}

TEST_CASE("logistic fit with a balanced unrelated regressor finds no slope") {
    std::vector<std::vector<double>> design;
    std::vector<int> outcomes;
    for (int i = 0; i < 400; ++i) {
        design.push_back({1.0, i % 2 == 0 ? 1.0 : -1.0});
        outcomes.push_back(i % 4 < 2 ? 1 : 0);  // independent of the regressor
    }
    const auto fit = logistic_fit(design, outcomes);
    CHECK(std::abs(fit.coefficients[1]) <= 2.0 * fit.standard_errors[1]);
}

TEST_CASE("cluster-robust covariance") {
    const auto data = synthetic_logit(600, 0.4, -0.8, 99);

    SUBCASE("singleton clusters equal the per-observation sandwich") {
        std::vector<int> singleton(600);
        std::iota(singleton.begin(), singleton.end(), 0);
        const auto plain = logistic_fit(data.design, data.outcomes);
        const auto clustered = logistic_fit(data.design, data.outcomes, &singleton);

        // Test-side sandwich: bread * meat * bread with the G/(G-1) factor.
        std::vector<std::vector<double>> meat(2, std::vector<double>(2, 0.0));
        for (std::size_t i = 0; i < data.design.size(); ++i) {
            const double p =
                sigmoid(plain.coefficients[0] + plain.coefficients[1] * data.design[i][1]);
            const double r = data.outcomes[i] - p;
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    meat[a][b] += data.design[i][a] * data.design[i][b] * r * r;
                }
            }
        }
        const double factor = 600.0 / 599.0;
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                double expected = 0.0;
                for (int s = 0; s < 2; ++s) {
                    for (int t = 0; t < 2; ++t) {
                        expected +=
                            plain.covariance[a][s] * meat[s][t] * plain.covariance[t][b];
                    }
                }
                expected *= factor;
                CHECK(clustered.covariance[a][b] == doctest::Approx(expected).epsilon(1e-8));
            }
        }
    }

    SUBCASE("a single cluster stays positive semi-definite") {
        std::vector<int> one(600, 7);
        const auto fit = logistic_fit(data.design, data.outcomes, &one);
        for (int a = 0; a < 2; ++a) CHECK(fit.covariance[a][a] >= -1e-10);
        Rng rng(3);
        for (int trial = 0; trial < 10; ++trial) {
            const double u = rng.normal(), v = rng.normal();
            const double quad = u * u * fit.covariance[0][0] +
                                2.0 * u * v * fit.covariance[0][1] +
                                v * v * fit.covariance[1][1];
            CHECK(quad >= -1e-8);
        }
    }
}

TEST_CASE("logistic fit failure modes") {
    SUBCASE("perfect separation") {
        std::vector<std::vector<double>> design;
        std::vector<int> outcomes;
        Rng rng(12);
        for (int i = 0; i < 60; ++i) {
            const double x = rng.normal();
            design.push_back({1.0, x});
            outcomes.push_back(x > 0.0 ? 1 : 0);
        }
        CHECK_THROWS_AS(logistic_fit(design, outcomes), Separation);
    }
    SUBCASE("duplicated column is singular") {
        std::vector<std::vector<double>> design;
        std::vector<int> outcomes;
        Rng rng(13);
        for (int i = 0; i < 50; ++i) {
            const double x = rng.normal();
            design.push_back({1.0, x, x});
            outcomes.push_back(rng.uniform01() < 0.5 ? 1 : 0);
        }
        CHECK_THROWS_AS(logistic_fit(design, outcomes), Singular);
    }
    SUBCASE("shape errors") {
        CHECK_THROWS_AS(logistic_fit({{1.0}, {1.0}}, {1}), LengthMismatch);
        CHECK_THROWS_AS(logistic_fit({{1.0, 2.0}}, {1}), TooFew);
        CHECK_THROWS_AS(logistic_fit({{1.0}, {1.0}}, {1, 2}), OutOfRange);
    }
}

TEST_CASE("quartile bins") {
    CHECK(quartile_bins({1.0, 2.0, 3.0, 4.0}) == std::vector<int>{1, 2, 3, 4});
    CHECK(quartile_bins({5.0, 5.0, 5.0, 5.0}) == std::vector<int>{2, 2, 2, 2});
    CHECK(quartile_bins({10, 20, 30, 40, 50, 60, 70, 80}) ==
          std::vector<int>{1, 1, 2, 2, 3, 3, 4, 4});
    CHECK_THROWS_AS(quartile_bins({1.0, 2.0, 3.0}), TooFew);

    SUBCASE("monotone non-decreasing on sorted input") {
        Rng rng(21);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> x(4 + rng.below(40));
            for (double& v : x) v = double(rng.below(6));  // plenty of ties
            std::sort(x.begin(), x.end());
            const auto bins = quartile_bins(x);
            for (std::size_t i = 1; i < bins.size(); ++i) CHECK(bins[i] >= bins[i - 1]);
            for (int b : bins) {
                CHECK(b >= 1);
                CHECK(b <= 4);
            }
        }
    }
    SUBCASE("distinct values give near-equal bin sizes") {
        Rng rng(22);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> x(4 + rng.below(30));
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = double(i) + rng.uniform01() * 0.5;
            const auto bins = quartile_bins(x);
            int count[5] = {0, 0, 0, 0, 0};
            for (int b : bins) ++count[b];
            for (int b = 1; b <= 4; ++b) {
                for (int c = 1; c <= 4; ++c) CHECK(std::abs(count[b] - count[c]) <= 1);
            }
        }
    }
}

TEST_CASE("correlation") {
    const std::vector<double> x{1.0, 2.0, 3.0, 5.0};
    CHECK(correlation(x, x) == doctest::Approx(1.0).epsilon(1e-14));
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
    CHECK(correlation(x, neg) == doctest::Approx(-1.0).epsilon(1e-14));

    CHECK_THROWS_AS(correlation({1.0, 2.0, 3.0}, {2.0, 2.0, 2.0}), ZeroVariance);
    CHECK_THROWS_AS(correlation({1.0, 2.0}, {1.0, 2.0, 3.0}), LengthMismatch);
    CHECK_THROWS_AS(correlation({1.0, 2.0}, {1.0, 2.0}), TooFew);
}

TEST_CASE("normal quantile inverts the CDF") {
    for (double p = 0.0005; p < 1.0; p += 0.0101) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-7));
    }
}
