#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "crowddyn/dynamics.hpp"
#include "crowddyn/error.hpp"
#include "crowddyn/network.hpp"
#include "crowddyn/rng.hpp"

using namespace crowddyn;

namespace {

InfluenceNetwork random_ergodic_network(Rng& rng, std::size_t max_n = 20) {
    const std::size_t n = 2 + rng.below(max_n - 1);
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    if (rng.below(2) == 0) {
        // Dense positive rows.
        for (auto& row : w) {
            double sum = 0.0;
            for (double& x : row) {
                x = 0.01 + rng.uniform01();
                sum += x;
            }
            for (double& x : row) x /= sum;
        }
    } else {
        // Sparse: directed ring plus self-loops plus a few random edges.
        for (std::size_t i = 0; i < n; ++i) {
            w[i][i] = 0.2 + 0.6 * rng.uniform01();
            w[i][(i + 1) % n] = 1.0 - w[i][i];
        }
        for (std::size_t extra = 0; extra < n; ++extra) {
            const std::size_t i = rng.below(n);
            const std::size_t j = rng.below(n);
            if (i == j) continue;
            const double shift = 0.25 * w[i][i];
            w[i][i] -= shift;
            w[i][j] += shift;
        }
    }
    return build_network(w);
}

std::vector<double> random_estimates(Rng& rng, std::size_t n) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-100.0, 100.0);
    return x;
}

}  // namespace

TEST_CASE("step is the row-weighted average") {
    SUBCASE("all-1/n rows collapse to the mean in one step") {
        const auto net = uniform_network(3, 1.0 / 3.0);
        const auto next = step(net, {1.0, 2.0, 3.0});
        for (double v : next) CHECK(v == doctest::Approx(2.0).epsilon(1e-14));
    }
    SUBCASE("identity leaves estimates alone") {
        const auto identity = build_network({{1.0, 0.0}, {0.0, 1.0}});
        const auto next = step(identity, {7.5, -2.0});
        CHECK(next[0] == 7.5);
        CHECK(next[1] == -2.0);
    }
    SUBCASE("star 0.5/0.5 on (10,2,2)") {
        const auto next = step(star_network(3, 0.5, 0.5), {10.0, 2.0, 2.0});
        CHECK(next[0] == 6.0);
        CHECK(next[1] == 6.0);
        CHECK(next[2] == 6.0);
    }
    CHECK_THROWS_AS(step(uniform_network(3, 0.2), {1.0, 2.0}), LengthMismatch);
}

TEST_CASE("run_rounds keeps every intermediate state") {
    const BeliefState state{{10.0, 2.0, 2.0}, 5.0};

    const auto none = run_rounds(star_network(3, 0.5, 0.5), state, 0);
    CHECK(none.states.size() == 1);
    CHECK(none.final() == state.estimates);

    const auto one = run_rounds(star_network(3, 0.5, 0.5), state, 1);
    CHECK(one.states.size() == 2);
    CHECK(one.final() == std::vector<double>{6.0, 6.0, 6.0});

    const auto collapse = run_rounds(uniform_network(4, 0.25), {{1.0, 2.0, 3.0, 6.0}, 0.0}, 2);
    REQUIRE(collapse.states.size() == 3);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(collapse.states[1][i] == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(collapse.states[2][i] == doctest::Approx(3.0).epsilon(1e-14));
    }
}

TEST_CASE("converge reaches the centrality-weighted average") {
    SUBCASE("uniform network converges to the mean") {
        const double c = converge(uniform_network(5, 0.2), {{1.0, 2.0, 3.0, 4.0, 5.0}, 0.0});
        CHECK(c == doctest::Approx(3.0).epsilon(1e-10));
    }
    SUBCASE("star pulls toward the center") {
        const double c = converge(star_network(3, 0.5, 0.5), {{10.0, 2.0, 2.0}, 0.0});
        CHECK(c == doctest::Approx(6.0).epsilon(1e-10));
    }
    SUBCASE("constant estimates are already consensus") {
        const double c = converge(uniform_network(4, 0.4), {{2.5, 2.5, 2.5, 2.5}, 0.0});
        CHECK(c == 2.5);
    }
    SUBCASE("identity network is rejected") {
        const auto identity = build_network({{1.0, 0.0}, {0.0, 1.0}});
        CHECK_THROWS_AS(converge(identity, {{1.0, 2.0}, 0.0}), NotErgodic);
    }
    SUBCASE("round budget is honored") {
        CHECK_THROWS_AS(converge(uniform_network(3, 0.5), {{0.0, 5.0, 9.0}, 0.0}, 1e-10, 0),
                        NoConvergence);
    }
}

TEST_CASE("converge agrees with asymptotic centrality on random networks") {
    Rng rng(424242);
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = random_ergodic_network(rng);
        const auto x = random_estimates(rng, net.size());
        const auto v = centrality(net, CentralityKind::Asymptotic);
        double expected = 0.0;
        for (std::size_t i = 0; i < net.size(); ++i) expected += v.scores[i] * x[i];
        const double c = converge(net, {x, 0.0});
        CHECK(std::abs(c - expected) <= 1e-9);
    }
}

TEST_CASE("conservation on uniform networks") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(19);
        const auto x = random_estimates(rng, n);
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
        const double c = converge(uniform_network(n, rng.uniform(0.0, 0.9)), {x, 0.0});
        CHECK(c == doctest::Approx(mean).epsilon(1e-9));
    }
}

TEST_CASE("revision contracts the estimate range") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const auto net = random_ergodic_network(rng);
        auto x = random_estimates(rng, net.size());
        for (int round = 0; round < 20; ++round) {
            const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
            const double prev_lo = *lo, prev_hi = *hi;
            x = step(net, x);
            const auto [lo2, hi2] = std::minmax_element(x.begin(), x.end());
            CHECK(*hi2 <= prev_hi + 1e-12);
            CHECK(*lo2 >= prev_lo - 1e-12);
        }
    }
}

TEST_CASE("relabeling agents permutes trajectories") {
    Rng rng(123);
    const auto net = random_ergodic_network(rng, 10);
    const std::size_t n = net.size();
    const auto x = random_estimates(rng, n);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

    std::vector<std::vector<double>> pw(n, std::vector<double>(n, 0.0));
    std::vector<double> px(n);
    for (std::size_t i = 0; i < n; ++i) {
        px[perm[i]] = x[i];
        for (std::size_t j = 0; j < n; ++j) pw[perm[i]][perm[j]] = net.weight(i, j);
    }
    const auto permuted = build_network(pw);

    const auto base = run_rounds(net, {x, 0.0}, 5);
    const auto relabeled = run_rounds(permuted, {px, 0.0}, 5);
    for (std::size_t round = 0; round < base.states.size(); ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(relabeled.states[round][perm[i]] ==
                  doctest::Approx(base.states[round][i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("group_error") {
    CHECK(group_error({1.0, 2.0, 3.0}, 2.0) == 0.0);
    CHECK(group_error({1.0, 2.0, 3.0, 4.0, 10.0}, 3.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(group_error({5.0}, 2.0) == 3.0);
    CHECK_THROWS_AS(group_error({}, 1.0), EmptyInput);
}

TEST_CASE("improvement outcomes") {
    CHECK(improvement({4.0}, {3.5}, 3.0) == Outcome::Improved);
    CHECK(improvement({3.6}, {6.4}, 5.0) == Outcome::Unchanged);
    CHECK(improvement({4.0}, {5.0}, 3.0) == Outcome::Worsened);
    CHECK_THROWS_AS(improvement({}, {1.0}, 0.0), EmptyInput);
    CHECK_THROWS_AS(improvement({1.0}, {}, 0.0), EmptyInput);

    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_estimates(rng, 1 + rng.below(10));
        CHECK(improvement(x, x, rng.uniform(-50.0, 50.0)) == Outcome::Unchanged);
    }
}
