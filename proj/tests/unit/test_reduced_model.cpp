#include <doctest.h>

#include <cmath>
#include <vector>

#include "crowddyn/error.hpp"
#include "crowddyn/reduced_model.hpp"
#include "crowddyn/rng.hpp"

using namespace crowddyn;

namespace {

double post_error(const ReducedGroup& g) {
    return std::abs(project_means(g).mu_post - g.truth);
}

double pre_error(const ReducedGroup& g) {
    return std::abs(project_means(g).mu_pre - g.truth);
}

}  // namespace

TEST_CASE("phi counts the truth side of the mean") {
    SUBCASE("skewed example") {
        const auto s = phi({1.0, 2.0, 3.0, 4.0, 10.0}, 3.0);
        CHECK(s.phi == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(s.label == MajorityLabel::Toward);
        CHECK_FALSE(s.degenerate);
    }
    SUBCASE("truth exactly at the mean is degenerate") {
        const auto s = phi({1.0, 3.0}, 2.0);
        CHECK(s.phi == 0.5);
        CHECK(s.label == MajorityLabel::Split);
        CHECK(s.degenerate);
    }
    SUBCASE("three of four against a far outlier") {
        const auto s = phi({2.0, 2.0, 2.0, 10.0}, 1.0);
        CHECK(s.phi == 0.75);
        CHECK(s.label == MajorityLabel::Toward);
    }
    SUBCASE("estimates exactly at the mean count for neither side") {
        const auto s = phi({1.0, 2.0, 3.0}, 0.0);  // mean 2; the middle value sits on it
        CHECK(s.phi == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(s.label == MajorityLabel::Away);
    }
    CHECK_THROWS_AS(phi({}, 1.0), EmptyInput);
}

TEST_CASE("phi is equivariant under positive affine maps") {
    Rng rng(808);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(5 + rng.below(20));
        for (double& v : x) v = rng.normal(10.0, 4.0);
        const double truth = rng.normal(10.0, 4.0);
        const double a = rng.uniform(0.1, 5.0);
        const double b = rng.uniform(-20.0, 20.0);

        std::vector<double> mapped(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) mapped[i] = a * x[i] + b;

        const auto base = phi(x, truth);
        const auto moved = phi(mapped, a * truth + b);
        CHECK(base.phi == moved.phi);
        CHECK(base.label == moved.label);
    }
}

TEST_CASE("project_means endpoints") {
    const ReducedGroup equal{5, 10.0, 2.0, 1.0 / 5.0, 0.0};
    const auto at_base = project_means(equal);
    CHECK(at_base.mu_pre == doctest::Approx(3.6).epsilon(1e-15));
    CHECK(at_base.mu_post == at_base.mu_pre);  // exact at influence = 1/n

    const ReducedGroup dictator{5, 10.0, 2.0, 1.0, 0.0};
    CHECK(project_means(dictator).mu_post == 10.0);

    const ReducedGroup half{5, 10.0, 2.0, 0.5, 0.0};
    CHECK(project_means(half).mu_post == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("project_means identity at influence 1/n is exact for random groups") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(30);
        const ReducedGroup g{n, rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0),
                             1.0 / double(n), rng.uniform(-100.0, 100.0)};
        const auto means = project_means(g);
        CHECK(means.mu_post == means.mu_pre);
    }
}

TEST_CASE("critical influence boundary") {
    SUBCASE("interior boundary") {
        const ReducedGroup g{5, 10.0, 2.0, 0.3, 5.0};
        const auto critical = critical_c(g);
        CHECK(critical.regime == InfluenceRegime::Bounded);
        CHECK(critical.value == doctest::Approx(0.55).epsilon(1e-13));

        ReducedGroup at = g;
        at.influence = critical.value;
        CHECK(std::abs(post_error(at) - pre_error(at)) <= 1e-12);
    }
    SUBCASE("high individual on the wrong side") {
        CHECK(critical_c({5, 10.0, 2.0, 0.3, 2.0}).regime ==
              InfluenceRegime::NoImprovementPossible);
    }
    SUBCASE("high individual more accurate than the mean") {
        const auto critical = critical_c({5, 10.0, 2.0, 0.3, 10.0});
        CHECK(critical.regime == InfluenceRegime::AlwaysImproves);
        CHECK(critical.unclamped == doctest::Approx(1.8).epsilon(1e-13));
        CHECK(critical.value == 1.0);
    }
    CHECK_THROWS_AS(critical_c({5, 2.0, 2.0, 0.3, 5.0}), DegenerateGroup);
}

TEST_CASE("boundary consistency on random groups") {
    Rng rng(2718);
    int checked = 0;
    while (checked < 300) {
        ReducedGroup g;
        g.n = 3 + rng.below(28);
        g.high_estimate = rng.uniform(-50.0, 50.0);
        g.low_mean = rng.uniform(-50.0, 50.0);
        if (g.high_estimate == g.low_mean) continue;
        g.truth = rng.uniform(-50.0, 50.0);
        g.influence = 1.0 / double(g.n);
        const auto critical = critical_c(g);
        if (critical.regime != InfluenceRegime::Bounded) continue;
        g.influence = critical.value;
        CHECK(std::abs(post_error(g) - pre_error(g)) <= 1e-12);
        ++checked;
    }
}

TEST_CASE("predict_outcome") {
    SUBCASE("below the boundary improves, above worsens") {
        ReducedGroup g{5, 10.0, 2.0, 0.4, 5.0};
        CHECK(predict_outcome(g) == Prediction::Improves);
        CHECK(post_error(g) == doctest::Approx(0.2).epsilon(1e-12));

        g.influence = 0.7;
        CHECK(predict_outcome(g) == Prediction::Worsens);
        CHECK(post_error(g) == doctest::Approx(2.6).epsilon(1e-12));
    }
    SUBCASE("wrong direction worsens for any influence") {
        for (double c : {0.21, 0.5, 1.0}) {
            CHECK(predict_outcome({5, 10.0, 2.0, c, 2.0}) == Prediction::Worsens);
        }
    }
    SUBCASE("boundaries") {
        CHECK(predict_outcome({5, 10.0, 2.0, 0.2, 5.0}) == Prediction::Boundary);
        const auto critical = critical_c({5, 10.0, 2.0, 0.3, 5.0});
        CHECK(predict_outcome({5, 10.0, 2.0, critical.value, 5.0}) == Prediction::Boundary);
    }
    CHECK_THROWS_AS(predict_outcome({5, 2.0, 2.0, 0.5, 5.0}), DegenerateGroup);
}

TEST_CASE("error is unimodal in influence when the high individual helps") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        ReducedGroup g;
        g.n = 4 + rng.below(20);
        g.high_estimate = rng.uniform(-20.0, 20.0);
        g.low_mean = rng.uniform(-20.0, 20.0);
        if (std::abs(g.high_estimate - g.low_mean) < 1e-6) continue;
        g.truth = rng.uniform(-20.0, 20.0);
        g.influence = 1.0 / double(g.n);
        const auto means = project_means(g);
        const bool toward = (g.truth > means.mu_pre) == (g.high_estimate > means.mu_pre) &&
                            g.truth != means.mu_pre;

        double previous = pre_error(g);
        bool rising = false;
        const int grid = 40;
        for (int k = 1; k <= grid; ++k) {
            g.influence = 1.0 / double(g.n) +
                          (1.0 - 1.0 / double(g.n)) * double(k) / double(grid);
            const double err = post_error(g);
            if (!toward) {
                CHECK(err >= previous - 1e-12);  // strictly worse the stronger the pull
            } else if (rising) {
                CHECK(err >= previous - 1e-12);  // past the optimum: monotone rise
            } else if (err > previous + 1e-12) {
                rising = true;  // single turning point allowed
            }
            previous = err;
        }
    }
}

TEST_CASE("influence/centralization conversion") {
    CHECK(omega_c_convert(5, 0.0, OmegaDirection::OmegaToC) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(omega_c_convert(5, 1.0, OmegaDirection::OmegaToC) == 1.0);
    const double c = omega_c_convert(5, 0.5, OmegaDirection::OmegaToC);
    CHECK(c == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(omega_c_convert(5, c, OmegaDirection::CToOmega) == doctest::Approx(0.5).epsilon(1e-13));

    CHECK_THROWS_AS(omega_c_convert(5, 1.2, OmegaDirection::OmegaToC), OutOfRange);
    CHECK_THROWS_AS(omega_c_convert(5, 0.1, OmegaDirection::CToOmega), OutOfRange);
    CHECK_THROWS_AS(omega_c_convert(1, 0.5, OmegaDirection::OmegaToC), TooSmall);
}

TEST_CASE("phi rule") {
    CHECK(phi_rule({0.6, MajorityLabel::Toward, false}) == PhiPrediction::ExpectImprove);
    CHECK(phi_rule({0.36, MajorityLabel::Away, false}) == PhiPrediction::ExpectWorsen);
    CHECK(phi_rule({0.5, MajorityLabel::Split, false}) == PhiPrediction::NoPrediction);
    CHECK(phi_rule({0.5, MajorityLabel::Split, true}) == PhiPrediction::NoPrediction);
}
