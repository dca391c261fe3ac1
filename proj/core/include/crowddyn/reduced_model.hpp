#pragma once

#include <cstddef>
#include <vector>

namespace crowddyn {

enum class MajorityLabel { Toward, Away, Split };

const char* to_string(MajorityLabel label);

/// Share of individuals whose estimate sits on the same side of the group
/// mean as the true answer. Estimates exactly at the mean are on neither
/// side; if the truth itself equals the mean the summary is degenerate and
/// phi is 0.5 by convention.
struct PhiSummary {
    double phi = 0.5;
    MajorityLabel label = MajorityLabel::Split;
    bool degenerate = false;
};

PhiSummary phi(const std::vector<double>& estimates, double truth);

/// Two-point reduction of a group: one high-influence individual with
/// estimate high_estimate, and n-1 equally low-influence individuals whose
/// mean estimate is low_mean. influence is the high individual's share of
/// the post-communication mean, in [1/n, 1].
struct ReducedGroup {
    std::size_t n = 2;
    double high_estimate = 0.0;
    double low_mean = 0.0;
    double influence = 0.5;
    double truth = 0.0;
};

struct ProjectedMeans {
    double mu_pre = 0.0;   // (1/n)*high + (1-1/n)*low
    double mu_post = 0.0;  // influence*high + (1-influence)*low
};

/// Pre- and post-communication group means of the reduced model. At
/// influence = 1/n the two are identical (and computed identically, so the
/// equality is exact).
ProjectedMeans project_means(const ReducedGroup& group);

enum class InfluenceRegime {
    NoImprovementPossible,  // high individual pulls away from the truth
    AlwaysImproves,         // boundary above 1: improvement for every admissible influence
    Bounded,                // improvement iff influence < value
};

/// Influence level at which the post-communication error equals the
/// pre-communication error. `value` is clamped to [1/n, 1]; `unclamped`
/// keeps the raw boundary for callers that need the qualitative answer.
struct CriticalInfluence {
    InfluenceRegime regime = InfluenceRegime::Bounded;
    double value = 0.0;
    double unclamped = 0.0;
};

/// Solves the overshoot boundary: moving the mean toward the truth keeps
/// helping until it has moved twice the pre-communication error, after which
/// the group ends up farther away than it started. Throws DegenerateGroup
/// when high_estimate == low_mean.
CriticalInfluence critical_c(const ReducedGroup& group);

enum class Prediction { Improves, Worsens, Boundary };

const char* to_string(Prediction prediction);

/// Qualitative outcome of communication for the reduced group: Worsens when
/// the high individual sits on the wrong side of the truth or beyond the
/// critical influence, Improves below it, Boundary within 1e-12 of either
/// the critical influence or influence = 1/n.
Prediction predict_outcome(const ReducedGroup& group);

enum class OmegaDirection { OmegaToC, CToOmega };

/// Affine map between the centralization coordinate w in [0, 1] and the
/// high individual's influence share C in [1/n, 1]:
/// C = 1/n + (n-1)/n * w, and its inverse.
double omega_c_convert(std::size_t n, double value, OmegaDirection direction);

enum class PhiPrediction { ExpectImprove, ExpectWorsen, NoPrediction };

const char* to_string(PhiPrediction prediction);

/// The decision rule: centralized influence is expected to improve the group
/// mean when phi > 1/2, to worsen it when phi < 1/2, and makes no call on a
/// split or degenerate summary.
PhiPrediction phi_rule(const PhiSummary& summary);

}  // namespace crowddyn
