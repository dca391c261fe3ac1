#include "crowddyn/reduced_model.hpp"

#include <cmath>
#include <string>

#include "crowddyn/error.hpp"

namespace crowddyn {

namespace {

constexpr double kBoundaryTie = 1e-12;

void check_reduced_group(const ReducedGroup& group) {
    if (group.n < 2) throw TooSmall("reduced group needs n >= 2");
    const double lo = 1.0 / double(group.n);
    if (!(group.influence >= lo - kBoundaryTie && group.influence <= 1.0 + kBoundaryTie)) {
        throw OutOfRange("influence must lie in [1/n, 1]");
    }
}

}  // namespace

const char* to_string(MajorityLabel label) {
    switch (label) {
        case MajorityLabel::Toward: return "toward";
        case MajorityLabel::Away: return "away";
        case MajorityLabel::Split: return "split";
    }
    return "unknown";
}

PhiSummary phi(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw EmptyInput("phi needs at least one estimate");
    const std::size_t n = estimates.size();
    double sum = 0.0;
    for (double x : estimates) sum += x;
    const double mean = sum / double(n);

    PhiSummary summary;
    if (truth == mean) {
        summary.phi = 0.5;
        summary.label = MajorityLabel::Split;
        summary.degenerate = true;
        return summary;
    }
    const bool truth_above = truth > mean;
    std::size_t on_truth_side = 0;
    for (double x : estimates) {
        if (x == mean) continue;  // exactly at the mean: on neither side
        if ((x > mean) == truth_above) ++on_truth_side;
    }
    summary.phi = double(on_truth_side) / double(n);
    // Integer comparison keeps the split case exact for odd counts like 10/20.
    if (2 * on_truth_side > n) {
        summary.label = MajorityLabel::Toward;
    } else if (2 * on_truth_side < n) {
        summary.label = MajorityLabel::Away;
    } else {
        summary.label = MajorityLabel::Split;
    }
    return summary;
}

ProjectedMeans project_means(const ReducedGroup& group) {
    check_reduced_group(group);
    const double base = 1.0 / double(group.n);
    ProjectedMeans means;
    means.mu_pre = base * group.high_estimate + (1.0 - base) * group.low_mean;
    means.mu_post = group.influence * group.high_estimate +
                    (1.0 - group.influence) * group.low_mean;
    return means;
}

CriticalInfluence critical_c(const ReducedGroup& group) {
    if (group.n < 2) throw TooSmall("reduced group needs n >= 2");
    if (group.high_estimate == group.low_mean) {
        throw DegenerateGroup("high estimate equals the low mean; influence is moot");
    }
    const double base = 1.0 / double(group.n);
    const double mu_pre = base * group.high_estimate + (1.0 - base) * group.low_mean;
    const double toward_truth = group.truth - mu_pre;
    const double toward_high = group.high_estimate - mu_pre;

    CriticalInfluence result;
    if (toward_truth == 0.0 || std::signbit(toward_truth) != std::signbit(toward_high)) {
        result.regime = InfluenceRegime::NoImprovementPossible;
        result.value = base;
        result.unclamped = base;
        return result;
    }

    // The mean moves by (C - 1/n)(high - low); it helps until it has covered
    // twice the pre-communication gap to the truth.
    const double raw = base + 2.0 * toward_truth / (group.high_estimate - group.low_mean);
    result.unclamped = raw;
    if (raw >= 1.0) {
        result.regime = InfluenceRegime::AlwaysImproves;
        result.value = 1.0;
    } else {
        result.regime = InfluenceRegime::Bounded;
        result.value = raw;
    }
    return result;
}

const char* to_string(Prediction prediction) {
    switch (prediction) {
        case Prediction::Improves: return "improves";
        case Prediction::Worsens: return "worsens";
        case Prediction::Boundary: return "boundary";
    }
    return "unknown";
}

Prediction predict_outcome(const ReducedGroup& group) {
    check_reduced_group(group);
    if (group.high_estimate == group.low_mean) {
        throw DegenerateGroup("high estimate equals the low mean; influence is moot");
    }
    const double base = 1.0 / double(group.n);
    if (std::abs(group.influence - base) <= kBoundaryTie) return Prediction::Boundary;

    const CriticalInfluence critical = critical_c(group);
    if (critical.regime == InfluenceRegime::NoImprovementPossible) {
        return Prediction::Worsens;
    }
    if (std::abs(group.influence - critical.unclamped) <= kBoundaryTie) {
        return Prediction::Boundary;
    }
    return group.influence < critical.unclamped ? Prediction::Improves
                                                : Prediction::Worsens;
}

double omega_c_convert(std::size_t n, double value, OmegaDirection direction) {
    if (n < 2) throw TooSmall("conversion needs n >= 2");
    const double base = 1.0 / double(n);
    const double slope = double(n - 1) / double(n);
    if (direction == OmegaDirection::OmegaToC) {
        if (!(value >= 0.0 && value <= 1.0)) {
            throw OutOfRange("centralization coordinate must be in [0, 1]");
        }
        return base + slope * value;
    }
    if (!(value >= base - kBoundaryTie && value <= 1.0 + kBoundaryTie)) {
        throw OutOfRange("influence must be in [1/n, 1]");
    }
    return (value - base) / slope;
}

const char* to_string(PhiPrediction prediction) {
    switch (prediction) {
        case PhiPrediction::ExpectImprove: return "expect-improve";
        case PhiPrediction::ExpectWorsen: return "expect-worsen";
        case PhiPrediction::NoPrediction: return "no-prediction";
    }
    return "unknown";
}

PhiPrediction phi_rule(const PhiSummary& summary) {
    if (summary.degenerate || summary.label == MajorityLabel::Split) {
        return PhiPrediction::NoPrediction;
    }
    return summary.label == MajorityLabel::Toward ? PhiPrediction::ExpectImprove
                                                  : PhiPrediction::ExpectWorsen;
}

}  // namespace crowddyn
