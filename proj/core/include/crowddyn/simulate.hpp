#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crowddyn/dynamics.hpp"
#include "crowddyn/network.hpp"
#include "crowddyn/reduced_model.hpp"
#include "crowddyn/rng.hpp"
#include "crowddyn/stats.hpp"

namespace crowddyn {

enum class Condition { Delphi, Discussion };

const char* to_string(Condition condition);

/// Generative model for estimates or talkativeness.
struct Distribution {
    enum class Kind { Lognormal, Normal, Empirical };

    Kind kind = Kind::Lognormal;
    double location = 0.0;  // mu of the underlying normal
    double scale = 1.0;     // sigma of the underlying normal
    std::vector<double> data;  // Empirical: resampled with replacement

    static Distribution lognormal(double location, double scale) {
        return {Kind::Lognormal, location, scale, {}};
    }
    static Distribution normal(double location, double scale) {
        return {Kind::Normal, location, scale, {}};
    }
    static Distribution empirical(std::vector<double> values) {
        return {Kind::Empirical, 0.0, 0.0, std::move(values)};
    }
};

/// Full description of one simulated trial. Everything a trial does is a
/// deterministic function of this struct (seed included).
struct TrialSpec {
    std::size_t group_size = 20;
    Condition condition = Condition::Discussion;
    Distribution estimates = Distribution::lognormal(0.0, 1.0);
    double truth = 1.0;

    /// Delphi: number of revision rounds (four revisions = five estimates).
    std::size_t rounds = 4;

    /// Delphi: target rank correlation between an agent's self-weight and its
    /// initial error, driven by a Gaussian-copula assignment of the evenly
    /// spaced self-weights in [stubbornness_lo, stubbornness_hi].
    double stubbornness_error_rho = 0.0;
    double stubbornness_lo = 0.1;
    double stubbornness_hi = 0.9;

    /// Discussion: message-count model (draws are rounded and floored at 1)
    /// and the self-weight every row keeps before splitting the rest by peers'
    /// talkativeness. Estimates and talkativeness draws are independent.
    Distribution talkativeness = Distribution::lognormal(1.5, 1.0);
    double self_weight = 0.5;

    /// Star-probe mode: rejection-sample estimates until exactly
    /// round(phi_target * n) of them sit on the truth side of the mean, give
    /// one uniformly chosen hub a star topology with influence drawn below the
    /// critical level, and run to consensus. Used by the phi-bucket sweep.
    std::optional<double> phi_target;

    double converge_tol = 1e-10;
    std::size_t converge_max_rounds = 1000000;

    std::uint64_t seed = 0;
};

struct TrialRecord {
    TrialSpec spec;            // echo of the inputs
    std::uint64_t seed = 0;    // per-trial seed actually used
    std::size_t trial_index = 0;

    std::vector<double> pre_estimates;
    std::vector<double> post_estimates;
    Trajectory trajectory;  // every revision round (delphi) or {pre, consensus}

    PhiSummary phi;
    Outcome outcome = Outcome::Unchanged;
    double gini_influence = 0.0;  // Gini of asymptotic centrality
    std::size_t top_influencer = 0;
    bool top_influencer_toward = false;

    /// Per-agent self-weights (delphi) or integer message counts
    /// (discussion); empty for star probes.
    std::vector<double> influence_trait;

    /// Star-probe extras: realized hub influence and index.
    std::optional<double> star_influence;
    std::optional<std::size_t> hub_index;
};

struct BucketStats {
    long trials = 0;
    long improved = 0;
    double proportion = 0.0;
    std::optional<ProportionTestResult> vs_half;  // one-sample test against 0.5
};

struct EnsembleReport {
    long trials = 0;
    long improved = 0;
    double proportion_improved = 0.0;
    Interval ci;  // exact binomial, 95%
    double mean_phi = 0.0;
    BucketStats toward, away, split;
    std::optional<ProportionTestResult> toward_vs_away;
    std::vector<TrialRecord> records;
};

/// group_size draws from the spec's estimate distribution.
std::vector<double> sample_estimates(const TrialSpec& spec, Rng& rng);

/// Uniform-peer network from per-agent self-weights: row i keeps
/// self_weights[i] on itself and splits the rest evenly over peers.
InfluenceNetwork delphi_network(const std::vector<double>& self_weights);

struct InfluenceAssignment {
    InfluenceNetwork net;
    std::vector<double> trait;  // self-weights (delphi) or message counts (discussion)
};

/// Condition-specific influence structure for one trial.
InfluenceAssignment assign_influence(const TrialSpec& spec,
                                     const std::vector<double>& estimates, Rng& rng);

/// Runs one trial from spec.seed. Deterministic.
TrialRecord run_trial(const TrialSpec& spec);

/// Ensemble of independent trials with per-trial seeds derived from
/// (base_seed, index); identical output for identical inputs regardless of
/// thread count.
EnsembleReport run_ensemble(const TrialSpec& spec, long trials, std::uint64_t base_seed,
                            unsigned threads = 1);

enum class SweepAxis { PhiBucket, Rho, Centralization };

const char* to_string(SweepAxis axis);

/// One ensemble per level, all sharing base_seed (so estimate draws are
/// identical across levels). PhiBucket sets phi_target; Rho sets the
/// delphi stubbornness/error correlation; Centralization sets the
/// discussion talkativeness scale (sigma).
std::vector<EnsembleReport> sweep(const TrialSpec& spec, SweepAxis axis,
                                  const std::vector<double>& levels,
                                  long trials_per_level, std::uint64_t base_seed,
                                  unsigned threads = 1);

/// Revision-based stubbornness: 1 - (post - pre)/(peer_mean - pre), clamped
/// to [0, 1]; nullopt when the peer mean coincides with the prior estimate.
std::optional<double> empirical_stubbornness(double pre, double post, double peer_mean);

/// JSON summary of an ensemble (counts, proportions, CI, bucket tests).
std::string ensemble_to_json(const EnsembleReport& report);

}  // namespace crowddyn
