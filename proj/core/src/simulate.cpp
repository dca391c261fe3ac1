#include "crowddyn/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "crowddyn/error.hpp"

#include <json.hpp>

namespace crowddyn {

namespace {

// Stream tags for per-trial substreams.
constexpr std::uint64_t kStreamEstimates = 1;
constexpr std::uint64_t kStreamInfluence = 2;
constexpr std::uint64_t kStreamProbe = 3;

void check_distribution(const Distribution& dist) {
    switch (dist.kind) {
        case Distribution::Kind::Lognormal:
        case Distribution::Kind::Normal:
            if (!std::isfinite(dist.location) || !std::isfinite(dist.scale) ||
                dist.scale < 0.0) {
                throw BadDistributionParams("location must be finite and scale >= 0");
            }
            break;
        case Distribution::Kind::Empirical:
            if (dist.data.empty()) {
                throw BadDistributionParams("empirical distribution needs data");
            }
            for (double v : dist.data) {
                if (!std::isfinite(v)) {
                    throw BadDistributionParams("empirical data must be finite");
                }
            }
            break;
    }
}

double draw(const Distribution& dist, Rng& rng) {
    switch (dist.kind) {
        case Distribution::Kind::Lognormal:
            return rng.lognormal(dist.location, dist.scale);
        case Distribution::Kind::Normal:
            return rng.normal(dist.location, dist.scale);
        case Distribution::Kind::Empirical:
            return dist.data[rng.below(dist.data.size())];
    }
    return 0.0;
}

void check_spec(const TrialSpec& spec) {
    if (spec.group_size < 2) throw TooSmall("trial needs group_size >= 2");
    if (!std::isfinite(spec.truth)) throw BadDistributionParams("truth must be finite");
    check_distribution(spec.estimates);
    if (spec.condition == Condition::Delphi) {
        if (spec.rounds < 1) throw OutOfRange("delphi needs at least one revision round");
        if (!(spec.stubbornness_error_rho >= -1.0 && spec.stubbornness_error_rho <= 1.0)) {
            throw OutOfRange("stubbornness/error correlation must be in [-1, 1]");
        }
        if (!(spec.stubbornness_lo > 0.0 && spec.stubbornness_hi < 1.0 &&
              spec.stubbornness_lo <= spec.stubbornness_hi)) {
            throw OutOfRange("stubbornness band must satisfy 0 < lo <= hi < 1");
        }
    } else {
        check_distribution(spec.talkativeness);
        if (!(spec.self_weight >= 0.0 && spec.self_weight < 1.0)) {
            throw WeightOutOfRange("self_weight must be in [0, 1)");
        }
    }
    if (spec.phi_target) {
        if (!(*spec.phi_target >= 0.0 && *spec.phi_target <= 1.0)) {
            throw OutOfRange("phi_target must be in [0, 1]");
        }
    }
}

/// Ascending ranks (0-based) with ties broken by index.
std::vector<std::size_t> ranks_of(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b];
    });
    std::vector<std::size_t> rank(values.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
    return rank;
}

std::vector<double> delphi_self_weights(const TrialSpec& spec,
                                        const std::vector<double>& estimates, Rng& rng) {
    const std::size_t n = estimates.size();

    // Deterministic multiset of self-weights (midpoints over the band); the
    // copula only decides which agent gets which value.
    std::vector<double> levels(n);
    for (std::size_t k = 0; k < n; ++k) {
        levels[k] = spec.stubbornness_lo +
                    (spec.stubbornness_hi - spec.stubbornness_lo) *
                        (double(k) + 0.5) / double(n);
    }

    std::vector<double> errors(n);
    for (std::size_t i = 0; i < n; ++i) errors[i] = std::abs(estimates[i] - spec.truth);
    const auto error_rank = ranks_of(errors);

    // Gaussian copula: latent score mixes the error's normal score with
    // independent noise. The Spearman target rho maps to the latent Pearson
    // correlation as 2*sin(pi*rho/6), which degenerates to exact rank
    // (anti-)alignment at rho = +/-1.
    const double latent_rho = 2.0 * std::sin(3.14159265358979323846 * spec.stubbornness_error_rho / 6.0);
    const double noise_scale = std::sqrt(std::max(0.0, 1.0 - latent_rho * latent_rho));
    std::vector<double> latent(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double score = normal_quantile((double(error_rank[i]) + 0.5) / double(n));
        latent[i] = latent_rho * score + noise_scale * rng.normal();
    }
    const auto latent_rank = ranks_of(latent);

    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) weights[i] = levels[latent_rank[i]];
    return weights;
}

}  // namespace

const char* to_string(Condition condition) {
    return condition == Condition::Delphi ? "delphi" : "discussion";
}

const char* to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::PhiBucket: return "phi_bucket";
        case SweepAxis::Rho: return "rho";
        case SweepAxis::Centralization: return "centralization";
    }
    return "unknown";
}

std::vector<double> sample_estimates(const TrialSpec& spec, Rng& rng) {
    check_spec(spec);
    std::vector<double> estimates(spec.group_size);
    for (double& x : estimates) x = draw(spec.estimates, rng);
    return estimates;
}

InfluenceNetwork delphi_network(const std::vector<double>& self_weights) {
    const std::size_t n = self_weights.size();
    if (n < 2) throw TooSmall("delphi network needs n >= 2");
    std::vector<double> w(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = self_weights[i];
        if (!(s >= 0.0 && s <= 1.0)) {
            throw WeightOutOfRange("self-weights must be in [0, 1]");
        }
        w[i * n + i] = s;
        const double peer = (1.0 - s) / double(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) w[i * n + j] = peer;
        }
    }
    return InfluenceNetwork(n, std::move(w));
}

InfluenceAssignment assign_influence(const TrialSpec& spec,
                                     const std::vector<double>& estimates, Rng& rng) {
    check_spec(spec);
    if (estimates.size() != spec.group_size) {
        throw LengthMismatch("estimates length does not match group_size");
    }
    if (spec.condition == Condition::Delphi) {
        auto weights = delphi_self_weights(spec, estimates, rng);
        auto net = delphi_network(weights);
        return {std::move(net), std::move(weights)};
    }
    // Discussion: integer message counts, floored at 1 so every agent stays
    // reachable and the network remains ergodic.
    std::vector<double> counts(spec.group_size);
    for (double& c : counts) {
        c = double(std::max<long long>(1, std::llround(draw(spec.talkativeness, rng))));
    }
    auto net = talkativeness_network(counts, spec.self_weight);
    return {std::move(net), std::move(counts)};
}

namespace {

bool toward_truth(double estimate, double mean, double truth) {
    if (truth == mean || estimate == mean) return false;
    return (estimate > mean) == (truth > mean);
}

TrialRecord run_star_probe(const TrialSpec& spec, std::uint64_t trial_seed,
                           std::size_t trial_index) {
    const std::size_t n = spec.group_size;
    const double target = *spec.phi_target;
    const auto wanted = std::size_t(std::llround(target * double(n)));
    if (wanted > n) throw OutOfRange("phi_target * group_size exceeds the group");

    Rng est_rng(derive_seed(trial_seed, 0, kStreamEstimates));
    Rng probe_rng(derive_seed(trial_seed, 0, kStreamProbe));

    // Rejection-sample until exactly `wanted` estimates share the truth's
    // side of the mean and the configuration is non-degenerate.
    std::vector<double> estimates;
    double mean = 0.0;
    bool found = false;
    for (std::size_t attempt = 0; attempt < 200000 && !found; ++attempt) {
        estimates = sample_estimates(spec, est_rng);
        double sum = 0.0;
        for (double x : estimates) sum += x;
        mean = sum / double(n);
        if (spec.truth == mean) continue;
        std::size_t on_side = 0;
        for (double x : estimates) {
            if (toward_truth(x, mean, spec.truth)) ++on_side;
        }
        found = on_side == wanted;
    }
    if (!found) {
        throw NoConvergence("could not realize the requested phi bucket; "
                            "the estimate distribution rarely produces it");
    }

    const std::size_t hub = probe_rng.below(n);
    const double high = estimates[hub];
    double sum = 0.0;
    for (double x : estimates) sum += x;
    const double low_mean = (sum - high) / double(n - 1);
    const double base = 1.0 / double(n);

    // Hub on the truth side: influence below the critical level, so the
    // trial improves exactly when the hub is toward the truth. Hub on the
    // wrong side: any admissible influence worsens.
    double c_max = 1.0;
    const bool hub_toward = toward_truth(high, mean, spec.truth);
    if (hub_toward && high != low_mean) {
        const auto critical =
            critical_c({n, high, low_mean, base, spec.truth});
        c_max = std::min(critical.unclamped, 1.0);
    }
    const double u = probe_rng.uniform(0.1, 0.9);
    const double influence = base + u * (c_max - base);

    // Star with stationary hub share exactly `influence`: peripheral
    // self-weight 1-C, hub self-weight C gives v_hub = C for any n.
    std::vector<double> w(n * n, 0.0);
    w[hub * n + hub] = influence;
    const double hub_out = (1.0 - influence) / double(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        if (j != hub) w[hub * n + j] = hub_out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (i == hub) continue;
        w[i * n + i] = 1.0 - influence;
        w[i * n + hub] = influence;
    }
    InfluenceNetwork net(n, std::move(w));

    TrialRecord record;
    record.spec = spec;
    record.seed = trial_seed;
    record.trial_index = trial_index;
    record.pre_estimates = estimates;

    const double consensus =
        converge(net, {estimates, spec.truth}, spec.converge_tol, spec.converge_max_rounds);
    record.post_estimates.assign(n, consensus);
    record.trajectory.rounds = 1;
    record.trajectory.states = {estimates, record.post_estimates};

    record.phi = phi(estimates, spec.truth);
    record.outcome = improvement(record.pre_estimates, record.post_estimates, spec.truth);
    record.gini_influence = centralization(centrality(net, CentralityKind::Asymptotic));
    record.top_influencer = hub;
    record.top_influencer_toward = hub_toward;
    record.star_influence = influence;
    record.hub_index = hub;
    return record;
}

TrialRecord run_trial_indexed(const TrialSpec& spec, std::uint64_t trial_seed,
                              std::size_t trial_index) {
    check_spec(spec);
    if (spec.phi_target) return run_star_probe(spec, trial_seed, trial_index);

    Rng est_rng(derive_seed(trial_seed, 0, kStreamEstimates));
    Rng inf_rng(derive_seed(trial_seed, 0, kStreamInfluence));

    TrialRecord record;
    record.spec = spec;
    record.seed = trial_seed;
    record.trial_index = trial_index;
    record.pre_estimates = sample_estimates(spec, est_rng);

    auto assignment = assign_influence(spec, record.pre_estimates, inf_rng);
    record.influence_trait = assignment.trait;

    if (spec.condition == Condition::Delphi) {
        record.trajectory =
            run_rounds(assignment.net, {record.pre_estimates, spec.truth}, spec.rounds);
        record.post_estimates = record.trajectory.final();
    } else {
        const double consensus = converge(assignment.net, {record.pre_estimates, spec.truth},
                                          spec.converge_tol, spec.converge_max_rounds);
        record.post_estimates.assign(spec.group_size, consensus);
        record.trajectory.rounds = 1;
        record.trajectory.states = {record.pre_estimates, record.post_estimates};
    }

    record.phi = phi(record.pre_estimates, spec.truth);
    record.outcome = improvement(record.pre_estimates, record.post_estimates, spec.truth);

    const auto profile = centrality(assignment.net, CentralityKind::Asymptotic);
    record.gini_influence = centralization(profile);

    // Most central agent: by message count for discussion (that is how the
    // analysis identifies the central person), by stationary share for
    // delphi. Ties go to the lowest index.
    std::size_t top = 0;
    if (spec.condition == Condition::Discussion) {
        for (std::size_t i = 1; i < record.influence_trait.size(); ++i) {
            if (record.influence_trait[i] > record.influence_trait[top]) top = i;
        }
    } else {
        for (std::size_t i = 1; i < profile.scores.size(); ++i) {
            if (profile.scores[i] > profile.scores[top]) top = i;
        }
    }
    record.top_influencer = top;

    double sum = 0.0;
    for (double x : record.pre_estimates) sum += x;
    const double mean = sum / double(spec.group_size);
    record.top_influencer_toward =
        toward_truth(record.pre_estimates[top], mean, spec.truth);
    return record;
}

BucketStats bucket_stats(const std::vector<TrialRecord>& records, MajorityLabel label) {
    BucketStats stats;
    for (const auto& record : records) {
        if (record.phi.label != label) continue;
        ++stats.trials;
        if (record.outcome == Outcome::Improved) ++stats.improved;
    }
    if (stats.trials > 0) {
        stats.proportion = double(stats.improved) / double(stats.trials);
        stats.vs_half = proportion_test(stats.improved, stats.trials, 0.5);
    }
    return stats;
}

}  // namespace

TrialRecord run_trial(const TrialSpec& spec) {
    return run_trial_indexed(spec, spec.seed, 0);
}

EnsembleReport run_ensemble(const TrialSpec& spec, long trials, std::uint64_t base_seed,
                            unsigned threads) {
    check_spec(spec);
    if (trials < 1) throw OutOfRange("ensemble needs at least one trial");

    EnsembleReport report;
    report.trials = trials;
    report.records.resize(std::size_t(trials));

    const auto worker = [&](std::size_t begin, std::size_t end, std::exception_ptr& error) {
        try {
            for (std::size_t i = begin; i < end; ++i) {
                report.records[i] =
                    run_trial_indexed(spec, derive_seed(base_seed, i, 0), i);
            }
        } catch (...) {
            error = std::current_exception();
        }
    };

    const std::size_t total = std::size_t(trials);
    const unsigned used = std::max(1u, std::min<unsigned>(threads, unsigned(total)));
    if (used == 1) {
        std::exception_ptr error;
        worker(0, total, error);
        if (error) std::rethrow_exception(error);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(used);
        const std::size_t chunk = (total + used - 1) / used;
        for (unsigned t = 0; t < used; ++t) {
            const std::size_t begin = std::min(total, std::size_t(t) * chunk);
            const std::size_t end = std::min(total, begin + chunk);
            pool.emplace_back(worker, begin, end, std::ref(errors[t]));
        }
        for (auto& th : pool) th.join();
        for (auto& error : errors) {
            if (error) std::rethrow_exception(error);
        }
    }

    double phi_sum = 0.0;
    for (const auto& record : report.records) {
        if (record.outcome == Outcome::Improved) ++report.improved;
        phi_sum += record.phi.phi;
    }
    report.proportion_improved = double(report.improved) / double(report.trials);
    report.ci = binomial_ci(report.improved, report.trials);
    report.mean_phi = phi_sum / double(report.trials);
    report.toward = bucket_stats(report.records, MajorityLabel::Toward);
    report.away = bucket_stats(report.records, MajorityLabel::Away);
    report.split = bucket_stats(report.records, MajorityLabel::Split);
    if (report.toward.trials > 0 && report.away.trials > 0) {
        report.toward_vs_away = proportion_test_2(report.toward.improved, report.toward.trials,
                                                  report.away.improved, report.away.trials);
    }
    return report;
}

std::vector<EnsembleReport> sweep(const TrialSpec& spec, SweepAxis axis,
                                  const std::vector<double>& levels,
                                  long trials_per_level, std::uint64_t base_seed,
                                  unsigned threads) {
    if (levels.empty()) throw EmptyInput("sweep needs at least one level");

    std::vector<EnsembleReport> reports;
    reports.reserve(levels.size());
    for (const double level : levels) {
        TrialSpec leveled = spec;
        switch (axis) {
            case SweepAxis::PhiBucket:
                leveled.condition = Condition::Discussion;
                leveled.phi_target = level;
                break;
            case SweepAxis::Rho:
                if (spec.condition != Condition::Delphi) {
                    throw BadDistributionParams("rho sweeps apply to the delphi condition");
                }
                leveled.stubbornness_error_rho = level;
                break;
            case SweepAxis::Centralization:
                if (spec.condition != Condition::Discussion) {
                    throw BadDistributionParams(
                        "centralization sweeps apply to the discussion condition");
                }
                if (leveled.talkativeness.kind == Distribution::Kind::Empirical) {
                    throw BadDistributionParams(
                        "centralization sweeps need a parametric talkativeness model");
                }
                leveled.talkativeness.scale = level;
                break;
        }
        reports.push_back(run_ensemble(leveled, trials_per_level, base_seed, threads));
    }
    return reports;
}

std::optional<double> empirical_stubbornness(double pre, double post, double peer_mean) {
    if (std::abs(peer_mean - pre) < 1e-12) return std::nullopt;
    const double moved = (post - pre) / (peer_mean - pre);
    return std::clamp(1.0 - moved, 0.0, 1.0);
}

namespace {

nlohmann::ordered_json test_to_json(const ProportionTestResult& test) {
    nlohmann::ordered_json j;
    j["successes"] = test.successes;
    j["trials"] = test.trials;
    j["proportion"] = test.observed;
    j["reference"] = test.reference;
    j["p_value"] = test.p_value;
    j["method"] = to_string(test.method);
    return j;
}

nlohmann::ordered_json bucket_to_json(const BucketStats& bucket) {
    nlohmann::ordered_json j;
    j["trials"] = bucket.trials;
    j["improved"] = bucket.improved;
    j["proportion_improved"] = bucket.proportion;
    if (bucket.vs_half) {
        j["vs_half"] = test_to_json(*bucket.vs_half);
    } else {
        j["vs_half"] = nullptr;
    }
    return j;
}

}  // namespace

std::string ensemble_to_json(const EnsembleReport& report) {
    nlohmann::ordered_json j;
    j["trials"] = report.trials;
    j["improved"] = report.improved;
    j["proportion_improved"] = report.proportion_improved;
    j["ci95"] = {{"lo", report.ci.lo}, {"hi", report.ci.hi}, {"method", "clopper-pearson"}};
    j["mean_phi"] = report.mean_phi;
    j["buckets"] = {{"toward", bucket_to_json(report.toward)},
                    {"away", bucket_to_json(report.away)},
                    {"split", bucket_to_json(report.split)}};
    if (report.toward_vs_away) {
        j["toward_vs_away"] = test_to_json(*report.toward_vs_away);
    } else {
        j["toward_vs_away"] = nullptr;
    }
    return j.dump(2);
}

}  // namespace crowddyn
