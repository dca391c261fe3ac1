#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace crowddyn {

/// Row sums may deviate from 1 by at most this much on input; anything closer
/// is renormalized, anything further is rejected.
inline constexpr double kRowSumInputTolerance = 1e-9;

/// Invariant tolerance for stored networks and centrality profiles.
inline constexpr double kStochasticTolerance = 1e-12;

/// Row-stochastic weighted influence matrix over n >= 2 individuals.
///
/// weight(i, j) is how much individual i weighs j's current estimate when
/// revising their own; weight(i, i) is the self-weight (stubbornness).
/// Every row sums to 1 and all entries are non-negative. Instances are
/// immutable after construction and safe to share across threads.
class InfluenceNetwork {
public:
    /// Validates and stores a dense row-major matrix. Rows within
    /// kRowSumInputTolerance of stochastic are renormalized; anything else
    /// throws NonStochasticRow. Also throws NegativeWeight and TooSmall.
    InfluenceNetwork(std::size_t n, std::vector<double> weights);

    std::size_t size() const noexcept { return n_; }

    double weight(std::size_t i, std::size_t j) const noexcept {
        return w_[i * n_ + j];
    }

    std::span<const double> row(std::size_t i) const noexcept {
        return {w_.data() + i * n_, n_};
    }

    const std::vector<double>& data() const noexcept { return w_; }

private:
    std::size_t n_;
    std::vector<double> w_;
};

/// Validating constructor from a nested matrix (row i = weights individual i
/// places on everyone, including themselves at column i).
InfluenceNetwork build_network(const std::vector<std::vector<double>>& weights);

/// Star topology: individual 0 is the center. Each peripheral keeps
/// peripheral_self_weight on itself and the remainder on the center; the
/// center keeps center_self_weight on itself and splits the remainder evenly
/// over the peripherals. Requires n >= 3.
InfluenceNetwork star_network(std::size_t n, double peripheral_self_weight,
                              double center_self_weight);

/// Fully decentralized topology: self_weight on the diagonal and
/// (1 - self_weight)/(n - 1) everywhere else. self_weight = 1 is rejected
/// (disconnected); use build_network for the identity matrix.
InfluenceNetwork uniform_network(std::size_t n, double self_weight);

/// Emergent-centralization topology: row i keeps self_weight on itself and
/// splits the remainder over its peers proportional to their talkativeness.
/// A silent peer (talkativeness 0) receives zero weight; an individual whose
/// peers are all silent keeps full weight on itself.
InfluenceNetwork talkativeness_network(const std::vector<double>& talkativeness,
                                       double self_weight);

enum class CentralityKind { OneStep, Asymptotic };

/// Each individual's share of influence; scores are non-negative and sum to 1.
struct CentralityProfile {
    std::vector<double> scores;
    CentralityKind kind = CentralityKind::OneStep;
};

/// One-step centrality is the column means of W. Asymptotic centrality is the
/// left fixed vector v with vW = v, computed by power iteration to a residual
/// below kStochasticTolerance; requires an ergodic network (NotErgodic
/// otherwise).
CentralityProfile centrality(const InfluenceNetwork& net, CentralityKind kind);

/// Sufficient ergodicity check: the positive-entry pattern is strongly
/// connected and at least one self-weight is positive.
bool is_ergodic(const InfluenceNetwork& net);

/// Gini coefficient of the centrality scores, in [0, 1).
double centralization(const CentralityProfile& profile);

/// Dense-matrix JSON form: {"n": <int>, "weights": [[...], ...]}.
std::string to_json(const InfluenceNetwork& net);
InfluenceNetwork network_from_json(const std::string& text);

}  // namespace crowddyn
