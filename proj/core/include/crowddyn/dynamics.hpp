#pragma once

#include <cstddef>
#include <vector>

#include "crowddyn/network.hpp"

namespace crowddyn {

/// Estimates within the same comparison that differ by less than this count
/// as ties (improvement outcome "Unchanged").
inline constexpr double kImprovementTie = 1e-12;

/// A group's current estimates plus the true answer, in task units.
struct BeliefState {
    std::vector<double> estimates;
    double truth = 0.0;
};

/// Estimate vectors over revision rounds; states[0] is the independent
/// (pre-communication) vector, states[k] the vector after k rounds.
struct Trajectory {
    std::vector<std::vector<double>> states;
    std::size_t rounds = 0;

    const std::vector<double>& initial() const { return states.front(); }
    const std::vector<double>& final() const { return states.back(); }
};

/// One synchronous revision: every individual replaces their estimate with
/// their row-weighted average of all current estimates (W * x).
std::vector<double> step(const InfluenceNetwork& net, const std::vector<double>& estimates);

/// Applies `rounds` revisions, keeping every intermediate state.
Trajectory run_rounds(const InfluenceNetwork& net, const BeliefState& state,
                      std::size_t rounds);

/// Iterates revisions until the spread max(x) - min(x) falls below tol and
/// returns the consensus value. For an ergodic network this equals the
/// centrality-weighted average of the initial estimates to within tol.
/// Throws NotErgodic up front and NoConvergence past max_rounds.
double converge(const InfluenceNetwork& net, const BeliefState& state,
                double tol = 1e-10, std::size_t max_rounds = 1000000);

/// |mean(estimates) - truth|.
double group_error(const std::vector<double>& estimates, double truth);

enum class Outcome { Improved, Worsened, Unchanged };

const char* to_string(Outcome outcome);

/// Compares group error before and after influence. Errors equal within
/// kImprovementTie count as Unchanged; only a strict decrease is Improved.
Outcome improvement(const std::vector<double>& pre, const std::vector<double>& post,
                    double truth);

}  // namespace crowddyn
