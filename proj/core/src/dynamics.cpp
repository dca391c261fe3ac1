#include "crowddyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crowddyn/error.hpp"

namespace crowddyn {

std::vector<double> step(const InfluenceNetwork& net, const std::vector<double>& estimates) {
    const std::size_t n = net.size();
    if (estimates.size() != n) {
        throw LengthMismatch("estimate vector has length " + std::to_string(estimates.size()) +
                             ", network has " + std::to_string(n));
    }
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = net.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * estimates[j];
        next[i] = acc;
    }
    return next;
}

Trajectory run_rounds(const InfluenceNetwork& net, const BeliefState& state,
                      std::size_t rounds) {
    Trajectory traj;
    traj.rounds = rounds;
    traj.states.reserve(rounds + 1);
    traj.states.push_back(state.estimates);
    for (std::size_t k = 0; k < rounds; ++k) {
        traj.states.push_back(step(net, traj.states.back()));
    }
    return traj;
}

double converge(const InfluenceNetwork& net, const BeliefState& state, double tol,
                std::size_t max_rounds) {
    if (!is_ergodic(net)) {
        throw NotErgodic("converge needs an ergodic network");
    }
    std::vector<double> x = state.estimates;
    if (x.size() != net.size()) {
        throw LengthMismatch("estimate vector length does not match the network");
    }
    for (std::size_t round = 0; round <= max_rounds; ++round) {
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        // The limit v*x0 is invariant under revision and always lies inside
        // [min, max] of the current state, so the midpoint is within spread/2.
        if (*hi - *lo <= tol) return 0.5 * (*lo + *hi);
        x = step(net, x);
    }
    throw NoConvergence("no consensus within " + std::to_string(max_rounds) + " rounds");
}

double group_error(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw EmptyInput("group_error needs at least one estimate");
    double sum = 0.0;
    for (double x : estimates) sum += x;
    return std::abs(sum / double(estimates.size()) - truth);
}

const char* to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Improved: return "improved";
        case Outcome::Worsened: return "worsened";
        case Outcome::Unchanged: return "unchanged";
    }
    return "unknown";
}

Outcome improvement(const std::vector<double>& pre, const std::vector<double>& post,
                    double truth) {
    const double before = group_error(pre, truth);
    const double after = group_error(post, truth);
    if (std::abs(after - before) <= kImprovementTie) return Outcome::Unchanged;
    return after < before ? Outcome::Improved : Outcome::Worsened;
}

}  // namespace crowddyn
