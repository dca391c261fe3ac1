#include "crowddyn/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "crowddyn/error.hpp"
#include "crowddyn/stats.hpp"

#include <json.hpp>

namespace crowddyn {

InfluenceNetwork::InfluenceNetwork(std::size_t n, std::vector<double> weights)
    : n_(n), w_(std::move(weights)) {
    if (n_ < 2) {
        throw TooSmall("influence network needs at least 2 individuals, got " +
                       std::to_string(n_));
    }
    if (w_.size() != n_ * n_) {
        throw LengthMismatch("weight matrix must be " + std::to_string(n_) + "x" +
                             std::to_string(n_));
    }
    for (std::size_t i = 0; i < n_; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            const double w = w_[i * n_ + j];
            if (!std::isfinite(w)) {
                throw OutOfRange("weight (" + std::to_string(i) + "," +
                                 std::to_string(j) + ") is not finite");
            }
            if (w < 0.0) {
                throw NegativeWeight("weight (" + std::to_string(i) + "," +
                                     std::to_string(j) + ") is negative");
            }
            sum += w;
        }
        if (std::abs(sum - 1.0) > kRowSumInputTolerance) {
            std::ostringstream msg;
            msg << "row " << i << " sums to " << sum << ", not 1";
            throw NonStochasticRow(msg.str());
        }
        for (std::size_t j = 0; j < n_; ++j) w_[i * n_ + j] /= sum;
    }
}

InfluenceNetwork build_network(const std::vector<std::vector<double>>& weights) {
    const std::size_t n = weights.size();
    if (n < 2) {
        throw TooSmall("influence network needs at least 2 individuals, got " +
                       std::to_string(n));
    }
    std::vector<double> flat;
    flat.reserve(n * n);
    for (const auto& row : weights) {
        if (row.size() != n) {
            throw LengthMismatch("weight matrix must be square");
        }
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return InfluenceNetwork(n, std::move(flat));
}

namespace {

void check_unit_interval(double w, const char* name) {
    if (!(w >= 0.0 && w <= 1.0)) {
        throw WeightOutOfRange(std::string(name) + " must be in [0, 1]");
    }
}

}  // namespace

InfluenceNetwork star_network(std::size_t n, double peripheral_self_weight,
                              double center_self_weight) {
    if (n < 3) throw TooSmall("star network needs n >= 3");
    check_unit_interval(peripheral_self_weight, "peripheral_self_weight");
    check_unit_interval(center_self_weight, "center_self_weight");

    std::vector<double> w(n * n, 0.0);
    w[0] = center_self_weight;
    const double per_peripheral = (1.0 - center_self_weight) / double(n - 1);
    for (std::size_t j = 1; j < n; ++j) w[j] = per_peripheral;
    for (std::size_t i = 1; i < n; ++i) {
        w[i * n + i] = peripheral_self_weight;
        w[i * n + 0] = 1.0 - peripheral_self_weight;
    }
    return InfluenceNetwork(n, std::move(w));
}

InfluenceNetwork uniform_network(std::size_t n, double self_weight) {
    if (n < 2) throw TooSmall("uniform network needs n >= 2");
    if (!(self_weight >= 0.0 && self_weight < 1.0)) {
        throw WeightOutOfRange("self_weight must be in [0, 1) for a connected network");
    }
    std::vector<double> w(n * n, (1.0 - self_weight) / double(n - 1));
    for (std::size_t i = 0; i < n; ++i) w[i * n + i] = self_weight;
    return InfluenceNetwork(n, std::move(w));
}

InfluenceNetwork talkativeness_network(const std::vector<double>& talkativeness,
                                       double self_weight) {
    const std::size_t n = talkativeness.size();
    if (n < 2) throw TooSmall("talkativeness network needs n >= 2");
    if (!(self_weight >= 0.0 && self_weight < 1.0)) {
        throw WeightOutOfRange("self_weight must be in [0, 1)");
    }
    double total = 0.0;
    for (double t : talkativeness) {
        if (!std::isfinite(t)) throw OutOfRange("talkativeness must be finite");
        if (t < 0.0) throw NegativeWeight("talkativeness must be non-negative");
        total += t;
    }
    if (total == 0.0) throw AllZero("every talkativeness value is zero");

    std::vector<double> w(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double peer_total = total - talkativeness[i];
        if (peer_total == 0.0) {
            // All of i's peers are silent; i keeps full weight on itself.
            w[i * n + i] = 1.0;
            continue;
        }
        w[i * n + i] = self_weight;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            w[i * n + j] = (1.0 - self_weight) * talkativeness[j] / peer_total;
        }
    }
    return InfluenceNetwork(n, std::move(w));
}

bool is_ergodic(const InfluenceNetwork& net) {
    const std::size_t n = net.size();

    bool any_self_loop = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (net.weight(i, i) > 0.0) {
            any_self_loop = true;
            break;
        }
    }
    if (!any_self_loop) return false;

    // Strong connectivity of the positive-entry pattern: every node reachable
    // from node 0 along edges, and node 0 reachable from every node.
    const auto reach = [&](bool transpose) {
        std::vector<char> seen(n, 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v = 0; v < n; ++v) {
                const double w = transpose ? net.weight(v, u) : net.weight(u, v);
                if (w > 0.0 && !seen[v]) {
                    seen[v] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return count == n;
    };
    return reach(false) && reach(true);
}

CentralityProfile centrality(const InfluenceNetwork& net, CentralityKind kind) {
    const std::size_t n = net.size();
    CentralityProfile profile;
    profile.kind = kind;
    profile.scores.assign(n, 0.0);

    if (kind == CentralityKind::OneStep) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                profile.scores[j] += net.weight(i, j);
            }
        }
        for (double& s : profile.scores) s /= double(n);
        return profile;
    }

    if (!is_ergodic(net)) {
        throw NotErgodic("asymptotic centrality needs an ergodic network");
    }

    // Power iteration on the left: v <- vW. The row-stochastic structure
    // preserves the sum of v, so normalization only corrects rounding drift.
    // No general eigensolver needed at these sizes.
    constexpr double kStep = 1e-13;
    constexpr std::size_t kMaxIters = 100000;
    std::vector<double> v(n, 1.0 / double(n));
    std::vector<double> next(n, 0.0);
    for (std::size_t iter = 0; iter < kMaxIters; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double vi = v[i];
            if (vi == 0.0) continue;
            const auto row = net.row(i);
            for (std::size_t j = 0; j < n; ++j) next[j] += vi * row[j];
        }
        double sum = 0.0;
        for (double x : next) sum += x;
        for (double& x : next) x /= sum;
        double diff = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            diff = std::max(diff, std::abs(next[j] - v[j]));
        }
        v.swap(next);
        if (diff <= kStep) {
            profile.scores = std::move(v);
            return profile;
        }
    }
    throw NoConvergence("power iteration did not settle within 100000 iterations");
}

double centralization(const CentralityProfile& profile) {
    return gini(profile.scores);
}

std::string to_json(const InfluenceNetwork& net) {
    nlohmann::ordered_json j;
    j["n"] = net.size();
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto row = net.row(i);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["weights"] = std::move(rows);
    return j.dump();
}

InfluenceNetwork network_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid network JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("n") || !j.contains("weights")) {
        throw SchemaError("network JSON needs keys \"n\" and \"weights\"");
    }
    std::vector<std::vector<double>> weights;
    try {
        weights = j.at("weights").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("network \"weights\" must be a matrix: ") + e.what());
    }
    const auto n = j.at("n").get<std::size_t>();
    if (weights.size() != n) {
        throw SchemaError("network \"n\" does not match the weight matrix size");
    }
    return build_network(weights);
}

}  // namespace crowddyn
