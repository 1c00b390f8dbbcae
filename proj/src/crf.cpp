#include "mapmatch/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mapmatch {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// alpha over the chain; alpha[n][s] = logsumexp of score over all partial
// sequences ending in state s of node n.
std::vector<std::vector<double>> forward_pass(const Lattice& l, const Potentials& pots) {
    const int nodes = l.num_nodes();
    std::vector<std::vector<double>> alpha(static_cast<std::size_t>(nodes));
    alpha[0] = pots.log_potentials[0];
    for (int node = 1; node < nodes; ++node) {
        const auto& pot = pots.log_potentials[static_cast<std::size_t>(node)];
        const auto& prev = alpha[static_cast<std::size_t>(node) - 1];
        auto& cur = alpha[static_cast<std::size_t>(node)];
        cur.assign(pot.size(), kNegInf);
        if (!l.node_is_point(node)) {
            const auto& paths = l.path_states[static_cast<std::size_t>(node / 2)];
            for (std::size_t j = 0; j < paths.size(); ++j) {
                cur[j] = pot[j] + prev[static_cast<std::size_t>(paths[j].start_point)];
            }
        } else {
            const auto& paths = l.path_states[static_cast<std::size_t>((node - 1) / 2)];
            std::vector<std::vector<double>> incoming(pot.size());
            for (std::size_t j = 0; j < paths.size(); ++j) {
                incoming[static_cast<std::size_t>(paths[j].end_point)].push_back(prev[j]);
            }
            for (std::size_t k = 0; k < pot.size(); ++k) {
                const double lse = log_sum_exp(incoming[k]);
                cur[k] = lse == kNegInf ? kNegInf : pot[k] + lse;
            }
        }
    }
    return alpha;
}

}  // namespace

Potentials compute_potentials(const Lattice& l, std::span<const double> theta, int point_dims,
                              int path_dims) {
    if (static_cast<int>(theta.size()) != point_dims + path_dims) {
        throw std::invalid_argument("compute_potentials: theta size does not match registry");
    }
    const int n = l.num_observations();
    if (static_cast<int>(l.point_features.size()) != n) {
        throw std::invalid_argument("compute_potentials: lattice has no feature matrices");
    }
    Potentials pots;
    pots.log_potentials.resize(static_cast<std::size_t>(l.num_nodes()));
    for (int node = 0; node < l.num_nodes(); ++node) {
        const bool is_point = l.node_is_point(node);
        const FeatureMatrix& mat = is_point
                                       ? l.point_features[static_cast<std::size_t>(node / 2)]
                                       : l.path_features[static_cast<std::size_t>(node / 2)];
        const int dims = is_point ? point_dims : path_dims;
        const double* w = is_point ? theta.data() : theta.data() + point_dims;
        if (mat.cols != dims || mat.rows != l.node_state_count(node)) {
            throw std::invalid_argument("compute_potentials: feature matrix dimension mismatch");
        }
        auto& pot = pots.log_potentials[static_cast<std::size_t>(node)];
        pot.resize(static_cast<std::size_t>(mat.rows));
        for (int r = 0; r < mat.rows; ++r) {
            const double* row = mat.row(r);
            double acc = 0.0;
            for (int c = 0; c < dims; ++c) acc += w[c] * row[c];
            pot[static_cast<std::size_t>(r)] = acc;
        }
    }
    return pots;
}

InferenceResult forward_backward(const Lattice& l, const Potentials& pots) {
    const int nodes = l.num_nodes();
    const auto alpha = forward_pass(l, pots);

    InferenceResult res;
    res.log_z = log_sum_exp(alpha[static_cast<std::size_t>(nodes) - 1]);
    if (res.log_z == kNegInf) {
        throw std::runtime_error("forward_backward: no compatible sequence (isolated states)");
    }

    std::vector<std::vector<double>> beta(static_cast<std::size_t>(nodes));
    beta[static_cast<std::size_t>(nodes) - 1].assign(
        pots.log_potentials[static_cast<std::size_t>(nodes) - 1].size(), 0.0);
    for (int node = nodes - 2; node >= 0; --node) {
        const auto& next_pot = pots.log_potentials[static_cast<std::size_t>(node) + 1];
        const auto& next_beta = beta[static_cast<std::size_t>(node) + 1];
        auto& cur = beta[static_cast<std::size_t>(node)];
        cur.assign(pots.log_potentials[static_cast<std::size_t>(node)].size(), kNegInf);
        if (l.node_is_point(node)) {
            const auto& paths = l.path_states[static_cast<std::size_t>(node / 2)];
            std::vector<std::vector<double>> outgoing(cur.size());
            for (std::size_t j = 0; j < paths.size(); ++j) {
                outgoing[static_cast<std::size_t>(paths[j].start_point)].push_back(next_pot[j] +
                                                                                   next_beta[j]);
            }
            for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = log_sum_exp(outgoing[i]);
        } else {
            const auto& paths = l.path_states[static_cast<std::size_t>(node / 2)];
            for (std::size_t j = 0; j < paths.size(); ++j) {
                const auto k = static_cast<std::size_t>(paths[j].end_point);
                cur[j] = next_pot[k] + next_beta[k];
            }
        }
    }

    std::vector<double> first(pots.log_potentials[0].size());
    for (std::size_t s = 0; s < first.size(); ++s) {
        first[s] = pots.log_potentials[0][s] + beta[0][s];
    }
    res.log_z_backward = log_sum_exp(first);

    res.node_marginals.resize(static_cast<std::size_t>(nodes));
    for (int node = 0; node < nodes; ++node) {
        const auto& a = alpha[static_cast<std::size_t>(node)];
        const auto& b = beta[static_cast<std::size_t>(node)];
        auto& m = res.node_marginals[static_cast<std::size_t>(node)];
        m.resize(a.size());
        for (std::size_t s = 0; s < a.size(); ++s) {
            m[s] = (a[s] == kNegInf || b[s] == kNegInf) ? 0.0
                                                        : std::exp(a[s] + b[s] - res.log_z);
        }
    }
    return res;
}

MatchResult viterbi_decode(const Lattice& l, const Potentials& pots) {
    const int nodes = l.num_nodes();
    std::vector<std::vector<double>> delta(static_cast<std::size_t>(nodes));
    std::vector<std::vector<int>> back(static_cast<std::size_t>(nodes));
    delta[0] = pots.log_potentials[0];
    back[0].assign(delta[0].size(), -1);

    for (int node = 1; node < nodes; ++node) {
        const auto& pot = pots.log_potentials[static_cast<std::size_t>(node)];
        const auto& prev = delta[static_cast<std::size_t>(node) - 1];
        auto& cur = delta[static_cast<std::size_t>(node)];
        auto& ptr = back[static_cast<std::size_t>(node)];
        cur.assign(pot.size(), kNegInf);
        ptr.assign(pot.size(), -1);
        if (!l.node_is_point(node)) {
            const auto& paths = l.path_states[static_cast<std::size_t>(node / 2)];
            for (std::size_t j = 0; j < paths.size(); ++j) {
                cur[j] = pot[j] + prev[static_cast<std::size_t>(paths[j].start_point)];
                ptr[j] = paths[j].start_point;
            }
        } else {
            const auto& paths = l.path_states[static_cast<std::size_t>((node - 1) / 2)];
            for (std::size_t j = 0; j < paths.size(); ++j) {
                const auto k = static_cast<std::size_t>(paths[j].end_point);
                const double cand = pot[k] + prev[j];
                // strict '>' keeps the lowest-index predecessor on ties
                if (cand > cur[k]) {
                    cur[k] = cand;
                    ptr[k] = static_cast<int>(j);
                }
            }
        }
    }

    const auto& last = delta[static_cast<std::size_t>(nodes) - 1];
    int best = -1;
    double best_score = kNegInf;
    for (std::size_t s = 0; s < last.size(); ++s) {
        if (last[s] > best_score) {
            best_score = last[s];
            best = static_cast<int>(s);
        }
    }
    if (best < 0) {
        throw std::runtime_error("viterbi_decode: no compatible sequence (isolated states)");
    }

    MatchResult res;
    res.states.assign(static_cast<std::size_t>(nodes), -1);
    res.states[static_cast<std::size_t>(nodes) - 1] = best;
    for (int node = nodes - 1; node > 0; --node) {
        res.states[static_cast<std::size_t>(node) - 1] =
            back[static_cast<std::size_t>(node)]
                [static_cast<std::size_t>(res.states[static_cast<std::size_t>(node)])];
    }

    const auto alpha = forward_pass(l, pots);
    res.log_probability = best_score - log_sum_exp(alpha[static_cast<std::size_t>(nodes) - 1]);
    return res;
}

double sequence_log_probability(const Lattice& l, const Potentials& pots,
                                const std::vector<int>& labels) {
    const int nodes = l.num_nodes();
    if (static_cast<int>(labels.size()) != nodes) {
        throw std::invalid_argument("sequence_log_probability: label count mismatch");
    }
    double score = 0.0;
    for (int node = 0; node < nodes; ++node) {
        const int s = labels[static_cast<std::size_t>(node)];
        if (s < 0 || s >= l.node_state_count(node)) {
            throw std::invalid_argument("sequence_log_probability: label out of range");
        }
        if (node > 0 &&
            !l.mask_allows(node - 1, labels[static_cast<std::size_t>(node) - 1], s)) {
            throw std::invalid_argument("sequence_log_probability: labels violate the mask");
        }
        score += pots.log_potentials[static_cast<std::size_t>(node)][static_cast<std::size_t>(s)];
    }
    const auto alpha = forward_pass(l, pots);
    return score - log_sum_exp(alpha[static_cast<std::size_t>(nodes) - 1]);
}

LikelihoodResult log_likelihood_and_gradient(const std::vector<TrainingExample>& examples,
                                             std::span<const double> theta, int point_dims,
                                             int path_dims) {
    LikelihoodResult res;
    res.gradient.assign(theta.size(), 0.0);
    double* g_point = res.gradient.data();
    double* g_path = res.gradient.data() + point_dims;

    for (const TrainingExample& ex : examples) {
        const Lattice& l = ex.lattice;
        const Potentials pots = compute_potentials(l, theta, point_dims, path_dims);
        const InferenceResult inf = forward_backward(l, pots);

        double score = 0.0;
        for (int node = 0; node < l.num_nodes(); ++node) {
            const int label = ex.labels[static_cast<std::size_t>(node)];
            score += pots.log_potentials[static_cast<std::size_t>(node)]
                                        [static_cast<std::size_t>(label)];
            const bool is_point = l.node_is_point(node);
            const FeatureMatrix& mat =
                is_point ? l.point_features[static_cast<std::size_t>(node / 2)]
                         : l.path_features[static_cast<std::size_t>(node / 2)];
            double* g = is_point ? g_point : g_path;
            const int dims = is_point ? point_dims : path_dims;

            const double* emp = mat.row(label);
            for (int c = 0; c < dims; ++c) g[c] += emp[c];
            const auto& marg = inf.node_marginals[static_cast<std::size_t>(node)];
            for (int r = 0; r < mat.rows; ++r) {
                const double m = marg[static_cast<std::size_t>(r)];
                if (m == 0.0) continue;
                const double* row = mat.row(r);
                for (int c = 0; c < dims; ++c) g[c] -= m * row[c];
            }
        }
        res.value += score - inf.log_z;
    }
    return res;
}

}  // namespace mapmatch
