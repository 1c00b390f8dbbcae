#pragma once

#include <span>
#include <vector>

#include "mapmatch/lattice.hpp"

namespace mapmatch {

// Log-potential of every state at every chain node. Pairwise terms are the
// lattice's hard compatibility masks and carry no parameters.
struct Potentials {
    std::vector<std::vector<double>> log_potentials;
};

struct InferenceResult {
    double log_z = 0.0;
    double log_z_backward = 0.0;
    std::vector<std::vector<double>> node_marginals;
};

struct MatchResult {
    std::vector<int> states;  // chosen state index per chain node
    double log_probability = 0.0;
};

struct LikelihoodResult {
    double value = 0.0;
    std::vector<double> gradient;
};

// theta holds the K point weights followed by the S path weights; the
// lattice's feature matrices must already be scaled.
Potentials compute_potentials(const Lattice& l, std::span<const double> theta, int point_dims,
                              int path_dims);

InferenceResult forward_backward(const Lattice& l, const Potentials& pots);

MatchResult viterbi_decode(const Lattice& l, const Potentials& pots);

double sequence_log_probability(const Lattice& l, const Potentials& pots,
                                const std::vector<int>& labels);

// Joint log-likelihood of all examples and its gradient in theta: empirical
// feature counts minus expected counts under the node marginals.
LikelihoodResult log_likelihood_and_gradient(const std::vector<TrainingExample>& examples,
                                             std::span<const double> theta, int point_dims,
                                             int path_dims);

}  // namespace mapmatch
