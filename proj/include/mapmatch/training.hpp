#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mapmatch/crf.hpp"
#include "mapmatch/features.hpp"
#include "mapmatch/lattice.hpp"

namespace mapmatch {

struct TrainOptions {
    double tol = 1e-5;  // convergence on the (pseudo-)gradient infinity norm
    int max_iter = 500;
    int lbfgs_history = 10;
};

enum class Regularizer { L1, L2 };

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitResult {
    std::vector<double> theta;
    int iterations = 0;
    double objective = 0.0;  // regularized log-likelihood at theta
    double grad_norm = 0.0;
    bool converged = false;
};

// Maximizes l(theta) - lambda2 * sum theta_m^2 by limited-memory
// quasi-Newton ascent from theta = 0.
FitResult train_l2(const std::vector<TrainingExample>& examples, double lambda2,
                   const TrainOptions& opts, int point_dims, int path_dims);

// Maximizes l(theta) - lambda1 * sum |theta_m| with an orthant-projected
// scaled sub-gradient scheme; produces exact zeros.
FitResult train_l1(const std::vector<TrainingExample>& examples, double lambda1,
                   const TrainOptions& opts, int point_dims, int path_dims);

// Smallest l1 penalty at which theta = 0 is optimal: the infinity norm of
// the likelihood gradient at the origin.
double compute_lambda_max(const std::vector<TrainingExample>& examples, int point_dims,
                          int path_dims);

int nonzero_count(const std::vector<double>& theta);

struct SweepRecord {
    double lambda = 0.0;
    int nonzero = 0;
    double holdout_point_error = 0.0;
    double holdout_path_error = 0.0;
    double objective = 0.0;
};

struct SweepResult {
    std::vector<SweepRecord> records;  // lambda strictly decreasing
    double lambda_max = 0.0;
    double selected_lambda = 0.0;
    FitResult selected_fit;
    Regularizer regularizer = Regularizer::L1;
};

// Fits along lambda_k = lambda_max * decay^k, warm-starting each fit from
// the previous optimum, and selects the lambda with the lowest holdout
// point error (ties resolved toward the larger lambda).
SweepResult regularization_sweep(const std::vector<TrainingExample>& train,
                                 const std::vector<TrainingExample>& holdout, int num_points,
                                 double decay, Regularizer reg, const TrainOptions& opts,
                                 int point_dims, int path_dims);

// The deployable artifact: tied weights plus everything needed to rebuild
// identical lattices and feature vectors at match time.
struct Model {
    std::vector<double> theta;
    FeatureRegistry registry;
    Scaler scaler;
    LatticeConfig lattice_config;
    std::string regularizer = "l1";
    double lambda = 0.0;
    int iterations = 0;
    double objective = 0.0;
    double grad_norm = 0.0;
};

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace mapmatch
