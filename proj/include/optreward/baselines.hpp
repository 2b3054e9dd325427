#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "optreward/bandit_model.hpp"

namespace optreward {

// Disjoint LinUCB internal state: per-arm design matrix A_a = lambda I +
// sum x x^T and response vector c_a; predictions use an intercept feature.
struct LinUCBState {
    std::vector<Eigen::MatrixXd> design;    // (d+1) x (d+1), SPD
    std::vector<Eigen::VectorXd> response;  // d+1
    double alpha = 1.0;
    double lambda = 1.0;
};

struct LinUcbTrajectory {
    std::vector<int> arms;
    Eigen::VectorXd rewards;
    Eigen::VectorXd trailing_mean;  // mean over the trailing `window` rounds
    double final_trailing_mean = 0.0;
};

// Standard disjoint LinUCB: per round play argmax_a theta_a . x +
// alpha sqrt(x^T A_a^{-1} x), ties to the lowest index, update the chosen
// arm. Deterministic under seed. When final_state is given, the per-arm
// design matrices and response vectors after the last round are stored.
LinUcbTrajectory linucb_run(const BanditInstance& instance, const ContextDistribution& dist,
                            double alpha, int rounds, int window, std::uint64_t seed,
                            double lambda = 1.0, LinUCBState* final_state = nullptr);

struct RidgeFit {
    Eigen::VectorXd coef;
    double intercept = 0.0;
};

// Ridge regression with an unpenalized intercept (centered formulation).
RidgeFit ridge_fit(const Eigen::MatrixXd& contexts, const Eigen::VectorXd& rewards,
                   double lambda);

// True expected reward of the greedy policy built from per-arm ridge fits,
// evaluated by Monte Carlo under the real instance. This is the plug-in
// "learn a policy, evaluate it" baseline.
double plugin_policy_value(const std::vector<SampleBatch>& batches, double lambda,
                           const BanditInstance& instance, const ContextDistribution& dist,
                           std::int64_t n_mc, std::uint64_t seed);

// Grid-search helper: best plug-in value across candidate regularizers
// (the oracle choice of lambda).
double plugin_policy_value_best(const std::vector<SampleBatch>& batches,
                                const std::vector<double>& lambda_grid,
                                const BanditInstance& instance, const ContextDistribution& dist,
                                std::int64_t n_mc, std::uint64_t seed);

}  // namespace optreward
