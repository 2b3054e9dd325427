#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "optreward/bandit_model.hpp"

namespace optreward {

// The pair (b_hat, H_hat) feeding the Gaussian-max evaluation.
struct MomentEstimate {
    Eigen::VectorXd b_hat;
    Eigen::MatrixXd h_hat;  // exactly symmetric
    int labeled_per_arm = 0;
    long unlabeled_count = 0;
    std::string regime;
};

// Coefficients a_0..a_k of p(x) = sum_i a_i x^{i+2} approximating f(x) = x
// on [sigma_min, sigma_max], with a grid-certified sup error.
struct PolynomialApprox {
    int degree = 0;  // k
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    Eigen::VectorXd coeffs;  // a_0..a_k
    double sup_error = 0.0;

    double evaluate(double x) const {
        double q = 0.0;
        for (Eigen::Index i = coeffs.size() - 1; i >= 0; --i) q = q * x + coeffs[i];
        return x * x * q;
    }
};

// G is the strictly-upper-triangular Gram matrix of the unlabeled pool,
// P = a_0 I + sum_t (a_t / C(s,t)) S^T G^{t-1} S the combined d x d operator.
struct KernelMatrices {
    Eigen::MatrixXd gram_upper;  // s x s, zero diagonal and lower triangle
    Eigen::MatrixXd combined;    // d x d, exactly symmetrized
};

// Mean reward of one arm; the caller subtracts it to center the batch.
double estimate_bias(const Eigen::VectorXd& rewards);

// Identity-covariance moment matrix estimate from centered batches:
//   H_aa  = sum_{i<j} y_i y_j x_i.x_j / C(n,2)
//   H_aa' = sum_{i,j} y_i y_j x_i.x_j / n^2     (a != a')
// Unbiased for H_aa' = beta_a . beta_a' when contexts are N(0, I).
Eigen::MatrixXd h_identity(const std::vector<SampleBatch>& centered_batches);

PolynomialApprox build_poly_approx(int k, double sigma_min, double sigma_max);

// Degree suggestion k = min(c1 sqrt(log K)/eps + 2,
// sqrt(sigma_max/sigma_min) (log(log K / eps^2) + c2)), clamped to >= 1.
// c1, c2 are the free constants of the sample-complexity analysis.
int suggested_poly_degree(double epsilon, int num_arms, double sigma_min, double sigma_max,
                          double c1 = 1.0, double c2 = 1.0);

KernelMatrices build_kernel_matrices(const Eigen::MatrixXd& unlabeled,
                                     const PolynomialApprox& poly);

// General-covariance analogue of h_identity with the combined operator P
// inserted between contexts. With P = I it reproduces h_identity exactly.
Eigen::MatrixXd h_general(const std::vector<SampleBatch>& centered_batches,
                          const KernelMatrices& kernel);

// Unbiased estimate of beta_a^T Sigma^{t+2} beta_a' from one ordered
// Gram-chain term; the building block of h_general, exposed for testing.
double moment_power_estimate(const SampleBatch& batch_a, const SampleBatch& batch_a2,
                             const Eigen::MatrixXd& unlabeled, int t);

struct MogMoments {
    Eigen::VectorXd b_hat;  // per arm: beta_k . mu_m + scalar bias
    Eigen::MatrixXd h_hat;  // per arm pair: beta_k Sigma_m beta_k'
};

// Per-component moment estimates for a normalized Gaussian mixture.
// arm_biases holds the scalar bias estimates that get added to b_hat.
std::vector<MogMoments> mog_moment_estimates(const std::vector<SampleBatch>& centered_batches,
                                             const Eigen::VectorXd& arm_biases,
                                             const ContextDistribution& mixture);

}  // namespace optreward
