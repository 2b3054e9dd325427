#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "optreward/bandit_model.hpp"
#include "optreward/moment_estimators.hpp"

namespace optreward {

enum class CovarianceMode { kKnown, kUnknown, kWhitened, kMixture };

struct EstimatorConfig {
    double delta = 0.05;       // failure probability for the default repetition count
    int repetitions = 0;       // 0 -> default_repetitions(num_arms, delta)
    int samples_per_arm = 0;   // n drawn per arm in each repetition
    CovarianceMode mode = CovarianceMode::kKnown;
    int poly_degree = 6;       // unknown mode
    double sigma_min = 1.0;    // unknown mode: spectrum interval of Sigma
    double sigma_max = 1.0;
    std::int64_t mc_samples = 100000;
    std::uint64_t seed = 0;
    unsigned threads = 0;      // 0 = auto

    void validate(int num_arms) const;
    int resolved_repetitions(int num_arms) const;
};

// ceil(48 (log(K^2/delta) + 1)) repetitions boost the per-entry 2/3 success
// probability of one repetition to 1 - delta overall.
int default_repetitions(int num_arms, double delta);

// max(1e5, ceil(100/eps^2)) so the simulation error sits an order below the
// target estimation error.
std::int64_t default_mc_samples(double epsilon_target);

struct PipelineDiagnostics {
    Eigen::MatrixXd h_median;        // entrywise median before PSD projection
    double rep_spread = 0.0;         // max |H^(i) - median| over reps and entries
    double projection_distance = 0.0;  // max-norm distance moved by the projection
    double min_eigenvalue_before = 0.0;
    double bias_residual = 0.0;  // max |b_hat| spread across reps (centering residual)
};

struct OptEstimate {
    double value = 0.0;
    double mc_standard_error = 0.0;
    Eigen::VectorXd b_hat;
    Eigen::MatrixXd h_psd;
    PipelineDiagnostics diagnostics;
};

// Entrywise median; even counts average the two central order statistics.
Eigen::MatrixXd median_combine(const std::vector<Eigen::MatrixXd>& estimates);
Eigen::VectorXd median_combine(const std::vector<Eigen::VectorXd>& estimates);

// Median-of-means combination of per-repetition moment estimates into the
// (b_hat, H_hat) pair that feeds the Gaussian-max evaluation.
MomentEstimate median_moment_estimate(const std::vector<Eigen::VectorXd>& bias_reps,
                                      const std::vector<Eigen::MatrixXd>& h_reps,
                                      int labeled_per_arm, long unlabeled_count,
                                      std::string regime);

// PSD matrix minimizing max_ij |M_ij - H_ij|, found by bisection on the
// ball radius with alternating projections; the bisection gap certifies
// near-optimality within `tolerance`.
Eigen::MatrixXd psd_project_maxnorm(const Eigen::MatrixXd& h_hat, double tolerance = 1e-6);

// Monte Carlo E[max_i r_i], r ~ N(mean, cov), sampled through the Cholesky
// factor of cov + jitter I with jitter = max(0, -lambda_min) + 1e-10.
// Degenerate cases (K = 1, or cov identically zero) return the exact value.
MonteCarloValue gaussian_max_expectation(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                         std::int64_t mc_samples, std::uint64_t seed,
                                         unsigned threads = 0);

// Algorithm: repeat { draw n per arm, estimate biases, center, estimate H },
// median-combine, project onto the PSD cone, evaluate the Gaussian max.
// Contexts are assumed standard Gaussian; whiten first if they are not.
OptEstimate estimate_opt_known(const BatchSampler& sampler, int num_arms,
                               const EstimatorConfig& config);

// Unknown covariance: per repetition each arm's n samples split in half,
// second halves pooled as unlabeled examples for the polynomial kernel.
OptEstimate estimate_opt_unknown(const BatchSampler& sampler, int num_arms,
                                 const EstimatorConfig& config);

// Whitening reduction: estimate Sigma from the unlabeled pool, transform
// every labeled context by Sigma^{-1/2}, then run the known-covariance path.
OptEstimate estimate_opt_whitened(const BatchSampler& sampler,
                                  const Eigen::MatrixXd& unlabeled_pool, int num_arms,
                                  const EstimatorConfig& config);

// Known normalized mixture: per-component moment estimates, medians and
// projections per component, weighted sum of the component Gaussian maxima.
OptEstimate estimate_opt_mixture(const BatchSampler& sampler, const ContextDistribution& mixture,
                                 int num_arms, const EstimatorConfig& config);

}  // namespace optreward
