#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "optreward/rng.hpp"

namespace optreward {

enum class NoiseKind { kGaussian, kUniform };

// Ground-truth arm parameters of a disjoint linear bandit: the reward for
// pulling arm a on context x is betas.row(a) . x + biases[a] + noise.
struct BanditInstance {
    int num_arms = 0;
    int dim = 0;
    Eigen::MatrixXd betas;      // num_arms x dim
    Eigen::VectorXd biases;     // num_arms
    Eigen::VectorXd noise_std;  // num_arms, entries >= 0
    NoiseKind noise_kind = NoiseKind::kGaussian;

    void validate() const;
};

struct MixtureComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

// Law of the contexts: a single Gaussian or a finite Gaussian mixture.
// Immutable after construction; sampling factors are precomputed so the
// object is safe to share across threads.
class ContextDistribution {
  public:
    static ContextDistribution standard_gaussian(int dim);
    static ContextDistribution gaussian(Eigen::VectorXd mean, Eigen::MatrixXd covariance);
    static ContextDistribution mixture(std::vector<MixtureComponent> components);

    int dim() const { return dim_; }
    bool is_mixture() const { return is_mixture_; }
    const std::vector<MixtureComponent>& components() const { return components_; }
    const Eigen::VectorXd& mean() const { return components_.front().mean; }
    const Eigen::MatrixXd& covariance() const { return components_.front().covariance; }

    Eigen::VectorXd overall_mean() const;
    Eigen::MatrixXd overall_covariance() const;
    // Normalized mixture mode required by the MoG estimators:
    // sum_m a_m mu_m = 0 and sum_m a_m (mu_m mu_m^T + Sigma_m) = I.
    bool is_normalized_mixture(double tol = 1e-8) const;

    // Fills each row of `out` with one draw.
    void sample(Rng& rng, Eigen::Ref<Eigen::MatrixXd> out) const;

  private:
    ContextDistribution() = default;
    int dim_ = 0;
    bool is_mixture_ = false;
    std::vector<MixtureComponent> components_;
    std::vector<Eigen::MatrixXd> factors_;  // per component: L with L L^T = Sigma
    std::vector<bool> identity_cov_;
    Eigen::VectorXd weights_;
};

// One arm's data from one repetition.
struct SampleBatch {
    int arm = 0;
    Eigen::MatrixXd contexts;  // n x dim
    Eigen::VectorXd rewards;   // n

    int count() const { return static_cast<int>(rewards.size()); }
};

struct MonteCarloValue {
    double value = 0.0;
    double standard_error = 0.0;
};

// Random instance matching the synthetic experiment protocol: beta entries
// i.i.d. N(0, beta_entry_std^2), biases uniform in bias_range. When
// normalize_betas is set every row is rescaled to unit Euclidean norm.
BanditInstance make_synthetic_instance(int dim, int num_arms, double beta_entry_std,
                                       std::pair<double, double> bias_range, double noise_std,
                                       bool normalize_betas, std::uint64_t seed);

SampleBatch sample_batch(const BanditInstance& instance, const ContextDistribution& dist, int arm,
                         int n, std::uint64_t seed);

// Monte Carlo estimate of E_x[max_a (beta_a . x + b_a)], the ground-truth
// optimal policy value used to score every estimator.
MonteCarloValue true_opt(const BanditInstance& instance, const ContextDistribution& dist,
                         std::int64_t n_mc, std::uint64_t seed, unsigned threads = 0);

// A batch source must be a pure function of (arm, n, seed).
using BatchSampler = std::function<SampleBatch(int arm, int n, std::uint64_t seed)>;

BatchSampler make_batch_sampler(BanditInstance instance, ContextDistribution dist);

}  // namespace optreward
