#include "optreward/bandit_model.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "optreward/errors.hpp"
#include "optreward/parallel.hpp"

namespace optreward {

namespace {

void check_covariance(const Eigen::MatrixXd& cov) {
    if (cov.rows() != cov.cols()) throw InvalidArgument("covariance must be square");
    double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) throw InvalidArgument("covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10) throw InvalidArgument("covariance not PSD");
}

// PSD square-root factor via eigendecomposition; tolerates semidefinite input.
Eigen::MatrixXd sqrt_factor(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

}  // namespace

void BanditInstance::validate() const {
    if (num_arms < 1 || dim < 1) throw InvalidArgument("instance needs K >= 1 and d >= 1");
    if (betas.rows() != num_arms || betas.cols() != dim)
        throw InvalidArgument("betas shape mismatch");
    if (biases.size() != num_arms || noise_std.size() != num_arms)
        throw InvalidArgument("biases/noise_std length mismatch");
    if (!betas.allFinite() || !biases.allFinite()) throw InvalidArgument("non-finite parameters");
    if ((noise_std.array() < 0.0).any()) throw InvalidArgument("noise_std entries must be >= 0");
}

ContextDistribution ContextDistribution::standard_gaussian(int dim) {
    return gaussian(Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim));
}

ContextDistribution ContextDistribution::gaussian(Eigen::VectorXd mean,
                                                  Eigen::MatrixXd covariance) {
    if (mean.size() < 1) throw InvalidArgument("dimension must be >= 1");
    if (covariance.rows() != mean.size()) throw InvalidArgument("mean/covariance size mismatch");
    check_covariance(covariance);
    ContextDistribution dist;
    dist.dim_ = static_cast<int>(mean.size());
    dist.is_mixture_ = false;
    dist.identity_cov_.push_back(covariance.isIdentity(1e-14));
    dist.factors_.push_back(dist.identity_cov_.front() ? Eigen::MatrixXd()
                                                       : sqrt_factor(covariance));
    dist.components_.push_back({1.0, std::move(mean), std::move(covariance)});
    dist.weights_ = Eigen::VectorXd::Ones(1);
    return dist;
}

ContextDistribution ContextDistribution::mixture(std::vector<MixtureComponent> components) {
    if (components.empty()) throw InvalidArgument("mixture needs at least one component");
    ContextDistribution dist;
    dist.dim_ = static_cast<int>(components.front().mean.size());
    dist.is_mixture_ = true;
    dist.weights_.resize(static_cast<Eigen::Index>(components.size()));
    double total = 0.0;
    for (std::size_t m = 0; m < components.size(); ++m) {
        const auto& c = components[m];
        if (c.mean.size() != dist.dim_ || c.covariance.rows() != dist.dim_)
            throw InvalidArgument("mixture component dimension mismatch");
        if (c.weight < 0.0 || c.weight > 1.0) throw InvalidArgument("mixture weight outside [0,1]");
        check_covariance(c.covariance);
        dist.weights_[static_cast<Eigen::Index>(m)] = c.weight;
        total += c.weight;
        dist.identity_cov_.push_back(c.covariance.isIdentity(1e-14));
        dist.factors_.push_back(dist.identity_cov_.back() ? Eigen::MatrixXd()
                                                          : sqrt_factor(c.covariance));
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("mixture weights must sum to 1");
    dist.components_ = std::move(components);
    return dist;
}

Eigen::VectorXd ContextDistribution::overall_mean() const {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(dim_);
    for (const auto& c : components_) mu += c.weight * c.mean;
    return mu;
}

Eigen::MatrixXd ContextDistribution::overall_covariance() const {
    Eigen::VectorXd mu = overall_mean();
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const auto& c : components_)
        second += c.weight * (c.covariance + c.mean * c.mean.transpose());
    return second - mu * mu.transpose();
}

bool ContextDistribution::is_normalized_mixture(double tol) const {
    if (overall_mean().cwiseAbs().maxCoeff() > tol) return false;
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const auto& c : components_)
        second += c.weight * (c.covariance + c.mean * c.mean.transpose());
    return (second - Eigen::MatrixXd::Identity(dim_, dim_)).cwiseAbs().maxCoeff() <= tol;
}

void ContextDistribution::sample(Rng& rng, Eigen::Ref<Eigen::MatrixXd> out) const {
    Eigen::VectorXd z(dim_);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        int m = is_mixture_ ? rng.categorical(weights_) : 0;
        for (int j = 0; j < dim_; ++j) z[j] = rng.normal();
        if (identity_cov_[static_cast<std::size_t>(m)]) {
            out.row(i) = (components_[static_cast<std::size_t>(m)].mean + z).transpose();
        } else {
            out.row(i) = (components_[static_cast<std::size_t>(m)].mean +
                          factors_[static_cast<std::size_t>(m)] * z)
                             .transpose();
        }
    }
}

BanditInstance make_synthetic_instance(int dim, int num_arms, double beta_entry_std,
                                       std::pair<double, double> bias_range, double noise_std,
                                       bool normalize_betas, std::uint64_t seed) {
    if (dim < 1 || num_arms < 1) throw InvalidArgument("d and K must be positive");
    if (beta_entry_std < 0.0) throw InvalidArgument("beta_entry_std must be >= 0");
    if (noise_std < 0.0) throw InvalidArgument("noise_std must be >= 0");
    if (bias_range.second < bias_range.first) throw InvalidArgument("empty bias range");

    Rng rng(derive_seed(seed, Stream::kInstance));
    BanditInstance inst;
    inst.num_arms = num_arms;
    inst.dim = dim;
    inst.betas.resize(num_arms, dim);
    for (int a = 0; a < num_arms; ++a)
        for (int j = 0; j < dim; ++j) inst.betas(a, j) = beta_entry_std * rng.normal();
    if (normalize_betas) {
        for (int a = 0; a < num_arms; ++a) {
            double norm = inst.betas.row(a).norm();
            if (norm > 0.0) inst.betas.row(a) /= norm;
        }
    }
    inst.biases.resize(num_arms);
    for (int a = 0; a < num_arms; ++a) {
        inst.biases[a] = bias_range.first == bias_range.second
                             ? bias_range.first
                             : rng.uniform(bias_range.first, bias_range.second);
    }
    inst.noise_std = Eigen::VectorXd::Constant(num_arms, noise_std);
    return inst;
}

SampleBatch sample_batch(const BanditInstance& instance, const ContextDistribution& dist, int arm,
                         int n, std::uint64_t seed) {
    instance.validate();
    if (arm < 0 || arm >= instance.num_arms) throw InvalidArgument("arm index out of range");
    if (n < 1) throw InvalidArgument("n must be >= 1");
    if (dist.dim() != instance.dim) throw InvalidArgument("distribution dimension mismatch");

    SampleBatch batch;
    batch.arm = arm;
    batch.contexts.resize(n, instance.dim);
    Rng ctx_rng(derive_seed(seed, Stream::kContexts));
    dist.sample(ctx_rng, batch.contexts);

    batch.rewards = batch.contexts * instance.betas.row(arm).transpose();
    batch.rewards.array() += instance.biases[arm];
    double sd = instance.noise_std[arm];
    if (sd > 0.0) {
        Rng noise_rng(derive_seed(seed, Stream::kNoise));
        // Uniform noise keeps the same variance: half-width sqrt(3)*sd.
        double half_width = std::sqrt(3.0) * sd;
        for (int i = 0; i < n; ++i) {
            batch.rewards[i] += instance.noise_kind == NoiseKind::kGaussian
                                    ? sd * noise_rng.normal()
                                    : noise_rng.uniform(-half_width, half_width);
        }
    }
    return batch;
}

MonteCarloValue true_opt(const BanditInstance& instance, const ContextDistribution& dist,
                         std::int64_t n_mc, std::uint64_t seed, unsigned threads) {
    instance.validate();
    if (n_mc < 1) throw InvalidArgument("n_mc must be >= 1");
    if (dist.dim() != instance.dim) throw InvalidArgument("distribution dimension mismatch");

    // Fixed chunking so the result does not depend on the thread count.
    const std::int64_t chunk =
        std::max<std::int64_t>(1, std::min<std::int64_t>(16384, 2'000'000 / instance.dim));
    const std::size_t n_chunks = static_cast<std::size_t>((n_mc + chunk - 1) / chunk);
    std::vector<double> sums(n_chunks, 0.0), sqs(n_chunks, 0.0);
    parallel_for(n_chunks, threads, [&](std::size_t c) {
        std::int64_t begin = static_cast<std::int64_t>(c) * chunk;
        std::int64_t count = std::min<std::int64_t>(chunk, n_mc - begin);
        Eigen::MatrixXd contexts(count, instance.dim);
        Rng rng(derive_seed(seed, Stream::kTrueOpt, c));
        dist.sample(rng, contexts);
        Eigen::MatrixXd rewards = contexts * instance.betas.transpose();
        rewards.rowwise() += instance.biases.transpose();
        double s = 0.0, s2 = 0.0;
        for (Eigen::Index i = 0; i < rewards.rows(); ++i) {
            double v = rewards.row(i).maxCoeff();
            s += v;
            s2 += v * v;
        }
        sums[c] = s;
        sqs[c] = s2;
    });
    double sum = std::accumulate(sums.begin(), sums.end(), 0.0);
    double sumsq = std::accumulate(sqs.begin(), sqs.end(), 0.0);
    double mean = sum / static_cast<double>(n_mc);
    double var = std::max(0.0, sumsq / static_cast<double>(n_mc) - mean * mean);
    MonteCarloValue out;
    out.value = mean;
    out.standard_error = n_mc > 1 ? std::sqrt(var / static_cast<double>(n_mc)) : 0.0;
    return out;
}

BatchSampler make_batch_sampler(BanditInstance instance, ContextDistribution dist) {
    instance.validate();
    auto inst = std::make_shared<BanditInstance>(std::move(instance));
    auto d = std::make_shared<ContextDistribution>(std::move(dist));
    return [inst, d](int arm, int n, std::uint64_t seed) {
        return sample_batch(*inst, *d, arm, n, seed);
    };
}

}  // namespace optreward
