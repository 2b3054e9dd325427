#include "optreward/baselines.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "optreward/errors.hpp"

namespace optreward {

LinUcbTrajectory linucb_run(const BanditInstance& instance, const ContextDistribution& dist,
                            double alpha, int rounds, int window, std::uint64_t seed,
                            double lambda, LinUCBState* final_state) {
    instance.validate();
    if (alpha < 0.0) throw InvalidArgument("alpha must be >= 0");
    if (lambda <= 0.0) throw InvalidArgument("lambda must be > 0");
    if (window < 1 || rounds < window) throw InvalidArgument("need rounds >= window >= 1");
    if (dist.dim() != instance.dim) throw InvalidArgument("distribution dimension mismatch");

    const int k = instance.num_arms;
    const int df = instance.dim + 1;  // intercept feature appended

    // Keep A^{-1} up to date through Sherman-Morrison rank-1 updates.
    std::vector<Eigen::MatrixXd> inv(static_cast<std::size_t>(k),
                                     Eigen::MatrixXd::Identity(df, df) / lambda);
    std::vector<Eigen::VectorXd> response(static_cast<std::size_t>(k),
                                          Eigen::VectorXd::Zero(df));
    LinUCBState state;
    if (final_state) {
        state.design.assign(static_cast<std::size_t>(k),
                            lambda * Eigen::MatrixXd::Identity(df, df));
        state.alpha = alpha;
        state.lambda = lambda;
    }

    LinUcbTrajectory out;
    out.arms.resize(static_cast<std::size_t>(rounds));
    out.rewards.resize(rounds);
    out.trailing_mean.resize(rounds);

    Rng ctx_rng(derive_seed(seed, Stream::kContexts));
    Rng noise_rng(derive_seed(seed, Stream::kNoise));
    Eigen::MatrixXd row(1, instance.dim);
    Eigen::VectorXd features(df);
    features[instance.dim] = 1.0;

    double window_sum = 0.0;
    for (int t = 0; t < rounds; ++t) {
        dist.sample(ctx_rng, row);
        features.head(instance.dim) = row.row(0).transpose();

        int best_arm = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < k; ++a) {
            const auto& ia = inv[static_cast<std::size_t>(a)];
            Eigen::VectorXd theta = ia * response[static_cast<std::size_t>(a)];
            double width = std::sqrt(std::max(0.0, features.dot(ia * features)));
            double score = theta.dot(features) + alpha * width;
            if (score > best_score) {  // ties keep the lowest index
                best_score = score;
                best_arm = a;
            }
        }

        double reward = row.row(0).dot(instance.betas.row(best_arm)) + instance.biases[best_arm];
        double sd = instance.noise_std[best_arm];
        if (sd > 0.0) {
            reward += instance.noise_kind == NoiseKind::kGaussian
                          ? sd * noise_rng.normal()
                          : noise_rng.uniform(-std::sqrt(3.0) * sd, std::sqrt(3.0) * sd);
        }

        auto& ia = inv[static_cast<std::size_t>(best_arm)];
        Eigen::VectorXd iax = ia * features;
        ia -= iax * iax.transpose() / (1.0 + features.dot(iax));
        response[static_cast<std::size_t>(best_arm)] += reward * features;
        if (final_state)
            state.design[static_cast<std::size_t>(best_arm)] += features * features.transpose();

        out.arms[static_cast<std::size_t>(t)] = best_arm;
        out.rewards[t] = reward;
        window_sum += reward;
        if (t >= window) window_sum -= out.rewards[t - window];
        out.trailing_mean[t] = window_sum / std::min(window, t + 1);
    }
    out.final_trailing_mean = out.trailing_mean[rounds - 1];
    if (final_state) {
        state.response = std::move(response);
        *final_state = std::move(state);
    }
    return out;
}

RidgeFit ridge_fit(const Eigen::MatrixXd& contexts, const Eigen::VectorXd& rewards,
                   double lambda) {
    if (lambda <= 0.0) throw InvalidArgument("lambda must be > 0");
    if (contexts.rows() != rewards.size() || contexts.rows() < 1)
        throw InvalidArgument("contexts/rewards shape mismatch");

    Eigen::RowVectorXd x_mean = contexts.colwise().mean();
    double y_mean = rewards.mean();
    Eigen::MatrixXd xc = contexts.rowwise() - x_mean;
    Eigen::VectorXd yc = rewards.array() - y_mean;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = svd.singularValues();
    Eigen::VectorXd shrink =
        (s.array() / (s.array().square() + lambda)).matrix();
    RidgeFit fit;
    fit.coef = svd.matrixV() *
               (shrink.array() * (svd.matrixU().transpose() * yc).array()).matrix();
    fit.intercept = y_mean - fit.coef.dot(x_mean.transpose());
    return fit;
}

namespace {

double policy_value_mc(const Eigen::MatrixXd& fitted_betas, const Eigen::VectorXd& fitted_bias,
                       const BanditInstance& instance, const ContextDistribution& dist,
                       std::int64_t n_mc, std::uint64_t seed) {
    const std::int64_t chunk =
        std::max<std::int64_t>(1, std::min<std::int64_t>(16384, 2'000'000 / instance.dim));
    double total = 0.0;
    std::int64_t done = 0;
    std::size_t index = 0;
    while (done < n_mc) {
        std::int64_t count = std::min<std::int64_t>(chunk, n_mc - done);
        Eigen::MatrixXd contexts(count, instance.dim);
        Rng rng(derive_seed(seed, Stream::kTrueOpt, index++));
        dist.sample(rng, contexts);
        Eigen::MatrixXd scores = contexts * fitted_betas.transpose();
        scores.rowwise() += fitted_bias.transpose();
        Eigen::MatrixXd actual = contexts * instance.betas.transpose();
        actual.rowwise() += instance.biases.transpose();
        for (Eigen::Index i = 0; i < count; ++i) {
            Eigen::Index pick = 0;
            scores.row(i).maxCoeff(&pick);
            total += actual(i, pick);
        }
        done += count;
    }
    return total / static_cast<double>(n_mc);
}

}  // namespace

double plugin_policy_value(const std::vector<SampleBatch>& batches, double lambda,
                           const BanditInstance& instance, const ContextDistribution& dist,
                           std::int64_t n_mc, std::uint64_t seed) {
    instance.validate();
    if (static_cast<int>(batches.size()) != instance.num_arms)
        throw InvalidArgument("one batch per arm required");
    Eigen::MatrixXd fitted_betas(instance.num_arms, instance.dim);
    Eigen::VectorXd fitted_bias(instance.num_arms);
    for (int a = 0; a < instance.num_arms; ++a) {
        const auto& batch = batches[static_cast<std::size_t>(a)];
        if (batch.contexts.cols() != instance.dim) throw InvalidArgument("batch dim mismatch");
        RidgeFit fit = ridge_fit(batch.contexts, batch.rewards, lambda);
        fitted_betas.row(a) = fit.coef.transpose();
        fitted_bias[a] = fit.intercept;
    }
    return policy_value_mc(fitted_betas, fitted_bias, instance, dist, n_mc, seed);
}

double plugin_policy_value_best(const std::vector<SampleBatch>& batches,
                                const std::vector<double>& lambda_grid,
                                const BanditInstance& instance, const ContextDistribution& dist,
                                std::int64_t n_mc, std::uint64_t seed) {
    if (lambda_grid.empty()) throw InvalidArgument("empty lambda grid");
    double best = -std::numeric_limits<double>::infinity();
    for (double lambda : lambda_grid)
        best = std::max(best, plugin_policy_value(batches, lambda, instance, dist, n_mc, seed));
    return best;
}

}  // namespace optreward
