#include "optreward/opt_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "optreward/errors.hpp"
#include "optreward/parallel.hpp"

namespace optreward {

namespace {

double median_of(std::vector<double>& values) {
    const std::size_t n = values.size();
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    double upper = *mid;
    double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

Eigen::MatrixXd clip_to_psd(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

struct MedianStage {
    MomentEstimate estimate;
    double rep_spread = 0.0;
    double bias_spread = 0.0;  // centering residual scale across repetitions
};

MedianStage combine_repetitions(const std::vector<Eigen::VectorXd>& biases,
                                const std::vector<Eigen::MatrixXd>& h_estimates,
                                int labeled_per_arm, long unlabeled_count, std::string regime) {
    MedianStage stage;
    stage.estimate = median_moment_estimate(biases, h_estimates, labeled_per_arm,
                                            unlabeled_count, std::move(regime));
    for (const auto& h : h_estimates)
        stage.rep_spread =
            std::max(stage.rep_spread, (h - stage.estimate.h_hat).cwiseAbs().maxCoeff());
    for (const auto& b : biases)
        stage.bias_spread =
            std::max(stage.bias_spread, (b - stage.estimate.b_hat).cwiseAbs().maxCoeff());
    return stage;
}

OptEstimate finish_single_gaussian(const MedianStage& stage, const EstimatorConfig& config) {
    OptEstimate out;
    out.b_hat = stage.estimate.b_hat;
    out.diagnostics.h_median = stage.estimate.h_hat;
    out.diagnostics.rep_spread = stage.rep_spread;
    out.diagnostics.bias_residual = stage.bias_spread;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(stage.estimate.h_hat,
                                                       Eigen::EigenvaluesOnly);
    out.diagnostics.min_eigenvalue_before = eig.eigenvalues().minCoeff();
    out.h_psd = psd_project_maxnorm(stage.estimate.h_hat);
    out.diagnostics.projection_distance =
        (out.h_psd - stage.estimate.h_hat).cwiseAbs().maxCoeff();
    MonteCarloValue mc = gaussian_max_expectation(
        out.b_hat, out.h_psd, config.mc_samples,
        derive_seed(config.seed, Stream::kGaussianMax), config.threads);
    out.value = mc.value;
    out.mc_standard_error = mc.standard_error;
    return out;
}

}  // namespace

int default_repetitions(int num_arms, double delta) {
    if (num_arms < 1 || delta <= 0.0 || delta >= 1.0)
        throw InvalidArgument("need K >= 1 and delta in (0,1)");
    double k = static_cast<double>(num_arms);
    return static_cast<int>(std::ceil(48.0 * (std::log(k * k / delta) + 1.0)));
}

std::int64_t default_mc_samples(double epsilon_target) {
    if (epsilon_target <= 0.0) throw InvalidArgument("epsilon_target must be > 0");
    return std::max<std::int64_t>(
        100000, static_cast<std::int64_t>(std::ceil(100.0 / (epsilon_target * epsilon_target))));
}

void EstimatorConfig::validate(int num_arms) const {
    if (num_arms < 1) throw InvalidArgument("num_arms must be >= 1");
    if (delta <= 0.0 || delta >= 1.0) throw InvalidArgument("delta must be in (0,1)");
    if (repetitions < 0) throw InvalidArgument("repetitions must be >= 0");
    if (samples_per_arm < 2) throw InsufficientSamples("samples_per_arm must be >= 2");
    if (mc_samples < 1) throw InvalidArgument("mc_samples must be >= 1");
}

int EstimatorConfig::resolved_repetitions(int num_arms) const {
    return repetitions > 0 ? repetitions : default_repetitions(num_arms, delta);
}

Eigen::MatrixXd median_combine(const std::vector<Eigen::MatrixXd>& estimates) {
    if (estimates.empty()) throw InvalidArgument("median of empty list");
    const Eigen::Index rows = estimates.front().rows();
    const Eigen::Index cols = estimates.front().cols();
    for (const auto& m : estimates)
        if (m.rows() != rows || m.cols() != cols) throw InvalidArgument("shape mismatch");
    Eigen::MatrixXd out(rows, cols);
    std::vector<double> slot(estimates.size());
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (std::size_t r = 0; r < estimates.size(); ++r) slot[r] = estimates[r](i, j);
            out(i, j) = median_of(slot);
        }
    }
    return out;
}

Eigen::VectorXd median_combine(const std::vector<Eigen::VectorXd>& estimates) {
    if (estimates.empty()) throw InvalidArgument("median of empty list");
    std::vector<Eigen::MatrixXd> as_matrices;
    as_matrices.reserve(estimates.size());
    for (const auto& v : estimates) as_matrices.push_back(v);
    return median_combine(as_matrices);
}

MomentEstimate median_moment_estimate(const std::vector<Eigen::VectorXd>& bias_reps,
                                      const std::vector<Eigen::MatrixXd>& h_reps,
                                      int labeled_per_arm, long unlabeled_count,
                                      std::string regime) {
    MomentEstimate estimate;
    estimate.b_hat = median_combine(bias_reps);
    estimate.h_hat = median_combine(h_reps);
    estimate.labeled_per_arm = labeled_per_arm;
    estimate.unlabeled_count = unlabeled_count;
    estimate.regime = std::move(regime);
    if (!estimate.h_hat.allFinite() || !estimate.b_hat.allFinite())
        throw InvalidArgument("non-finite moment estimate");
    return estimate;
}

namespace {

// Projection of v onto the L1 ball of the given radius.
Eigen::VectorXd l1_project(const Eigen::VectorXd& v, double radius) {
    Eigen::VectorXd mag = v.cwiseAbs();
    if (mag.sum() <= radius) return v;
    std::vector<double> sorted(mag.data(), mag.data() + mag.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cumulative += sorted[i];
        double candidate = (cumulative - radius) / static_cast<double>(i + 1);
        if (sorted[i] - candidate > 0.0) theta = candidate;
    }
    return v.unaryExpr([&](double x) {
        double shrunk = std::abs(x) - theta;
        return shrunk > 0.0 ? (x > 0.0 ? shrunk : -shrunk) : 0.0;
    });
}

}  // namespace

Eigen::MatrixXd psd_project_maxnorm(const Eigen::MatrixXd& h_hat, double tolerance) {
    if (h_hat.rows() != h_hat.cols()) throw InvalidArgument("matrix must be square");
    if ((h_hat - h_hat.transpose()).cwiseAbs().maxCoeff() > 1e-9)
        throw InvalidArgument("matrix must be symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h_hat, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() >= 0.0) return h_hat;

    // ADMM consensus split between the PSD cone indicator and the max-norm
    // objective: X-step clips eigenvalues, Y-step is the L-infinity prox
    // (Moreau: identity minus a scaled L1-ball projection).
    const Eigen::Index k = h_hat.rows();
    const double scale = std::max(1.0, h_hat.cwiseAbs().maxCoeff());
    const double rho = 1.0 / scale;
    Eigen::MatrixXd x = clip_to_psd(h_hat);
    Eigen::MatrixXd y = x;
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(k, k);
    for (int iter = 0; iter < 600; ++iter) {
        x = clip_to_psd(y - u);
        Eigen::MatrixXd w = x + u - h_hat;
        Eigen::VectorXd flat = Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
        Eigen::VectorXd proxed = flat - (1.0 / rho) * l1_project(flat * rho, 1.0);
        y = h_hat + Eigen::Map<Eigen::MatrixXd>(proxed.data(), k, k);
        u += x - y;
        if (iter % 25 == 24 &&
            (x - y).cwiseAbs().maxCoeff() <= 1e-6 * tolerance * scale)
            break;
    }
    Eigen::MatrixXd solution = clip_to_psd(0.5 * (x + y));

    // Never worse than the eigenvalue-clipped baseline.
    Eigen::MatrixXd clipped = clip_to_psd(h_hat);
    if ((clipped - h_hat).cwiseAbs().maxCoeff() < (solution - h_hat).cwiseAbs().maxCoeff())
        return clipped;
    return solution;
}

MonteCarloValue gaussian_max_expectation(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                         std::int64_t mc_samples, std::uint64_t seed,
                                         unsigned threads) {
    const Eigen::Index k = mean.size();
    if (cov.rows() != k || cov.cols() != k) throw InvalidArgument("mean/cov size mismatch");
    if (mc_samples < 1) throw InvalidArgument("mc_samples must be >= 1");

    // Exact degenerate cases; the MC route would only add jitter noise.
    if (k == 1) return {mean[0], 0.0};
    if (cov.cwiseAbs().maxCoeff() == 0.0) return {mean.maxCoeff(), 0.0};

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < -1e-6) throw NotPsd("covariance has eigenvalue below -1e-6");
    const double jitter = std::max(0.0, -min_eig) + 1e-10;

    Eigen::MatrixXd padded = cov + jitter * Eigen::MatrixXd::Identity(k, k);
    Eigen::LLT<Eigen::MatrixXd> llt(padded);
    if (llt.info() != Eigen::Success) throw NotPsd("Cholesky factorization failed");
    Eigen::MatrixXd chol = llt.matrixL();

    const std::int64_t chunk = 16384;
    const std::size_t n_chunks = static_cast<std::size_t>((mc_samples + chunk - 1) / chunk);
    std::vector<double> sums(n_chunks, 0.0), sqs(n_chunks, 0.0);
    parallel_for(n_chunks, threads, [&](std::size_t c) {
        std::int64_t begin = static_cast<std::int64_t>(c) * chunk;
        std::int64_t count = std::min<std::int64_t>(chunk, mc_samples - begin);
        Rng rng(derive_seed(seed, Stream::kGaussianMax, c));
        Eigen::MatrixXd z(count, k);
        rng.fill_normal(z);
        Eigen::MatrixXd draws = z * chol.transpose();
        draws.rowwise() += mean.transpose();
        double s = 0.0, s2 = 0.0;
        for (Eigen::Index i = 0; i < draws.rows(); ++i) {
            double v = draws.row(i).maxCoeff();
            s += v;
            s2 += v * v;
        }
        sums[c] = s;
        sqs[c] = s2;
    });
    double total = std::accumulate(sums.begin(), sums.end(), 0.0);
    double total_sq = std::accumulate(sqs.begin(), sqs.end(), 0.0);
    double value = total / static_cast<double>(mc_samples);
    double var = std::max(0.0, total_sq / static_cast<double>(mc_samples) - value * value);
    double se = mc_samples > 1 ? std::sqrt(var / static_cast<double>(mc_samples)) : 0.0;
    return {value, se};
}

OptEstimate estimate_opt_known(const BatchSampler& sampler, int num_arms,
                               const EstimatorConfig& config) {
    config.validate(num_arms);
    const int reps = config.resolved_repetitions(num_arms);
    const int n = config.samples_per_arm;

    std::vector<Eigen::VectorXd> biases(static_cast<std::size_t>(reps));
    std::vector<Eigen::MatrixXd> h_estimates(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), config.threads, [&](std::size_t rep) {
        std::vector<SampleBatch> batches;
        batches.reserve(static_cast<std::size_t>(num_arms));
        Eigen::VectorXd b(num_arms);
        for (int a = 0; a < num_arms; ++a) {
            std::uint64_t batch_seed = derive_seed(
                config.seed, Stream::kRepetition,
                rep * static_cast<std::size_t>(num_arms) + static_cast<std::size_t>(a));
            SampleBatch batch = sampler(a, n, batch_seed);
            b[a] = estimate_bias(batch.rewards);
            batch.rewards.array() -= b[a];
            batches.push_back(std::move(batch));
        }
        biases[rep] = std::move(b);
        h_estimates[rep] = h_identity(batches);
    });

    return finish_single_gaussian(
        combine_repetitions(biases, h_estimates, n, 0, "identity"), config);
}

OptEstimate estimate_opt_unknown(const BatchSampler& sampler, int num_arms,
                                 const EstimatorConfig& config) {
    config.validate(num_arms);
    if (config.samples_per_arm % 2 != 0)
        throw InvalidArgument("unknown-covariance mode needs an even n per arm");
    const int reps = config.resolved_repetitions(num_arms);
    const int n = config.samples_per_arm;
    const int half = n / 2;
    if (half < 2) throw InsufficientSamples("labeled half needs n/2 >= 2");

    PolynomialApprox poly =
        build_poly_approx(config.poly_degree, config.sigma_min, config.sigma_max);
    if (static_cast<long>(num_arms) * half < poly.degree)
        throw InsufficientUnlabeled("pooled unlabeled set smaller than polynomial degree");

    std::vector<Eigen::VectorXd> biases(static_cast<std::size_t>(reps));
    std::vector<Eigen::MatrixXd> h_estimates(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), config.threads, [&](std::size_t rep) {
        std::vector<SampleBatch> labeled;
        labeled.reserve(static_cast<std::size_t>(num_arms));
        Eigen::MatrixXd pooled;
        Eigen::VectorXd b(num_arms);
        for (int a = 0; a < num_arms; ++a) {
            std::uint64_t batch_seed = derive_seed(
                config.seed, Stream::kRepetition,
                rep * static_cast<std::size_t>(num_arms) + static_cast<std::size_t>(a));
            SampleBatch batch = sampler(a, n, batch_seed);
            // Bias from all n samples, then split: first half labeled,
            // second half pooled as unlabeled contexts.
            b[a] = estimate_bias(batch.rewards);
            batch.rewards.array() -= b[a];
            if (a == 0) pooled.resize(static_cast<Eigen::Index>(num_arms) * half, batch.contexts.cols());
            pooled.middleRows(static_cast<Eigen::Index>(a) * half, half) =
                batch.contexts.bottomRows(half);
            SampleBatch head;
            head.arm = a;
            head.contexts = batch.contexts.topRows(half);
            head.rewards = batch.rewards.head(half);
            labeled.push_back(std::move(head));
        }
        KernelMatrices kernel = build_kernel_matrices(pooled, poly);
        biases[rep] = std::move(b);
        h_estimates[rep] = h_general(labeled, kernel);
    });

    return finish_single_gaussian(
        combine_repetitions(biases, h_estimates, half, static_cast<long>(num_arms) * half,
                            "general"),
        config);
}

OptEstimate estimate_opt_whitened(const BatchSampler& sampler,
                                  const Eigen::MatrixXd& unlabeled_pool, int num_arms,
                                  const EstimatorConfig& config) {
    config.validate(num_arms);
    if (unlabeled_pool.rows() < 1) throw InvalidArgument("empty unlabeled pool");
    const Eigen::Index d = unlabeled_pool.cols();

    Eigen::MatrixXd sigma_hat =
        unlabeled_pool.transpose() * unlabeled_pool / static_cast<double>(unlabeled_pool.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_hat);
    if (eig.eigenvalues().maxCoeff() <= 1e-8)
        throw IllConditionedCovariance("estimated covariance is numerically zero");
    // Eigenvalue floor keeps the inverse square root defined when s < d.
    Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(1e-8);
    Eigen::MatrixXd whitener = eig.eigenvectors() *
                               lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
                               eig.eigenvectors().transpose();

    BatchSampler whitened = [sampler, whitener, d](int arm, int n, std::uint64_t seed) {
        SampleBatch batch = sampler(arm, n, seed);
        if (batch.contexts.cols() != d) throw InvalidArgument("pool/sampler dimension mismatch");
        batch.contexts = batch.contexts * whitener;  // rows Sigma^{-1/2} x
        return batch;
    };
    return estimate_opt_known(whitened, num_arms, config);
}

OptEstimate estimate_opt_mixture(const BatchSampler& sampler, const ContextDistribution& mixture,
                                 int num_arms, const EstimatorConfig& config) {
    config.validate(num_arms);
    if (!mixture.is_normalized_mixture())
        throw InvalidArgument("mixture must be normalized: E[x] = 0 and E[x x^T] = I");
    const int reps = config.resolved_repetitions(num_arms);
    const int n = config.samples_per_arm;
    const std::size_t n_components = mixture.components().size();

    std::vector<Eigen::VectorXd> biases(static_cast<std::size_t>(reps));
    std::vector<std::vector<MogMoments>> per_rep(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), config.threads, [&](std::size_t rep) {
        std::vector<SampleBatch> batches;
        batches.reserve(static_cast<std::size_t>(num_arms));
        Eigen::VectorXd b(num_arms);
        for (int a = 0; a < num_arms; ++a) {
            std::uint64_t batch_seed = derive_seed(
                config.seed, Stream::kRepetition,
                rep * static_cast<std::size_t>(num_arms) + static_cast<std::size_t>(a));
            SampleBatch batch = sampler(a, n, batch_seed);
            b[a] = estimate_bias(batch.rewards);
            batch.rewards.array() -= b[a];
            batches.push_back(std::move(batch));
        }
        per_rep[rep] = mog_moment_estimates(batches, b, mixture);
        biases[rep] = std::move(b);
    });

    OptEstimate out;
    out.b_hat = median_combine(biases);
    out.value = 0.0;
    double se_sq = 0.0;
    out.h_psd = Eigen::MatrixXd::Zero(num_arms, num_arms);
    out.diagnostics.h_median = Eigen::MatrixXd::Zero(num_arms, num_arms);
    out.diagnostics.min_eigenvalue_before = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < n_components; ++m) {
        std::vector<Eigen::VectorXd> component_b(static_cast<std::size_t>(reps));
        std::vector<Eigen::MatrixXd> component_h(static_cast<std::size_t>(reps));
        for (int rep = 0; rep < reps; ++rep) {
            component_b[static_cast<std::size_t>(rep)] =
                per_rep[static_cast<std::size_t>(rep)][m].b_hat;
            component_h[static_cast<std::size_t>(rep)] =
                per_rep[static_cast<std::size_t>(rep)][m].h_hat;
        }
        MedianStage stage =
            combine_repetitions(component_b, component_h, n, 0, "mixture");
        out.diagnostics.rep_spread = std::max(out.diagnostics.rep_spread, stage.rep_spread);
        out.diagnostics.bias_residual =
            std::max(out.diagnostics.bias_residual, stage.bias_spread);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(stage.estimate.h_hat,
                                                           Eigen::EigenvaluesOnly);
        out.diagnostics.min_eigenvalue_before =
            std::min(out.diagnostics.min_eigenvalue_before, eig.eigenvalues().minCoeff());
        Eigen::MatrixXd projected = psd_project_maxnorm(stage.estimate.h_hat);
        out.diagnostics.projection_distance =
            std::max(out.diagnostics.projection_distance,
                     (projected - stage.estimate.h_hat).cwiseAbs().maxCoeff());
        const double weight = mixture.components()[m].weight;
        MonteCarloValue mc = gaussian_max_expectation(
            stage.estimate.b_hat, projected, config.mc_samples,
            derive_seed(config.seed, Stream::kGaussianMax, m), config.threads);
        out.value += weight * mc.value;
        se_sq += weight * weight * mc.standard_error * mc.standard_error;
        // Weighted aggregates; for M = 1 these coincide with the known path.
        out.h_psd += weight * projected;
        out.diagnostics.h_median += weight * stage.estimate.h_hat;
    }
    out.mc_standard_error = std::sqrt(se_sq);
    return out;
}

}  // namespace optreward
