#include "optreward/moment_estimators.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "optreward/errors.hpp"

namespace optreward {

namespace {

// sum_{i<j} y_i y_j v_i . x_j for rows v_i of V and x_j of X, via a suffix
// accumulator; equals y^T (V X^T)_up y without forming the n x n matrix.
double strict_upper_pair_sum(const Eigen::MatrixXd& V, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y) {
    const Eigen::Index n = X.rows();
    Eigen::VectorXd suffix = Eigen::VectorXd::Zero(X.cols());
    double total = 0.0;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        total += y[i] * V.row(i).dot(suffix);
        suffix += y[i] * X.row(i).transpose();
    }
    return total;
}

void check_batches(const std::vector<SampleBatch>& batches, int min_n) {
    if (batches.empty()) throw InvalidArgument("no batches");
    const Eigen::Index n = batches.front().rewards.size();
    const Eigen::Index d = batches.front().contexts.cols();
    for (const auto& b : batches) {
        if (b.contexts.rows() != b.rewards.size()) throw InvalidArgument("batch shape mismatch");
        if (b.rewards.size() != n || b.contexts.cols() != d)
            throw InvalidArgument("batches must share n and d");
    }
    if (n < min_n) throw InsufficientSamples("need at least " + std::to_string(min_n) +
                                             " samples per arm");
}

double log_binomial(long s, int t) {
    return std::lgamma(static_cast<double>(s) + 1.0) - std::lgamma(static_cast<double>(t) + 1.0) -
           std::lgamma(static_cast<double>(s - t) + 1.0);
}

// Chebyshev basis values T_0..T_k at t in [-1, 1].
Eigen::RowVectorXd cheb_row(double t, Eigen::Index k) {
    Eigen::RowVectorXd row(k + 1);
    row[0] = 1.0;
    if (k >= 1) row[1] = t;
    for (Eigen::Index j = 2; j <= k; ++j) row[j] = 2.0 * t * row[j - 1] - row[j - 2];
    return row;
}

// Monomial coefficients (ascending) of sum_j c_j T_j(m(x)) where
// m(x) = (2x - (lo+hi)) / (hi - lo).
Eigen::VectorXd cheb_to_monomial(const Eigen::VectorXd& c, double lo, double hi) {
    const double alpha = 2.0 / (hi - lo);
    const double beta = -(lo + hi) / (hi - lo);
    const Eigen::Index k = c.size() - 1;
    std::vector<Eigen::VectorXd> basis;
    basis.push_back(Eigen::VectorXd::Constant(1, 1.0));
    if (k >= 1) {
        Eigen::VectorXd t1(2);
        t1 << beta, alpha;
        basis.push_back(t1);
    }
    for (Eigen::Index j = 2; j <= k; ++j) {
        const Eigen::VectorXd& prev = basis[static_cast<std::size_t>(j - 1)];
        Eigen::VectorXd next = Eigen::VectorXd::Zero(prev.size() + 1);
        next.tail(prev.size()) += 2.0 * alpha * prev;
        next.head(prev.size()) += 2.0 * beta * prev;
        next.head(basis[static_cast<std::size_t>(j - 2)].size()) -=
            basis[static_cast<std::size_t>(j - 2)];
        basis.push_back(next);
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(k + 1);
    for (Eigen::Index j = 0; j <= k; ++j)
        out.head(basis[static_cast<std::size_t>(j)].size()) +=
            c[j] * basis[static_cast<std::size_t>(j)];
    return out;
}

double grid_sup_error(const PolynomialApprox& poly, int grid_points) {
    double sup = 0.0;
    for (int g = 0; g <= grid_points; ++g) {
        double x = poly.sigma_min +
                   (poly.sigma_max - poly.sigma_min) * static_cast<double>(g) / grid_points;
        sup = std::max(sup, std::abs(poly.evaluate(x) - x));
    }
    sup = std::max(sup, std::abs(poly.evaluate(poly.sigma_min) - poly.sigma_min));
    sup = std::max(sup, std::abs(poly.evaluate(poly.sigma_max) - poly.sigma_max));
    return sup;
}

}  // namespace

double estimate_bias(const Eigen::VectorXd& rewards) {
    if (rewards.size() == 0) throw InvalidArgument("empty reward vector");
    return rewards.mean();
}

Eigen::MatrixXd h_identity(const std::vector<SampleBatch>& centered_batches) {
    check_batches(centered_batches, 2);
    const int num_arms = static_cast<int>(centered_batches.size());
    const double n = static_cast<double>(centered_batches.front().rewards.size());

    std::vector<Eigen::VectorXd> z(centered_batches.size());
    for (int a = 0; a < num_arms; ++a)
        z[static_cast<std::size_t>(a)] = centered_batches[static_cast<std::size_t>(a)]
                                             .contexts.transpose() *
                                         centered_batches[static_cast<std::size_t>(a)].rewards;

    Eigen::MatrixXd h(num_arms, num_arms);
    const double pairs = n * (n - 1.0) / 2.0;
    for (int a = 0; a < num_arms; ++a) {
        const auto& batch = centered_batches[static_cast<std::size_t>(a)];
        h(a, a) = strict_upper_pair_sum(batch.contexts, batch.contexts, batch.rewards) / pairs;
        for (int a2 = a + 1; a2 < num_arms; ++a2) {
            double cross =
                z[static_cast<std::size_t>(a)].dot(z[static_cast<std::size_t>(a2)]) / (n * n);
            h(a, a2) = cross;
            h(a2, a) = cross;
        }
    }
    return h;
}

PolynomialApprox build_poly_approx(int k, double sigma_min, double sigma_max) {
    if (k < 0) throw InvalidArgument("k must be >= 0");
    if (!(sigma_min > 0.0) || sigma_max < sigma_min)
        throw InvalidArgument("need 0 < sigma_min <= sigma_max");
    if (sigma_max / sigma_min > 1e6)
        throw InvalidArgument("interval ill-conditioned: sigma_max/sigma_min > 1e6");

    PolynomialApprox poly;
    poly.degree = k;
    poly.sigma_min = sigma_min;
    poly.sigma_max = sigma_max;

    if (sigma_min == sigma_max) {
        // Point interval: a_0 x^2 matches x exactly at x = sigma.
        poly.coeffs = Eigen::VectorXd::Zero(k + 1);
        poly.coeffs[0] = 1.0 / sigma_min;
        poly.sup_error = grid_sup_error(poly, 10000);
        return poly;
    }

    // Lawson iteration (iteratively reweighted least squares) for the
    // weighted minimax fit of q ~ 1/x under weight x^2, in the Chebyshev
    // basis phi_j(x) = x^2 T_j(m(x)). The limit solves
    // min_a max_x |sum a_i x^{i+2} - x| on the grid.
    const int grid = 2000;
    Eigen::MatrixXd design(grid + 1, k + 1);
    Eigen::VectorXd target(grid + 1);
    for (int g = 0; g <= grid; ++g) {
        double x = sigma_min + (sigma_max - sigma_min) * static_cast<double>(g) / grid;
        double t = (2.0 * x - (sigma_min + sigma_max)) / (sigma_max - sigma_min);
        design.row(g) = x * x * cheb_row(t, k);
        target[g] = x;
    }
    Eigen::VectorXd weights = Eigen::VectorXd::Constant(grid + 1, 1.0 / (grid + 1));
    Eigen::VectorXd best_coeffs;
    double best_err = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd weighted(grid + 1, k + 1);
    for (int iter = 0; iter < 150; ++iter) {
        Eigen::VectorXd sw = weights.cwiseSqrt();
        weighted = sw.asDiagonal() * design;
        Eigen::VectorXd c =
            weighted.colPivHouseholderQr().solve((sw.array() * target.array()).matrix());
        Eigen::VectorXd resid = (design * c - target).cwiseAbs();
        double err = resid.maxCoeff();
        if (err < best_err) {
            best_err = err;
            best_coeffs = c;
        }
        weights.array() *= resid.array();
        double total = weights.sum();
        if (total <= 0.0) break;
        weights /= total;
        weights = weights.cwiseMax(1e-300);
    }

    poly.coeffs = cheb_to_monomial(best_coeffs, sigma_min, sigma_max);
    poly.sup_error = grid_sup_error(poly, 10000);
    return poly;
}

int suggested_poly_degree(double epsilon, int num_arms, double sigma_min, double sigma_max,
                          double c1, double c2) {
    if (epsilon <= 0.0 || num_arms < 1) throw InvalidArgument("need epsilon > 0 and K >= 1");
    if (!(sigma_min > 0.0) || sigma_max < sigma_min)
        throw InvalidArgument("need 0 < sigma_min <= sigma_max");
    double log_k = std::max(1.0, std::log(static_cast<double>(num_arms)));
    double first = c1 * std::sqrt(log_k) / epsilon + 2.0;
    double second = std::sqrt(sigma_max / sigma_min) *
                    (std::log(std::max(1.0 + 1e-9, log_k / (epsilon * epsilon))) + c2);
    return std::max(1, static_cast<int>(std::ceil(std::min(first, second))));
}

KernelMatrices build_kernel_matrices(const Eigen::MatrixXd& unlabeled,
                                     const PolynomialApprox& poly) {
    const long s = unlabeled.rows();
    const Eigen::Index d = unlabeled.cols();
    if (s < poly.degree)
        throw InsufficientUnlabeled("unlabeled pool smaller than polynomial degree");

    KernelMatrices kernel;
    kernel.gram_upper = (unlabeled * unlabeled.transpose())
                            .triangularView<Eigen::StrictlyUpper>();

    int last_term = 0;
    for (int t = 1; t <= poly.degree; ++t)
        if (poly.coeffs[t] != 0.0) last_term = t;

    Eigen::MatrixXd combined =
        poly.coeffs[0] * Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd running = unlabeled;  // G^{t-1} S, one s x d product
    for (int t = 1; t <= last_term; ++t) {
        double coeff = poly.coeffs[t];
        if (coeff != 0.0) {
            // C(s,t) in log-space; s ~ 1e4, t ~ 16 would overflow naive products.
            double scale = coeff * std::exp(-log_binomial(s, t));
            combined.noalias() += scale * unlabeled.transpose() * running;
        }
        if (t < last_term)
            running = kernel.gram_upper.triangularView<Eigen::StrictlyUpper>() * running;
    }
    kernel.combined = 0.5 * (combined + combined.transpose());
    return kernel;
}

Eigen::MatrixXd h_general(const std::vector<SampleBatch>& centered_batches,
                          const KernelMatrices& kernel) {
    check_batches(centered_batches, 2);
    const int num_arms = static_cast<int>(centered_batches.size());
    const Eigen::Index d = centered_batches.front().contexts.cols();
    if (kernel.combined.rows() != d) throw InvalidArgument("kernel dimension mismatch");
    const double n = static_cast<double>(centered_batches.front().rewards.size());

    std::vector<Eigen::VectorXd> z(centered_batches.size());
    for (int a = 0; a < num_arms; ++a)
        z[static_cast<std::size_t>(a)] = centered_batches[static_cast<std::size_t>(a)]
                                             .contexts.transpose() *
                                         centered_batches[static_cast<std::size_t>(a)].rewards;

    Eigen::MatrixXd h(num_arms, num_arms);
    const double pairs = n * (n - 1.0) / 2.0;
    for (int a = 0; a < num_arms; ++a) {
        const auto& batch = centered_batches[static_cast<std::size_t>(a)];
        Eigen::MatrixXd projected = batch.contexts * kernel.combined;  // rows x_i^T P
        h(a, a) = strict_upper_pair_sum(projected, batch.contexts, batch.rewards) / pairs;
        for (int a2 = a + 1; a2 < num_arms; ++a2) {
            double cross = z[static_cast<std::size_t>(a)].dot(
                               kernel.combined * z[static_cast<std::size_t>(a2)]) /
                           (n * n);
            h(a, a2) = cross;
            h(a2, a) = cross;
        }
    }
    return h;
}

double moment_power_estimate(const SampleBatch& batch_a, const SampleBatch& batch_a2,
                             const Eigen::MatrixXd& unlabeled, int t) {
    if (t < 0) throw InvalidArgument("t must be >= 0");
    if (unlabeled.rows() < t) throw InsufficientUnlabeled("unlabeled pool smaller than t");
    if (batch_a.contexts.cols() != batch_a2.contexts.cols() ||
        (t > 0 && unlabeled.cols() != batch_a.contexts.cols()))
        throw InvalidArgument("dimension mismatch");

    // Q = S^T G^{t-1} S / C(s,t), applied through iterated products.
    Eigen::MatrixXd gram_up;
    if (t >= 2)
        gram_up = (unlabeled * unlabeled.transpose()).triangularView<Eigen::StrictlyUpper>();
    const double inv_binom = t == 0 ? 1.0 : std::exp(-log_binomial(unlabeled.rows(), t));

    const bool same_arm = batch_a.arm == batch_a2.arm;
    if (same_arm) {
        const double n = static_cast<double>(batch_a.rewards.size());
        if (n < 2) throw InsufficientSamples("pair form needs n >= 2");
        Eigen::MatrixXd projected;  // X_a Q, rows x_i^T Q
        if (t == 0) {
            projected = batch_a.contexts;
        } else {
            Eigen::MatrixXd chain = batch_a.contexts * unlabeled.transpose();  // n x s
            for (int step = 1; step < t; ++step)
                chain = chain * gram_up.triangularView<Eigen::StrictlyUpper>();
            projected = inv_binom * chain * unlabeled;
        }
        return strict_upper_pair_sum(projected, batch_a.contexts, batch_a.rewards) /
               (n * (n - 1.0) / 2.0);
    }
    Eigen::VectorXd mu_a = batch_a.contexts.transpose() * batch_a.rewards /
                           static_cast<double>(batch_a.rewards.size());
    Eigen::VectorXd mu_a2 = batch_a2.contexts.transpose() * batch_a2.rewards /
                            static_cast<double>(batch_a2.rewards.size());
    if (t == 0) return mu_a.dot(mu_a2);
    Eigen::VectorXd w = unlabeled * mu_a2;
    for (int step = 1; step < t; ++step)
        w = gram_up.triangularView<Eigen::StrictlyUpper>() * w;
    return inv_binom * mu_a.dot(unlabeled.transpose() * w);
}

std::vector<MogMoments> mog_moment_estimates(const std::vector<SampleBatch>& centered_batches,
                                             const Eigen::VectorXd& arm_biases,
                                             const ContextDistribution& mixture) {
    check_batches(centered_batches, 2);
    if (!mixture.is_normalized_mixture())
        throw InvalidArgument("mixture must be normalized: E[x] = 0 and E[x x^T] = I");
    const int num_arms = static_cast<int>(centered_batches.size());
    if (arm_biases.size() != num_arms) throw InvalidArgument("arm_biases length mismatch");
    if (mixture.dim() != centered_batches.front().contexts.cols())
        throw InvalidArgument("mixture dimension mismatch");
    const double n = static_cast<double>(centered_batches.front().rewards.size());
    const double pairs = n * (n - 1.0) / 2.0;

    std::vector<Eigen::VectorXd> z(centered_batches.size());
    for (int a = 0; a < num_arms; ++a)
        z[static_cast<std::size_t>(a)] = centered_batches[static_cast<std::size_t>(a)]
                                             .contexts.transpose() *
                                         centered_batches[static_cast<std::size_t>(a)].rewards;

    std::vector<MogMoments> out;
    out.reserve(mixture.components().size());
    for (const auto& component : mixture.components()) {
        MogMoments m;
        m.b_hat.resize(num_arms);
        m.h_hat.resize(num_arms, num_arms);
        for (int a = 0; a < num_arms; ++a) {
            m.b_hat[a] =
                z[static_cast<std::size_t>(a)].dot(component.mean) / n + arm_biases[a];
            const auto& batch = centered_batches[static_cast<std::size_t>(a)];
            Eigen::MatrixXd projected = batch.contexts * component.covariance;
            m.h_hat(a, a) =
                strict_upper_pair_sum(projected, batch.contexts, batch.rewards) / pairs;
            for (int a2 = a + 1; a2 < num_arms; ++a2) {
                double cross = z[static_cast<std::size_t>(a)].dot(
                                   component.covariance * z[static_cast<std::size_t>(a2)]) /
                               (n * n);
                m.h_hat(a, a2) = cross;
                m.h_hat(a2, a) = cross;
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace optreward
