// Test-only oracles, independent of the library's implementation paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

// Gauss-Hermite nodes/weights via the Golub-Welsch tridiagonal eigenproblem.
struct GaussHermite {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

inline GaussHermite gauss_hermite(int m) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(m, m);
    for (int i = 1; i < m; ++i) {
        double off = std::sqrt(i / 2.0);
        jacobi(i, i - 1) = off;
        jacobi(i - 1, i) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    GaussHermite gh;
    gh.nodes = eig.eigenvalues();
    gh.weights.resize(m);
    const double total = std::sqrt(M_PI);
    for (int i = 0; i < m; ++i) {
        double w0 = eig.eigenvectors()(0, i);
        gh.weights[i] = total * w0 * w0;
    }
    return gh;
}

// E[max(Z1, Z2)] for independent standard normals. The inner expectation
// E_{Z1}[max(Z1, z)] = z Phi(z) + phi(z) is smooth, so Gauss-Hermite on the
// outer variable converges fast (the raw 2-D rule stalls on the max kink).
inline double expected_max_two_std_normals() {
    GaussHermite gh = gauss_hermite(64);
    auto phi = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
    auto cdf = [](double z) { return 0.5 * std::erfc(-z / M_SQRT2); };
    double total = 0.0;
    for (int i = 0; i < gh.nodes.size(); ++i) {
        double z = M_SQRT2 * gh.nodes[i];
        total += gh.weights[i] * (z * cdf(z) + phi(z));
    }
    return total / std::sqrt(M_PI);
}

// Minimal max-norm distance from a symmetric 2x2 target to the PSD cone,
// by brute force over the radius: a 2x2 [[a,c],[c,b]] within radius r of
// the target exists in the PSD cone iff the interval-extreme candidates
// a = t00+r, b = t11+r and the smallest-|c| choice satisfy a,b >= 0 and
// a b >= c^2. Dense radius grid, then bisection refinement.
inline double psd_maxnorm_distance_2x2(const Eigen::Matrix2d& target) {
    const double t00 = target(0, 0), t11 = target(1, 1), t01 = target(0, 1);
    auto feasible = [&](double r) {
        double a = t00 + r, b = t11 + r;
        if (a < 0.0 || b < 0.0) return false;
        double c = std::max(0.0, std::abs(t01) - r);
        return a * b >= c * c;
    };
    double span = 2.0 * std::max(1.0, target.cwiseAbs().maxCoeff());
    while (!feasible(span)) span *= 2.0;
    if (feasible(0.0)) return 0.0;
    double lo = 0.0, hi = span;
    const int grid = 10000;
    for (int g = 1; g <= grid; ++g) {
        double r = span * g / grid;
        if (feasible(r)) {
            hi = r;
            lo = span * (g - 1.0) / grid;
            break;
        }
    }
    for (int iter = 0; iter < 60; ++iter) {
        double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

// Naive double-loop identity-covariance moment estimates.
inline double naive_h_diag(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const int n = static_cast<int>(y.size());
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) total += y[i] * y[j] * x.row(i).dot(x.row(j));
    return total / (n * (n - 1) / 2.0);
}

inline double naive_h_cross(const Eigen::MatrixXd& xa, const Eigen::VectorXd& ya,
                            const Eigen::MatrixXd& xb, const Eigen::VectorXd& yb) {
    const int n = static_cast<int>(ya.size());
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < static_cast<int>(yb.size()); ++j)
            total += ya[i] * yb[j] * xa.row(i).dot(xb.row(j));
    return total / (static_cast<double>(n) * static_cast<double>(yb.size()));
}

// Ordered Gram-chain quadratic form by explicit loops (t <= 2, small s).
inline Eigen::MatrixXd naive_chain_operator(const Eigen::MatrixXd& s_pool, int t) {
    const Eigen::Index d = s_pool.cols();
    const Eigen::Index s = s_pool.rows();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(d, d);
    if (t == 0) return Eigen::MatrixXd::Identity(d, d);
    if (t == 1) {
        for (Eigen::Index i = 0; i < s; ++i)
            q += s_pool.row(i).transpose() * s_pool.row(i);
    } else if (t == 2) {
        for (Eigen::Index i = 0; i < s; ++i)
            for (Eigen::Index j = i + 1; j < s; ++j)
                q += s_pool.row(i).transpose() * s_pool.row(i).dot(s_pool.row(j)) * s_pool.row(j);
    }
    double binom = t == 1 ? static_cast<double>(s) : s * (s - 1) / 2.0;
    return q / binom;
}

// Least-squares slope of log(y) on log(x).
inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace oracles
