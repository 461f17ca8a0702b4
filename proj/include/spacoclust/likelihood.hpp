#pragma once

// Marginal row densities and the classification log-likelihood.
//
// A block models row i of cluster k restricted to column cluster r as
//   x = mu * 1 + sigma_i * eps,   eps ~ N(0, Delta),
//   Delta = tau * K_r + xi * I,   sigma_i^2 ~ InverseGamma(alpha, beta).
// Integrating sigma_i^2 out gives the closed form implemented by
// row_marginal_logdensity: with quad = (x - mu 1)' Delta^{-1} (x - mu 1),
// alpha_star = p_r / 2 + alpha and beta_star = quad / 2 + beta,
//   log f = -(p_r / 2) log(2 pi) - log|Delta| / 2
//           + lgamma(alpha_star) - lgamma(alpha)
//           + alpha log(beta) - alpha_star log(beta_star).
// All Delta algebra runs through the kernel eigendecomposition: with
// K = U diag(lambda) U', Delta^{-1} = U diag(1 / (tau lambda + xi)) U' and
// log|Delta| = sum log(tau lambda_j + xi).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spacoclust/core.hpp"
#include "spacoclust/kernels.hpp"
#include "spacoclust/math/special.hpp"

namespace spacoclust {

constexpr double log_two_pi = 1.83787706640934548356065947281123527;

struct DeltaSolve {
    double logdet = 0.0;
    Eigen::VectorXd solved;
    double quad = 0.0;
};

/// log|Delta|, Delta^{-1} v, and v' Delta^{-1} v for Delta = tau K + xi I,
/// computed through the cached eigendecomposition of K.
inline DeltaSolve delta_logdet_and_solve(const KernelEigenCache& cache, double tau, double xi,
                                         const Eigen::VectorXd& v) {
    if (!(tau >= 0.0) || !(xi >= 0.0)) {
        throw Error(Errc::NonPositiveParameter, "delta_logdet_and_solve: tau, xi must be >= 0");
    }
    if (v.size() != cache.order()) {
        throw Error(Errc::DimensionMismatch, "delta_logdet_and_solve: vector length " +
                                                 std::to_string(v.size()) + " vs cache order " +
                                                 std::to_string(cache.order()));
    }
    const Eigen::ArrayXd w = tau * cache.eigenvalues.array() + xi;
    if (!(w.minCoeff() > 0.0)) {
        throw Error(Errc::NotPositiveDefinite,
                    "delta_logdet_and_solve: tau K + xi I is singular for these parameters");
    }
    DeltaSolve out;
    out.logdet = w.log().sum();
    const Eigen::VectorXd y = cache.eigenvectors.transpose() * v;
    out.quad = (y.array().square() / w).sum();
    out.solved = cache.eigenvectors * (y.array() / w).matrix().eval();
    return out;
}

/// Conjugate update implied by one row on one column cluster.
struct RowConjugateUpdate {
    double alpha_star = 0.0;
    double beta_star = 0.0;
    double logdet = 0.0;
    double quad = 0.0;
};

inline RowConjugateUpdate row_conjugate_update(const Eigen::VectorXd& x_row, double mu, double tau,
                                               double xi, double alpha, double beta,
                                               const KernelEigenCache& cache) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw Error(Errc::NonPositiveParameter, "row density requires alpha > 0 and beta > 0");
    }
    if (x_row.size() != cache.order()) {
        throw Error(Errc::DimensionMismatch, "row length does not match kernel cache order");
    }
    const Eigen::ArrayXd w = tau * cache.eigenvalues.array() + xi;
    if (!(tau >= 0.0) || !(xi >= 0.0) || !(w.minCoeff() > 0.0)) {
        throw Error(Errc::NotPositiveDefinite, "tau K + xi I must be positive definite");
    }
    const Eigen::VectorXd centered = x_row.array() - mu;
    const Eigen::VectorXd y = cache.eigenvectors.transpose() * centered;
    RowConjugateUpdate u;
    u.logdet = w.log().sum();
    u.quad = (y.array().square() / w).sum();
    u.alpha_star = 0.5 * static_cast<double>(x_row.size()) + alpha;
    u.beta_star = 0.5 * u.quad + beta;
    return u;
}

/// Marginal log-density of one row segment with the gene-specific variance
/// integrated out.
inline double row_marginal_logdensity(const Eigen::VectorXd& x_row, double mu, double tau, double xi,
                                      double alpha, double beta, const KernelEigenCache& cache) {
    const RowConjugateUpdate u = row_conjugate_update(x_row, mu, tau, xi, alpha, beta, cache);
    const double p_r = static_cast<double>(x_row.size());
    return -0.5 * p_r * log_two_pi - 0.5 * u.logdet + math::log_gamma(u.alpha_star) -
           math::log_gamma(alpha) + alpha * std::log(beta) - u.alpha_star * std::log(u.beta_star);
}

/// Ascending column indices belonging to column cluster r (1-based label).
inline std::vector<int> column_cluster_members(const std::vector<int>& col_labels, int cluster_1based) {
    std::vector<int> members;
    for (std::size_t j = 0; j < col_labels.size(); ++j) {
        if (col_labels[j] == cluster_1based) members.push_back(static_cast<int>(j));
    }
    return members;
}

/// Builds one eigendecomposition cache per column cluster, stamped with the
/// membership hash so later likelihood calls can detect stale reuse.
inline std::vector<KernelEigenCache> build_cluster_caches(const ExpressionDataset& ds,
                                                          const CoClusterLabels& labels,
                                                          KernelKind kind,
                                                          const std::vector<Eigen::VectorXd>& phi) {
    labels.check(ds.n_rows(), ds.n_cols());
    if (static_cast<int>(phi.size()) != labels.n_col_clusters) {
        throw Error(Errc::DimensionMismatch, "phi must have one vector per column cluster");
    }
    std::vector<KernelEigenCache> caches;
    caches.reserve(phi.size());
    for (int r = 1; r <= labels.n_col_clusters; ++r) {
        const std::vector<int> members = column_cluster_members(labels.cols, r);
        std::vector<Coord> coords;
        coords.reserve(members.size());
        for (int j : members) coords.push_back(ds.coords[static_cast<std::size_t>(j)]);
        KernelParams params;
        params.kind = kind;
        params.values = phi[static_cast<std::size_t>(r - 1)];
        KernelEigenCache cache = kernel_eigen(kernel_matrix(params, coords));
        cache.phi_used = params;
        cache.col_cluster = r;
        cache.members_hash = column_cluster_hash(labels.cols, r);
        caches.push_back(std::move(cache));
    }
    return caches;
}

/// Classification log-likelihood: every row contributes the marginal density
/// of each of its column-cluster segments under its own row cluster's block.
/// Reference implementation; the fitter keeps an incremental equivalent.
inline double classification_loglik(const ExpressionDataset& ds, const CoClusterLabels& labels,
                                    const ThetaGrid& theta, const std::vector<Eigen::VectorXd>& phi,
                                    const std::vector<KernelEigenCache>& caches) {
    labels.check(ds.n_rows(), ds.n_cols());
    if (theta.K != labels.n_row_clusters || theta.R != labels.n_col_clusters) {
        throw Error(Errc::DimensionMismatch, "theta grid shape does not match label cluster counts");
    }
    if (static_cast<int>(caches.size()) != labels.n_col_clusters ||
        static_cast<int>(phi.size()) != labels.n_col_clusters) {
        throw Error(Errc::DimensionMismatch, "need one cache and one phi vector per column cluster");
    }

    double total = 0.0;
    for (int r = 1; r <= labels.n_col_clusters; ++r) {
        const KernelEigenCache& cache = caches[static_cast<std::size_t>(r - 1)];
        const std::uint64_t expected = column_cluster_hash(labels.cols, r);
        if (cache.members_hash != expected) {
            throw Error(Errc::StaleCache, "cache for column cluster " + std::to_string(r) +
                                              " was built from different labels");
        }
        const Eigen::VectorXd& phi_r = phi[static_cast<std::size_t>(r - 1)];
        if (cache.phi_used.values.size() != phi_r.size() ||
            (cache.phi_used.values - phi_r).cwiseAbs().maxCoeff() != 0.0) {
            throw Error(Errc::StaleCache, "cache for column cluster " + std::to_string(r) +
                                              " was built with different kernel parameters");
        }
        const std::vector<int> members = column_cluster_members(labels.cols, r);
        if (static_cast<Eigen::Index>(members.size()) != cache.order()) {
            throw Error(Errc::DimensionMismatch, "cache order does not match cluster size");
        }
        Eigen::VectorXd segment(static_cast<Eigen::Index>(members.size()));
        for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
            for (std::size_t j = 0; j < members.size(); ++j) {
                segment[static_cast<Eigen::Index>(j)] = ds.values(i, members[j]);
            }
            const int k = labels.rows[static_cast<std::size_t>(i)] - 1;
            const BlockParameters& b = theta.at(k, r - 1);
            total += row_marginal_logdensity(segment, b.mu, b.tau, b.xi, b.alpha, b.beta, cache);
        }
    }
    return total;
}

} // namespace spacoclust
