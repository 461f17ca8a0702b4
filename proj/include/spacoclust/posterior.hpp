#pragma once

// Gene-level variance posteriors.  Conditional on labels and block
// parameters, each gene's variance factor on one column cluster has an
// inverse-gamma posterior IG(alpha_star, beta_star) by conjugacy; this module
// exposes its moments, equal-tailed credible intervals, and a per-block
// ranking of genes by posterior mean.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spacoclust/core.hpp"
#include "spacoclust/errors.hpp"
#include "spacoclust/likelihood.hpp"
#include "spacoclust/math/special.hpp"

namespace spacoclust {

struct SigmaPosterior {
    double alpha_star = 0.0;
    double beta_star = 0.0;
};

/// Posterior of one row's variance factor on one column cluster.
inline SigmaPosterior sigma_posterior(const Eigen::VectorXd& x_row, double mu, double tau, double xi,
                                      double alpha, double beta, const KernelEigenCache& cache) {
    const RowConjugateUpdate u = row_conjugate_update(x_row, mu, tau, xi, alpha, beta, cache);
    return {u.alpha_star, u.beta_star};
}

/// Mean of IG(alpha, beta); defined only for alpha > 1.
inline double ig_mean(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw Error(Errc::NonPositiveParameter, "ig_mean: alpha and beta must be positive");
    }
    if (!(alpha > 1.0)) {
        throw Error(Errc::UndefinedMean, "ig_mean: mean requires alpha > 1");
    }
    return beta / (alpha - 1.0);
}

/// Quantile of IG(alpha, beta): since X ~ IG iff beta / X ~ Gamma(alpha, 1),
/// the q-quantile is beta divided by the (1 - q)-quantile of Gamma(alpha, 1).
inline double ig_quantile(double alpha, double beta, double q) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw Error(Errc::NonPositiveParameter, "ig_quantile: alpha and beta must be positive");
    }
    if (!(q > 0.0 && q < 1.0)) {
        throw Error(Errc::InvalidLevel, "ig_quantile: q must lie in (0, 1)");
    }
    return beta / math::gamma_p_inverse(alpha, 1.0 - q);
}

/// Equal-tailed credible interval of IG(alpha, beta) at the given level.
inline std::pair<double, double> ig_credible_interval(double alpha, double beta, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw Error(Errc::InvalidLevel, "credible level must lie in (0, 1)");
    }
    const double lo = ig_quantile(alpha, beta, 0.5 * (1.0 - level));
    const double hi = ig_quantile(alpha, beta, 0.5 * (1.0 + level));
    return {lo, hi};
}

struct RankedGene {
    std::string gene_id;
    int row_index = -1; // 0-based dataset row
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Ranks the genes of row cluster k on column cluster r by posterior mean
/// variance (descending; ties broken by gene id).  k and r are 1-based.
inline std::vector<RankedGene> top_variable_genes(const ExpressionDataset& ds,
                                                  const CoClusterLabels& labels,
                                                  const ThetaGrid& theta, KernelKind kind,
                                                  const std::vector<Eigen::VectorXd>& phi, int k,
                                                  int r, int top_n, double level = 0.95) {
    labels.check(ds.n_rows(), ds.n_cols());
    if (k < 1 || k > labels.n_row_clusters || r < 1 || r > labels.n_col_clusters) {
        throw Error(Errc::ConfigInvalid, "block indices outside the clustering");
    }
    if (top_n < 1) {
        throw Error(Errc::ConfigInvalid, "top_n must be at least 1");
    }

    std::vector<int> gene_rows;
    for (std::size_t i = 0; i < labels.rows.size(); ++i) {
        if (labels.rows[i] == k) gene_rows.push_back(static_cast<int>(i));
    }
    if (gene_rows.empty()) {
        throw Error(Errc::EmptyBlock, "row cluster " + std::to_string(k) + " has no genes");
    }

    const std::vector<KernelEigenCache> caches = build_cluster_caches(ds, labels, kind, phi);
    const KernelEigenCache& cache = caches[static_cast<std::size_t>(r - 1)];
    const std::vector<int> members = column_cluster_members(labels.cols, r);
    const BlockParameters& b = theta.at(k - 1, r - 1);

    std::vector<RankedGene> ranked;
    ranked.reserve(gene_rows.size());
    Eigen::VectorXd segment(static_cast<Eigen::Index>(members.size()));
    for (int i : gene_rows) {
        for (std::size_t j = 0; j < members.size(); ++j) {
            segment[static_cast<Eigen::Index>(j)] = ds.values(i, members[j]);
        }
        const SigmaPosterior post =
            sigma_posterior(segment, b.mu, b.tau, b.xi, b.alpha, b.beta, cache);
        RankedGene g;
        g.gene_id = ds.row_ids[static_cast<std::size_t>(i)];
        g.row_index = i;
        g.mean = ig_mean(post.alpha_star, post.beta_star);
        const auto [lo, hi] = ig_credible_interval(post.alpha_star, post.beta_star, level);
        g.lo = lo;
        g.hi = hi;
        ranked.push_back(std::move(g));
    }

    std::sort(ranked.begin(), ranked.end(), [](const RankedGene& a, const RankedGene& b2) {
        if (a.mean != b2.mean) return a.mean > b2.mean;
        return a.gene_id < b2.gene_id;
    });
    if (static_cast<int>(ranked.size()) > top_n) {
        ranked.resize(static_cast<std::size_t>(top_n));
    }
    return ranked;
}

} // namespace spacoclust
