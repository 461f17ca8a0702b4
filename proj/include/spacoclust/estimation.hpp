#pragma once

// Classification-stochastic EM fitter.
//
// Each iteration runs three passes over the current state (Z, W, Theta, phi):
//   CE: every row moves to the row cluster maximizing its summed block
//       densities (ties to the smallest index), which cannot decrease the
//       classification log-likelihood;
//   SE: a fixed number of Metropolis-Hastings proposals on the column
//       labels, mixing single-target batch moves (M1) with independent
//       per-column moves (M2); acceptance uses exact transition ratios, so
//       the chain targets p(W | Z, X, Theta);
//   M:  per column cluster, a bound-constrained quasi-Newton refit of the
//       kernel parameters and all non-empty block parameters, with xi
//       eliminated through tau + xi = c_delta.  The previous parameters are
//       kept whenever the solver fails to improve, so the M pass is monotone
//       as well.
// The fitter runs several starts and returns the state of the best iterate
// across all of them.
//
// Row labels here are 0-based internally; the public surface uses the
// 1-based convention of CoClusterLabels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <future>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spacoclust/core.hpp"
#include "spacoclust/errors.hpp"
#include "spacoclust/icl.hpp"
#include "spacoclust/kernels.hpp"
#include "spacoclust/likelihood.hpp"
#include "spacoclust/math/rng.hpp"
#include "spacoclust/math/special.hpp"
#include "spacoclust/optim/lbfgsb.hpp"

namespace spacoclust {

struct FitConfig {
    int max_iterations = 5000;
    int se_repeats_per_iteration = 100;
    int m_max = 5;
    int n_starts = 5;
    std::uint64_t seed = 1;
    double move_m1_probability = 0.5;
    double optimizer_tolerance = 1e-6;
    double parameter_floor = 1e-4;
    int optimizer_max_iterations = 60;
    int threads = 0; // 0: use SPACOCLUST_THREADS or the hardware count

    void check() const {
        if (max_iterations < 1 || se_repeats_per_iteration < 0 || m_max < 1 || n_starts < 1) {
            throw Error(Errc::ConfigInvalid,
                        "fit config requires positive iteration, start, and move-size budgets");
        }
        if (!(move_m1_probability >= 0.0 && move_m1_probability <= 1.0)) {
            throw Error(Errc::ConfigInvalid, "move_m1_probability must lie in [0, 1]");
        }
        if (!(optimizer_tolerance > 0.0) || !(parameter_floor > 0.0)) {
            throw Error(Errc::NonPositiveParameter,
                        "optimizer_tolerance and parameter_floor must be positive");
        }
        if (optimizer_max_iterations < 1) {
            throw Error(Errc::ConfigInvalid, "optimizer_max_iterations must be positive");
        }
    }
};

enum class MoveKind { M1, M2 };

struct ProposalOutcome {
    std::vector<int> candidate; // 1-based column labels
    double log_transition_ratio = 0.0;
    MoveKind kind = MoveKind::M1;
    bool feasible = false;
};

struct StartDiagnostics {
    int start_index = 0;
    std::uint64_t stream_seed = 0;
    double best_loglik = -std::numeric_limits<double>::infinity();
    int best_iteration = 0;
    std::vector<double> trace;
    long se_accepted = 0;
    long se_rejected = 0;
    long se_infeasible = 0;
    long monotonicity_violations = 0;
};

struct FitResult {
    CoClusterLabels labels;
    ThetaGrid theta;
    std::vector<Eigen::VectorXd> phi;
    double best_loglik = -std::numeric_limits<double>::infinity();
    int best_iteration = 0;
    int best_start = 0;
    std::vector<double> loglik_trace; // winning start
    double icl = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
    int n_starts = 0;
    std::vector<StartDiagnostics> starts;
    long monotonicity_violations = 0;
};

namespace detail {

// ---- proposals on 0-based labels ----

struct RawProposal {
    std::vector<int> candidate; // 0-based
    double log_transition_ratio = 0.0;
    bool feasible = false;
    std::vector<int> b_out; // per cluster: columns leaving
    std::vector<int> b_in;  // per cluster: columns arriving
};

inline std::vector<int> cluster_sizes0(const std::vector<int>& labels, int R) {
    std::vector<int> sizes(static_cast<std::size_t>(R), 0);
    for (int v : labels) ++sizes[static_cast<std::size_t>(v)];
    return sizes;
}

// M1: pick an ordered cluster pair (g1, g2), then a uniform size-m subset of
// g1's columns; all m move to g2.  The reverse move must return exactly that
// subset, which yields the factorial transition ratio below.
inline RawProposal propose_m1_raw(const std::vector<int>& labels, int R, int m, RandomStream& rng) {
    RawProposal out;
    out.candidate = labels;
    out.b_out.assign(static_cast<std::size_t>(R), 0);
    out.b_in.assign(static_cast<std::size_t>(R), 0);

    const int g1 = rng.uniform_int(R);
    int g2 = rng.uniform_int(R - 1);
    if (g2 >= g1) ++g2;

    const std::vector<int> sizes = cluster_sizes0(labels, R);
    const int p1 = sizes[static_cast<std::size_t>(g1)];
    const int p2 = sizes[static_cast<std::size_t>(g2)];
    if (p1 <= m) {
        return out; // would empty g1
    }

    std::vector<int> members;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] == g1) members.push_back(static_cast<int>(j));
    }
    for (int pos : rng.sample_without_replacement(p1, m)) {
        out.candidate[static_cast<std::size_t>(members[static_cast<std::size_t>(pos)])] = g2;
    }
    out.b_out[static_cast<std::size_t>(g1)] = m;
    out.b_in[static_cast<std::size_t>(g2)] = m;
    out.log_transition_ratio = math::log_factorial(p1) - math::log_factorial(p1 - m) +
                               math::log_factorial(p2) - math::log_factorial(p2 + m);
    out.feasible = true;
    return out;
}

// M2: draw m independent ordered cluster pairs, then for each source cluster
// an ordered selection (without replacement, relative to the current labels)
// of the columns that leave it.  The exact forward/reverse path-probability
// ratio reduces to a product of factorial terms over the clusters.
inline RawProposal propose_m2_raw(const std::vector<int>& labels, int R, int m, RandomStream& rng) {
    RawProposal out;
    out.candidate = labels;
    out.b_out.assign(static_cast<std::size_t>(R), 0);
    out.b_in.assign(static_cast<std::size_t>(R), 0);

    std::vector<int> from(static_cast<std::size_t>(m));
    std::vector<int> to(static_cast<std::size_t>(m));
    for (int h = 0; h < m; ++h) {
        const int g1 = rng.uniform_int(R);
        int g2 = rng.uniform_int(R - 1);
        if (g2 >= g1) ++g2;
        from[static_cast<std::size_t>(h)] = g1;
        to[static_cast<std::size_t>(h)] = g2;
        ++out.b_out[static_cast<std::size_t>(g1)];
        ++out.b_in[static_cast<std::size_t>(g2)];
    }

    const std::vector<int> sizes = cluster_sizes0(labels, R);
    for (int r = 0; r < R; ++r) {
        const int pr = sizes[static_cast<std::size_t>(r)];
        const int b1 = out.b_out[static_cast<std::size_t>(r)];
        const int b2 = out.b_in[static_cast<std::size_t>(r)];
        if (b1 > pr || pr - b1 + b2 < 1) {
            out.b_out.assign(static_cast<std::size_t>(R), 0);
            out.b_in.assign(static_cast<std::size_t>(R), 0);
            return out; // infeasible draw
        }
    }

    double log_ratio = 0.0;
    for (int r = 0; r < R; ++r) {
        const int pr = sizes[static_cast<std::size_t>(r)];
        const int b1 = out.b_out[static_cast<std::size_t>(r)];
        const int b2 = out.b_in[static_cast<std::size_t>(r)];
        if (b1 == 0 && b2 == 0) continue;
        log_ratio += math::log_factorial(pr) - math::log_factorial(pr - b1 + b2);
    }

    // Selections are simultaneous with respect to the current labels; the
    // h-th draw from cluster r is matched to the h-th pair naming r, in
    // draw order.
    for (int r = 0; r < R; ++r) {
        const int b1 = out.b_out[static_cast<std::size_t>(r)];
        if (b1 == 0) continue;
        std::vector<int> members;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] == r) members.push_back(static_cast<int>(j));
        }
        const std::vector<int> picks =
            rng.sample_without_replacement(static_cast<int>(members.size()), b1);
        int slot = 0;
        for (int h = 0; h < m; ++h) {
            if (from[static_cast<std::size_t>(h)] != r) continue;
            const int col = members[static_cast<std::size_t>(picks[static_cast<std::size_t>(slot)])];
            out.candidate[static_cast<std::size_t>(col)] = to[static_cast<std::size_t>(h)];
            ++slot;
        }
    }

    out.log_transition_ratio = log_ratio;
    out.feasible = true;
    return out;
}

} // namespace detail

/// Batch move proposal (M1) on 1-based column labels.
inline ProposalOutcome propose_m1(const std::vector<int>& col_labels, int n_col_clusters, int m,
                                  RandomStream& rng) {
    if (n_col_clusters < 2) {
        throw Error(Errc::SingleColumnCluster, "label moves need at least two column clusters");
    }
    if (m < 1) throw Error(Errc::ConfigInvalid, "move size must be at least 1");
    std::vector<int> zero_based(col_labels.size());
    for (std::size_t j = 0; j < col_labels.size(); ++j) zero_based[j] = col_labels[j] - 1;
    detail::RawProposal raw = detail::propose_m1_raw(zero_based, n_col_clusters, m, rng);
    ProposalOutcome out;
    out.kind = MoveKind::M1;
    out.feasible = raw.feasible;
    out.log_transition_ratio = raw.log_transition_ratio;
    out.candidate.resize(raw.candidate.size());
    for (std::size_t j = 0; j < raw.candidate.size(); ++j) out.candidate[j] = raw.candidate[j] + 1;
    return out;
}

/// Scattered move proposal (M2) on 1-based column labels.
inline ProposalOutcome propose_m2(const std::vector<int>& col_labels, int n_col_clusters, int m,
                                  RandomStream& rng) {
    if (n_col_clusters < 2) {
        throw Error(Errc::SingleColumnCluster, "label moves need at least two column clusters");
    }
    if (m < 1) throw Error(Errc::ConfigInvalid, "move size must be at least 1");
    std::vector<int> zero_based(col_labels.size());
    for (std::size_t j = 0; j < col_labels.size(); ++j) zero_based[j] = col_labels[j] - 1;
    detail::RawProposal raw = detail::propose_m2_raw(zero_based, n_col_clusters, m, rng);
    ProposalOutcome out;
    out.kind = MoveKind::M2;
    out.feasible = raw.feasible;
    out.log_transition_ratio = raw.log_transition_ratio;
    out.candidate.resize(raw.candidate.size());
    for (std::size_t j = 0; j < raw.candidate.size(); ++j) out.candidate[j] = raw.candidate[j] + 1;
    return out;
}

namespace detail {

// Violations smaller than this relative slack are numerical noise from
// reassociated sums, not algorithmic regressions.
inline bool decreased(double before, double after) {
    return after < before - 1e-9 * (1.0 + std::fabs(before));
}

struct ClusterCache {
    std::vector<int> members; // ascending column indices
    KernelEigenCache eig;
    Eigen::MatrixXd proj;      // n x p_r: X_r U
    Eigen::VectorXd ones_proj; // U' 1
};

class Engine {
public:
    Engine(const ExpressionDataset& ds, const ModelSpec& spec, const FitConfig& cfg)
        : ds_(ds), spec_(spec), cfg_(cfg), n_(ds.n_rows()), p_(ds.n_cols()) {}

    std::vector<int> z;                // 0-based row labels
    std::vector<int> w;                // 0-based column labels
    ThetaGrid theta;
    std::vector<Eigen::VectorXd> phi;  // per column cluster

    void set_state(std::vector<int> z0, std::vector<int> w0, ThetaGrid theta0,
                   std::vector<Eigen::VectorXd> phi0) {
        z = std::move(z0);
        w = std::move(w0);
        theta = std::move(theta0);
        phi = std::move(phi0);
        caches_.assign(static_cast<std::size_t>(spec_.R), {});
        terms_.assign(static_cast<std::size_t>(spec_.R), {});
        totals_.assign(static_cast<std::size_t>(spec_.R), 0.0);
        for (int r = 0; r < spec_.R; ++r) {
            rebuild_cluster(r);
        }
    }

    double loglik() const { return std::accumulate(totals_.begin(), totals_.end(), 0.0); }

    /// Row reassignment; never decreases the log-likelihood.
    int ce_pass() {
        Eigen::MatrixXd score = Eigen::MatrixXd::Zero(n_, spec_.K);
        for (const auto& t : terms_) score += t;
        int changed = 0;
        for (Eigen::Index i = 0; i < n_; ++i) {
            int best = 0;
            for (int k = 1; k < spec_.K; ++k) {
                if (score(i, k) > score(i, best)) best = k;
            }
            if (best != z[static_cast<std::size_t>(i)]) {
                z[static_cast<std::size_t>(i)] = best;
                ++changed;
            }
        }
        refresh_totals();
        return changed;
    }

    /// One batch of Metropolis-Hastings proposals on the column labels.
    void se_pass(RandomStream& rng, StartDiagnostics& diag) {
        for (int rep = 0; rep < cfg_.se_repeats_per_iteration; ++rep) {
            se_single(rng, diag);
        }
    }

    /// One proposal; returns true if accepted.
    bool se_single(RandomStream& rng, StartDiagnostics& diag) {
        const int m = 1 + rng.uniform_int(cfg_.m_max);
        const bool use_m1 = rng.uniform() < cfg_.move_m1_probability;
        const RawProposal prop = use_m1 ? propose_m1_raw(w, spec_.R, m, rng)
                                        : propose_m2_raw(w, spec_.R, m, rng);
        if (!prop.feasible) {
            ++diag.se_infeasible;
            ++diag.se_rejected;
            return false;
        }

        std::vector<int> affected;
        for (int r = 0; r < spec_.R; ++r) {
            if (prop.b_out[static_cast<std::size_t>(r)] > 0 ||
                prop.b_in[static_cast<std::size_t>(r)] > 0) {
                affected.push_back(r);
            }
        }

        double log_accept = prop.log_transition_ratio;
        std::vector<ClusterCache> cand_caches;
        std::vector<Eigen::MatrixXd> cand_terms;
        std::vector<double> cand_totals;
        for (int r : affected) {
            ClusterCache cache = build_cache(r, prop.candidate);
            Eigen::MatrixXd t = compute_terms(cache, r);
            double total = 0.0;
            for (Eigen::Index i = 0; i < n_; ++i) total += t(i, z[static_cast<std::size_t>(i)]);
            log_accept += total - totals_[static_cast<std::size_t>(r)];
            cand_caches.push_back(std::move(cache));
            cand_terms.push_back(std::move(t));
            cand_totals.push_back(total);
        }

        const double u = rng.uniform();
        if (std::log(u) < log_accept) {
            w = prop.candidate;
            for (std::size_t a = 0; a < affected.size(); ++a) {
                const std::size_t r = static_cast<std::size_t>(affected[a]);
                caches_[r] = std::move(cand_caches[a]);
                terms_[r] = std::move(cand_terms[a]);
                totals_[r] = cand_totals[a];
            }
            ++diag.se_accepted;
            return true;
        }
        ++diag.se_rejected;
        return false;
    }

    /// Per-cluster parameter refit; never decreases the log-likelihood.
    void m_pass() {
        for (int r = 0; r < spec_.R; ++r) {
            m_step_cluster(r);
        }
    }

    const std::vector<double>& totals() const { return totals_; }

private:
    const ExpressionDataset& ds_;
    const ModelSpec& spec_;
    const FitConfig& cfg_;
    Eigen::Index n_;
    Eigen::Index p_;

    std::vector<ClusterCache> caches_;
    std::vector<Eigen::MatrixXd> terms_; // per r: n x K
    std::vector<double> totals_;         // per r: sum_i terms[r](i, z_i)

    ClusterCache build_cache(int r, const std::vector<int>& col_labels) const {
        ClusterCache cache;
        for (std::size_t j = 0; j < col_labels.size(); ++j) {
            if (col_labels[j] == r) cache.members.push_back(static_cast<int>(j));
        }
        std::vector<Coord> coords;
        coords.reserve(cache.members.size());
        for (int j : cache.members) coords.push_back(ds_.coords[static_cast<std::size_t>(j)]);
        KernelParams params;
        params.kind = spec_.kernel;
        params.values = phi[static_cast<std::size_t>(r)];
        cache.eig = kernel_eigen(kernel_matrix(params, coords));
        Eigen::MatrixXd xr(n_, static_cast<Eigen::Index>(cache.members.size()));
        for (std::size_t j = 0; j < cache.members.size(); ++j) {
            xr.col(static_cast<Eigen::Index>(j)) = ds_.values.col(cache.members[j]);
        }
        cache.proj = xr * cache.eig.eigenvectors;
        cache.ones_proj = cache.eig.eigenvectors.colwise().sum().transpose();
        return cache;
    }

    /// n x K matrix of per-row block log-densities for one column cluster.
    Eigen::MatrixXd compute_terms(const ClusterCache& cache, int r) const {
        const Eigen::Index pr = static_cast<Eigen::Index>(cache.members.size());
        const double half_p = 0.5 * static_cast<double>(pr);
        Eigen::MatrixXd t(n_, spec_.K);
        for (int k = 0; k < spec_.K; ++k) {
            const BlockParameters& b = theta.at(k, r);
            const Eigen::ArrayXd wts = b.tau * cache.eig.eigenvalues.array() + b.xi;
            const double alpha_star = half_p + b.alpha;
            const double constant = -half_p * log_two_pi - 0.5 * wts.log().sum() +
                                    math::log_gamma(alpha_star) - math::log_gamma(b.alpha) +
                                    b.alpha * std::log(b.beta);
            const Eigen::VectorXd winv = wts.inverse().matrix();
            Eigen::MatrixXd centered = cache.proj;
            centered.rowwise() -= (b.mu * cache.ones_proj).transpose();
            const Eigen::VectorXd quad = centered.array().square().matrix() * winv;
            t.col(k) = constant - alpha_star * (0.5 * quad.array() + b.beta).log();
        }
        return t;
    }

    void refresh_totals() {
        for (int r = 0; r < spec_.R; ++r) {
            double total = 0.0;
            const Eigen::MatrixXd& t = terms_[static_cast<std::size_t>(r)];
            for (Eigen::Index i = 0; i < n_; ++i) total += t(i, z[static_cast<std::size_t>(i)]);
            totals_[static_cast<std::size_t>(r)] = total;
        }
    }

    void rebuild_cluster(int r) {
        caches_[static_cast<std::size_t>(r)] = build_cache(r, w);
        terms_[static_cast<std::size_t>(r)] = compute_terms(caches_[static_cast<std::size_t>(r)], r);
        double total = 0.0;
        const Eigen::MatrixXd& t = terms_[static_cast<std::size_t>(r)];
        for (Eigen::Index i = 0; i < n_; ++i) total += t(i, z[static_cast<std::size_t>(i)]);
        totals_[static_cast<std::size_t>(r)] = total;
    }

    // Scratch cache for the M-step objective: kernel decompositions and
    // projections keyed by the exact phi vector, so finite-difference
    // probes and line-search points reuse decompositions.
    struct PhiScratch {
        Eigen::VectorXd phi;
        Eigen::VectorXd eigenvalues;
        Eigen::MatrixXd proj;
        Eigen::VectorXd ones_proj;
        std::vector<Eigen::MatrixXd> proj_by_k; // rows gathered per cluster
    };

    void m_step_cluster(int r) {
        const int d_phi = kernel_param_dim(spec_.kernel);
        std::vector<int> nonempty;
        std::vector<std::vector<int>> rows_by_k(static_cast<std::size_t>(spec_.K));
        for (Eigen::Index i = 0; i < n_; ++i) {
            rows_by_k[static_cast<std::size_t>(z[static_cast<std::size_t>(i)])].push_back(
                static_cast<int>(i));
        }
        for (int k = 0; k < spec_.K; ++k) {
            if (!rows_by_k[static_cast<std::size_t>(k)].empty()) nonempty.push_back(k);
        }
        if (nonempty.empty()) return;

        const int dim = d_phi + 4 * static_cast<int>(nonempty.size());
        const double floor = cfg_.parameter_floor;
        const double c_delta = spec_.c_delta;
        const double inf = std::numeric_limits<double>::infinity();

        Eigen::VectorXd x0(dim), lower(dim), upper(dim);
        for (int j = 0; j < d_phi; ++j) {
            x0[j] = phi[static_cast<std::size_t>(r)][j];
            lower[j] = floor;
            upper[j] = inf;
        }
        for (std::size_t a = 0; a < nonempty.size(); ++a) {
            const BlockParameters& b = theta.at(nonempty[a], r);
            const int off = d_phi + 4 * static_cast<int>(a);
            x0[off + 0] = b.mu;
            x0[off + 1] = std::min(std::max(b.tau, floor), c_delta - floor);
            x0[off + 2] = b.alpha;
            x0[off + 3] = b.beta;
            lower[off + 0] = -inf;
            upper[off + 0] = inf;
            lower[off + 1] = floor;
            upper[off + 1] = c_delta - floor;
            lower[off + 2] = floor;
            upper[off + 2] = inf;
            lower[off + 3] = floor;
            upper[off + 3] = inf;
        }

        const std::vector<int>& members = caches_[static_cast<std::size_t>(r)].members;
        const Eigen::Index pr = static_cast<Eigen::Index>(members.size());
        const double half_p = 0.5 * static_cast<double>(pr);

        std::deque<PhiScratch> scratch;
        auto get_scratch = [&](const Eigen::VectorXd& phi_cand) -> const PhiScratch& {
            for (const auto& s : scratch) {
                if (s.phi.size() == phi_cand.size() && (s.phi - phi_cand).cwiseAbs().maxCoeff() == 0.0) {
                    return s;
                }
            }
            PhiScratch s;
            s.phi = phi_cand;
            if ((phi_cand - phi[static_cast<std::size_t>(r)]).cwiseAbs().maxCoeff() == 0.0) {
                // Current parameters: reuse the chain cache verbatim so the
                // baseline objective matches the running totals exactly.
                const ClusterCache& cache = caches_[static_cast<std::size_t>(r)];
                s.eigenvalues = cache.eig.eigenvalues;
                s.proj = cache.proj;
                s.ones_proj = cache.ones_proj;
            } else {
                std::vector<Coord> coords;
                coords.reserve(members.size());
                for (int j : members) coords.push_back(ds_.coords[static_cast<std::size_t>(j)]);
                KernelParams params;
                params.kind = spec_.kernel;
                params.values = phi_cand;
                const KernelEigenCache eig = kernel_eigen(kernel_matrix(params, coords));
                Eigen::MatrixXd xr(n_, pr);
                for (std::size_t j = 0; j < members.size(); ++j) {
                    xr.col(static_cast<Eigen::Index>(j)) = ds_.values.col(members[j]);
                }
                s.eigenvalues = eig.eigenvalues;
                s.proj = xr * eig.eigenvectors;
                s.ones_proj = eig.eigenvectors.colwise().sum().transpose();
            }
            s.proj_by_k.resize(nonempty.size());
            for (std::size_t a = 0; a < nonempty.size(); ++a) {
                const auto& rows = rows_by_k[static_cast<std::size_t>(nonempty[a])];
                Eigen::MatrixXd gathered(static_cast<Eigen::Index>(rows.size()), pr);
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    gathered.row(static_cast<Eigen::Index>(i)) = s.proj.row(rows[i]);
                }
                s.proj_by_k[a] = std::move(gathered);
            }
            if (scratch.size() >= 8) scratch.pop_front();
            scratch.push_back(std::move(s));
            return scratch.back();
        };

        auto objective = [&](const Eigen::VectorXd& xv) -> double {
            const Eigen::VectorXd phi_cand = xv.head(d_phi);
            const PhiScratch& s = get_scratch(phi_cand);
            double total = 0.0;
            for (std::size_t a = 0; a < nonempty.size(); ++a) {
                const int off = d_phi + 4 * static_cast<int>(a);
                const double mu = xv[off + 0];
                const double tau = xv[off + 1];
                const double xi = c_delta - tau;
                const double alpha = xv[off + 2];
                const double beta = xv[off + 3];
                const Eigen::ArrayXd wts = tau * s.eigenvalues.array() + xi;
                const double alpha_star = half_p + alpha;
                const double constant = -half_p * log_two_pi - 0.5 * wts.log().sum() +
                                        math::log_gamma(alpha_star) - math::log_gamma(alpha) +
                                        alpha * std::log(beta);
                const Eigen::VectorXd winv = wts.inverse().matrix();
                Eigen::MatrixXd centered = s.proj_by_k[a];
                centered.rowwise() -= (mu * s.ones_proj).transpose();
                const Eigen::VectorXd quad = centered.array().square().matrix() * winv;
                total += static_cast<double>(quad.size()) * constant -
                         alpha_star * (0.5 * quad.array() + beta).log().sum();
            }
            return -total;
        };

        const double baseline = objective(x0);
        if (!std::isfinite(baseline)) {
            throw Error(Errc::OptimizerFailure, "objective is not finite at the current parameters");
        }

        optim::LbfgsbOptions options;
        options.pg_tolerance = cfg_.optimizer_tolerance;
        options.max_iterations = cfg_.optimizer_max_iterations;
        optim::LbfgsbSolver solver(options);
        const auto grad = optim::central_difference_gradient(objective, lower, upper, 1e-6);
        optim::LbfgsbResult result;
        try {
            result = solver.minimize(objective, grad, x0, lower, upper);
        } catch (const Error&) {
            result.f = std::numeric_limits<double>::infinity();
        }

        const Eigen::VectorXd& accepted = (std::isfinite(result.f) && result.f <= baseline)
                                              ? result.x
                                              : x0;
        bool phi_changed = false;
        for (int j = 0; j < d_phi; ++j) {
            if (phi[static_cast<std::size_t>(r)][j] != accepted[j]) phi_changed = true;
            phi[static_cast<std::size_t>(r)][j] = accepted[j];
        }
        for (std::size_t a = 0; a < nonempty.size(); ++a) {
            BlockParameters& b = theta.at(nonempty[a], r);
            const int off = d_phi + 4 * static_cast<int>(a);
            b.mu = accepted[off + 0];
            b.tau = accepted[off + 1];
            b.xi = c_delta - b.tau;
            b.alpha = accepted[off + 2];
            b.beta = accepted[off + 3];
        }
        if (phi_changed) {
            rebuild_cluster(r);
        } else {
            terms_[static_cast<std::size_t>(r)] = compute_terms(caches_[static_cast<std::size_t>(r)], r);
            double total = 0.0;
            const Eigen::MatrixXd& t = terms_[static_cast<std::size_t>(r)];
            for (Eigen::Index i = 0; i < n_; ++i) total += t(i, z[static_cast<std::size_t>(i)]);
            totals_[static_cast<std::size_t>(r)] = total;
        }
    }
};

// ---- initialization helpers ----

inline std::vector<int> kmeans_once(const Eigen::MatrixXd& points, int n_clusters,
                                    RandomStream& rng, int max_sweeps, double& inertia) {
    const Eigen::Index q = points.rows();
    // k-means++ seeding.
    std::vector<Eigen::Index> center_idx;
    center_idx.push_back(rng.uniform_int(static_cast<int>(q)));
    Eigen::VectorXd dist2 = (points.rowwise() - points.row(center_idx[0])).rowwise().squaredNorm();
    while (static_cast<int>(center_idx.size()) < n_clusters) {
        const double total = dist2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < q; ++i) {
                acc += dist2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_int(static_cast<int>(q));
        }
        center_idx.push_back(pick);
        dist2 = dist2.cwiseMin((points.rowwise() - points.row(pick)).rowwise().squaredNorm());
    }

    Eigen::MatrixXd centers(n_clusters, points.cols());
    for (int c = 0; c < n_clusters; ++c) centers.row(c) = points.row(center_idx[static_cast<std::size_t>(c)]);

    std::vector<int> labels(static_cast<std::size_t>(q), 0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool changed = false;
        for (Eigen::Index i = 0; i < q; ++i) {
            int best = 0;
            double best_d = (points.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < n_clusters; ++c) {
                const double d = (points.row(i) - centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (labels[static_cast<std::size_t>(i)] != best) {
                labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        // Recompute centers; park empty clusters on the point farthest from
        // its current center.
        std::vector<int> count(static_cast<std::size_t>(n_clusters), 0);
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_clusters, points.cols());
        for (Eigen::Index i = 0; i < q; ++i) {
            ++count[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
            sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
        }
        for (int c = 0; c < n_clusters; ++c) {
            if (count[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) = sums.row(c) / static_cast<double>(count[static_cast<std::size_t>(c)]);
            } else {
                Eigen::Index far = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < q; ++i) {
                    const double d = (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)]))
                                         .squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centers.row(c) = points.row(far);
                labels[static_cast<std::size_t>(far)] = c;
                changed = true;
            }
        }
        if (!changed) break;
    }
    inertia = 0.0;
    for (Eigen::Index i = 0; i < q; ++i) {
        inertia += (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return labels;
}

/// Restarted k-means++ with Lloyd sweeps; returns the labeling with the
/// smallest within-cluster sum of squares.
inline std::vector<int> kmeans_labels(const Eigen::MatrixXd& points, int n_clusters,
                                      RandomStream& rng, int max_sweeps = 50, int restarts = 8) {
    if (n_clusters < 1 || points.rows() < n_clusters) {
        throw Error(Errc::ConfigInvalid, "k-means needs at least as many points as clusters");
    }
    std::vector<int> best;
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int t = 0; t < restarts; ++t) {
        double inertia = 0.0;
        std::vector<int> labels = kmeans_once(points, n_clusters, rng, max_sweeps, inertia);
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best = std::move(labels);
        }
    }
    return best;
}

inline void fill_empty_column_clusters(std::vector<int>& labels, int R) {
    for (;;) {
        std::vector<int> count(static_cast<std::size_t>(R), 0);
        for (int v : labels) ++count[static_cast<std::size_t>(v)];
        int empty = -1;
        for (int r = 0; r < R; ++r) {
            if (count[static_cast<std::size_t>(r)] == 0) {
                empty = r;
                break;
            }
        }
        if (empty < 0) return;
        int donor = 0;
        for (int r = 1; r < R; ++r) {
            if (count[static_cast<std::size_t>(r)] > count[static_cast<std::size_t>(donor)]) donor = r;
        }
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] == donor) {
                labels[j] = empty;
                break;
            }
        }
    }
}

inline void perturb_labels(std::vector<int>& labels, int n_clusters, RandomStream& rng) {
    const int count = static_cast<int>(
        std::ceil(0.2 * static_cast<double>(labels.size())));
    const std::vector<int> idx =
        rng.sample_without_replacement(static_cast<int>(labels.size()), count);
    for (int i : idx) {
        labels[static_cast<std::size_t>(i)] = rng.uniform_int(n_clusters);
    }
}

inline ThetaGrid initial_theta(const ExpressionDataset& ds, const std::vector<int>& z,
                               const std::vector<int>& w, const ModelSpec& spec,
                               double parameter_floor) {
    ThetaGrid theta(spec.K, spec.R);
    const double half_c = 0.5 * spec.c_delta;
    for (int r = 0; r < spec.R; ++r) {
        std::vector<int> members;
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (w[j] == r) members.push_back(static_cast<int>(j));
        }
        for (int k = 0; k < spec.K; ++k) {
            double sum = 0.0;
            double sumsq = 0.0;
            long cnt = 0;
            for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
                if (z[static_cast<std::size_t>(i)] != k) continue;
                for (int j : members) {
                    const double v = ds.values(i, j);
                    sum += v;
                    sumsq += v * v;
                    ++cnt;
                }
            }
            if (cnt == 0) {
                // Empty block: fall back to the column cluster as a whole.
                for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
                    for (int j : members) {
                        const double v = ds.values(i, j);
                        sum += v;
                        sumsq += v * v;
                        ++cnt;
                    }
                }
            }
            const double mean = sum / static_cast<double>(cnt);
            const double var =
                cnt > 1 ? std::max(0.0, (sumsq - sum * mean) / static_cast<double>(cnt - 1)) : 1.0;
            BlockParameters& b = theta.at(k, r);
            b.mu = mean;
            b.tau = half_c;
            b.xi = spec.c_delta - b.tau;
            b.alpha = 3.0;
            b.beta = std::max(parameter_floor, 2.0 * var / spec.c_delta);
        }
    }
    return theta;
}

inline double median_pairwise_distance(const std::vector<Coord>& coords) {
    // Deterministic subsample keeps this O(1) in memory for large maps.
    std::vector<std::size_t> idx;
    const std::size_t stride = coords.size() > 400 ? coords.size() / 400 + 1 : 1;
    for (std::size_t j = 0; j < coords.size(); j += stride) idx.push_back(j);
    std::vector<double> dists;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            dists.push_back(coord_distance(coords[idx[a]], coords[idx[b]]));
        }
    }
    if (dists.empty()) return 1.0;
    std::nth_element(dists.begin(), dists.begin() + static_cast<long>(dists.size() / 2), dists.end());
    return dists[dists.size() / 2];
}

inline int resolve_threads(int configured) {
    if (configured > 0) return configured;
    if (const char* env = std::getenv("SPACOCLUST_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

} // namespace detail

/// Initial kernel parameters when the model spec leaves them empty: the
/// length scale starts at half the median pairwise spot distance.
inline std::vector<Eigen::VectorXd> default_initial_phi(const ExpressionDataset& ds,
                                                        const ModelSpec& spec) {
    const double theta0 = std::max(1.0, 0.5 * detail::median_pairwise_distance(ds.coords));
    std::vector<Eigen::VectorXd> phi(static_cast<std::size_t>(spec.R));
    for (auto& v : phi) {
        if (spec.kernel == KernelKind::RationalQuadratic) {
            v = Eigen::VectorXd::Zero(2);
            v << theta0, 2.0;
        } else {
            v = Eigen::VectorXd::Constant(1, theta0);
        }
    }
    return phi;
}

/// CE pass as a standalone operation on 1-based labels.
inline std::vector<int> ce_step(const ExpressionDataset& ds, const CoClusterLabels& labels,
                                const ThetaGrid& theta, const std::vector<Eigen::VectorXd>& phi,
                                const ModelSpec& spec, const FitConfig& config) {
    labels.check(ds.n_rows(), ds.n_cols());
    spec.check();
    detail::Engine engine(ds, spec, config);
    std::vector<int> z(labels.rows.size());
    std::vector<int> w(labels.cols.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = labels.rows[i] - 1;
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = labels.cols[j] - 1;
    engine.set_state(std::move(z), std::move(w), theta, phi);
    engine.ce_pass();
    std::vector<int> out(engine.z.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = engine.z[i] + 1;
    return out;
}

/// SE pass as a standalone operation on 1-based labels.
inline std::vector<int> se_step(const ExpressionDataset& ds, const CoClusterLabels& labels,
                                const ThetaGrid& theta, const std::vector<Eigen::VectorXd>& phi,
                                const ModelSpec& spec, const FitConfig& config, RandomStream& rng) {
    labels.check(ds.n_rows(), ds.n_cols());
    spec.check();
    if (spec.R < 2) {
        // With a single column cluster there is no move to propose.
        return labels.cols;
    }
    detail::Engine engine(ds, spec, config);
    std::vector<int> z(labels.rows.size());
    std::vector<int> w(labels.cols.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = labels.rows[i] - 1;
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = labels.cols[j] - 1;
    engine.set_state(std::move(z), std::move(w), theta, phi);
    StartDiagnostics diag;
    engine.se_pass(rng, diag);
    std::vector<int> out(engine.w.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = engine.w[j] + 1;
    return out;
}

/// M pass as a standalone operation; returns the refit (theta, phi).
inline std::pair<ThetaGrid, std::vector<Eigen::VectorXd>> m_step(
    const ExpressionDataset& ds, const CoClusterLabels& labels, const ThetaGrid& theta,
    const std::vector<Eigen::VectorXd>& phi, const ModelSpec& spec, const FitConfig& config) {
    labels.check(ds.n_rows(), ds.n_cols());
    spec.check();
    detail::Engine engine(ds, spec, config);
    std::vector<int> z(labels.rows.size());
    std::vector<int> w(labels.cols.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = labels.rows[i] - 1;
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = labels.cols[j] - 1;
    engine.set_state(std::move(z), std::move(w), theta, phi);
    engine.m_pass();
    return {engine.theta, engine.phi};
}

/// Full multi-start fit.  Returns the state of the best iterate across all
/// starts, with per-start traces and Metropolis-Hastings diagnostics.
inline FitResult fit(const ExpressionDataset& ds, const ModelSpec& spec, const FitConfig& config) {
    spec.check();
    config.check();
    {
        const ValidationReport report = validate_dataset(ds);
        if (!report.ok()) {
            throw Error(report.violations.front().code,
                        "invalid dataset: " + report.violations.front().message);
        }
    }
    if (spec.K > ds.n_rows() || spec.R > ds.n_cols()) {
        throw Error(Errc::ConfigInvalid, "cluster counts exceed the dataset dimensions");
    }
    if (!(config.parameter_floor < 0.5 * spec.c_delta)) {
        throw Error(Errc::ConfigInvalid, "parameter_floor must be below c_delta / 2");
    }

    const std::vector<Eigen::VectorXd> phi0 =
        spec.phi.empty() ? default_initial_phi(ds, spec) : spec.phi;

    // Shared base initialization from k-means on the raw matrix; start s
    // perturbs it with its own stream (start 1 uses it unchanged).
    std::vector<int> base_z;
    std::vector<int> base_w;
    {
        RandomStream base_rng(config.seed);
        base_z = detail::kmeans_labels(ds.values, spec.K, base_rng);
        base_w = detail::kmeans_labels(ds.values.transpose(), spec.R, base_rng);
        detail::fill_empty_column_clusters(base_w, spec.R);
    }

    struct ChainOutcome {
        StartDiagnostics diag;
        std::vector<int> best_z;
        std::vector<int> best_w;
        ThetaGrid best_theta;
        std::vector<Eigen::VectorXd> best_phi;
    };

    // Chains are independent; run them on a small pool when allowed.
    const int threads = std::min(detail::resolve_threads(config.threads), config.n_starts);

    std::vector<ChainOutcome> outcomes(static_cast<std::size_t>(config.n_starts));
    auto worker = [&](int start_index) {
        ChainOutcome out;
        out.diag.start_index = start_index;
        out.diag.stream_seed = config.seed + static_cast<std::uint64_t>(start_index);
        RandomStream rng(out.diag.stream_seed);

        std::vector<int> z = base_z;
        std::vector<int> w = base_w;
        if (start_index > 1) {
            detail::perturb_labels(z, spec.K, rng);
            detail::perturb_labels(w, spec.R, rng);
            detail::fill_empty_column_clusters(w, spec.R);
        }
        const ThetaGrid theta0 = detail::initial_theta(ds, z, w, spec, config.parameter_floor);

        detail::Engine engine(ds, spec, config);
        engine.set_state(std::move(z), std::move(w), theta0, phi0);
        // Refit theta before the first allocation pass.  A CE pass against
        // the raw moment initializer reshuffles rows while all blocks still
        // look alike and reliably lands in a blurred local optimum; one
        // M pass first gives the classifier contrasted blocks to work with.
        engine.m_pass();
        out.diag.best_loglik = engine.loglik();
        out.diag.best_iteration = 0;
        out.best_z = engine.z;
        out.best_w = engine.w;
        out.best_theta = engine.theta;
        out.best_phi = engine.phi;

        for (int it = 1; it <= config.max_iterations; ++it) {
            const double before_ce = engine.loglik();
            engine.ce_pass();
            const double after_ce = engine.loglik();
            if (detail::decreased(before_ce, after_ce)) ++out.diag.monotonicity_violations;

            if (spec.R >= 2 && config.se_repeats_per_iteration > 0) {
                engine.se_pass(rng, out.diag);
            }

            const double before_m = engine.loglik();
            engine.m_pass();
            const double after_m = engine.loglik();
            if (detail::decreased(before_m, after_m)) ++out.diag.monotonicity_violations;

            out.diag.trace.push_back(after_m);
            if (after_m > out.diag.best_loglik) {
                out.diag.best_loglik = after_m;
                out.diag.best_iteration = it;
                out.best_z = engine.z;
                out.best_w = engine.w;
                out.best_theta = engine.theta;
                out.best_phi = engine.phi;
            }
        }
        return out;
    };

    if (threads <= 1) {
        for (int s = 1; s <= config.n_starts; ++s) {
            outcomes[static_cast<std::size_t>(s - 1)] = worker(s);
        }
    } else {
        std::vector<std::future<ChainOutcome>> futures;
        futures.reserve(static_cast<std::size_t>(config.n_starts));
        for (int s = 1; s <= config.n_starts; ++s) {
            futures.push_back(std::async(std::launch::async, worker, s));
        }
        for (int s = 1; s <= config.n_starts; ++s) {
            outcomes[static_cast<std::size_t>(s - 1)] = futures[static_cast<std::size_t>(s - 1)].get();
        }
    }

    int best = 0;
    for (int s = 1; s < config.n_starts; ++s) {
        if (outcomes[static_cast<std::size_t>(s)].diag.best_loglik >
            outcomes[static_cast<std::size_t>(best)].diag.best_loglik) {
            best = s;
        }
    }
    const ChainOutcome& winner = outcomes[static_cast<std::size_t>(best)];

    FitResult result;
    result.labels.n_row_clusters = spec.K;
    result.labels.n_col_clusters = spec.R;
    result.labels.rows.resize(winner.best_z.size());
    for (std::size_t i = 0; i < winner.best_z.size(); ++i) {
        result.labels.rows[i] = winner.best_z[i] + 1;
    }
    result.labels.cols.resize(winner.best_w.size());
    for (std::size_t j = 0; j < winner.best_w.size(); ++j) {
        result.labels.cols[j] = winner.best_w[j] + 1;
    }
    result.theta = winner.best_theta;
    result.phi = winner.best_phi;
    result.best_loglik = winner.diag.best_loglik;
    result.best_iteration = winner.diag.best_iteration;
    result.best_start = winner.diag.start_index;
    result.loglik_trace = winner.diag.trace;
    result.seed = config.seed;
    result.n_starts = config.n_starts;
    for (auto& o : outcomes) {
        result.monotonicity_violations += o.diag.monotonicity_violations;
        result.starts.push_back(std::move(o.diag));
    }
    result.icl = icl(result.best_loglik, ds.n_rows(), ds.n_cols(), spec.K, spec.R,
                     kernel_param_dim(spec.kernel));
    return result;
}

} // namespace spacoclust
