#pragma once

// Synthetic data generation: Wishart and matrix-normal samplers, hexagonal
// spot layouts, and the five benchmark scenarios.
//
// Scenario data is drawn block by block: rows of cluster k restricted to
// column cluster r follow a matrix normal with row covariance Sigma_k (one
// Wishart draw per row cluster) and column covariance
// Delta_kr = tau_kr K_r + xi_kr I, where (tau, xi) split the total variance
// c_delta according to the configured signal-to-noise ratio.  Draw order is
// fixed, so a seed pins the entire experiment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spacoclust/core.hpp"
#include "spacoclust/errors.hpp"
#include "spacoclust/kernels.hpp"
#include "spacoclust/math/rng.hpp"

namespace spacoclust {

/// Wishart(df, scale) draw via the Bartlett factorization: with scale = LL',
/// A lower triangular, A_ii^2 ~ chi^2(df - i) and A_ij ~ N(0, 1) below the
/// diagonal, the product L A A' L' has the target distribution.
inline Eigen::MatrixXd sample_wishart(long df, const Eigen::MatrixXd& scale, RandomStream& rng) {
    const Eigen::Index d = scale.rows();
    if (scale.cols() != d || d == 0) {
        throw Error(Errc::DimensionMismatch, "sample_wishart: scale matrix must be square");
    }
    if (df < d) {
        throw Error(Errc::DegreesOfFreedomTooSmall,
                    "sample_wishart: df " + std::to_string(df) + " below dimension " +
                        std::to_string(d));
    }
    Eigen::LLT<Eigen::MatrixXd> llt(scale);
    if (llt.info() != Eigen::Success) {
        throw Error(Errc::NotPositiveDefinite, "sample_wishart: scale matrix is not positive definite");
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        A(i, i) = std::sqrt(rng.chi_square(static_cast<double>(df - i)));
        for (Eigen::Index j = 0; j < i; ++j) {
            A(i, j) = rng.normal();
        }
    }
    const Eigen::MatrixXd LA = llt.matrixL() * A;
    return LA * LA.transpose();
}

/// Matrix normal draw X = M + A E B' with A = chol(Sigma), B = chol(Delta)
/// and E filled with standard normals in row-major order, so
/// Cov(vec X) = Delta (x) Sigma.
inline Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& sigma,
                                            const Eigen::MatrixXd& delta, RandomStream& rng) {
    const Eigen::Index n = mean.rows();
    const Eigen::Index p = mean.cols();
    if (sigma.rows() != n || sigma.cols() != n || delta.rows() != p || delta.cols() != p) {
        throw Error(Errc::DimensionMismatch, "sample_matrix_normal: covariance shapes do not match mean");
    }
    Eigen::LLT<Eigen::MatrixXd> llt_sigma(sigma);
    if (llt_sigma.info() != Eigen::Success) {
        throw Error(Errc::NotPositiveDefinite, "sample_matrix_normal: row covariance is not positive definite");
    }
    Eigen::LLT<Eigen::MatrixXd> llt_delta(delta);
    if (llt_delta.info() != Eigen::Success) {
        throw Error(Errc::NotPositiveDefinite, "sample_matrix_normal: column covariance is not positive definite");
    }
    Eigen::MatrixXd E(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            E(i, j) = rng.normal();
        }
    }
    return mean + Eigen::MatrixXd(llt_sigma.matrixL()) * E *
                      Eigen::MatrixXd(llt_delta.matrixL()).transpose();
}

/// Splits the variance budget c_delta into a spatial part tau and a noise
/// part xi so that tau / xi equals the requested signal-to-noise ratio.
inline std::pair<double, double> snr_to_tau_xi(double snr, double c_delta) {
    if (!(snr >= 0.0)) {
        throw Error(Errc::NonPositiveParameter, "snr_to_tau_xi: snr must be non-negative");
    }
    if (!(c_delta > 0.0)) {
        throw Error(Errc::NonPositiveParameter, "snr_to_tau_xi: c_delta must be positive");
    }
    const double xi = c_delta / (1.0 + snr);
    const double tau = c_delta - xi;
    return {tau, xi};
}

struct SyntheticCoords {
    std::vector<Coord> coords;
    std::vector<int> labels; // 1-based patch index per spot
};

namespace detail {

// Axial hexagonal spiral around the origin: center first, then rings of
// 6, 12, 18, ... positions.
inline std::vector<std::pair<int, int>> hex_spiral(int count) {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<std::size_t>(count));
    out.emplace_back(0, 0);
    static const int dirs[6][2] = {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}};
    for (int ring = 1; static_cast<int>(out.size()) < count; ++ring) {
        int q = -ring;
        int r = ring;
        for (int side = 0; side < 6 && static_cast<int>(out.size()) < count; ++side) {
            for (int step = 0; step < ring && static_cast<int>(out.size()) < count; ++step) {
                out.emplace_back(q, r);
                q += dirs[side][0];
                r += dirs[side][1];
            }
        }
    }
    return out;
}

inline int hex_ring_count(int size) {
    int t = 0;
    while (1 + 3 * t * (t + 1) < size) ++t;
    return t;
}

} // namespace detail

/// Lays out one hexagonal patch of spots per cluster.  Patch centers are
/// spaced so that the largest within-patch distance stays strictly below the
/// smallest between-patch distance; a small jitter breaks exact lattice
/// symmetry without affecting that guarantee.
inline SyntheticCoords synthetic_coords(const std::vector<int>& cluster_sizes, double spacing,
                                        RandomStream& rng) {
    if (cluster_sizes.empty()) {
        throw Error(Errc::ConfigInvalid, "synthetic_coords: need at least one cluster");
    }
    if (!(spacing > 0.0)) {
        throw Error(Errc::NonPositiveParameter, "synthetic_coords: spacing must be positive");
    }
    int max_size = 0;
    for (int s : cluster_sizes) {
        if (s < 1) throw Error(Errc::ConfigInvalid, "synthetic_coords: cluster sizes must be >= 1");
        max_size = std::max(max_size, s);
    }
    const double patch_radius = spacing * static_cast<double>(detail::hex_ring_count(max_size));
    const double center_gap = 4.0 * patch_radius + 3.0 * spacing;
    const int grid_cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cluster_sizes.size()))));

    SyntheticCoords out;
    constexpr double root3_over_2 = 0.86602540378443864676372317075293618;
    for (std::size_t patch = 0; patch < cluster_sizes.size(); ++patch) {
        const double cx = static_cast<double>(static_cast<int>(patch) % grid_cols) * center_gap;
        const double cy = static_cast<double>(static_cast<int>(patch) / grid_cols) * center_gap;
        for (const auto& [q, r] : detail::hex_spiral(cluster_sizes[patch])) {
            const double jx = (rng.uniform() - 0.5) * 0.1 * spacing;
            const double jy = (rng.uniform() - 0.5) * 0.1 * spacing;
            out.coords.push_back(Coord{cx + spacing * (static_cast<double>(q) + 0.5 * static_cast<double>(r)) + jx,
                                       cy + spacing * root3_over_2 * static_cast<double>(r) + jy});
            out.labels.push_back(static_cast<int>(patch) + 1);
        }
    }
    return out;
}

enum class Scenario { S1, S2, S3, S4, S5 };

inline std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::S1: return "S1";
        case Scenario::S2: return "S2";
        case Scenario::S3: return "S3";
        case Scenario::S4: return "S4";
        case Scenario::S5: return "S5";
    }
    return "?";
}

inline Scenario parse_scenario(const std::string& name) {
    if (name == "S1" || name == "s1") return Scenario::S1;
    if (name == "S2" || name == "s2") return Scenario::S2;
    if (name == "S3" || name == "s3") return Scenario::S3;
    if (name == "S4" || name == "s4") return Scenario::S4;
    if (name == "S5" || name == "s5") return Scenario::S5;
    throw Error(Errc::ParseError, "unknown scenario '" + name + "'");
}

/// How one row cluster's covariance Sigma_k is produced.
struct WishartSpec {
    enum class Kind {
        FixedIso,   // Sigma = scale * I, no randomness
        Iso,        // Sigma ~ W(df, scale * I)
        ScaledPrev, // Sigma ~ W(df, Sigma_prev / divisor)
        Nested,     // Sigma ~ W(df, S / divisor), S ~ W(aux_df, aux_scale * I)
    };
    Kind kind = Kind::Iso;
    long df = 0;
    double scale = 1.0;
    int prev = 0; // 1-based index of an earlier row cluster
    double divisor = 1.0;
    long aux_df = 0;
    double aux_scale = 1.0;
};

struct ScenarioConfig {
    Scenario scenario = Scenario::S1;
    int K = 3;
    int R = 3;
    std::vector<int> row_sizes;
    std::vector<int> col_sizes;
    Eigen::MatrixXd snr;        // K x R
    Eigen::MatrixXd mu;         // K x R block means (defaults to zero)
    double c_delta = 10.0;
    std::vector<KernelParams> kernels; // per column cluster
    std::vector<WishartSpec> wisharts; // per row cluster
    double coord_spacing = 10.0;

    // S4 overlay: X = lambda_signal * X_struct + lambda_noise * X_flat with
    // lambda_signal^2 + lambda_noise^2 = 1.
    double lambda_signal = 1.0;
    double lambda_noise = 0.0;
    WishartSpec noise_wishart;
    KernelParams noise_kernel;
    double noise_snr = 1.0;

    // S5: one row partition per column cluster (values 1..K, length n).
    std::vector<std::vector<int>> nested_rows;

    std::uint64_t seed = 1;
};

struct GroundTruth {
    CoClusterLabels labels;
    Eigen::MatrixXd mu;  // K x R generating means
    Eigen::MatrixXd tau; // K x R
    Eigen::MatrixXd xi;  // K x R
    std::vector<KernelParams> kernels;
    std::vector<Eigen::MatrixXd> sigma;                      // per row cluster (S1-S4)
    std::vector<std::vector<Eigen::MatrixXd>> sigma_nested;  // [r][k] (S5)
    std::vector<std::vector<int>> nested_rows;               // S5 row partition per r
    std::vector<int> intersection_classes;                   // S5 refined row classes
};

struct SimulatedExperiment {
    ExpressionDataset data;
    GroundTruth truth;
};

namespace detail {

inline void check_scenario_config(const ScenarioConfig& cfg) {
    if (cfg.K < 1 || cfg.R < 1) throw Error(Errc::ConfigInvalid, "scenario requires K >= 1 and R >= 1");
    if (static_cast<int>(cfg.col_sizes.size()) != cfg.R) {
        throw Error(Errc::ConfigInvalid, "col_sizes must list one size per column cluster");
    }
    for (int s : cfg.col_sizes) {
        if (s < 1) throw Error(Errc::ConfigInvalid, "column cluster sizes must be >= 1");
    }
    if (cfg.snr.rows() != cfg.K || cfg.snr.cols() != cfg.R) {
        throw Error(Errc::ConfigInvalid, "snr matrix must be K x R");
    }
    if (cfg.mu.size() != 0 && (cfg.mu.rows() != cfg.K || cfg.mu.cols() != cfg.R)) {
        throw Error(Errc::ConfigInvalid, "mu matrix must be K x R");
    }
    if (!(cfg.c_delta > 0.0)) throw Error(Errc::NonPositiveParameter, "c_delta must be positive");
    if (static_cast<int>(cfg.kernels.size()) != cfg.R) {
        throw Error(Errc::ConfigInvalid, "kernels must list one entry per column cluster");
    }
    for (const auto& k : cfg.kernels) k.check();
    if (static_cast<int>(cfg.wisharts.size()) != cfg.K) {
        throw Error(Errc::ConfigInvalid, "wisharts must list one spec per row cluster");
    }
    if (cfg.scenario == Scenario::S5) {
        if (static_cast<int>(cfg.nested_rows.size()) != cfg.R) {
            throw Error(Errc::ConfigInvalid, "S5 needs one row partition per column cluster");
        }
    } else {
        if (static_cast<int>(cfg.row_sizes.size()) != cfg.K) {
            throw Error(Errc::ConfigInvalid, "row_sizes must list one size per row cluster");
        }
        for (int s : cfg.row_sizes) {
            if (s < 1) throw Error(Errc::ConfigInvalid, "row cluster sizes must be >= 1");
        }
    }
    if (cfg.scenario == Scenario::S4) {
        const double norm = cfg.lambda_signal * cfg.lambda_signal + cfg.lambda_noise * cfg.lambda_noise;
        if (std::fabs(norm - 1.0) > 1e-10) {
            throw Error(Errc::ConfigInvalid, "S4 requires lambda_signal^2 + lambda_noise^2 = 1");
        }
        cfg.noise_kernel.check();
        if (!(cfg.noise_snr >= 0.0)) {
            throw Error(Errc::NonPositiveParameter, "noise_snr must be non-negative");
        }
    }
}

inline Eigen::MatrixXd draw_sigma(const WishartSpec& spec, Eigen::Index dim,
                                  const std::vector<Eigen::MatrixXd>& earlier, RandomStream& rng) {
    switch (spec.kind) {
        case WishartSpec::Kind::FixedIso:
            if (!(spec.scale > 0.0)) {
                throw Error(Errc::NonPositiveParameter, "wishart scale must be positive");
            }
            return spec.scale * Eigen::MatrixXd::Identity(dim, dim);
        case WishartSpec::Kind::Iso:
            return sample_wishart(spec.df, spec.scale * Eigen::MatrixXd::Identity(dim, dim), rng);
        case WishartSpec::Kind::ScaledPrev: {
            const int idx = spec.prev - 1;
            if (idx < 0 || idx >= static_cast<int>(earlier.size())) {
                throw Error(Errc::ConfigInvalid, "wishart spec references a non-earlier row cluster");
            }
            if (earlier[static_cast<std::size_t>(idx)].rows() != dim) {
                throw Error(Errc::DimensionMismatch,
                            "referenced covariance has a different dimension; ScaledPrev requires equal cluster sizes");
            }
            return sample_wishart(spec.df, earlier[static_cast<std::size_t>(idx)] / spec.divisor, rng);
        }
        case WishartSpec::Kind::Nested: {
            const Eigen::MatrixXd aux =
                sample_wishart(spec.aux_df, spec.aux_scale * Eigen::MatrixXd::Identity(dim, dim), rng);
            return sample_wishart(spec.df, aux / spec.divisor, rng);
        }
    }
    throw Error(Errc::ConfigInvalid, "unknown wishart spec kind");
}

inline std::vector<std::string> numbered_ids(const std::string& prefix, Eigen::Index count) {
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) {
        std::string num = std::to_string(i + 1);
        while (num.size() < 4) num.insert(num.begin(), '0');
        ids.push_back(prefix + num);
    }
    return ids;
}

} // namespace detail

/// Generates one complete experiment.  The RNG consumption order is fixed:
/// coordinates, then row covariances in cluster order, then data blocks in
/// (k, r) order; S4 appends the overlay draws, S5 walks blocks in (r, k)
/// order within each column cluster.
inline SimulatedExperiment generate_experiment(const ScenarioConfig& cfg) {
    detail::check_scenario_config(cfg);
    RandomStream rng(cfg.seed);

    SimulatedExperiment out;
    GroundTruth& truth = out.truth;

    SyntheticCoords layout = synthetic_coords(cfg.col_sizes, cfg.coord_spacing, rng);
    const Eigen::Index p = static_cast<Eigen::Index>(layout.coords.size());

    Eigen::Index n = 0;
    if (cfg.scenario == Scenario::S5) {
        n = static_cast<Eigen::Index>(cfg.nested_rows.front().size());
        for (const auto& part : cfg.nested_rows) {
            if (static_cast<Eigen::Index>(part.size()) != n) {
                throw Error(Errc::ConfigInvalid, "S5 row partitions must all have the same length");
            }
            for (int v : part) {
                if (v < 1 || v > cfg.K) {
                    throw Error(Errc::ConfigInvalid, "S5 row partition labels must lie in 1..K");
                }
            }
        }
    } else {
        for (int s : cfg.row_sizes) n += s;
    }

    truth.mu = cfg.mu.size() == 0 ? Eigen::MatrixXd::Zero(cfg.K, cfg.R) : cfg.mu;
    truth.tau.resize(cfg.K, cfg.R);
    truth.xi.resize(cfg.K, cfg.R);
    for (int k = 0; k < cfg.K; ++k) {
        for (int r = 0; r < cfg.R; ++r) {
            const auto [tau, xi] = snr_to_tau_xi(cfg.snr(k, r), cfg.c_delta);
            truth.tau(k, r) = tau;
            truth.xi(k, r) = xi;
        }
    }
    truth.kernels = cfg.kernels;

    // Per-column-cluster kernel matrices over the member coordinates.
    std::vector<std::vector<int>> col_members(static_cast<std::size_t>(cfg.R));
    for (std::size_t j = 0; j < layout.labels.size(); ++j) {
        col_members[static_cast<std::size_t>(layout.labels[j] - 1)].push_back(static_cast<int>(j));
    }
    std::vector<Eigen::MatrixXd> kernel_mats;
    kernel_mats.reserve(static_cast<std::size_t>(cfg.R));
    for (int r = 0; r < cfg.R; ++r) {
        std::vector<Coord> coords_r;
        for (int j : col_members[static_cast<std::size_t>(r)]) {
            coords_r.push_back(layout.coords[static_cast<std::size_t>(j)]);
        }
        kernel_mats.push_back(kernel_matrix(cfg.kernels[static_cast<std::size_t>(r)], coords_r));
    }

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, p);

    auto block_delta = [&](int k, int r) {
        const Eigen::Index pr = kernel_mats[static_cast<std::size_t>(r)].rows();
        return (truth.tau(k, r) * kernel_mats[static_cast<std::size_t>(r)] +
                truth.xi(k, r) * Eigen::MatrixXd::Identity(pr, pr))
            .eval();
    };
    auto scatter_block = [&](const std::vector<int>& rows, int r, const Eigen::MatrixXd& block) {
        const auto& cols = col_members[static_cast<std::size_t>(r)];
        for (std::size_t a = 0; a < rows.size(); ++a) {
            for (std::size_t b = 0; b < cols.size(); ++b) {
                X(rows[a], cols[b]) = block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
        }
    };

    if (cfg.scenario == Scenario::S5) {
        truth.nested_rows = cfg.nested_rows;
        truth.sigma_nested.resize(static_cast<std::size_t>(cfg.R));
        for (int r = 0; r < cfg.R; ++r) {
            std::vector<Eigen::MatrixXd> sigmas_r;
            for (int k = 0; k < cfg.K; ++k) {
                std::vector<int> rows;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (cfg.nested_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] == k + 1) {
                        rows.push_back(static_cast<int>(i));
                    }
                }
                if (rows.empty()) {
                    throw Error(Errc::ConfigInvalid, "S5 row partition has an empty cluster");
                }
                const Eigen::MatrixXd sigma = detail::draw_sigma(
                    cfg.wisharts[static_cast<std::size_t>(k)], static_cast<Eigen::Index>(rows.size()),
                    sigmas_r, rng);
                sigmas_r.push_back(sigma);
                const Eigen::MatrixXd mean = Eigen::MatrixXd::Constant(
                    static_cast<Eigen::Index>(rows.size()), kernel_mats[static_cast<std::size_t>(r)].rows(),
                    truth.mu(k, r));
                scatter_block(rows, r, sample_matrix_normal(mean, sigma, block_delta(k, r), rng));
            }
            truth.sigma_nested[static_cast<std::size_t>(r)] = std::move(sigmas_r);
        }
        // Refined classes: rows sharing the same label across every partition,
        // numbered by first appearance.
        truth.intersection_classes.assign(static_cast<std::size_t>(n), 0);
        std::vector<std::vector<int>> seen;
        for (Eigen::Index i = 0; i < n; ++i) {
            std::vector<int> key;
            for (int r = 0; r < cfg.R; ++r) {
                key.push_back(cfg.nested_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)]);
            }
            auto it = std::find(seen.begin(), seen.end(), key);
            if (it == seen.end()) {
                seen.push_back(key);
                it = std::prev(seen.end());
            }
            truth.intersection_classes[static_cast<std::size_t>(i)] =
                static_cast<int>(std::distance(seen.begin(), it)) + 1;
        }
        // Primary row labels default to the first partition.
        truth.labels.rows = cfg.nested_rows.front();
    } else {
        std::vector<std::vector<int>> row_members(static_cast<std::size_t>(cfg.K));
        truth.labels.rows.reserve(static_cast<std::size_t>(n));
        {
            int next = 0;
            for (int k = 0; k < cfg.K; ++k) {
                for (int s = 0; s < cfg.row_sizes[static_cast<std::size_t>(k)]; ++s) {
                    row_members[static_cast<std::size_t>(k)].push_back(next++);
                    truth.labels.rows.push_back(k + 1);
                }
            }
        }
        for (int k = 0; k < cfg.K; ++k) {
            truth.sigma.push_back(detail::draw_sigma(cfg.wisharts[static_cast<std::size_t>(k)],
                                                     static_cast<Eigen::Index>(row_members[static_cast<std::size_t>(k)].size()),
                                                     truth.sigma, rng));
        }
        for (int k = 0; k < cfg.K; ++k) {
            for (int r = 0; r < cfg.R; ++r) {
                const auto& rows = row_members[static_cast<std::size_t>(k)];
                const Eigen::MatrixXd mean = Eigen::MatrixXd::Constant(
                    static_cast<Eigen::Index>(rows.size()), kernel_mats[static_cast<std::size_t>(r)].rows(),
                    truth.mu(k, r));
                scatter_block(rows, r,
                              sample_matrix_normal(mean, truth.sigma[static_cast<std::size_t>(k)],
                                                   block_delta(k, r), rng));
            }
        }
        if (cfg.scenario == Scenario::S4) {
            const auto [tau_b, xi_b] = snr_to_tau_xi(cfg.noise_snr, cfg.c_delta);
            std::vector<Eigen::MatrixXd> none;
            const Eigen::MatrixXd sigma_b = detail::draw_sigma(cfg.noise_wishart, n, none, rng);
            const Eigen::MatrixXd k_all = kernel_matrix(cfg.noise_kernel, layout.coords);
            const Eigen::MatrixXd delta_b =
                tau_b * k_all + xi_b * Eigen::MatrixXd::Identity(p, p);
            const Eigen::MatrixXd overlay =
                sample_matrix_normal(Eigen::MatrixXd::Zero(n, p), sigma_b, delta_b, rng);
            X = cfg.lambda_signal * X + cfg.lambda_noise * overlay;
        }
    }

    truth.labels.n_row_clusters = cfg.K;
    truth.labels.n_col_clusters = cfg.R;
    truth.labels.cols = layout.labels;

    out.data.values = std::move(X);
    out.data.coords = std::move(layout.coords);
    out.data.row_ids = detail::numbered_ids("gene_", n);
    out.data.col_ids = detail::numbered_ids("spot_", p);
    return out;
}

/// Desk-scale defaults for each scenario; every field can be overridden
/// before calling generate_experiment.
inline ScenarioConfig default_scenario_config(Scenario scenario, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.scenario = scenario;
    cfg.seed = seed;
    cfg.K = 3;
    cfg.R = 3;
    cfg.row_sizes = {50, 50, 50};
    cfg.col_sizes = {50, 50, 50};
    cfg.c_delta = 10.0;
    cfg.coord_spacing = 10.0;
    cfg.snr.resize(3, 3);
    cfg.snr << 0.0, 1.0, 3.0,
               3.0, 0.0, 1.0,
               1.0, 3.0, 0.0;
    cfg.kernels = {KernelParams::exponential(50.0), KernelParams::rational_quadratic(50.0, 2.0),
                   KernelParams::gaussian(70.0)};
    cfg.wisharts.resize(3);
    cfg.wisharts[0] = {WishartSpec::Kind::Iso, 60, 0.105, 0, 1.0, 0, 1.0};
    cfg.wisharts[1] = {WishartSpec::Kind::Iso, 80, 0.14375, 0, 1.0, 0, 1.0};
    cfg.wisharts[2] = {WishartSpec::Kind::ScaledPrev, 50, 1.0, 1, 37.5, 0, 1.0};

    switch (scenario) {
        case Scenario::S1:
            break;
        case Scenario::S2:
            cfg.snr << 1.0, 2.0, 0.0,
                       0.0, 1.0, 2.0,
                       2.0, 0.0, 1.0;
            break;
        case Scenario::S3:
            cfg.snr << 0.0, 5.0, 10.0,
                       10.0, 0.0, 5.0,
                       5.0, 10.0, 0.0;
            break;
        case Scenario::S4: {
            cfg.lambda_signal = std::sqrt(0.75);
            cfg.lambda_noise = 0.5;
            cfg.noise_kernel = KernelParams::gaussian(50.0);
            cfg.noise_snr = 1.0;
            const long n = 150;
            cfg.noise_wishart = {WishartSpec::Kind::Iso, n, 9.0 / static_cast<double>(n), 0, 1.0, 0, 1.0};
            break;
        }
        case Scenario::S5: {
            // Six equal groups; each column cluster merges them differently so
            // the partitions intersect in six refined classes.
            const int group = 10;
            const int n = 6 * group;
            static const int pattern[3][6] = {{1, 1, 2, 2, 3, 3}, {3, 1, 1, 2, 2, 3}, {1, 3, 2, 3, 3, 2}};
            cfg.nested_rows.assign(3, std::vector<int>(static_cast<std::size_t>(n)));
            for (int r = 0; r < 3; ++r) {
                for (int i = 0; i < n; ++i) {
                    cfg.nested_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] =
                        pattern[r][(i / group) % 6];
                }
            }
            cfg.row_sizes.clear();
            cfg.wisharts[2] = {WishartSpec::Kind::Nested, 40, 1.0, 0, 6.0, 50, 0.03};
            break;
        }
    }
    return cfg;
}

} // namespace spacoclust
