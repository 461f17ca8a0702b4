#pragma once

// Spatial covariance kernels and their eigendecompositions.  A column
// cluster's kernel matrix is decomposed once and reused by every likelihood
// evaluation that shares the same kernel parameters, so the cache type below
// carries enough metadata to detect reuse against the wrong cluster.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spacoclust/errors.hpp"

namespace spacoclust {

using Coord = std::array<double, 2>;

inline double coord_distance(const Coord& a, const Coord& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return std::sqrt(dx * dx + dy * dy);
}

enum class KernelKind { Exponential, RationalQuadratic, Gaussian };

inline int kernel_param_dim(KernelKind kind) {
    return kind == KernelKind::RationalQuadratic ? 2 : 1;
}

inline std::string kernel_kind_name(KernelKind kind) {
    switch (kind) {
        case KernelKind::Exponential: return "exponential";
        case KernelKind::RationalQuadratic: return "rational_quadratic";
        case KernelKind::Gaussian: return "gaussian";
    }
    return "unknown";
}

inline KernelKind parse_kernel_kind(const std::string& name) {
    if (name == "exponential") return KernelKind::Exponential;
    if (name == "rational_quadratic" || name == "rationalquadratic") {
        return KernelKind::RationalQuadratic;
    }
    if (name == "gaussian") return KernelKind::Gaussian;
    throw Error(Errc::ParseError, "unknown kernel kind '" + name + "'");
}

/// Kernel family plus its positive parameter vector.
/// Exponential: {theta}.  RationalQuadratic: {theta, alpha}.  Gaussian: {theta}.
struct KernelParams {
    KernelKind kind = KernelKind::Exponential;
    Eigen::VectorXd values;

    static KernelParams exponential(double theta) {
        KernelParams p;
        p.kind = KernelKind::Exponential;
        p.values = Eigen::VectorXd::Constant(1, theta);
        return p;
    }
    static KernelParams rational_quadratic(double theta, double alpha) {
        KernelParams p;
        p.kind = KernelKind::RationalQuadratic;
        p.values = Eigen::VectorXd::Zero(2);
        p.values << theta, alpha;
        return p;
    }
    static KernelParams gaussian(double theta) {
        KernelParams p;
        p.kind = KernelKind::Gaussian;
        p.values = Eigen::VectorXd::Constant(1, theta);
        return p;
    }

    void check() const {
        if (values.size() != kernel_param_dim(kind)) {
            throw Error(Errc::DimensionMismatch,
                        "kernel '" + kernel_kind_name(kind) + "' expects " +
                            std::to_string(kernel_param_dim(kind)) + " parameter(s), got " +
                            std::to_string(values.size()));
        }
        for (Eigen::Index i = 0; i < values.size(); ++i) {
            if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
                throw Error(Errc::NonPositiveParameter,
                            "kernel parameter " + std::to_string(i) + " must be positive and finite");
            }
        }
    }
};

/// Correlation at distance d >= 0; k(0) = 1 for every family.
inline double kernel_value(const KernelParams& params, double d) {
    params.check();
    if (!(d >= 0.0)) {
        throw Error(Errc::ConfigInvalid, "kernel_value: distance must be non-negative");
    }
    switch (params.kind) {
        case KernelKind::Exponential:
            return std::exp(-d / params.values[0]);
        case KernelKind::RationalQuadratic: {
            const double theta = params.values[0];
            const double alpha = params.values[1];
            const double z = d * d / (2.0 * alpha * theta * theta);
            return std::pow(1.0 + z, -alpha);
        }
        case KernelKind::Gaussian: {
            const double theta = params.values[0];
            return std::exp(-d * d / (2.0 * theta * theta));
        }
    }
    throw Error(Errc::ConfigInvalid, "kernel_value: unknown kind");
}

/// Dense kernel matrix over a coordinate list; exactly symmetric with unit
/// diagonal by construction.
inline Eigen::MatrixXd kernel_matrix(const KernelParams& params, const std::vector<Coord>& coords) {
    params.check();
    const Eigen::Index m = static_cast<Eigen::Index>(coords.size());
    Eigen::MatrixXd K(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        K(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double v = kernel_value(params, coord_distance(coords[static_cast<std::size_t>(i)],
                                                                 coords[static_cast<std::size_t>(j)]));
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

/// Eigendecomposition of one column cluster's kernel matrix.  Eigenvalues are
/// sorted in descending order; phi_used / col_cluster / members_hash identify
/// what the decomposition was built from so stale reuse can be rejected.
struct KernelEigenCache {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    KernelParams phi_used;
    int col_cluster = -1;
    std::uint64_t members_hash = 0;

    Eigen::Index order() const { return eigenvalues.size(); }
};

/// Decomposes a symmetric unit-diagonal kernel matrix.  Round-off eigenvalues
/// in [-1e-10, 0) are clamped to zero; anything below -1e-10 means the input
/// was not a valid correlation matrix.
inline KernelEigenCache kernel_eigen(const Eigen::MatrixXd& K) {
    if (K.rows() != K.cols() || K.rows() == 0) {
        throw Error(Errc::DimensionMismatch, "kernel_eigen: matrix must be square and non-empty");
    }
    if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw Error(Errc::DimensionMismatch, "kernel_eigen: matrix is not symmetric");
    }
    if ((K.diagonal().array() - 1.0).abs().maxCoeff() > 1e-8) {
        throw Error(Errc::ConfigInvalid, "kernel_eigen: diagonal is not all ones");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K);
    if (solver.info() != Eigen::Success) {
        throw Error(Errc::NotPositiveSemidefinite, "kernel_eigen: eigendecomposition failed");
    }

    const Eigen::Index m = K.rows();
    KernelEigenCache cache;
    cache.eigenvalues.resize(m);
    cache.eigenvectors.resize(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        // Solver returns ascending order; store descending.
        double lam = solver.eigenvalues()[m - 1 - j];
        if (lam < 0.0) {
            if (lam < -1e-10) {
                throw Error(Errc::NotPositiveSemidefinite,
                            "kernel_eigen: eigenvalue " + std::to_string(lam) +
                                " below tolerance");
            }
            lam = 0.0;
        }
        cache.eigenvalues[j] = lam;
        cache.eigenvectors.col(j) = solver.eigenvectors().col(m - 1 - j);
    }

    const double trace = static_cast<double>(m);
    if (std::fabs(cache.eigenvalues.sum() - trace) > 1e-6 * trace) {
        throw Error(Errc::NotPositiveSemidefinite,
                    "kernel_eigen: eigenvalue sum deviates from matrix trace");
    }
    return cache;
}

} // namespace spacoclust
