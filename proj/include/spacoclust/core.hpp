#pragma once

// Core data types shared by every other module.
//
// Conventions: cluster labels stored in CoClusterLabels are 1-based, matching
// the serialized form.  Internal algorithm state and ThetaGrid accessors are
// 0-based; conversions happen at the boundaries.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "spacoclust/errors.hpp"
#include "spacoclust/kernels.hpp"

namespace spacoclust {

/// Expression matrix (rows = genes, columns = spots) with ids and per-spot
/// spatial coordinates.
struct ExpressionDataset {
    Eigen::MatrixXd values;
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    std::vector<Coord> coords;

    Eigen::Index n_rows() const { return values.rows(); }
    Eigen::Index n_cols() const { return values.cols(); }
};

struct Violation {
    Errc code = Errc::ConfigInvalid;
    long row = -1;
    long col = -1;
    std::string id;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks dataset invariants and reports every violation found (listing is
/// capped at 100 entries to keep reports readable on badly corrupted input).
inline ValidationReport validate_dataset(const ExpressionDataset& ds) {
    ValidationReport report;
    auto add = [&report](Violation v) {
        if (report.violations.size() < 100) report.violations.push_back(std::move(v));
    };

    const Eigen::Index n = ds.values.rows();
    const Eigen::Index p = ds.values.cols();
    if (n == 0 || p == 0) {
        add({Errc::DimensionMismatch, -1, -1, "", "expression matrix is empty"});
    }
    if (static_cast<Eigen::Index>(ds.row_ids.size()) != n) {
        add({Errc::DimensionMismatch, -1, -1, "",
             "row id count " + std::to_string(ds.row_ids.size()) + " does not match matrix rows " +
                 std::to_string(n)});
    }
    if (static_cast<Eigen::Index>(ds.col_ids.size()) != p) {
        add({Errc::DimensionMismatch, -1, -1, "",
             "column id count " + std::to_string(ds.col_ids.size()) +
                 " does not match matrix columns " + std::to_string(p)});
    }
    if (static_cast<Eigen::Index>(ds.coords.size()) != p) {
        add({Errc::DimensionMismatch, -1, -1, "",
             "coordinate count " + std::to_string(ds.coords.size()) +
                 " does not match matrix columns " + std::to_string(p)});
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (!std::isfinite(ds.values(i, j))) {
                add({Errc::NonFiniteValue, static_cast<long>(i), static_cast<long>(j), "",
                     "non-finite expression value at row " + std::to_string(i) + ", column " +
                         std::to_string(j)});
            }
        }
    }
    for (std::size_t j = 0; j < ds.coords.size(); ++j) {
        if (!std::isfinite(ds.coords[j][0]) || !std::isfinite(ds.coords[j][1])) {
            add({Errc::NonFiniteValue, -1, static_cast<long>(j), "",
                 "non-finite coordinate for column " + std::to_string(j)});
        }
    }

    std::unordered_set<std::string> seen;
    for (std::size_t j = 0; j < ds.col_ids.size(); ++j) {
        if (!seen.insert(ds.col_ids[j]).second) {
            add({Errc::DuplicateColumnId, -1, static_cast<long>(j), ds.col_ids[j],
                 "duplicate spot id '" + ds.col_ids[j] + "'"});
        }
    }
    seen.clear();
    for (std::size_t i = 0; i < ds.row_ids.size(); ++i) {
        if (!seen.insert(ds.row_ids[i]).second) {
            add({Errc::DuplicateRowId, static_cast<long>(i), -1, ds.row_ids[i],
                 "duplicate gene id '" + ds.row_ids[i] + "'"});
        }
    }
    return report;
}

/// Row and column cluster assignment.  Label values are 1-based.
struct CoClusterLabels {
    int n_row_clusters = 0;
    int n_col_clusters = 0;
    std::vector<int> rows;
    std::vector<int> cols;

    /// Throws unless sizes match the dataset, labels are in range, and every
    /// column cluster is non-empty.  Row clusters are allowed to be empty.
    void check(Eigen::Index n, Eigen::Index p) const {
        if (static_cast<Eigen::Index>(rows.size()) != n ||
            static_cast<Eigen::Index>(cols.size()) != p) {
            throw Error(Errc::DimensionMismatch, "label vectors do not match dataset shape");
        }
        if (n_row_clusters < 1 || n_col_clusters < 1) {
            throw Error(Errc::ConfigInvalid, "cluster counts must be at least 1");
        }
        for (int v : rows) {
            if (v < 1 || v > n_row_clusters) {
                throw Error(Errc::ConfigInvalid,
                            "row label " + std::to_string(v) + " outside 1.." +
                                std::to_string(n_row_clusters));
            }
        }
        std::vector<int> count(static_cast<std::size_t>(n_col_clusters), 0);
        for (int v : cols) {
            if (v < 1 || v > n_col_clusters) {
                throw Error(Errc::ConfigInvalid,
                            "column label " + std::to_string(v) + " outside 1.." +
                                std::to_string(n_col_clusters));
            }
            ++count[static_cast<std::size_t>(v - 1)];
        }
        for (int r = 0; r < n_col_clusters; ++r) {
            if (count[static_cast<std::size_t>(r)] == 0) {
                throw Error(Errc::EmptyColumnCluster,
                            "column cluster " + std::to_string(r + 1) + " is empty");
            }
        }
    }
};

/// Hash of one column cluster's membership (ascending column indices), used
/// to tie eigendecomposition caches to the labels they were built from.
inline std::uint64_t column_cluster_hash(const std::vector<int>& col_labels, int cluster_1based) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    mix(static_cast<std::uint64_t>(cluster_1based));
    for (std::size_t j = 0; j < col_labels.size(); ++j) {
        if (col_labels[j] == cluster_1based) mix(static_cast<std::uint64_t>(j) + 0x9e3779b97f4a7c15ull);
    }
    return h;
}

/// Free parameters of one co-cluster block.  tau + xi is constrained to the
/// model's total variance budget c_delta.
struct BlockParameters {
    double mu = 0.0;
    double tau = 1.0;
    double xi = 1.0;
    double alpha = 3.0;
    double beta = 1.0;

    void check(double c_delta) const {
        if (!std::isfinite(mu)) {
            throw Error(Errc::NonFiniteValue, "block mean is not finite");
        }
        if (!(tau >= 0.0) || !(xi >= 0.0) || !(alpha > 0.0) || !(beta > 0.0)) {
            throw Error(Errc::NonPositiveParameter,
                        "block parameters require tau, xi >= 0 and alpha, beta > 0");
        }
        if (std::fabs(tau + xi - c_delta) > 1e-10) {
            throw Error(Errc::ConfigInvalid, "tau + xi deviates from c_delta by more than 1e-10");
        }
    }

    double snr() const { return xi > 0.0 ? tau / xi : std::numeric_limits<double>::infinity(); }
};

/// K x R grid of block parameters; accessors are 0-based.
struct ThetaGrid {
    int K = 0;
    int R = 0;
    std::vector<BlockParameters> blocks;

    ThetaGrid() = default;
    ThetaGrid(int k, int r) : K(k), R(r), blocks(static_cast<std::size_t>(k) * static_cast<std::size_t>(r)) {}

    BlockParameters& at(int k, int r) { return blocks[static_cast<std::size_t>(k) * static_cast<std::size_t>(R) + static_cast<std::size_t>(r)]; }
    const BlockParameters& at(int k, int r) const { return blocks[static_cast<std::size_t>(k) * static_cast<std::size_t>(R) + static_cast<std::size_t>(r)]; }

    void check(double c_delta) const {
        if (static_cast<int>(blocks.size()) != K * R) {
            throw Error(Errc::DimensionMismatch, "theta grid size does not match K * R");
        }
        for (const auto& b : blocks) b.check(c_delta);
    }
};

/// Model configuration: cluster counts, kernel family, variance budget, and
/// initial kernel parameters (one vector per column cluster; empty means a
/// data-driven default is filled in by the fitter).
struct ModelSpec {
    int K = 1;
    int R = 1;
    KernelKind kernel = KernelKind::Exponential;
    double c_delta = 10.0;
    std::vector<Eigen::VectorXd> phi;

    void check() const {
        if (K < 1 || R < 1) {
            throw Error(Errc::ConfigInvalid, "model requires K >= 1 and R >= 1");
        }
        if (!(c_delta > 0.0) || !std::isfinite(c_delta)) {
            throw Error(Errc::NonPositiveParameter, "c_delta must be positive and finite");
        }
        if (!phi.empty()) {
            if (static_cast<int>(phi.size()) != R) {
                throw Error(Errc::DimensionMismatch, "phi must have one vector per column cluster");
            }
            for (const auto& v : phi) {
                KernelParams p;
                p.kind = kernel;
                p.values = v;
                p.check();
            }
        }
    }
};

} // namespace spacoclust
