#pragma once

// Model selection: fit a grid of (K, R, kernel) configurations under a shared
// seed and rank them by the integrated completed likelihood.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "spacoclust/core.hpp"
#include "spacoclust/errors.hpp"
#include "spacoclust/estimation.hpp"
#include "spacoclust/icl.hpp"

namespace spacoclust {

struct GridEntry {
    int K = 1;
    int R = 1;
    KernelKind kernel = KernelKind::Exponential;
};

struct SelectionRow {
    GridEntry entry;
    double loglik = std::numeric_limits<double>::quiet_NaN();
    double icl = std::numeric_limits<double>::quiet_NaN();
    int best_start = 0;
    int best_iteration = 0;
    std::string status = "ok"; // error category name on failure
};

struct SelectionResult {
    std::vector<SelectionRow> table;
    int best_index = -1; // into table
    FitResult best_fit;
};

/// Index of the row with the largest finite ICL; ties go to the earlier row.
/// Returns -1 when no row succeeded.
inline int pick_best_row(const std::vector<SelectionRow>& table) {
    int best = -1;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (!std::isfinite(table[i].icl)) continue;
        if (best < 0 || table[i].icl > table[static_cast<std::size_t>(best)].icl) {
            best = static_cast<int>(i);
        }
    }
    return best;
}

/// Fits every grid entry with the same seed and data, records log-likelihood
/// and ICL per entry, and returns the winner.  Individual fit failures are
/// flagged in the table instead of aborting the sweep.
inline SelectionResult select(const ExpressionDataset& ds, const std::vector<GridEntry>& grid,
                              double c_delta, const FitConfig& config) {
    if (grid.empty()) {
        throw Error(Errc::ConfigInvalid, "selection grid is empty");
    }
    SelectionResult out;
    std::vector<FitResult> fits(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        SelectionRow row;
        row.entry = grid[i];
        ModelSpec spec;
        spec.K = grid[i].K;
        spec.R = grid[i].R;
        spec.kernel = grid[i].kernel;
        spec.c_delta = c_delta;
        try {
            fits[i] = fit(ds, spec, config);
            row.loglik = fits[i].best_loglik;
            row.icl = fits[i].icl;
            row.best_start = fits[i].best_start;
            row.best_iteration = fits[i].best_iteration;
        } catch (const Error& e) {
            row.status = errc_name(e.code());
        }
        out.table.push_back(std::move(row));
    }
    out.best_index = pick_best_row(out.table);
    if (out.best_index < 0) {
        throw Error(Errc::OptimizerFailure, "every grid entry failed to fit");
    }
    out.best_fit = std::move(fits[static_cast<std::size_t>(out.best_index)]);
    return out;
}

} // namespace spacoclust
