#pragma once

// Bound-constrained limited-memory quasi-Newton minimizer.
//
// Follows the classic structure: a generalized Cauchy point along the
// projected gradient path fixes the active set, a subspace step refines the
// free variables, and a backtracking line search (with a curvature check
// before any history update) supplies globalization.  The limited-memory
// Hessian approximation B = theta I - W M W' is formed densely; problem
// dimensions in this library are a few dozen at most, so the dense form is
// both simpler and exact.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "spacoclust/errors.hpp"

namespace spacoclust {
namespace optim {

struct LbfgsbOptions {
    int max_iterations = 60;
    int history = 6;
    int max_backtracks = 25;
    double pg_tolerance = 1e-6;
    double f_tolerance = 2.2e-9;
};

struct LbfgsbResult {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    int n_function_evals = 0;
    bool converged = false;
};

namespace detail {

inline Eigen::VectorXd clip_to_box(Eigen::VectorXd x, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x[i] = std::min(std::max(x[i], lower[i]), upper[i]);
    }
    return x;
}

inline double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                      const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    double norm = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double step = std::min(std::max(x[i] - g[i], lower[i]), upper[i]) - x[i];
        norm = std::max(norm, std::fabs(step));
    }
    return norm;
}

} // namespace detail

class LbfgsbSolver {
public:
    explicit LbfgsbSolver(LbfgsbOptions options = {}) : opt_(options) {}

    LbfgsbResult minimize(const std::function<double(const Eigen::VectorXd&)>& func,
                          const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                          const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper) const {
        const Eigen::Index n = x0.size();
        if (lower.size() != n || upper.size() != n) {
            throw Error(Errc::DimensionMismatch, "bounds must match the variable count");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (lower[i] > upper[i]) {
                throw Error(Errc::ConfigInvalid, "lower bound exceeds upper bound");
            }
        }

        LbfgsbResult res;
        res.x = detail::clip_to_box(x0, lower, upper);
        res.f = func(res.x);
        ++res.n_function_evals;
        if (!std::isfinite(res.f)) {
            throw Error(Errc::OptimizerFailure, "objective is not finite at the initial point");
        }
        Eigen::VectorXd g = grad(res.x);

        std::vector<Eigen::VectorXd> S;
        std::vector<Eigen::VectorXd> Y;

        for (int it = 0; it < opt_.max_iterations; ++it) {
            res.iterations = it + 1;
            if (detail::projected_gradient_norm(res.x, g, lower, upper) <= opt_.pg_tolerance) {
                res.converged = true;
                res.iterations = it;
                break;
            }

            const Eigen::MatrixXd B = hessian_approximation(n, S, Y);
            Eigen::VectorXd xc;
            std::vector<bool> free_mask;
            cauchy_point(res.x, g, lower, upper, B, xc, free_mask);
            const Eigen::VectorXd xbar = subspace_step(res.x, g, lower, upper, B, xc, free_mask);

            Eigen::VectorXd dir = xbar - res.x;
            if (g.dot(dir) >= 0.0) {
                dir = xc - res.x;
            }
            if (g.dot(dir) >= 0.0) {
                dir = detail::clip_to_box(res.x - g, lower, upper) - res.x;
            }
            const double slope = g.dot(dir);
            if (!(slope < 0.0)) {
                res.converged = true;
                break;
            }

            // Backtracking Armijo search on [0, 1]; the segment stays in the box.
            double alpha = 1.0;
            double f_new = std::numeric_limits<double>::infinity();
            Eigen::VectorXd x_new;
            bool accepted = false;
            for (int bt = 0; bt < opt_.max_backtracks; ++bt) {
                x_new = res.x + alpha * dir;
                f_new = func(x_new);
                ++res.n_function_evals;
                if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * alpha * slope) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) break;

            const Eigen::VectorXd g_new = grad(x_new);
            const Eigen::VectorXd s = x_new - res.x;
            const Eigen::VectorXd y = g_new - g;
            const double sy = s.dot(y);
            if (sy > 1e-10 * s.norm() * y.norm()) {
                S.push_back(s);
                Y.push_back(y);
                if (static_cast<int>(S.size()) > opt_.history) {
                    S.erase(S.begin());
                    Y.erase(Y.begin());
                }
            }

            const double f_drop = res.f - f_new;
            res.x = x_new;
            res.f = f_new;
            g = g_new;
            if (f_drop <= opt_.f_tolerance * std::max(1.0, std::fabs(res.f))) {
                res.converged = true;
                break;
            }
        }
        return res;
    }

private:
    LbfgsbOptions opt_;

    static Eigen::MatrixXd hessian_approximation(Eigen::Index n, const std::vector<Eigen::VectorXd>& S,
                                                 const std::vector<Eigen::VectorXd>& Y) {
        const int m = static_cast<int>(S.size());
        if (m == 0) {
            return Eigen::MatrixXd::Identity(n, n);
        }
        const double theta = Y.back().squaredNorm() / Y.back().dot(S.back());

        Eigen::MatrixXd W(n, 2 * m);
        for (int i = 0; i < m; ++i) {
            W.col(i) = Y[static_cast<std::size_t>(i)];
            W.col(m + i) = theta * S[static_cast<std::size_t>(i)];
        }
        Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(2 * m, 2 * m);
        for (int i = 0; i < m; ++i) {
            inner(i, i) = -S[static_cast<std::size_t>(i)].dot(Y[static_cast<std::size_t>(i)]);
            for (int j = 0; j < i; ++j) {
                const double lij = S[static_cast<std::size_t>(i)].dot(Y[static_cast<std::size_t>(j)]);
                inner(m + i, j) = lij;
                inner(j, m + i) = lij;
            }
            for (int j = 0; j < m; ++j) {
                inner(m + i, m + j) =
                    theta * S[static_cast<std::size_t>(i)].dot(S[static_cast<std::size_t>(j)]);
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(inner);
        if (!lu.isInvertible()) {
            return theta * Eigen::MatrixXd::Identity(n, n);
        }
        Eigen::MatrixXd B = -W * lu.solve(W.transpose());
        B.diagonal().array() += theta;
        return B;
    }

    /// Minimizes the quadratic model along the projected gradient path.
    static void cauchy_point(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const Eigen::MatrixXd& B, Eigen::VectorXd& xc,
                             std::vector<bool>& free_mask) {
        const Eigen::Index n = x.size();
        const double inf = std::numeric_limits<double>::infinity();
        Eigen::VectorXd t(n);
        Eigen::VectorXd d = -g;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (g[i] < 0.0) {
                t[i] = std::isinf(upper[i]) ? inf : (x[i] - upper[i]) / g[i];
            } else if (g[i] > 0.0) {
                t[i] = std::isinf(lower[i]) ? inf : (x[i] - lower[i]) / g[i];
            } else {
                t[i] = inf;
            }
            if (t[i] <= 0.0) d[i] = 0.0;
        }

        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        std::sort(order.begin(), order.end(),
                  [&t](Eigen::Index a, Eigen::Index b) { return t[a] < t[b]; });

        xc = x;
        free_mask.assign(static_cast<std::size_t>(n), false);
        double t_old = 0.0;
        std::size_t pos = 0;
        while (pos < order.size() && t[order[pos]] <= 0.0) {
            ++pos;
        }

        for (;;) {
            if (d.isZero(0.0)) break;
            const double fp = g.dot(d) + (xc - x).dot(B * d);
            if (fp >= 0.0) break;
            const double fpp = d.dot(B * d);
            const double dt_star = fpp > 1e-300 ? -fp / fpp : inf;
            const double t_next = pos < order.size() ? t[order[pos]] : inf;
            const double dt = t_next - t_old;
            if (dt_star < dt) {
                xc += dt_star * d;
                break;
            }
            if (std::isinf(t_next)) {
                // Unreachable for a positive definite model, guarded anyway.
                break;
            }
            const Eigen::Index b = order[pos];
            xc += dt * d;
            xc[b] = g[b] < 0.0 ? upper[b] : lower[b];
            d[b] = 0.0;
            t_old = t_next;
            ++pos;
            while (pos < order.size() && t[order[pos]] <= t_old) {
                const Eigen::Index b2 = order[pos];
                if (d[b2] != 0.0) {
                    xc[b2] = g[b2] < 0.0 ? upper[b2] : lower[b2];
                    d[b2] = 0.0;
                }
                ++pos;
            }
        }

        for (Eigen::Index i = 0; i < n; ++i) {
            free_mask[static_cast<std::size_t>(i)] = xc[i] > lower[i] && xc[i] < upper[i];
        }
    }

    /// Refines the free variables by solving the quadratic model exactly on
    /// the free subspace, then backtracks the step into the box.
    static Eigen::VectorXd subspace_step(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                         const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                         const Eigen::MatrixXd& B, const Eigen::VectorXd& xc,
                                         const std::vector<bool>& free_mask) {
        const Eigen::Index n = x.size();
        std::vector<Eigen::Index> free_idx;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (free_mask[static_cast<std::size_t>(i)]) free_idx.push_back(i);
        }
        if (free_idx.empty()) return xc;
        const Eigen::Index nf = static_cast<Eigen::Index>(free_idx.size());

        const Eigen::VectorXd r_full = g + B * (xc - x);
        Eigen::VectorXd r(nf);
        Eigen::MatrixXd Bff(nf, nf);
        for (Eigen::Index a = 0; a < nf; ++a) {
            r[a] = r_full[free_idx[static_cast<std::size_t>(a)]];
            for (Eigen::Index b = 0; b < nf; ++b) {
                Bff(a, b) = B(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(b)]);
            }
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(Bff);
        Eigen::VectorXd du;
        if (ldlt.info() == Eigen::Success) {
            du = ldlt.solve(-r);
        } else {
            du = -r;
        }

        double alpha = 1.0;
        for (Eigen::Index a = 0; a < nf; ++a) {
            const Eigen::Index i = free_idx[static_cast<std::size_t>(a)];
            if (du[a] > 0.0 && !std::isinf(upper[i])) {
                alpha = std::min(alpha, (upper[i] - xc[i]) / du[a]);
            } else if (du[a] < 0.0 && !std::isinf(lower[i])) {
                alpha = std::min(alpha, (lower[i] - xc[i]) / du[a]);
            }
        }
        alpha = std::max(alpha, 0.0);

        Eigen::VectorXd xbar = xc;
        for (Eigen::Index a = 0; a < nf; ++a) {
            xbar[free_idx[static_cast<std::size_t>(a)]] += alpha * du[a];
        }
        return detail::clip_to_box(std::move(xbar), lower, upper);
    }
};

/// Central finite-difference gradient with per-coordinate step
/// h_j = scale * max(1, |x_j|); evaluations are clipped into the box so the
/// objective never sees out-of-bound parameters.
inline std::function<Eigen::VectorXd(const Eigen::VectorXd&)> central_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& func, const Eigen::VectorXd& lower,
    const Eigen::VectorXd& upper, double scale = 1e-6) {
    return [func, lower, upper, scale](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(x.size());
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const double h = scale * std::max(1.0, std::fabs(x[j]));
            const double hi = std::min(x[j] + h, upper[j]);
            const double lo = std::max(x[j] - h, lower[j]);
            Eigen::VectorXd xp = x;
            Eigen::VectorXd xm = x;
            xp[j] = hi;
            xm[j] = lo;
            const double denom = hi - lo;
            g[j] = denom > 0.0 ? (func(xp) - func(xm)) / denom : 0.0;
        }
        return g;
    };
}

} // namespace optim
} // namespace spacoclust
