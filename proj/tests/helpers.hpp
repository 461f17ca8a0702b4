#pragma once

// Shared oracles and fixtures for the test suite.  Everything here is an
// independent re-derivation of a result the library computes another way:
// quadrature instead of closed forms, dense factorizations instead of eigen
// caches, exhaustive enumeration instead of sampled ratios.  Keeping them in
// one place lets the unit tests and the acceptance suite check against the
// same reference implementations.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include <Eigen/Dense>

#include "spacoclust/core.hpp"
#include "spacoclust/math/rng.hpp"

namespace testhelp {

// ---- generic adaptive quadrature ----

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int max_depth = 40) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// ---- scale-mixture row density by quadrature ----

/// Integrates N_p(x; mu 1, s Delta) * InvGamma(s; alpha, beta) over s in
/// (0, inf) with a mode-centered substitution and dense linear algebra; no
/// code is shared with the library's closed form.
inline double mixture_density_quadrature(const Eigen::VectorXd& x, double mu,
                                         const Eigen::MatrixXd& delta, double alpha, double beta) {
    const double p = static_cast<double>(x.size());
    Eigen::LLT<Eigen::MatrixXd> llt(delta);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("mixture_density_quadrature: delta not positive definite");
    }
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < delta.rows(); ++i) {
        logdet += 2.0 * std::log(Eigen::MatrixXd(llt.matrixL())(i, i));
    }
    const Eigen::VectorXd centered = x.array() - mu;
    const double quad = centered.dot(llt.solve(centered));

    constexpr double log_2pi = 1.8378770664093454835606594728112;
    auto log_integrand = [&](double s) {
        return -0.5 * p * (log_2pi + std::log(s)) - 0.5 * logdet - 0.5 * quad / s +
               alpha * std::log(beta) - std::lgamma(alpha) - (alpha + 1.0) * std::log(s) - beta / s;
    };

    // The integrand is maximal near the posterior mode; centering the
    // substitution there keeps the transformed integrand well scaled.
    const double mode = (0.5 * quad + beta) / (0.5 * p + alpha + 1.0);
    const double shift = log_integrand(mode);

    auto transformed = [&](double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        const double s = mode * t / (1.0 - t);
        const double jac = mode / ((1.0 - t) * (1.0 - t));
        const double lg = log_integrand(s) - shift;
        if (lg < -700.0) return 0.0;
        return std::exp(lg) * jac;
    };

    const double integral = adaptive_simpson(transformed, 0.0, 1.0, 1e-12);
    return std::exp(shift) * integral;
}

// ---- inverse-gamma reference densities ----

inline double ig_logpdf(double alpha, double beta, double s) {
    return alpha * std::log(beta) - std::lgamma(alpha) - (alpha + 1.0) * std::log(s) - beta / s;
}

/// CDF of InvGamma(alpha, beta) by quadrature of the density on (0, s].
inline double ig_cdf_quadrature(double alpha, double beta, double s) {
    auto pdf = [&](double u) { return u <= 0.0 ? 0.0 : std::exp(ig_logpdf(alpha, beta, u)); };
    return adaptive_simpson(pdf, 0.0, s, 1e-12);
}

// ---- pairwise clustering disagreement, by definition ----

inline double cer_bruteforce(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    long disagreements = 0;
    long total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool same_a = a[i] == a[j];
            const bool same_b = b[i] == b[j];
            if (same_a != same_b) ++disagreements;
            ++total;
        }
    }
    return static_cast<double>(disagreements) / static_cast<double>(total);
}

// ---- exhaustive proposal path enumeration ----

/// Exact distribution over candidate labelings of one proposal move, obtained
/// by walking every cluster-pair draw and every member selection the sampler
/// could make.  Labels are 1-based to match the public proposal API.
struct ProposalDist {
    std::map<std::vector<int>, double> prob;
    double infeasible = 0.0;

    double probability_of(const std::vector<int>& candidate) const {
        auto it = prob.find(candidate);
        return it == prob.end() ? 0.0 : it->second;
    }
};

namespace detail {

inline void combinations_rec(const std::vector<int>& items, int choose, std::size_t start,
                             std::vector<int>& current, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(current.size()) == choose) {
        out.push_back(current);
        return;
    }
    for (std::size_t i = start; i < items.size(); ++i) {
        current.push_back(items[i]);
        combinations_rec(items, choose, i + 1, current, out);
        current.pop_back();
    }
}

inline std::vector<std::vector<int>> combinations(const std::vector<int>& items, int choose) {
    std::vector<std::vector<int>> out;
    std::vector<int> current;
    combinations_rec(items, choose, 0, current, out);
    return out;
}

inline void ordered_tuples_rec(const std::vector<int>& items, int length, std::vector<int>& current,
                               std::vector<bool>& used, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(current.size()) == length) {
        out.push_back(current);
        return;
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        current.push_back(items[i]);
        ordered_tuples_rec(items, length, current, used, out);
        current.pop_back();
        used[i] = false;
    }
}

/// All ordered selections of `length` distinct entries of `items`.
inline std::vector<std::vector<int>> ordered_tuples(const std::vector<int>& items, int length) {
    std::vector<std::vector<int>> out;
    std::vector<int> current;
    std::vector<bool> used(items.size(), false);
    ordered_tuples_rec(items, length, current, used, out);
    return out;
}

inline std::vector<std::vector<int>> members_by_cluster(const std::vector<int>& labels, int R) {
    std::vector<std::vector<int>> members(static_cast<std::size_t>(R));
    for (std::size_t j = 0; j < labels.size(); ++j) {
        members[static_cast<std::size_t>(labels[j] - 1)].push_back(static_cast<int>(j));
    }
    return members;
}

} // namespace detail

/// Batch move: one ordered cluster pair, one uniform size-m subset.
inline ProposalDist enumerate_m1(const std::vector<int>& labels, int R, int m) {
    ProposalDist dist;
    const auto members = detail::members_by_cluster(labels, R);
    const double pair_prob = 1.0 / (static_cast<double>(R) * static_cast<double>(R - 1));
    for (int g1 = 1; g1 <= R; ++g1) {
        for (int g2 = 1; g2 <= R; ++g2) {
            if (g1 == g2) continue;
            const auto& source = members[static_cast<std::size_t>(g1 - 1)];
            if (static_cast<int>(source.size()) <= m) {
                dist.infeasible += pair_prob;
                continue;
            }
            const auto subsets = detail::combinations(source, m);
            const double subset_prob = pair_prob / static_cast<double>(subsets.size());
            for (const auto& subset : subsets) {
                std::vector<int> candidate = labels;
                for (int j : subset) candidate[static_cast<std::size_t>(j)] = g2;
                dist.prob[candidate] += subset_prob;
            }
        }
    }
    return dist;
}

/// Scattered move: m independent ordered cluster pairs, then per source
/// cluster an ordered selection of the members that leave, matched to the
/// pairs naming that cluster in draw order.
inline ProposalDist enumerate_m2(const std::vector<int>& labels, int R, int m) {
    ProposalDist dist;
    const auto members = detail::members_by_cluster(labels, R);

    // Ordered cluster pairs in the same encoding the sampler draws from.
    std::vector<std::pair<int, int>> pairs;
    for (int g1 = 1; g1 <= R; ++g1) {
        for (int g2 = 1; g2 <= R; ++g2) {
            if (g1 != g2) pairs.emplace_back(g1, g2);
        }
    }
    const double seq_prob = std::pow(static_cast<double>(pairs.size()), -static_cast<double>(m));

    std::vector<std::size_t> seq(static_cast<std::size_t>(m), 0);
    for (;;) {
        std::vector<int> b_out(static_cast<std::size_t>(R), 0);
        std::vector<int> b_in(static_cast<std::size_t>(R), 0);
        for (int h = 0; h < m; ++h) {
            const auto& [g1, g2] = pairs[seq[static_cast<std::size_t>(h)]];
            ++b_out[static_cast<std::size_t>(g1 - 1)];
            ++b_in[static_cast<std::size_t>(g2 - 1)];
        }
        bool feasible = true;
        for (int r = 0; r < R; ++r) {
            const int pr = static_cast<int>(members[static_cast<std::size_t>(r)].size());
            if (b_out[static_cast<std::size_t>(r)] > pr ||
                pr - b_out[static_cast<std::size_t>(r)] + b_in[static_cast<std::size_t>(r)] < 1) {
                feasible = false;
                break;
            }
        }
        if (!feasible) {
            dist.infeasible += seq_prob;
        } else {
            // Cartesian product of the per-cluster ordered selections.
            std::vector<int> sources;
            std::vector<std::vector<std::vector<int>>> tuples_per_source;
            double pick_prob = 1.0;
            for (int r = 0; r < R; ++r) {
                const int b1 = b_out[static_cast<std::size_t>(r)];
                if (b1 == 0) continue;
                sources.push_back(r + 1);
                tuples_per_source.push_back(
                    detail::ordered_tuples(members[static_cast<std::size_t>(r)], b1));
                pick_prob /= static_cast<double>(tuples_per_source.back().size());
            }
            std::vector<std::size_t> choice(sources.size(), 0);
            for (;;) {
                std::vector<int> candidate = labels;
                for (std::size_t a = 0; a < sources.size(); ++a) {
                    const auto& tuple = tuples_per_source[a][choice[a]];
                    int slot = 0;
                    for (int h = 0; h < m; ++h) {
                        const auto& [g1, g2] = pairs[seq[static_cast<std::size_t>(h)]];
                        if (g1 != sources[a]) continue;
                        candidate[static_cast<std::size_t>(tuple[static_cast<std::size_t>(slot)])] = g2;
                        ++slot;
                    }
                }
                dist.prob[candidate] += seq_prob * pick_prob;

                std::size_t pos = 0;
                while (pos < choice.size()) {
                    if (++choice[pos] < tuples_per_source[pos].size()) break;
                    choice[pos] = 0;
                    ++pos;
                }
                if (pos == choice.size()) break;
            }
        }

        std::size_t pos = 0;
        while (pos < seq.size()) {
            if (++seq[pos] < pairs.size()) break;
            seq[pos] = 0;
            ++pos;
        }
        if (pos == seq.size()) break;
    }
    return dist;
}

/// All labelings of p items into R non-empty clusters, canonical up to the
/// requirement that every cluster appears (used to sweep proposal configs).
inline std::vector<std::vector<int>> nonempty_labelings(int p, int R) {
    std::vector<std::vector<int>> out;
    std::vector<int> labels(static_cast<std::size_t>(p), 1);
    for (;;) {
        std::vector<int> count(static_cast<std::size_t>(R), 0);
        for (int v : labels) ++count[static_cast<std::size_t>(v - 1)];
        if (std::all_of(count.begin(), count.end(), [](int c) { return c > 0; })) {
            out.push_back(labels);
        }
        int pos = p - 1;
        while (pos >= 0 && labels[static_cast<std::size_t>(pos)] == R) {
            labels[static_cast<std::size_t>(pos)] = 1;
            --pos;
        }
        if (pos < 0) break;
        ++labels[static_cast<std::size_t>(pos)];
    }
    return out;
}

// ---- fixtures ----

/// Dataset with the given values and evenly spaced collinear coordinates.
inline spacoclust::ExpressionDataset line_dataset(Eigen::MatrixXd values, double step = 25.0) {
    spacoclust::ExpressionDataset ds;
    const Eigen::Index n = values.rows();
    const Eigen::Index p = values.cols();
    ds.values = std::move(values);
    for (Eigen::Index i = 0; i < n; ++i) ds.row_ids.push_back("g" + std::to_string(i + 1));
    for (Eigen::Index j = 0; j < p; ++j) {
        ds.col_ids.push_back("s" + std::to_string(j + 1));
        ds.coords.push_back(spacoclust::Coord{static_cast<double>(j) * step, 0.0});
    }
    return ds;
}

/// Fresh temporary directory under TMPDIR.
inline std::string make_temp_dir() {
    std::string tmpl = "/tmp/spacoclust_test_XXXXXX";
    char* made = mkdtemp(tmpl.data());
    if (made == nullptr) {
        throw std::runtime_error("mkdtemp failed");
    }
    return std::string(made);
}

/// Redirects the process stdout to a file between construction and stop().
class StdoutCapture {
public:
    StdoutCapture() : path_(make_temp_dir() + "/stdout.txt") {
        std::fflush(stdout);
        saved_ = dup(1);
        const int fd = open(path_.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        dup2(fd, 1);
        close(fd);
    }

    std::string stop() {
        std::fflush(stdout);
        dup2(saved_, 1);
        close(saved_);
        std::string content;
        if (FILE* f = std::fopen(path_.c_str(), "rb")) {
            char buf[4096];
            std::size_t got;
            while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) {
                content.append(buf, got);
            }
            std::fclose(f);
        }
        return content;
    }

private:
    int saved_ = -1;
    std::string path_;
};

} // namespace testhelp
