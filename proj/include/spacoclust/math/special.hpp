#pragma once

// Scalar special functions used by the likelihood and posterior layers.
// Self-contained so that results are reproducible across platforms and
// standard-library implementations.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace spacoclust {
namespace math {

/// log Gamma(x) for x > 0 via a 9-term Lanczos expansion (g = 7).
/// Relative accuracy is better than 1e-13 on [0.5, 1e6].
inline double log_gamma(double x) {
    static const double lanczos[9] = {
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    };
    constexpr double half_log_two_pi = 0.91893853320467274178032973640562;
    if (!(x > 0.0)) {
        throw std::domain_error("log_gamma: argument must be positive");
    }
    if (x < 0.5) {
        // Reflection keeps the series on its accurate branch.
        constexpr double pi = 3.14159265358979323846264338327950288;
        return std::log(pi / std::sin(pi * x)) - log_gamma(1.0 - x);
    }
    const double z = x - 1.0;
    double acc = lanczos[0];
    for (int i = 1; i < 9; ++i) {
        acc += lanczos[i] / (z + static_cast<double>(i));
    }
    const double t = z + 7.5;
    return half_log_two_pi + (z + 0.5) * std::log(t) - t + std::log(acc);
}

/// log(n!) for non-negative integer n.
inline double log_factorial(long n) {
    if (n < 0) {
        throw std::domain_error("log_factorial: negative argument");
    }
    return log_gamma(static_cast<double>(n) + 1.0);
}

namespace detail {

// Series representation of P(a, x), valid and fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 10000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) {
            return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
        }
    }
    throw std::runtime_error("gamma_p_series: no convergence");
}

// Continued fraction for Q(a, x) by modified Lentz, valid for x >= a + 1.
inline double gamma_q_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) {
            return h * std::exp(-x + a * std::log(x) - log_gamma(a));
        }
    }
    throw std::runtime_error("gamma_q_cf: no convergence");
}

} // namespace detail

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
inline double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) {
        throw std::domain_error("gamma_p: require a > 0 and x >= 0");
    }
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) {
        throw std::domain_error("gamma_q: require a > 0 and x >= 0");
    }
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

/// Inverse of P(a, .): returns x with P(a, x) = p.  Newton iteration with a
/// Wilson-Hilferty start and bisection backstop; |P(a, x) - p| <= 1e-12
/// for p away from the endpoints.
inline double gamma_p_inverse(double a, double p) {
    if (!(a > 0.0)) {
        throw std::domain_error("gamma_p_inverse: require a > 0");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::domain_error("gamma_p_inverse: p outside [0, 1]");
    }
    if (p == 0.0) return 0.0;
    if (p == 1.0) return std::numeric_limits<double>::infinity();

    const double gln = log_gamma(a);
    double x;
    if (a > 1.0) {
        // Wilson-Hilferty approximation.
        const double pp = (p < 0.5) ? p : 1.0 - p;
        const double t = std::sqrt(-2.0 * std::log(pp));
        double z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
        if (p < 0.5) z = -z;
        const double wh = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
        x = a * wh * wh * wh;
        if (!(x > 0.0)) x = a * std::exp((std::log(p) + gln) / a);
    } else {
        const double t = 1.0 - a * (0.253 + a * 0.12);
        if (p < t) {
            x = std::pow(p / t, 1.0 / a);
        } else {
            x = 1.0 - std::log(1.0 - (p - t) / (1.0 - t));
        }
    }

    if (!(x > 0.0) || !std::isfinite(x)) x = a;

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        const double err = gamma_p(a, x) - p;
        if (err > 0.0) hi = x; else lo = x;
        if (std::fabs(err) < 1e-14) break;
        const double d = std::exp((a - 1.0) * std::log(x) - x - gln);
        double xn = (d > 0.0 && std::isfinite(d)) ? x - err / d
                                                  : std::numeric_limits<double>::quiet_NaN();
        if (!(xn > lo && xn < hi)) {
            // Newton left the bracket: bisect, or expand while unbounded above.
            xn = std::isinf(hi) ? 2.0 * x : 0.5 * (lo + hi);
        }
        if (std::fabs(xn - x) <= 1e-14 * std::fabs(x)) {
            x = xn;
            break;
        }
        x = xn;
    }
    return x;
}

/// Inverse of Q(a, .): returns x with Q(a, x) = q.
inline double gamma_q_inverse(double a, double q) {
    return gamma_p_inverse(a, 1.0 - q);
}

} // namespace math
} // namespace spacoclust
