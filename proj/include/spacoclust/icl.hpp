#pragma once

// Integrated completed likelihood criterion used for model comparison.

#include <cmath>

#include "spacoclust/errors.hpp"

namespace spacoclust {

/// ICL = logL - n log K - p log R - (4 K R + dim_phi R) / 2 * log(n p).
/// The label terms charge each assignment its uniform coding cost; the last
/// term is the BIC-style penalty for 4 free parameters per block plus the
/// kernel parameters of each column cluster.
inline double icl(double loglik, long n, long p, int K, int R, int dim_phi) {
    if (n < 1 || p < 1 || K < 1 || R < 1 || dim_phi < 0) {
        throw Error(Errc::ConfigInvalid, "icl: require n, p, K, R >= 1 and dim_phi >= 0");
    }
    const double np = static_cast<double>(n) * static_cast<double>(p);
    return loglik - static_cast<double>(n) * std::log(static_cast<double>(K)) -
           static_cast<double>(p) * std::log(static_cast<double>(R)) -
           0.5 * (4.0 * K * R + static_cast<double>(dim_phi) * R) * std::log(np);
}

} // namespace spacoclust
