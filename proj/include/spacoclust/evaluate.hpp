#pragma once

// Clustering error rate: the fraction of item pairs on which two labelings
// disagree about co-membership.  Invariant under label permutation on either
// side, symmetric in its arguments, and zero exactly when the partitions
// coincide.

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "spacoclust/errors.hpp"

namespace spacoclust {

inline double cer(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) {
        throw Error(Errc::LengthMismatch, "label vectors have different lengths");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw Error(Errc::TooShort, "need at least two items to compare partitions");
    }

    // Compact both alphabets, then count the contingency table; pair counts
    // give the number of co-membership disagreements without touching all
    // O(n^2) pairs.
    std::unordered_map<int, int> map_a;
    std::unordered_map<int, int> map_b;
    std::vector<int> ca(n);
    std::vector<int> cb(n);
    for (std::size_t i = 0; i < n; ++i) {
        ca[i] = static_cast<int>(map_a.try_emplace(a[i], static_cast<int>(map_a.size())).first->second);
        cb[i] = static_cast<int>(map_b.try_emplace(b[i], static_cast<int>(map_b.size())).first->second);
    }
    const std::size_t ka = map_a.size();
    const std::size_t kb = map_b.size();

    std::vector<std::uint64_t> count_a(ka, 0);
    std::vector<std::uint64_t> count_b(kb, 0);
    std::vector<std::uint64_t> joint(ka * kb, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++count_a[static_cast<std::size_t>(ca[i])];
        ++count_b[static_cast<std::size_t>(cb[i])];
        ++joint[static_cast<std::size_t>(ca[i]) * kb + static_cast<std::size_t>(cb[i])];
    }

    auto pairs = [](std::uint64_t m) { return m * (m - 1) / 2; };
    std::uint64_t same_a = 0;
    std::uint64_t same_b = 0;
    std::uint64_t same_both = 0;
    for (std::uint64_t m : count_a) same_a += pairs(m);
    for (std::uint64_t m : count_b) same_b += pairs(m);
    for (std::uint64_t m : joint) same_both += pairs(m);

    const std::uint64_t disagreements = same_a + same_b - 2 * same_both;
    const std::uint64_t total = pairs(static_cast<std::uint64_t>(n));
    return static_cast<double>(disagreements) / static_cast<double>(total);
}

} // namespace spacoclust
