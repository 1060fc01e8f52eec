// SPDX-License-Identifier: Apache-2.0
#ifndef NROD_REPRESENTATIVES_HPP
#define NROD_REPRESENTATIVES_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nrod/matrix.hpp"
#include "nrod/neighbors.hpp"

namespace nrod {

/// Any scoring function: takes an m x d matrix, returns m outlier scores
/// with larger = more outlying.
using Detector = std::function<std::vector<double>(const Matrix&)>;

/// Result of an iterated shift: same shape as the input.
struct ShiftResult {
    Matrix shifted;
    std::size_t iterations = 0;
};

/// The unique rows a shifted matrix collapsed onto, plus the map from each
/// original point to its representative.
struct RepresentativeAssignment {
    Matrix representatives;              // m x d, pairwise distinct rows
    std::vector<std::size_t> assignment; // length n, values in [0, m)

    std::size_t count() const { return representatives.rows; }
};

/// Member of `subset` with the minimal summed Euclidean distance to the
/// other members. Ties go to the lowest row index. `subset` holds row
/// indices into x and must be non-empty.
std::size_t medoid(std::span<const std::size_t> subset, const Matrix& x);

/// Iterated medoid shift: each round simultaneously replaces every row by
/// the medoid of its neighborhood on the current matrix. A neighborhood is
/// the k nearest rows including the query row itself, so k = 1 leaves the
/// matrix unchanged. iterations = 0 returns the input as-is.
///
/// Shifted rows are always rows of the current matrix (medoids are picked,
/// never synthesized), so the number of distinct rows never grows.
ShiftResult medoid_shift(const Matrix& x, std::size_t k, std::size_t iterations,
                         Backend backend = Backend::kAuto);

/// Same shift loop with the arithmetic mean of the neighborhood instead of
/// its medoid. Unlike medoid shift this synthesizes new coordinates.
ShiftResult mean_shift(const Matrix& x, std::size_t k, std::size_t iterations,
                       Backend backend = Backend::kAuto);

/// Runs medoid_shift and deduplicates the result into the unique
/// representative set (first-occurrence order). With k = 1 on distinct rows
/// every point represents itself.
RepresentativeAssignment select_representatives(const Matrix& x, std::size_t k,
                                                std::size_t iterations = 1,
                                                Backend backend = Backend::kAuto);

/// select_representatives(x, k, 1) for every k in [k_min, k_max] at once.
/// Shares one neighbor pass at k_max across all k, which is what makes
/// whole-range sweeps affordable; output[k - k_min] is identical to the
/// per-k call.
std::vector<RepresentativeAssignment> select_representatives_sweep(
    const Matrix& x, std::size_t k_min, std::size_t k_max, Backend backend = Backend::kAuto);

/// Representative-based scoring: selects representatives, scores only the
/// unique representatives with `detector`, and hands every point its
/// representative's score. Points sharing a representative share a score
/// bitwise; with k = 1 this is exactly detector(x).
std::vector<double> nr_score(const Matrix& x, std::size_t k, const Detector& detector,
                             std::size_t iterations = 1, Backend backend = Backend::kAuto);

/// nr_score on a precomputed assignment.
std::vector<double> propagate_scores(const RepresentativeAssignment& reps,
                                     const Detector& detector);

}  // namespace nrod

#endif  // NROD_REPRESENTATIVES_HPP
