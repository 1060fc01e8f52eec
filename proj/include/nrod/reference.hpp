// SPDX-License-Identifier: Apache-2.0
#ifndef NROD_REFERENCE_HPP
#define NROD_REFERENCE_HPP

#include <cstddef>
#include <vector>

#include "nrod/matrix.hpp"
#include "nrod/neighbors.hpp"

// Serial reference implementations. These are straight-line transcriptions
// of each definition — no spatial index, no OpenMP, no shared code with the
// optimized kernels beyond the Matrix type. The tests use them as oracles
// and the kernel benchmark compares against them, so keep them dumb.
namespace nrod::ref {

/// Exact k-NN by scanning and fully sorting all pairwise distances.
NeighborList knn_scan(const Matrix& x, std::size_t query, std::size_t k, bool include_self);
std::vector<NeighborList> knn_scan_all(const Matrix& x, std::size_t k, bool include_self);

/// Distance to the kth nearest other point ("kth"), or the mean distance
/// over the k nearest other points ("mean").
std::vector<double> knn_score(const Matrix& x, std::size_t k, bool mean_aggregate);

/// In-degree of the directed k-NN graph, negated so larger = more outlying.
std::vector<double> odin_score(const Matrix& x, std::size_t k);

/// Local outlier factor computed directly from the reachability equations.
std::vector<double> lof_score(const Matrix& x, std::size_t k);

/// One pass of replacing every point by the medoid / mean of its k nearest
/// points (self included), repeated `iterations` times.
Matrix medoid_shift(const Matrix& x, std::size_t k, std::size_t iterations);
Matrix mean_shift(const Matrix& x, std::size_t k, std::size_t iterations);

/// Member of `subset` minimizing the summed distance to the other members;
/// ties go to the lowest row index.
std::size_t medoid(const std::vector<std::size_t>& subset, const Matrix& x);

/// Displacement after `iterations` rounds of mean shift.
std::vector<double> mod_score(const Matrix& x, std::size_t k, std::size_t iterations);

/// ROC AUC by counting concordant pairs (ties count one half). O(n^2).
double auc_pair_count(const std::vector<double>& scores, const std::vector<int>& labels);

/// Squared Mahalanobis distance of every row to the column mean, using a
/// Gauss-Jordan inverse of the population covariance matrix.
std::vector<double> mahalanobis_sq(const Matrix& x);

}  // namespace nrod::ref

#endif  // NROD_REFERENCE_HPP
