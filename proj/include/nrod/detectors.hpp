// SPDX-License-Identifier: Apache-2.0
#ifndef NROD_DETECTORS_HPP
#define NROD_DETECTORS_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nrod/matrix.hpp"
#include "nrod/neighbors.hpp"
#include "nrod/representatives.hpp"

namespace nrod {

/// KNN score aggregate: distance to the kth nearest other point, or the
/// mean distance over all k nearest others.
enum class KnnAggregate { kKth, kMean };

/// Everything needed to instantiate any detector in the suite. Unused
/// fields are ignored by detectors that do not take them.
struct DetectorConfig {
    std::string name = "knn";  // knn lof odin nc mod mcd iforest pcad external
    std::size_t k = 5;
    KnnAggregate aggregate = KnnAggregate::kKth;
    std::size_t mod_iterations = 3;
    std::size_t trees = 100;
    std::size_t subsample = 256;
    std::size_t mcd_starts = 50;
    std::size_t mcd_csteps = 20;
    double variance_floor = 1e-10;
    std::uint64_t seed = 1;
    Backend backend = Backend::kAuto;
    std::filesystem::path scores_path;  // only for name == "external"
};

/// Canonical benchmark order of the implemented detectors.
const std::vector<std::string>& detector_names();

/// True for detectors that consume a neighborhood size k.
bool is_knn_based(const std::string& name);

/// Search diagnostics for score_mcd, mostly for tests: C-step determinant
/// monotonicity is the defining property of the refinement and is tracked
/// on every step of every start.
struct McdDiagnostics {
    bool cstep_monotone = true;
    std::size_t csteps_total = 0;
    std::size_t best_start = 0;
    double best_logdet = 0.0;
};

/// Distance to the kth nearest other point (aggregate kth), or the mean
/// distance to all k nearest others (aggregate mean). Requires 1 <= k <= n-1.
std::vector<double> score_knn(const Matrix& x, std::size_t k,
                              KnnAggregate aggregate = KnnAggregate::kKth,
                              Backend backend = Backend::kAuto);

/// Local outlier factor over the k nearest other points. Requires
/// 1 <= k <= n-1. Mean reachability is clamped below at 1e-12 so groups of
/// coincident points get a huge finite density instead of NaN.
std::vector<double> score_lof(const Matrix& x, std::size_t k, Backend backend = Backend::kAuto);

/// Negated in-degree of the directed k-NN graph, so that isolated points
/// (in-degree 0) score highest. Values lie in [-(n-1), 0]. Requires
/// 1 <= k <= n-1.
std::vector<double> score_odin(const Matrix& x, std::size_t k, Backend backend = Backend::kAuto);

/// Number of strictly negative weights when the point is written as an
/// affine (sum-to-one) least-squares combination of its k nearest other
/// points. Integer-valued scores in [0, k]. Requires 2 <= k <= n-1.
std::vector<double> score_nc(const Matrix& x, std::size_t k, Backend backend = Backend::kAuto);

/// The affine least-squares weights behind score_nc: minimizes
/// |point - w^T neighbors|^2 subject to sum(w) = 1, with a 1e-8 ridge on
/// the Gram matrix so affinely dependent neighborhoods stay solvable.
/// `neighbors` is k x d with one neighbor per row.
std::vector<double> nc_weights(const double* point, const Matrix& neighbors);

/// Displacement of each point under `iterations` rounds of mean shift
/// (self-inclusive neighborhoods, so 1 <= k <= n).
std::vector<double> score_mod(const Matrix& x, std::size_t k, std::size_t iterations = 3,
                              Backend backend = Backend::kAuto);

/// Mahalanobis distance to the minimum-covariance-determinant half sample,
/// located by a FAST-MCD style search: n_starts random (d+1)-point seeds,
/// each refined by C-steps on h = floor((n+d+1)/2) points until the
/// covariance determinant stops shrinking. Requires n >= d + 2.
std::vector<double> score_mcd(const Matrix& x, std::uint64_t seed, std::size_t n_starts = 50,
                              std::size_t max_csteps = 20,
                              McdDiagnostics* diagnostics = nullptr);

/// Isolation forest anomaly score in (0, 1); 0.5 is the neutral point.
/// Requires n >= 2 and subsample >= 2.
std::vector<double> score_iforest(const Matrix& x, std::uint64_t seed, std::size_t n_trees = 100,
                                  std::size_t subsample = 256);

/// Sum over principal components of the squared projection of the centered
/// point divided by the component's eigenvalue — a Mahalanobis form in the
/// PCA basis. Components with eigenvalue <= variance_floor are dropped.
/// Requires n >= 2.
std::vector<double> score_pcad(const Matrix& x, double variance_floor = 1e-10);

/// Scores produced outside this process: plain text, one decimal real per
/// line, LF or CRLF. Throws DataError on length mismatch or non-finite
/// values.
std::vector<double> external_scores(const std::filesystem::path& path, std::size_t expected_n);

/// Wraps a config into a reusable scoring function. Neighborhood sizes are
/// clamped to what the scored matrix can support (k-NN detectors see at
/// most rows-1 neighbors, MOD at most rows), which keeps NR sweeps running
/// when representatives collapse below k; a matrix too small even for the
/// clamped detector still throws. Unknown names throw immediately.
Detector make_detector(const DetectorConfig& config);

}  // namespace nrod

#endif  // NROD_DETECTORS_HPP
