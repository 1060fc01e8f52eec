// SPDX-License-Identifier: Apache-2.0
#include "nrod/detectors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>

#include "nrod/dataset.hpp"
#include "nrod/rng.hpp"

namespace nrod {

namespace {

constexpr double kLrdFloor = 1e-12;
constexpr double kNcRidge = 1e-8;
constexpr double kMcdRidge = 1e-6;

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

void check_neighbor_k(std::size_t k, std::size_t n, const char* who, std::size_t lo = 1) {
    require(n >= lo + 1, std::string(who) + ": need at least " + std::to_string(lo + 1) + " rows");
    require(k >= lo && k <= n - 1,
            std::string(who) + ": k must be in [" + std::to_string(lo) + ", " +
                std::to_string(n - 1) + "]");
}

Eigen::Map<const Eigen::VectorXd> map_row(const Matrix& x, std::size_t i) {
    return {x.row(i), static_cast<Eigen::Index>(x.cols)};
}

}  // namespace

std::vector<double> score_knn(const Matrix& x, std::size_t k, KnnAggregate aggregate,
                              Backend backend) {
    check_neighbor_k(k, x.rows, "score_knn");
    const std::vector<NeighborList> hoods = NeighborIndex::build(x, backend).query_all(k, false);
    std::vector<double> scores(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const std::vector<double>& dist = hoods[i].distances;
        if (aggregate == KnnAggregate::kKth) {
            scores[i] = dist.back();
        } else {
            double sum = 0.0;
            for (double v : dist) sum += v;
            scores[i] = sum / static_cast<double>(k);
        }
    }
    return scores;
}

std::vector<double> score_lof(const Matrix& x, std::size_t k, Backend backend) {
    check_neighbor_k(k, x.rows, "score_lof");
    const std::size_t n = x.rows;
    const std::vector<NeighborList> hoods = NeighborIndex::build(x, backend).query_all(k, false);

    std::vector<double> k_distance(n);
    for (std::size_t i = 0; i < n; ++i) k_distance[i] = hoods[i].distances.back();

    std::vector<double> lrd(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t si = 0; si < static_cast<std::int64_t>(n); ++si) {
        const std::size_t i = static_cast<std::size_t>(si);
        double sum_reach = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const std::size_t j = hoods[i].indices[p];
            sum_reach += std::max(k_distance[j], hoods[i].distances[p]);
        }
        lrd[i] = 1.0 / std::max(sum_reach / static_cast<double>(k), kLrdFloor);
    }

    std::vector<double> lof(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t si = 0; si < static_cast<std::int64_t>(n); ++si) {
        const std::size_t i = static_cast<std::size_t>(si);
        double sum_ratio = 0.0;
        for (std::size_t j : hoods[i].indices) sum_ratio += lrd[j] / lrd[i];
        lof[i] = sum_ratio / static_cast<double>(k);
    }
    return lof;
}

std::vector<double> score_odin(const Matrix& x, std::size_t k, Backend backend) {
    check_neighbor_k(k, x.rows, "score_odin");
    const std::vector<NeighborList> hoods = NeighborIndex::build(x, backend).query_all(k, false);
    std::vector<std::size_t> indegree(x.rows, 0);
    for (const NeighborList& hood : hoods)
        for (std::size_t j : hood.indices) ++indegree[j];
    std::vector<double> scores(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) scores[i] = -static_cast<double>(indegree[i]);
    return scores;
}

std::vector<double> nc_weights(const double* point, const Matrix& neighbors) {
    const auto k = static_cast<Eigen::Index>(neighbors.rows);
    const auto d = static_cast<Eigen::Index>(neighbors.cols);
    Eigen::MatrixXd nb(k, d);
    for (Eigen::Index r = 0; r < k; ++r)
        nb.row(r) = map_row(neighbors, static_cast<std::size_t>(r));
    const Eigen::Map<const Eigen::VectorXd> p(point, d);

    // Lagrangian stationarity of |p - nb^T w|^2 + ridge under sum(w) = 1.
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
    kkt.topLeftCorner(k, k) =
        2.0 * (nb * nb.transpose() + kNcRidge * Eigen::MatrixXd::Identity(k, k));
    kkt.topRightCorner(k, 1).setOnes();
    kkt.bottomLeftCorner(1, k).setOnes();
    Eigen::VectorXd rhs(k + 1);
    rhs.head(k) = 2.0 * (nb * p);
    rhs(k) = 1.0;

    const Eigen::VectorXd solution = kkt.partialPivLu().solve(rhs);
    return {solution.data(), solution.data() + k};
}

std::vector<double> score_nc(const Matrix& x, std::size_t k, Backend backend) {
    check_neighbor_k(k, x.rows, "score_nc", 2);
    const std::vector<NeighborList> hoods = NeighborIndex::build(x, backend).query_all(k, false);
    std::vector<double> scores(x.rows);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t si = 0; si < static_cast<std::int64_t>(x.rows); ++si) {
        const std::size_t i = static_cast<std::size_t>(si);
        Matrix nb(k, x.cols);
        for (std::size_t p = 0; p < k; ++p) nb.set_row(p, x.row(hoods[i].indices[p]));
        const std::vector<double> weights = nc_weights(x.row(i), nb);
        std::size_t negatives = 0;
        for (double w : weights)
            if (w < 0.0) ++negatives;
        scores[i] = static_cast<double>(negatives);
    }
    return scores;
}

std::vector<double> score_mod(const Matrix& x, std::size_t k, std::size_t iterations,
                              Backend backend) {
    require(x.rows >= 1 && k >= 1 && k <= x.rows,
            "score_mod: k must be in [1, rows]");
    const Matrix shifted = mean_shift(x, k, iterations, backend).shifted;
    std::vector<double> scores(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        scores[i] = euclidean_distance(x.row(i), shifted.row(i), x.cols);
    return scores;
}

// ---------------------------------------------------------------------------
// MCD

namespace {

struct McdModel {
    Eigen::VectorXd mean;
    Eigen::LLT<Eigen::MatrixXd> llt;
    double logdet = 0.0;
};

// Sample mean/covariance of the subset rows; fails (nullopt) when the
// covariance is not positive definite and regularization is disabled.
std::optional<McdModel> fit_subset(const Matrix& x, const std::vector<std::size_t>& subset,
                                   bool regularize) {
    const auto d = static_cast<Eigen::Index>(x.cols);
    const auto m = static_cast<double>(subset.size());
    McdModel model;
    model.mean = Eigen::VectorXd::Zero(d);
    for (std::size_t i : subset) model.mean += map_row(x, i);
    model.mean /= m;

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i : subset) {
        const Eigen::VectorXd v = map_row(x, i) - model.mean;
        cov.noalias() += v * v.transpose();
    }
    cov /= m - 1.0;

    model.llt.compute(cov);
    if (model.llt.info() != Eigen::Success) {
        if (!regularize) return std::nullopt;
        const double trace = cov.trace();
        const double ridge =
            trace > 0.0 ? kMcdRidge * trace / static_cast<double>(d) : 1e-12;
        cov.diagonal().array() += ridge;
        model.llt.compute(cov);
        if (model.llt.info() != Eigen::Success) return std::nullopt;
    }
    model.logdet = 2.0 * model.llt.matrixLLT().diagonal().array().log().sum();
    return model;
}

double mahalanobis_sq(const McdModel& model, const Matrix& x, std::size_t i) {
    const Eigen::VectorXd v = map_row(x, i) - model.mean;
    return v.dot(model.llt.solve(v));
}

// Indices of the h points closest to the model, ties broken by index,
// returned in ascending index order.
std::vector<std::size_t> closest_h(const McdModel& model, const Matrix& x, std::size_t h) {
    std::vector<std::pair<double, std::size_t>> ranked(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) ranked[i] = {mahalanobis_sq(model, x, i), i};
    std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(h) - 1,
                     ranked.end());
    std::vector<std::size_t> subset(h);
    for (std::size_t i = 0; i < h; ++i) subset[i] = ranked[i].second;
    std::sort(subset.begin(), subset.end());
    return subset;
}

struct McdStart {
    McdModel model;
    double logdet = std::numeric_limits<double>::infinity();
    std::size_t csteps = 0;
    bool monotone = true;
};

McdStart run_mcd_start(const Matrix& x, std::size_t h, std::size_t max_csteps, SplitMix64 rng) {
    const std::size_t n = x.rows;
    std::vector<std::size_t> seed_subset;
    std::unordered_set<std::size_t> used;
    auto grow = [&](std::size_t target) {
        while (seed_subset.size() < target) {
            const std::size_t pick = rng.next_below(n);
            if (used.insert(pick).second) seed_subset.push_back(pick);
        }
        std::sort(seed_subset.begin(), seed_subset.end());
    };

    grow(x.cols + 1);
    std::optional<McdModel> model = fit_subset(x, seed_subset, false);
    while (!model && seed_subset.size() < h) {  // degenerate seed: extend it
        grow(seed_subset.size() + 1);
        model = fit_subset(x, seed_subset, false);
    }
    if (!model) model = fit_subset(x, seed_subset, true);

    McdStart result;
    std::vector<std::size_t> subset = closest_h(*model, x, h);
    model = fit_subset(x, subset, true);
    result.model = std::move(*model);
    result.logdet = result.model.logdet;

    for (std::size_t step = 0; step < max_csteps; ++step) {
        std::vector<std::size_t> next = closest_h(result.model, x, h);
        if (next == subset) break;
        std::optional<McdModel> refit = fit_subset(x, next, true);
        ++result.csteps;
        const double tolerance = 1e-7 * std::max(1.0, std::abs(result.logdet));
        if (refit->logdet > result.logdet + tolerance) result.monotone = false;
        if (refit->logdet >= result.logdet) break;  // determinant stopped decreasing
        subset = std::move(next);
        result.model = std::move(*refit);
        result.logdet = result.model.logdet;
    }
    return result;
}

}  // namespace

std::vector<double> score_mcd(const Matrix& x, std::uint64_t seed, std::size_t n_starts,
                              std::size_t max_csteps, McdDiagnostics* diagnostics) {
    require(x.cols >= 1, "score_mcd: need at least 1 column");
    require(x.rows >= x.cols + 2,
            "score_mcd: need at least d + 2 rows, got " + std::to_string(x.rows));
    require(n_starts >= 1, "score_mcd: need at least 1 start");
    const std::size_t h = (x.rows + x.cols + 1) / 2;

    std::vector<McdStart> starts(n_starts);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(n_starts); ++s)
        starts[static_cast<std::size_t>(s)] = run_mcd_start(
            x, h, max_csteps, SplitMix64(substream_seed(seed, static_cast<std::uint64_t>(s))));

    std::size_t best = 0;
    McdDiagnostics diag;
    for (std::size_t s = 0; s < n_starts; ++s) {
        diag.cstep_monotone = diag.cstep_monotone && starts[s].monotone;
        diag.csteps_total += starts[s].csteps;
        if (starts[s].logdet < starts[best].logdet) best = s;
    }
    diag.best_start = best;
    diag.best_logdet = starts[best].logdet;
    if (diagnostics) *diagnostics = diag;

    const McdModel& model = starts[best].model;
    std::vector<double> scores(x.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t si = 0; si < static_cast<std::int64_t>(x.rows); ++si)
        scores[static_cast<std::size_t>(si)] =
            std::sqrt(std::max(0.0, mahalanobis_sq(model, x, static_cast<std::size_t>(si))));
    return scores;
}

// ---------------------------------------------------------------------------
// Isolation forest

namespace {

struct ForestNode {
    std::int32_t left = -1;   // -1 marks a leaf
    std::int32_t right = -1;
    std::int32_t dim = -1;
    double split = 0.0;
    std::int32_t size = 0;  // points that reached this node (leaves only)
};

struct ForestTree {
    std::vector<ForestNode> nodes;
};

std::int32_t build_forest_node(ForestTree& tree, const Matrix& x, std::vector<std::size_t>& idx,
                               std::size_t begin, std::size_t end, std::size_t depth,
                               std::size_t height_limit, SplitMix64& rng) {
    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const std::size_t count = end - begin;
    tree.nodes[id].size = static_cast<std::int32_t>(count);
    if (count <= 1 || depth >= height_limit) return id;

    // Only dimensions that actually spread within this node can split it.
    std::vector<std::int32_t> candidates;
    std::vector<double> lo(x.cols), hi(x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) {
        lo[j] = hi[j] = x.at(idx[begin], j);
        for (std::size_t p = begin + 1; p < end; ++p) {
            const double v = x.at(idx[p], j);
            lo[j] = std::min(lo[j], v);
            hi[j] = std::max(hi[j], v);
        }
        if (hi[j] > lo[j]) candidates.push_back(static_cast<std::int32_t>(j));
    }
    if (candidates.empty()) return id;

    const std::int32_t dim = candidates[rng.next_below(candidates.size())];
    // u in (0, 1] puts the split in (lo, hi], so both sides stay non-empty.
    const double split = lo[dim] + rng.next_double_open() * (hi[dim] - lo[dim]);

    std::size_t mid = begin;
    for (std::size_t p = begin; p < end; ++p)
        if (x.at(idx[p], static_cast<std::size_t>(dim)) < split) std::swap(idx[p], idx[mid++]);

    const std::int32_t left = build_forest_node(tree, x, idx, begin, mid, depth + 1,
                                                height_limit, rng);
    const std::int32_t right = build_forest_node(tree, x, idx, mid, end, depth + 1,
                                                 height_limit, rng);
    tree.nodes[id].left = left;
    tree.nodes[id].right = right;
    tree.nodes[id].dim = dim;
    tree.nodes[id].split = split;
    return id;
}

double forest_path_length(const ForestTree& tree, const double* point,
                          const std::vector<double>& c_table) {
    std::int32_t node = 0;
    double depth = 0.0;
    while (tree.nodes[node].left != -1) {
        node = point[tree.nodes[node].dim] < tree.nodes[node].split ? tree.nodes[node].left
                                                                    : tree.nodes[node].right;
        depth += 1.0;
    }
    return depth + c_table[static_cast<std::size_t>(tree.nodes[node].size)];
}

// c(m) = 2 H(m-1) - 2 (m-1)/m, the expected path length of an unsuccessful
// BST search among m points; harmonic numbers summed exactly.
std::vector<double> average_path_table(std::size_t up_to) {
    std::vector<double> c(up_to + 1, 0.0);
    double harmonic = 0.0;
    for (std::size_t m = 2; m <= up_to; ++m) {
        harmonic += 1.0 / static_cast<double>(m - 1);
        c[m] = 2.0 * harmonic -
               2.0 * static_cast<double>(m - 1) / static_cast<double>(m);
    }
    return c;
}

}  // namespace

std::vector<double> score_iforest(const Matrix& x, std::uint64_t seed, std::size_t n_trees,
                                  std::size_t subsample) {
    require(x.rows >= 2, "score_iforest: need at least 2 rows");
    require(n_trees >= 1, "score_iforest: need at least 1 tree");
    require(subsample >= 2, "score_iforest: subsample must be at least 2");
    const std::size_t n = x.rows;
    const std::size_t psi = std::min(subsample, n);
    const auto height_limit =
        static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(psi))));
    const std::vector<double> c_table = average_path_table(psi);

    std::vector<ForestTree> forest(n_trees);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t st = 0; st < static_cast<std::int64_t>(n_trees); ++st) {
        const auto t = static_cast<std::size_t>(st);
        SplitMix64 rng(substream_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> pool(n);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t j = 0; j < psi; ++j)
            std::swap(pool[j], pool[j + rng.next_below(n - j)]);
        pool.resize(psi);
        forest[t].nodes.reserve(2 * psi);
        build_forest_node(forest[t], x, pool, 0, psi, 0, height_limit, rng);
    }

    const double denom = c_table[psi];
    std::vector<double> scores(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t si = 0; si < static_cast<std::int64_t>(n); ++si) {
        const auto i = static_cast<std::size_t>(si);
        double total = 0.0;
        for (const ForestTree& tree : forest) total += forest_path_length(tree, x.row(i), c_table);
        scores[i] = std::exp2(-(total / static_cast<double>(n_trees)) / denom);
    }
    return scores;
}

std::vector<double> score_pcad(const Matrix& x, double variance_floor) {
    require(x.rows >= 2, "score_pcad: need at least 2 rows");
    require(variance_floor > 0.0, "score_pcad: variance floor must be positive");
    const auto n = static_cast<Eigen::Index>(x.rows);
    const auto d = static_cast<Eigen::Index>(x.cols);
    Eigen::MatrixXd centered(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        centered.row(i) = map_row(x, static_cast<std::size_t>(i));
    const Eigen::RowVectorXd mean = centered.colwise().mean();
    centered.rowwise() -= mean;

    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(n);  // population scaling
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("score_pcad: eigendecomposition failed");
    const Eigen::VectorXd lambda = solver.eigenvalues();
    const Eigen::MatrixXd projections = centered * solver.eigenvectors();

    std::vector<double> scores(x.rows, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < d; ++j)
            if (lambda(j) > variance_floor) sum += projections(i, j) * projections(i, j) / lambda(j);
        scores[static_cast<std::size_t>(i)] = sum;
    }
    return scores;
}

std::vector<double> external_scores(const std::filesystem::path& path, std::size_t expected_n) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open score file: " + path.string());
    std::vector<double> scores;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t a = line.find_first_not_of(" \t");
        if (a == std::string::npos) continue;
        const std::size_t b = line.find_last_not_of(" \t");
        const std::string token = line.substr(a, b - a + 1);
        double value = 0.0;
        const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc{} || end != token.data() + token.size())
            throw DataError(path.string() + ": line " + std::to_string(lineno) +
                            ": not a number: \"" + token + "\"");
        if (!std::isfinite(value))
            throw DataError(path.string() + ": line " + std::to_string(lineno) +
                            ": non-finite score: \"" + token + "\"");
        scores.push_back(value);
    }
    if (scores.size() != expected_n)
        throw DataError(path.string() + ": holds " + std::to_string(scores.size()) +
                        " scores but " + std::to_string(expected_n) + " points were scored");
    return scores;
}

const std::vector<std::string>& detector_names() {
    static const std::vector<std::string> names = {"knn", "lof", "odin", "nc",
                                                   "mod", "mcd", "iforest", "pcad"};
    return names;
}

bool is_knn_based(const std::string& name) {
    return name == "knn" || name == "lof" || name == "odin" || name == "nc" || name == "mod";
}

Detector make_detector(const DetectorConfig& config) {
    const bool known =
        config.name == "external" ||
        std::find(detector_names().begin(), detector_names().end(), config.name) !=
            detector_names().end();
    if (!known) throw std::invalid_argument("unknown detector: " + config.name);
    if (config.name == "external" && config.scores_path.empty())
        throw std::invalid_argument("external detector requires a score file path");

    return [config](const Matrix& x) -> std::vector<double> {
        const std::size_t others = x.rows > 0 ? x.rows - 1 : 0;
        const std::size_t k = std::min(config.k, others);
        if (config.name == "knn") return score_knn(x, k, config.aggregate, config.backend);
        if (config.name == "lof") return score_lof(x, k, config.backend);
        if (config.name == "odin") return score_odin(x, k, config.backend);
        if (config.name == "nc") return score_nc(x, k, config.backend);
        if (config.name == "mod")
            return score_mod(x, std::min(config.k, x.rows), config.mod_iterations,
                             config.backend);
        if (config.name == "mcd")
            return score_mcd(x, config.seed, config.mcd_starts, config.mcd_csteps);
        if (config.name == "iforest")
            return score_iforest(x, config.seed, config.trees, config.subsample);
        if (config.name == "pcad") return score_pcad(x, config.variance_floor);
        return external_scores(config.scores_path, x.rows);
    };
}

}  // namespace nrod
