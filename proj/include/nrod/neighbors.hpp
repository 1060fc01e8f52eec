// SPDX-License-Identifier: Apache-2.0
#ifndef NROD_NEIGHBORS_HPP
#define NROD_NEIGHBORS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "nrod/matrix.hpp"

namespace nrod {

enum class Backend { kAuto, kBrute, kKdTree, kBallTree };

Backend backend_from_string(const std::string& name);
std::string backend_name(Backend b);

/// k nearest neighbors of one query point. Distances are sorted ascending;
/// points at equal distance are ordered by ascending point index, so every
/// backend returns the same list for the same query.
struct NeighborList {
    std::vector<std::size_t> indices;
    std::vector<double> distances;
};

/// Exact Euclidean k-NN over the rows of a matrix. The index keeps a
/// pointer to the matrix and never copies or mutates it; the caller must
/// keep the matrix alive for the lifetime of the index. Queries are const
/// and safe to run concurrently.
///
/// Backend kAuto picks a KD tree for dimension <= 20 and a ball tree above
/// that; all backends return identical results, trees are purely a speed
/// choice.
class NeighborIndex {
public:
    static NeighborIndex build(const Matrix& points, Backend backend = Backend::kAuto,
                               std::size_t leaf_size = 16);

    Backend backend() const { return backend_; }
    std::size_t size() const { return points_->rows; }

    /// k nearest rows to row query_index. With include_self the query row
    /// itself is a candidate (at distance zero); otherwise it is skipped.
    NeighborList query(std::size_t query_index, std::size_t k, bool include_self) const;

    /// query() for every row. Parallelized internally; output order is by
    /// row index regardless of scheduling.
    std::vector<NeighborList> query_all(std::size_t k, bool include_self) const;

private:
    NeighborIndex() = default;
    void build_tree(std::size_t leaf_size);
    std::size_t build_node(std::size_t begin, std::size_t end, std::size_t leaf_size);

    struct Node {
        std::size_t begin = 0, end = 0;  // range in order_
        std::ptrdiff_t left = -1, right = -1;
        double radius = 0.0;  // ball tree only
    };

    const Matrix* points_ = nullptr;
    Backend backend_ = Backend::kBrute;
    std::vector<Node> nodes_;
    std::vector<std::size_t> order_;   // row indices, permuted by the build
    std::vector<double> boxes_;        // KD: per node, d mins then d maxs
    std::vector<double> centers_;      // ball: per node, d centroid coords
};

}  // namespace nrod

#endif  // NROD_NEIGHBORS_HPP
