// SPDX-License-Identifier: Apache-2.0
#include "nrod/neighbors.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nrod {

namespace {

// Relative slack applied to tree bounds before pruning. Bounds are computed
// in floating point; shrinking them by a hair guarantees a subtree is never
// discarded when it holds a point tied with the current worst candidate.
constexpr double kPruneSlack = 1e-10;

using Candidate = std::pair<double, std::size_t>;  // (euclidean distance, row)

/// Fixed-capacity max-heap of the k best (distance, index) pairs, ordered
/// lexicographically so ties at equal distance resolve to the lower index.
/// Comparisons happen on the rounded Euclidean distance — the value callers
/// see — so squared distances one ulp apart that round to the same sqrt
/// count as a tie here too.
class BoundedHeap {
public:
    explicit BoundedHeap(std::size_t k) : k_(k) { heap_.reserve(k); }

    bool full() const { return heap_.size() == k_; }
    double worst() const {
        return full() ? heap_.front().first : std::numeric_limits<double>::infinity();
    }

    void offer(double dist, std::size_t idx) {
        if (heap_.size() < k_) {
            heap_.emplace_back(dist, idx);
            std::push_heap(heap_.begin(), heap_.end());
        } else if (Candidate(dist, idx) < heap_.front()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = Candidate(dist, idx);
            std::push_heap(heap_.begin(), heap_.end());
        }
    }

    NeighborList finish() && {
        std::sort(heap_.begin(), heap_.end());
        NeighborList out;
        out.indices.reserve(heap_.size());
        out.distances.reserve(heap_.size());
        for (const Candidate& c : heap_) {
            out.indices.push_back(c.second);
            out.distances.push_back(c.first);
        }
        return out;
    }

private:
    std::size_t k_;
    std::vector<Candidate> heap_;
};

}  // namespace

Backend backend_from_string(const std::string& name) {
    if (name == "auto") return Backend::kAuto;
    if (name == "brute") return Backend::kBrute;
    if (name == "kd") return Backend::kKdTree;
    if (name == "ball") return Backend::kBallTree;
    throw std::invalid_argument("unknown backend: " + name);
}

std::string backend_name(Backend b) {
    switch (b) {
        case Backend::kAuto: return "auto";
        case Backend::kBrute: return "brute";
        case Backend::kKdTree: return "kd";
        case Backend::kBallTree: return "ball";
    }
    return "?";
}

NeighborIndex NeighborIndex::build(const Matrix& points, Backend backend, std::size_t leaf_size) {
    if (points.rows == 0 || points.cols == 0) {
        throw std::invalid_argument("NeighborIndex: empty matrix");
    }
    NeighborIndex index;
    index.points_ = &points;
    index.backend_ = backend == Backend::kAuto
                         ? (points.cols <= 20 ? Backend::kKdTree : Backend::kBallTree)
                         : backend;
    if (index.backend_ != Backend::kBrute) {
        index.build_tree(std::max<std::size_t>(leaf_size, 1));
    }
    return index;
}

void NeighborIndex::build_tree(std::size_t leaf_size) {
    const std::size_t n = points_->rows;
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    nodes_.reserve(2 * (n / leaf_size + 1));
    build_node(0, n, leaf_size);
}

std::size_t NeighborIndex::build_node(std::size_t begin, std::size_t end, std::size_t leaf_size) {
    const Matrix& x = *points_;
    const std::size_t d = x.cols;
    const std::size_t node_id = nodes_.size();
    nodes_.emplace_back();
    nodes_[node_id].begin = begin;
    nodes_[node_id].end = end;

    // Bounding box of the range; the KD backend keeps it for pruning, the
    // ball backend only needs it to pick the split dimension.
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t p = begin; p < end; ++p) {
        const double* row = x.row(order_[p]);
        for (std::size_t t = 0; t < d; ++t) {
            lo[t] = std::min(lo[t], row[t]);
            hi[t] = std::max(hi[t], row[t]);
        }
    }
    if (backend_ == Backend::kKdTree) {
        boxes_.resize((node_id + 1) * 2 * d);
        std::copy(lo.begin(), lo.end(), boxes_.begin() + node_id * 2 * d);
        std::copy(hi.begin(), hi.end(), boxes_.begin() + node_id * 2 * d + d);
    } else {
        centers_.resize((node_id + 1) * d, 0.0);
        double* c = centers_.data() + node_id * d;
        for (std::size_t p = begin; p < end; ++p) {
            const double* row = x.row(order_[p]);
            for (std::size_t t = 0; t < d; ++t) c[t] += row[t];
        }
        for (std::size_t t = 0; t < d; ++t) c[t] /= static_cast<double>(end - begin);
        double max_sq = 0.0;
        for (std::size_t p = begin; p < end; ++p) {
            max_sq = std::max(max_sq, squared_distance(c, x.row(order_[p]), d));
        }
        nodes_[node_id].radius = std::sqrt(max_sq);
    }

    std::size_t split_dim = 0;
    double best_spread = -1.0;
    for (std::size_t t = 0; t < d; ++t) {
        const double spread = hi[t] - lo[t];
        if (spread > best_spread) {
            best_spread = spread;
            split_dim = t;
        }
    }
    // A range of identical points cannot be split; leave it as one leaf.
    if (end - begin <= leaf_size || best_spread <= 0.0) return node_id;

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                         const double va = x.at(a, split_dim), vb = x.at(b, split_dim);
                         return va < vb || (va == vb && a < b);
                     });
    const std::ptrdiff_t left = static_cast<std::ptrdiff_t>(build_node(begin, mid, leaf_size));
    const std::ptrdiff_t right = static_cast<std::ptrdiff_t>(build_node(mid, end, leaf_size));
    nodes_[node_id].left = left;
    nodes_[node_id].right = right;
    return node_id;
}

namespace {

double box_bound_sq(const double* q, const double* lo, const double* hi, std::size_t d) {
    double sum = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
        double gap = 0.0;
        if (q[t] < lo[t]) {
            gap = lo[t] - q[t];
        } else if (q[t] > hi[t]) {
            gap = q[t] - hi[t];
        }
        sum += gap * gap;
    }
    return sum;
}

}  // namespace

NeighborList NeighborIndex::query(std::size_t query_index, std::size_t k, bool include_self) const {
    const Matrix& x = *points_;
    const std::size_t n = x.rows;
    if (query_index >= n) throw std::invalid_argument("knn: query index out of range");
    const std::size_t limit = include_self ? n : n - 1;
    if (k < 1 || k > limit) {
        throw std::invalid_argument("knn: k must be in [1, " + std::to_string(limit) + "], got " +
                                    std::to_string(k));
    }

    const double* q = x.row(query_index);
    const std::size_t d = x.cols;
    BoundedHeap heap(k);

    if (backend_ == Backend::kBrute) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!include_self && i == query_index) continue;
            heap.offer(euclidean_distance(q, x.row(i), d), i);
        }
        return std::move(heap).finish();
    }

    // Depth-first descent, nearer child first, pruning on the node bound.
    auto node_bound = [&](std::size_t id) {
        if (backend_ == Backend::kKdTree) {
            const double* box = boxes_.data() + id * 2 * d;
            return std::sqrt(box_bound_sq(q, box, box + d, d));
        }
        const double dist_to_center = std::sqrt(squared_distance(q, centers_.data() + id * d, d));
        const double gap = dist_to_center - nodes_[id].radius;
        return gap > 0.0 ? gap : 0.0;
    };

    auto visit = [&](auto&& self, std::size_t id) -> void {
        const Node& node = nodes_[id];
        if (node.left < 0) {
            for (std::size_t p = node.begin; p < node.end; ++p) {
                const std::size_t i = order_[p];
                if (!include_self && i == query_index) continue;
                heap.offer(euclidean_distance(q, x.row(i), d), i);
            }
            return;
        }
        const std::size_t lo_id = static_cast<std::size_t>(node.left);
        const std::size_t hi_id = static_cast<std::size_t>(node.right);
        double bound_lo = node_bound(lo_id);
        double bound_hi = node_bound(hi_id);
        std::size_t first = lo_id, second = hi_id;
        if (bound_hi < bound_lo) {
            std::swap(first, second);
            std::swap(bound_lo, bound_hi);
        }
        if (!(bound_lo * (1.0 - kPruneSlack) > heap.worst())) self(self, first);
        if (!(bound_hi * (1.0 - kPruneSlack) > heap.worst())) self(self, second);
    };
    visit(visit, 0);
    return std::move(heap).finish();
}

std::vector<NeighborList> NeighborIndex::query_all(std::size_t k, bool include_self) const {
    const std::size_t n = points_->rows;
    std::vector<NeighborList> out(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        out[static_cast<std::size_t>(i)] = query(static_cast<std::size_t>(i), k, include_self);
    }
    return out;
}

}  // namespace nrod
