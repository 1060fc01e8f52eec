// SPDX-License-Identifier: Apache-2.0
#include "nrod/representatives.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>

#include "nrod/dataset.hpp"

namespace nrod {

namespace {

void check_k(std::size_t k, std::size_t n, const char* who) {
    if (n == 0) throw std::invalid_argument(std::string(who) + ": empty matrix");
    if (k < 1 || k > n) throw std::invalid_argument(std::string(who) + ": k must be in [1, rows]");
}

// One simultaneous round: every row of `next` is derived from `cur` only.
Matrix shift_round(const Matrix& cur, std::size_t k, Backend backend, bool use_medoid) {
    const NeighborIndex index = NeighborIndex::build(cur, backend);
    const std::vector<NeighborList> hoods = index.query_all(k, true);
    Matrix next(cur.rows, cur.cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(cur.rows); ++i) {
        const std::vector<std::size_t>& hood = hoods[static_cast<std::size_t>(i)].indices;
        if (use_medoid) {
            next.set_row(static_cast<std::size_t>(i), cur.row(medoid(hood, cur)));
        } else {
            double* dst = next.row(static_cast<std::size_t>(i));
            for (std::size_t member : hood) {
                const double* src = cur.row(member);
                for (std::size_t j = 0; j < cur.cols; ++j) dst[j] += src[j];
            }
            for (std::size_t j = 0; j < cur.cols; ++j) dst[j] /= static_cast<double>(k);
        }
    }
    return next;
}

ShiftResult run_shift(const Matrix& x, std::size_t k, std::size_t iterations, Backend backend,
                      bool use_medoid, const char* who) {
    check_k(k, x.rows, who);
    ShiftResult result{x, 0};
    for (std::size_t it = 0; it < iterations; ++it) {
        Matrix next = shift_round(result.shifted, k, backend, use_medoid);
        ++result.iterations;
        const bool fixed_point = next == result.shifted;
        result.shifted = std::move(next);
        if (fixed_point) break;  // nothing can move on identical input
    }
    return result;
}

RepresentativeAssignment dedupe_rows(Matrix&& shifted) {
    LabeledDataset wrapped;
    wrapped.data = std::move(shifted);
    DedupeResult unique = dedupe_indexed(wrapped);
    RepresentativeAssignment out;
    out.representatives = std::move(unique.data.data);
    out.assignment = std::move(unique.row_to_kept);
    return out;
}

}  // namespace

std::size_t medoid(std::span<const std::size_t> subset, const Matrix& x) {
    if (subset.empty()) throw std::invalid_argument("medoid: empty subset");
    std::size_t best = subset[0];
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::size_t a : subset) {
        double sum = 0.0;
        for (std::size_t b : subset) sum += row_distance(x, a, b);
        if (sum < best_sum || (sum == best_sum && a < best)) {
            best_sum = sum;
            best = a;
        }
    }
    return best;
}

ShiftResult medoid_shift(const Matrix& x, std::size_t k, std::size_t iterations, Backend backend) {
    return run_shift(x, k, iterations, backend, true, "medoid_shift");
}

ShiftResult mean_shift(const Matrix& x, std::size_t k, std::size_t iterations, Backend backend) {
    return run_shift(x, k, iterations, backend, false, "mean_shift");
}

RepresentativeAssignment select_representatives(const Matrix& x, std::size_t k,
                                                std::size_t iterations, Backend backend) {
    return dedupe_rows(std::move(medoid_shift(x, k, iterations, backend).shifted));
}

std::vector<RepresentativeAssignment> select_representatives_sweep(const Matrix& x,
                                                                   std::size_t k_min,
                                                                   std::size_t k_max,
                                                                   Backend backend) {
    check_k(k_min, x.rows, "select_representatives_sweep");
    check_k(k_max, x.rows, "select_representatives_sweep");
    if (k_min > k_max)
        throw std::invalid_argument("select_representatives_sweep: k_min must not exceed k_max");

    const std::size_t n = x.rows;
    const std::size_t range = k_max - k_min + 1;
    const NeighborIndex index = NeighborIndex::build(x, backend);
    const std::vector<NeighborList> hoods = index.query_all(k_max, true);

    // meds[kk][i]: row index point i shifts onto at k = k_min + kk.
    std::vector<std::vector<std::size_t>> meds(range, std::vector<std::size_t>(n));

#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t si = 0; si < static_cast<std::int64_t>(n); ++si) {
        const std::size_t i = static_cast<std::size_t>(si);
        const std::vector<std::size_t>& nb = hoods[i].indices;
        // Grow the neighborhood one member at a time, keeping for every
        // candidate a the running sum of distances to all current members.
        // The terms are added in the same order a one-shot medoid() call
        // would add them, so the sums (and the picked medoid) match the
        // per-k path bit for bit.
        std::vector<double> sums(k_max, 0.0);
        std::vector<double> col(k_max, 0.0);
        for (std::size_t k = 1; k <= k_max; ++k) {
            const double* fresh = x.row(nb[k - 1]);
            for (std::size_t b = 0; b < k; ++b)
                col[b] = euclidean_distance(x.row(nb[b]), fresh, x.cols);
            double fresh_sum = 0.0;
            for (std::size_t b = 0; b < k; ++b) {
                sums[b] += col[b];
                fresh_sum += col[b];
            }
            sums[k - 1] = fresh_sum;
            if (k < k_min) continue;
            std::size_t best = nb[0];
            double best_sum = std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < k; ++b) {
                if (sums[b] < best_sum || (sums[b] == best_sum && nb[b] < best)) {
                    best_sum = sums[b];
                    best = nb[b];
                }
            }
            meds[k - k_min][i] = best;
        }
    }

    std::vector<RepresentativeAssignment> out;
    out.reserve(range);
    for (std::size_t kk = 0; kk < range; ++kk) {
        Matrix shifted(n, x.cols);
        for (std::size_t i = 0; i < n; ++i) shifted.set_row(i, x.row(meds[kk][i]));
        out.push_back(dedupe_rows(std::move(shifted)));
    }
    return out;
}

std::vector<double> propagate_scores(const RepresentativeAssignment& reps,
                                     const Detector& detector) {
    const std::vector<double> rep_scores = detector(reps.representatives);
    if (rep_scores.size() != reps.count())
        throw std::runtime_error("propagate_scores: detector returned " +
                                 std::to_string(rep_scores.size()) + " scores for " +
                                 std::to_string(reps.count()) + " representatives");
    std::vector<double> scores(reps.assignment.size());
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = rep_scores[reps.assignment[i]];
    return scores;
}

std::vector<double> nr_score(const Matrix& x, std::size_t k, const Detector& detector,
                             std::size_t iterations, Backend backend) {
    return propagate_scores(select_representatives(x, k, iterations, backend), detector);
}

}  // namespace nrod
