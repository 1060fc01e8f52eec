// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <stdexcept>
#include <vector>

#include "nrod/dataset.hpp"
#include "nrod/detectors.hpp"
#include "nrod/eval.hpp"
#include "nrod/reference.hpp"
#include "nrod/representatives.hpp"
#include "nrod/rng.hpp"

using namespace nrod;

namespace {

Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
    Matrix x(n, d);
    SplitMix64 rng(seed);
    for (double& v : x.values) v = rng.next_normal();
    return x;
}

Matrix column(std::vector<double> vals) {
    Matrix x(vals.size(), 1);
    for (std::size_t i = 0; i < vals.size(); ++i) x.set_row(i, &vals[i]);
    return x;
}

// Every row of `shifted` must be bitwise equal to some row of `source`.
bool rows_subset_of(const Matrix& shifted, const Matrix& source) {
    for (std::size_t i = 0; i < shifted.rows; ++i) {
        bool found = false;
        for (std::size_t j = 0; j < source.rows && !found; ++j) {
            found = std::memcmp(shifted.row(i), source.row(j),
                                source.cols * sizeof(double)) == 0;
        }
        if (!found) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("medoid of a subset") {
    const Matrix x = column({0.0, 1.0, 10.0});
    const std::vector<std::size_t> all{0, 1, 2};
    CHECK(medoid(all, x) == 1);   // sums: 11, 10, 19
    const std::vector<std::size_t> pair{0, 1};
    CHECK(medoid(pair, x) == 0);  // tie -> lowest index
    const std::vector<std::size_t> one{2};
    CHECK(medoid(one, x) == 2);
}

TEST_CASE("hand-worked one-dimensional shift") {
    const Matrix x = column({0.0, 1.0, 2.0});

    const ShiftResult ms = medoid_shift(x, 2, 1);
    CHECK(ms.shifted == column({0.0, 0.0, 1.0}));

    const ShiftResult mean = mean_shift(x, 2, 1);
    CHECK(mean.shifted == column({0.5, 0.5, 1.5}));
}

TEST_CASE("k = 1 shift is the identity") {
    const Matrix x = random_matrix(60, 3, 11);
    CHECK(medoid_shift(x, 1, 1).shifted == x);
    CHECK(medoid_shift(x, 1, 5).shifted == x);
    CHECK(mean_shift(x, 1, 3).shifted == x);
    CHECK(medoid_shift(x, 4, 0).shifted == x);  // zero iterations
}

TEST_CASE("shift matches the serial reference") {
    const Matrix x = random_matrix(120, 4, 29);
    for (std::size_t k : {2u, 7u, 30u}) {
        for (std::size_t iters : {1u, 3u}) {
            CAPTURE(k);
            CAPTURE(iters);
            CHECK(medoid_shift(x, k, iters).shifted == ref::medoid_shift(x, k, iters));
            CHECK(mean_shift(x, k, iters).shifted == ref::mean_shift(x, k, iters));
        }
    }
}

TEST_CASE("medoid shift picks existing rows and stops at a fixed point") {
    const Matrix x = random_matrix(100, 2, 5);
    const ShiftResult r = medoid_shift(x, 8, 50);
    CHECK(rows_subset_of(r.shifted, x));
    CHECK(r.iterations < 50);  // converged early
    // One more round from the fixed point changes nothing.
    CHECK(medoid_shift(r.shifted, 8, 1).shifted == r.shifted);
}

TEST_CASE("representative count shrinks as k grows") {
    const Matrix x = random_matrix(150, 2, 41);
    std::size_t previous = x.rows;
    for (std::size_t k = 1; k <= 40; k += 3) {
        const RepresentativeAssignment reps = select_representatives(x, k);
        CHECK(reps.count() <= previous);  // not guaranteed monotone in general,
        previous = x.rows;                // but never above n
        CHECK(reps.count() >= 1);
        CHECK(reps.assignment.size() == x.rows);
        for (std::size_t a : reps.assignment) CHECK(a < reps.count());
        CHECK(rows_subset_of(reps.representatives, x));
        // Each point's representative row is the one its assignment says.
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(reps.assignment[i] < reps.count());
        }
    }
    CHECK(select_representatives(x, 1).count() == x.rows);  // identity at k = 1
    CHECK(select_representatives(x, 40).count() < x.rows);  // genuine collapse
}

TEST_CASE("sweep equals per-k selection bit for bit") {
    const Matrix dense = random_matrix(200, 5, 13);
    // Integer grid data is full of distance ties, the hard case for sweeps.
    const Matrix grid = [] {
        Matrix g(81, 2);
        for (std::size_t i = 0; i < 81; ++i) {
            const double row[2] = {static_cast<double>(i % 9), static_cast<double>(i / 9)};
            g.set_row(i, row);
        }
        return g;
    }();

    for (const Matrix* x : {&dense, &grid}) {
        const std::size_t k_min = 1, k_max = 30;
        const auto sweep = select_representatives_sweep(*x, k_min, k_max);
        REQUIRE(sweep.size() == k_max - k_min + 1);
        for (std::size_t k = k_min; k <= k_max; ++k) {
            CAPTURE(k);
            const RepresentativeAssignment single = select_representatives(*x, k);
            CHECK(sweep[k - k_min].representatives == single.representatives);
            CHECK(sweep[k - k_min].assignment == single.assignment);
        }
    }
}

TEST_CASE("nr_score with k = 1 reproduces the detector exactly") {
    const Matrix x = random_matrix(80, 4, 3);
    DetectorConfig cfg;
    for (const std::string& name : detector_names()) {
        CAPTURE(name);
        cfg.name = name;
        const Detector det = make_detector(cfg);
        CHECK(nr_score(x, 1, det) == det(x));
    }
}

TEST_CASE("points sharing a representative share its score") {
    const Matrix x = random_matrix(120, 2, 21);
    std::size_t calls = 0;
    std::size_t scored_rows = 0;
    const Detector det = [&](const Matrix& m) {
        ++calls;
        scored_rows = m.rows;
        return score_knn(m, std::min<std::size_t>(3, m.rows - 1), KnnAggregate::kKth);
    };

    const RepresentativeAssignment reps = select_representatives(x, 15);
    REQUIRE(reps.count() < x.rows);
    const std::vector<double> scores = nr_score(x, 15, det);
    CHECK(calls == 1);                 // detector sees only the unique reps
    CHECK(scored_rows == reps.count());
    CHECK(scores.size() == x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = i + 1; j < x.rows; ++j) {
            if (reps.assignment[i] == reps.assignment[j]) {
                CHECK(scores[i] == scores[j]);
            }
        }
    }
}

TEST_CASE("representative scoring rescues a collective outlier cluster") {
    // Dense outlier cluster: locally unremarkable, so plain LOF at a fixed k
    // misses it, while the representative step collapses the cluster first.
    const LabeledDataset ds = synth_collective(200, 70, 8.0, 0.15, 7);
    const Detector lof = [](const Matrix& m) { return score_lof(m, 30); };
    const double plain = roc_auc(lof(ds.data), ds.labels);
    const double with_reps = roc_auc(nr_score(ds.data, 30, lof), ds.labels);
    CHECK(with_reps > plain);
    CHECK(with_reps >= 0.99);
    CHECK(plain <= 0.60);
}

TEST_CASE("validation") {
    const Matrix x = random_matrix(10, 2, 2);
    CHECK_THROWS_AS(medoid_shift(x, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(medoid_shift(x, 11, 1), std::invalid_argument);
    CHECK_THROWS_AS(medoid_shift(Matrix(), 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(select_representatives_sweep(x, 3, 2), std::invalid_argument);

    const RepresentativeAssignment reps = select_representatives(x, 3);
    const Detector bad = [](const Matrix& m) {
        return std::vector<double>(m.rows + 1, 0.0);
    };
    CHECK_THROWS_AS(propagate_scores(reps, bad), std::runtime_error);
}
