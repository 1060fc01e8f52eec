// SPDX-License-Identifier: Apache-2.0
//
// Times the parallel kernels against the serial reference implementations
// that back the test suite, and cross-checks that both sides agree.
//
//   kernel_bench [rows] [dims] [k]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "nrod/detectors.hpp"
#include "nrod/eval.hpp"
#include "nrod/matrix.hpp"
#include "nrod/neighbors.hpp"
#include "nrod/reference.hpp"
#include "nrod/representatives.hpp"
#include "nrod/rng.hpp"

namespace {

double best_of(int runs, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < runs; ++r) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        const double s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (s < best) best = s;
    }
    return best;
}

void report(const char* name, double serial, double parallel, bool match) {
    std::printf("%-14s %12.4fs %12.4fs %8.1fx   %s\n", name, serial, parallel,
                serial / parallel, match ? "match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 4000;
    const std::size_t d = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 8;
    const std::size_t k = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 10;
    constexpr int kRuns = 3;

    nrod::SplitMix64 rng(20240915);
    nrod::Matrix x(n, d);
    for (double& v : x.values) v = rng.next_normal();
    std::printf("n=%zu d=%zu k=%zu, best of %d runs\n\n", n, d, k, kRuns);
    std::printf("%-14s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    {
        std::vector<nrod::NeighborList> serial_out, parallel_out;
        const double ts = best_of(kRuns, [&] { serial_out = nrod::ref::knn_scan_all(x, k, false); });
        const double tp = best_of(kRuns, [&] {
            parallel_out = nrod::NeighborIndex::build(x).query_all(k, false);
        });
        bool match = serial_out.size() == parallel_out.size();
        for (std::size_t i = 0; match && i < serial_out.size(); ++i)
            match = serial_out[i].indices == parallel_out[i].indices &&
                    serial_out[i].distances == parallel_out[i].distances;
        report("knn_all", ts, tp, match);
    }
    {
        nrod::Matrix serial_out, parallel_out;
        const double ts = best_of(kRuns, [&] { serial_out = nrod::ref::medoid_shift(x, k, 1); });
        const double tp =
            best_of(kRuns, [&] { parallel_out = nrod::medoid_shift(x, k, 1).shifted; });
        report("medoid_shift", ts, tp, serial_out == parallel_out);
    }
    {
        std::vector<double> serial_out, parallel_out;
        const double ts = best_of(kRuns, [&] { serial_out = nrod::ref::lof_score(x, k); });
        const double tp = best_of(kRuns, [&] { parallel_out = nrod::score_lof(x, k); });
        report("lof", ts, tp, serial_out == parallel_out);
    }
    {
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.next_double();
            labels[i] = rng.next_below(10) == 0 ? 1 : 0;
        }
        labels[0] = 0;
        labels[1] = 1;  // guarantee both classes
        double serial_out = 0.0, parallel_out = 0.0;
        const double ts =
            best_of(kRuns, [&] { serial_out = nrod::ref::auc_pair_count(scores, labels); });
        const double tp = best_of(kRuns, [&] { parallel_out = nrod::roc_auc(scores, labels); });
        report("roc_auc", ts, tp, std::abs(serial_out - parallel_out) < 1e-12);
    }
    return 0;
}
