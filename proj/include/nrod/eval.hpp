// SPDX-License-Identifier: Apache-2.0
#ifndef NROD_EVAL_HPP
#define NROD_EVAL_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nrod/dataset.hpp"
#include "nrod/detectors.hpp"

namespace nrod {

/// ROC-AUC as the Mann-Whitney statistic with average ranks for ties:
/// the probability a random outlier outscores a random inlier, counting
/// ties half. Labels must contain both classes.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

enum class Mode { kPlain, kNr };
const char* mode_name(Mode mode);

/// One evaluated sweep cell. `auc` is NaN and `error` non-empty when the
/// detector failed at this k (e.g. too few representatives survived).
struct SweepPoint {
    std::size_t k = 0;
    double auc = 0.0;
    std::size_t representatives = 0;  // rows actually scored
    double seconds = 0.0;             // kept in memory; serialized only on request
    std::string error;
};

struct SweepResult {
    Mode mode = Mode::kPlain;
    std::vector<SweepPoint> curve;
    std::size_t best_k = 0;   // smallest k attaining best_auc; 0 if no cell succeeded
    double best_auc = 0.0;    // NaN if no cell succeeded
    bool truncated = false;   // k range was clipped to the row count
};

/// The best-k protocol: evaluate every k in [k_min, k_max], pick the best
/// AUC, break ties toward smaller k. k-NN-based detectors always receive
/// the current k; other detectors keep their configured parameters, so
/// their plain curve is flat. In NR mode the detector scores the k-medoid
/// representatives and scores are propagated before AUC. A k_max beyond
/// the row count is truncated with a warning on stderr.
SweepResult sweep_k(const LabeledDataset& ds, const DetectorConfig& detector, std::size_t k_min,
                    std::size_t k_max, Mode mode, std::size_t nr_iterations = 1);

/// Best-k result at each NR iteration count. Row 0 is the plain detector
/// (no NR); row i >= 1 is NR with i medoid-shift iterations.
struct IterationPoint {
    std::size_t iterations = 0;
    std::size_t best_k = 0;
    double best_auc = 0.0;
};

std::vector<IterationPoint> iteration_study(const LabeledDataset& ds,
                                            const DetectorConfig& detector,
                                            std::size_t max_iterations, std::size_t k_min,
                                            std::size_t k_max);

/// Wall-clock cost of NR at a fixed k: medians over `repetitions` runs.
struct TimingRow {
    std::string detector;
    double plain_seconds = 0.0;
    double nr_seconds = 0.0;
    double extra_time_pct = 0.0;  // (nr - plain) / plain * 100
    double auc_delta = 0.0;       // nr AUC - plain AUC, NaN without labels
};

std::vector<TimingRow> timing_report(const LabeledDataset& ds,
                                     const std::vector<DetectorConfig>& detectors, std::size_t k,
                                     std::size_t repetitions = 3);

/// A dataset entry for run_benchmark: either a file to load or, when path
/// is empty, a generated collective-outlier scene.
struct BenchmarkDataset {
    std::string id;
    std::filesystem::path path;  // empty -> synthesize
    LoadOptions load;
    std::size_t synth_normal = 200;
    std::size_t synth_outlier = 30;
    double synth_separation = 8.0;
    double synth_spread = 0.15;
    std::uint64_t synth_seed = 7;
};

struct BenchmarkConfig {
    std::vector<BenchmarkDataset> datasets;
    std::vector<std::string> detectors;  // names; empty means the full suite
    DetectorConfig base;                 // seeds and non-k parameters for every detector
    std::size_t k_min = 2;
    std::size_t k_max = 100;
    std::size_t nr_iterations = 1;
    bool dedupe = true;
    bool normalize = true;
    bool timing = false;  // include wall-time columns in serialized output
};

struct BenchRecord {
    std::string dataset;
    std::string detector;
    Mode mode = Mode::kPlain;
    std::size_t k = 0;
    std::size_t iterations = 0;  // NR iterations; 0 in plain mode
    std::size_t representatives = 0;
    double auc = 0.0;  // NaN for failed cells
    double seconds = 0.0;
    std::string error;
};

struct BenchSummaryRow {
    std::string dataset;
    std::string detector;
    Mode mode = Mode::kPlain;
    std::size_t best_k = 0;
    double best_auc = 0.0;
    double improvement = 0.0;  // nr best - plain best; NaN on plain rows
};

struct BenchmarkResult {
    std::vector<BenchRecord> records;    // ordered by (dataset, detector, mode, k)
    std::vector<BenchSummaryRow> summary;
    std::vector<std::string> errors;     // dataset-level failures; cells carry their own
};

/// Full cross product of datasets x detectors x {plain, nr} under the
/// best-k protocol. Dataset-level failures are recorded and skipped; the
/// run always completes. Output is a pure function of (config, data bytes).
BenchmarkResult run_benchmark(const BenchmarkConfig& config);

/// Deterministic serializations. Wall-time columns appear only with
/// timing = true so that default outputs are byte-stable across runs.
std::string benchmark_records_csv(const BenchmarkResult& result, bool timing);
std::string benchmark_summary_csv(const BenchmarkResult& result);
std::string benchmark_json(const BenchmarkResult& result, bool timing);
std::string sweep_csv(const SweepResult& result, bool timing);
std::string iteration_csv(const std::vector<IterationPoint>& rows);
std::string timing_csv(const std::vector<TimingRow>& rows);

/// Shortest round-trip decimal form of v ("" for NaN, the CSV blank).
std::string format_double(double v);

}  // namespace nrod

#endif  // NROD_EVAL_HPP
