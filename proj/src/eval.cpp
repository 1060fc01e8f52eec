// SPDX-License-Identifier: Apache-2.0
#include "nrod/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "nrod/representatives.hpp"

namespace nrod {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    if (values.size() % 2 == 1) return values[m];
    return 0.5 * (values[m - 1] + values[m]);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

}  // namespace

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("roc_auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::size_t n1 = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw std::invalid_argument("roc_auc: labels must be 0 or 1");
        n1 += static_cast<std::size_t>(l);
    }
    const std::size_t n0 = n - n1;
    if (n0 == 0 || n1 == 0)
        throw std::invalid_argument("roc_auc: labels must contain both classes");
    for (double s : scores)
        if (std::isnan(s)) throw std::invalid_argument("roc_auc: NaN score");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double outlier_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double average_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] == 1) outlier_rank_sum += average_rank;
        i = j;
    }
    const double dn0 = static_cast<double>(n0);
    const double dn1 = static_cast<double>(n1);
    return (outlier_rank_sum - dn1 * (dn1 + 1.0) / 2.0) / (dn1 * dn0);
}

const char* mode_name(Mode mode) { return mode == Mode::kPlain ? "plain" : "nr"; }

SweepResult sweep_k(const LabeledDataset& ds, const DetectorConfig& detector, std::size_t k_min,
                    std::size_t k_max, Mode mode, std::size_t nr_iterations) {
    if (!ds.has_labels()) throw std::invalid_argument("sweep_k: dataset has no labels");
    if (k_min < 1 || k_min > k_max) throw std::invalid_argument("sweep_k: bad k range");

    const std::size_t n = ds.size();
    SweepResult result;
    result.mode = mode;
    result.best_auc = kNaN;
    std::size_t hi = k_max;
    if (hi > n) {
        hi = n;
        result.truncated = true;
        std::cerr << "warning: k range [" << k_min << ", " << k_max << "] truncated to " << n
                  << " (dataset rows)\n";
    }
    if (k_min > hi) return result;  // nothing evaluable on a dataset this small

    auto config_at = [&](std::size_t k) {
        DetectorConfig cfg = detector;
        if (is_knn_based(cfg.name)) cfg.k = k;
        return cfg;
    };
    auto evaluate = [&](SweepPoint& point, const std::vector<double>& scores) {
        point.auc = roc_auc(scores, ds.labels);
    };

    if (mode == Mode::kPlain) {
        if (!is_knn_based(detector.name)) {
            // The detector never sees k: score once, emit a flat curve.
            SweepPoint base;
            base.representatives = n;
            const auto start = std::chrono::steady_clock::now();
            try {
                evaluate(base, make_detector(detector)(ds.data));
            } catch (const std::exception& e) {
                base.auc = kNaN;
                base.error = e.what();
            }
            base.seconds = elapsed_seconds(start);
            for (std::size_t k = k_min; k <= hi; ++k) {
                base.k = k;
                result.curve.push_back(base);
            }
        } else {
            for (std::size_t k = k_min; k <= hi; ++k) {
                SweepPoint point;
                point.k = k;
                point.representatives = n;
                const auto start = std::chrono::steady_clock::now();
                try {
                    evaluate(point, make_detector(config_at(k))(ds.data));
                } catch (const std::exception& e) {
                    point.auc = kNaN;
                    point.error = e.what();
                }
                point.seconds = elapsed_seconds(start);
                result.curve.push_back(point);
            }
        }
    } else {
        // All k share one neighbor pass when selection is single-iteration.
        std::vector<RepresentativeAssignment> reps;
        if (nr_iterations == 1)
            reps = select_representatives_sweep(ds.data, k_min, hi, detector.backend);
        for (std::size_t k = k_min; k <= hi; ++k) {
            SweepPoint point;
            point.k = k;
            const auto start = std::chrono::steady_clock::now();
            try {
                std::vector<double> scores;
                if (nr_iterations == 1) {
                    const RepresentativeAssignment& rep = reps[k - k_min];
                    point.representatives = rep.count();
                    scores = propagate_scores(rep, make_detector(config_at(k)));
                } else {
                    const RepresentativeAssignment rep = select_representatives(
                        ds.data, k, nr_iterations, detector.backend);
                    point.representatives = rep.count();
                    scores = propagate_scores(rep, make_detector(config_at(k)));
                }
                evaluate(point, scores);
            } catch (const std::exception& e) {
                point.auc = kNaN;
                point.error = e.what();
            }
            point.seconds = elapsed_seconds(start);
            result.curve.push_back(point);
        }
    }

    for (const SweepPoint& point : result.curve) {
        if (std::isnan(point.auc)) continue;
        if (std::isnan(result.best_auc) || point.auc > result.best_auc) {
            result.best_auc = point.auc;
            result.best_k = point.k;
        }
    }
    return result;
}

std::vector<IterationPoint> iteration_study(const LabeledDataset& ds,
                                            const DetectorConfig& detector,
                                            std::size_t max_iterations, std::size_t k_min,
                                            std::size_t k_max) {
    std::vector<IterationPoint> rows;
    rows.reserve(max_iterations + 1);
    for (std::size_t it = 0; it <= max_iterations; ++it) {
        const SweepResult sweep =
            it == 0 ? sweep_k(ds, detector, k_min, k_max, Mode::kPlain)
                    : sweep_k(ds, detector, k_min, k_max, Mode::kNr, it);
        rows.push_back({it, sweep.best_k, sweep.best_auc});
    }
    return rows;
}

std::vector<TimingRow> timing_report(const LabeledDataset& ds,
                                     const std::vector<DetectorConfig>& detectors, std::size_t k,
                                     std::size_t repetitions) {
    if (repetitions < 1) throw std::invalid_argument("timing_report: need at least 1 repetition");
    std::vector<TimingRow> rows;
    for (const DetectorConfig& base : detectors) {
        DetectorConfig cfg = base;
        if (is_knn_based(cfg.name)) cfg.k = k;
        const Detector detector = make_detector(cfg);

        TimingRow row;
        row.detector = cfg.name;
        std::vector<double> plain_times, nr_times;
        std::vector<double> plain_scores, nr_scores;
        for (std::size_t r = 0; r < repetitions; ++r) {
            auto start = std::chrono::steady_clock::now();
            plain_scores = detector(ds.data);
            plain_times.push_back(elapsed_seconds(start));

            start = std::chrono::steady_clock::now();
            nr_scores = nr_score(ds.data, k, detector, 1, cfg.backend);
            nr_times.push_back(elapsed_seconds(start));
        }
        row.plain_seconds = median(plain_times);
        row.nr_seconds = median(nr_times);
        row.extra_time_pct = row.plain_seconds > 0.0
                                 ? (row.nr_seconds - row.plain_seconds) / row.plain_seconds * 100.0
                                 : kNaN;
        row.auc_delta = ds.has_labels()
                            ? roc_auc(nr_scores, ds.labels) - roc_auc(plain_scores, ds.labels)
                            : kNaN;
        rows.push_back(std::move(row));
    }
    return rows;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config) {
    BenchmarkResult out;
    const std::vector<std::string> names =
        config.detectors.empty() ? detector_names() : config.detectors;

    for (const BenchmarkDataset& spec : config.datasets) {
        LabeledDataset ds;
        try {
            ds = spec.path.empty()
                     ? synth_collective(spec.synth_normal, spec.synth_outlier,
                                        spec.synth_separation, spec.synth_spread, spec.synth_seed)
                     : load_auto(spec.path, spec.load);
            if (config.dedupe) ds = dedupe(ds);
            if (config.normalize) ds = zscore_normalize(ds);
            if (!ds.has_labels()) throw DataError("dataset has no labels");
        } catch (const std::exception& e) {
            out.errors.push_back("dataset " + spec.id + ": " + e.what());
            continue;
        }

        for (const std::string& name : names) {
            DetectorConfig cfg = config.base;
            cfg.name = name;
            try {
                make_detector(cfg);  // validate the name once, not per cell
            } catch (const std::exception& e) {
                out.errors.push_back("detector " + name + ": " + e.what());
                continue;
            }

            const SweepResult plain =
                sweep_k(ds, cfg, config.k_min, config.k_max, Mode::kPlain);
            const SweepResult nr =
                sweep_k(ds, cfg, config.k_min, config.k_max, Mode::kNr, config.nr_iterations);

            auto append = [&](const SweepResult& sweep) {
                for (const SweepPoint& point : sweep.curve) {
                    BenchRecord rec;
                    rec.dataset = spec.id;
                    rec.detector = name;
                    rec.mode = sweep.mode;
                    rec.k = point.k;
                    rec.iterations = sweep.mode == Mode::kNr ? config.nr_iterations : 0;
                    rec.representatives = point.representatives;
                    rec.auc = point.auc;
                    rec.seconds = point.seconds;
                    rec.error = point.error;
                    out.records.push_back(std::move(rec));
                }
            };
            append(plain);
            append(nr);

            out.summary.push_back(
                {spec.id, name, Mode::kPlain, plain.best_k, plain.best_auc, kNaN});
            out.summary.push_back({spec.id, name, Mode::kNr, nr.best_k, nr.best_auc,
                                   nr.best_auc - plain.best_auc});
        }
    }
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, ptr};
}

std::string benchmark_records_csv(const BenchmarkResult& result, bool timing) {
    std::string out = "dataset,detector,mode,k,iterations,representatives,auc";
    if (timing) out += ",seconds";
    out += ",error\n";
    for (const BenchRecord& rec : result.records) {
        out += csv_escape(rec.dataset) + ',' + csv_escape(rec.detector) + ',' +
               mode_name(rec.mode) + ',' + std::to_string(rec.k) + ',' +
               std::to_string(rec.iterations) + ',' + std::to_string(rec.representatives) + ',' +
               format_double(rec.auc);
        if (timing) out += ',' + format_double(rec.seconds);
        out += ',' + csv_escape(rec.error) + '\n';
    }
    return out;
}

std::string benchmark_summary_csv(const BenchmarkResult& result) {
    std::string out = "dataset,detector,mode,best_k,best_auc,improvement\n";
    for (const BenchSummaryRow& row : result.summary) {
        out += csv_escape(row.dataset) + ',' + csv_escape(row.detector) + ',' +
               mode_name(row.mode) + ',' + std::to_string(row.best_k) + ',' +
               format_double(row.best_auc) + ',' + format_double(row.improvement) + '\n';
    }
    return out;
}

std::string benchmark_json(const BenchmarkResult& result, bool timing) {
    nlohmann::ordered_json doc;
    doc["records"] = nlohmann::ordered_json::array();
    for (const BenchRecord& rec : result.records) {
        nlohmann::ordered_json r;
        r["dataset"] = rec.dataset;
        r["detector"] = rec.detector;
        r["mode"] = mode_name(rec.mode);
        r["k"] = rec.k;
        r["iterations"] = rec.iterations;
        r["representatives"] = rec.representatives;
        r["auc"] = rec.auc;
        if (timing) r["seconds"] = rec.seconds;
        if (!rec.error.empty()) r["error"] = rec.error;
        doc["records"].push_back(std::move(r));
    }
    doc["summary"] = nlohmann::ordered_json::array();
    for (const BenchSummaryRow& row : result.summary) {
        nlohmann::ordered_json r;
        r["dataset"] = row.dataset;
        r["detector"] = row.detector;
        r["mode"] = mode_name(row.mode);
        r["best_k"] = row.best_k;
        r["best_auc"] = row.best_auc;
        r["improvement"] = row.improvement;
        doc["summary"].push_back(std::move(r));
    }
    doc["errors"] = result.errors;
    return doc.dump(2) + "\n";
}

std::string sweep_csv(const SweepResult& result, bool timing) {
    std::string out = "k,auc,representatives";
    if (timing) out += ",seconds";
    out += ",error\n";
    for (const SweepPoint& point : result.curve) {
        out += std::to_string(point.k) + ',' + format_double(point.auc) + ',' +
               std::to_string(point.representatives);
        if (timing) out += ',' + format_double(point.seconds);
        out += ',' + csv_escape(point.error) + '\n';
    }
    return out;
}

std::string iteration_csv(const std::vector<IterationPoint>& rows) {
    std::string out = "iterations,best_k,best_auc\n";
    for (const IterationPoint& row : rows) {
        out += std::to_string(row.iterations) + ',' + std::to_string(row.best_k) + ',' +
               format_double(row.best_auc) + '\n';
    }
    return out;
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
    std::string out = "detector,plain_seconds,nr_seconds,extra_time_pct,auc_delta\n";
    for (const TimingRow& row : rows) {
        out += csv_escape(row.detector) + ',' + format_double(row.plain_seconds) + ',' +
               format_double(row.nr_seconds) + ',' + format_double(row.extra_time_pct) + ',' +
               format_double(row.auc_delta) + '\n';
    }
    return out;
}

}  // namespace nrod
