// SPDX-License-Identifier: Apache-2.0
//
// nrod: score datasets with classical outlier detectors, optionally behind
// neighborhood-representative (NR) pre-processing, and reproduce the
// best-k benchmark protocol.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nrod/dataset.hpp"
#include "nrod/detectors.hpp"
#include "nrod/eval.hpp"
#include "nrod/neighbors.hpp"
#include "nrod/representatives.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

using nlohmann::ordered_json;

struct Options {
    std::vector<std::string> datasets;
    std::string detector = "knn";
    std::string bench_detector = "all";
    std::size_t k = 5;
    std::size_t k_min = 2;
    std::size_t k_max = 100;
    bool nr = false;
    std::size_t iterations = 1;
    std::uint64_t seed = 1;
    std::string backend = "auto";
    std::vector<std::string> formats = {"csv"};
    std::string out;
    bool no_dedupe = false;
    bool no_normalize = false;
    bool no_header = false;
    std::string label_attribute;
    std::string outlier_value = "yes";
    bool knn_mean = false;
    std::size_t mod_iterations = 3;
    std::size_t trees = 100;
    std::size_t subsample = 256;
    std::size_t mcd_starts = 50;
    std::size_t mcd_csteps = 20;
    double variance_floor = 1e-10;
    std::string scores_path;  // external detector input
    bool timing = false;
    // synth
    std::size_t synth_normal = 200;
    std::size_t synth_outlier = 30;
    double synth_separation = 8.0;
    double synth_spread = 0.15;
    std::uint64_t synth_seed = 7;
    bool with_synth = false;
    std::size_t max_iterations = 10;
    std::string labels_path;  // auc command
};

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text_atomic(out_path, text);
    }
}

nrod::DetectorConfig detector_config(const Options& opt) {
    nrod::DetectorConfig cfg;
    cfg.name = opt.detector;
    cfg.k = opt.k;
    cfg.aggregate = opt.knn_mean ? nrod::KnnAggregate::kMean : nrod::KnnAggregate::kKth;
    cfg.mod_iterations = opt.mod_iterations;
    cfg.trees = opt.trees;
    cfg.subsample = opt.subsample;
    cfg.mcd_starts = opt.mcd_starts;
    cfg.mcd_csteps = opt.mcd_csteps;
    cfg.variance_floor = opt.variance_floor;
    cfg.seed = opt.seed;
    cfg.backend = nrod::backend_from_string(opt.backend);
    cfg.scores_path = opt.scores_path;
    return cfg;
}

nrod::LoadOptions load_options(const Options& opt) {
    nrod::LoadOptions load;
    load.has_header = !opt.no_header;
    if (!opt.label_attribute.empty()) load.label_attribute = opt.label_attribute;
    load.outlier_value = opt.outlier_value;
    return load;
}

// The fully-resolved configuration every file-producing run leaves next to
// its output, so results stay reproducible without shell history.
ordered_json resolved_config(const std::string& command, const Options& opt) {
    ordered_json j;
    j["command"] = command;
    j["datasets"] = opt.datasets;
    j["detector"] = opt.detector;
    j["k"] = opt.k;
    j["k_min"] = opt.k_min;
    j["k_max"] = opt.k_max;
    j["nr"] = opt.nr;
    j["iterations"] = opt.iterations;
    j["seed"] = opt.seed;
    j["backend"] = opt.backend;
    j["format"] = opt.formats;
    j["out"] = opt.out;
    j["dedupe"] = !opt.no_dedupe;
    j["normalize"] = !opt.no_normalize;
    j["has_header"] = !opt.no_header;
    j["label_attribute"] = opt.label_attribute;
    j["outlier_value"] = opt.outlier_value;
    j["knn_aggregate"] = opt.knn_mean ? "mean" : "kth";
    j["mod_iterations"] = opt.mod_iterations;
    j["trees"] = opt.trees;
    j["subsample"] = opt.subsample;
    j["mcd_starts"] = opt.mcd_starts;
    j["mcd_csteps"] = opt.mcd_csteps;
    j["variance_floor"] = opt.variance_floor;
    j["external_scores"] = opt.scores_path;
    j["timing"] = opt.timing;
    j["synth_normal"] = opt.synth_normal;
    j["synth_outlier"] = opt.synth_outlier;
    j["synth_separation"] = opt.synth_separation;
    j["synth_spread"] = opt.synth_spread;
    j["synth_seed"] = opt.synth_seed;
    return j;
}

void write_meta(const Options& opt, ordered_json meta) {
    if (opt.out.empty()) return;
    write_text_atomic(opt.out + ".meta.json", meta.dump(2) + "\n");
}

std::string dataset_id(const std::filesystem::path& path) {
    const std::string stem = path.stem().string();
    return stem.empty() ? path.string() : stem;
}

// ---------------------------------------------------------------------------

int cmd_score(const Options& opt) {
    nrod::LabeledDataset raw = nrod::load_auto(opt.datasets.front(), load_options(opt));
    nrod::DedupeResult dd;
    if (opt.no_dedupe) {
        dd.data = std::move(raw);
        dd.row_to_kept.resize(dd.data.size());
        for (std::size_t i = 0; i < dd.data.size(); ++i) dd.row_to_kept[i] = i;
    } else {
        dd = nrod::dedupe_indexed(raw);
    }
    nrod::LabeledDataset ds = opt.no_normalize ? std::move(dd.data)
                                               : nrod::zscore_normalize(dd.data);

    const nrod::DetectorConfig cfg = detector_config(opt);
    const nrod::Detector detector = nrod::make_detector(cfg);
    const std::vector<double> kept_scores =
        opt.nr ? nrod::nr_score(ds.data, opt.k, detector, opt.iterations, cfg.backend)
               : detector(ds.data);

    std::string text;
    for (std::size_t row : dd.row_to_kept) text += nrod::format_double(kept_scores[row]) + '\n';
    emit(opt.out, text);

    if (!dd.dropped_rows.empty())
        std::cerr << "note: " << dd.dropped_rows.size()
                  << " duplicate rows scored via their first occurrence\n";
    ordered_json meta = resolved_config("score", opt);
    meta["rows"] = dd.row_to_kept.size();
    meta["unique_rows"] = ds.size();
    meta["deduped_rows"] = dd.dropped_rows;
    write_meta(opt, std::move(meta));
    return kExitOk;
}

int cmd_synth(const Options& opt) {
    const nrod::LabeledDataset ds = nrod::synth_collective(
        opt.synth_normal, opt.synth_outlier, opt.synth_separation, opt.synth_spread,
        opt.synth_seed);
    std::filesystem::path out = opt.out;
    nrod::write_csv(out, ds);  // already row-by-row deterministic
    ordered_json meta = resolved_config("synth", opt);
    meta["rows"] = ds.size();
    meta["dims"] = ds.dim();
    write_meta(opt, std::move(meta));
    return kExitOk;
}

std::vector<int> read_labels(const std::filesystem::path& path, const Options& opt) {
    const std::string ext = path.extension().string();
    if (ext == ".csv" || ext == ".arff" || ext == ".ARFF") {
        nrod::LabeledDataset ds = nrod::load_auto(path, load_options(opt));
        if (!ds.has_labels()) throw nrod::DataError(path.string() + ": no labels found");
        return ds.labels;
    }
    std::ifstream in(path);
    if (!in) throw nrod::DataError("cannot open label file: " + path.string());
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        const std::size_t b = line.find_last_not_of(" \t\r");
        const std::string token = line.substr(a, b - a + 1);
        if (token == "0")
            labels.push_back(0);
        else if (token == "1")
            labels.push_back(1);
        else
            throw nrod::DataError(path.string() + ": line " + std::to_string(lineno) +
                                  ": labels must be 0 or 1");
    }
    return labels;
}

int cmd_auc(const Options& opt) {
    const std::filesystem::path score_path = opt.datasets.front();
    const std::vector<int> labels = read_labels(opt.labels_path, opt);
    const std::vector<double> scores = nrod::external_scores(score_path, labels.size());
    const double auc = nrod::roc_auc(scores, labels);
    emit(opt.out, nrod::format_double(auc) + "\n");
    ordered_json meta = resolved_config("auc", opt);
    meta["labels"] = opt.labels_path;
    meta["auc"] = auc;
    write_meta(opt, std::move(meta));
    return kExitOk;
}

nrod::LabeledDataset load_prepared(const Options& opt) {
    nrod::LabeledDataset ds = nrod::load_auto(opt.datasets.front(), load_options(opt));
    if (!opt.no_dedupe) ds = nrod::dedupe(ds);
    if (!opt.no_normalize) ds = nrod::zscore_normalize(ds);
    if (!ds.has_labels())
        throw nrod::DataError(opt.datasets.front() + ": labels required for evaluation");
    return ds;
}

int cmd_sweep(const Options& opt) {
    const nrod::LabeledDataset ds = load_prepared(opt);
    const nrod::SweepResult result =
        nrod::sweep_k(ds, detector_config(opt), opt.k_min, opt.k_max,
                      opt.nr ? nrod::Mode::kNr : nrod::Mode::kPlain, opt.iterations);
    emit(opt.out, nrod::sweep_csv(result, opt.timing));
    if (!opt.out.empty())
        std::cout << "best_k=" << result.best_k
                  << " best_auc=" << nrod::format_double(result.best_auc) << "\n";
    ordered_json meta = resolved_config("sweep", opt);
    meta["best_k"] = result.best_k;
    meta["best_auc"] = result.best_auc;
    meta["truncated"] = result.truncated;
    write_meta(opt, std::move(meta));
    return kExitOk;
}

int cmd_iterstudy(const Options& opt) {
    const nrod::LabeledDataset ds = load_prepared(opt);
    const std::vector<nrod::IterationPoint> rows = nrod::iteration_study(
        ds, detector_config(opt), opt.max_iterations, opt.k_min, opt.k_max);
    emit(opt.out, nrod::iteration_csv(rows));
    write_meta(opt, resolved_config("iterstudy", opt));
    return kExitOk;
}

int cmd_bench(const Options& opt) {
    nrod::BenchmarkConfig config;
    for (const std::string& path : opt.datasets) {
        nrod::BenchmarkDataset spec;
        spec.id = dataset_id(path);
        spec.path = path;
        spec.load = load_options(opt);
        config.datasets.push_back(std::move(spec));
    }
    if (opt.with_synth) {
        nrod::BenchmarkDataset spec;
        spec.id = "synth";
        spec.synth_normal = opt.synth_normal;
        spec.synth_outlier = opt.synth_outlier;
        spec.synth_separation = opt.synth_separation;
        spec.synth_spread = opt.synth_spread;
        spec.synth_seed = opt.synth_seed;
        config.datasets.push_back(std::move(spec));
    }
    if (config.datasets.empty())
        throw CLI::ValidationError("bench", "no datasets given (paths or --synth)");
    if (opt.bench_detector != "all") config.detectors = {opt.bench_detector};
    config.base = detector_config(opt);
    config.k_min = opt.k_min;
    config.k_max = opt.k_max;
    config.nr_iterations = opt.iterations;
    config.dedupe = !opt.no_dedupe;
    config.normalize = !opt.no_normalize;
    config.timing = opt.timing;

    const nrod::BenchmarkResult result = nrod::run_benchmark(config);
    for (const std::string& error : result.errors) std::cerr << "warning: " << error << "\n";

    bool csv = false, json = false;
    for (const std::string& f : opt.formats) {
        if (f == "csv") csv = true;
        else if (f == "json") json = true;
        else throw CLI::ValidationError("--format", "unknown format: " + f);
    }
    if (csv) {
        write_text_atomic(opt.out + ".records.csv",
                          nrod::benchmark_records_csv(result, opt.timing));
        write_text_atomic(opt.out + ".summary.csv", nrod::benchmark_summary_csv(result));
    }
    if (json) write_text_atomic(opt.out + ".json", nrod::benchmark_json(result, opt.timing));
    ordered_json meta = resolved_config("bench", opt);
    meta["detector"] = opt.bench_detector;
    write_text_atomic(opt.out + ".meta.json", meta.dump(2) + "\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Representative-based outlier scoring and benchmarking"};
    app.set_config("--config", "", "Read options from a key = value file");
    app.allow_config_extras(true);
    app.require_subcommand(1);
    Options opt;

    auto add_data_flags = [&](CLI::App* cmd) {
        cmd->add_flag("--no-dedupe", opt.no_dedupe, "Keep exact duplicate rows");
        cmd->add_flag("--no-normalize", opt.no_normalize, "Skip z-score normalization");
        cmd->add_flag("--no-header", opt.no_header, "CSV input has no header row");
        cmd->add_option("--label-attribute", opt.label_attribute,
                        "Label attribute (ARFF) or column (CSV)");
        cmd->add_option("--outlier-value", opt.outlier_value,
                        "Nominal value marking outliers (ARFF)");
    };
    auto add_detector_flags = [&](CLI::App* cmd) {
        cmd->add_option("--detector", opt.detector, "Detector name")->capture_default_str();
        cmd->add_option("--k", opt.k, "Neighborhood size")->capture_default_str();
        cmd->add_option("--seed", opt.seed, "RNG seed for mcd/iforest")->capture_default_str();
        cmd->add_option("--backend", opt.backend, "Neighbor search backend")
            ->check(CLI::IsMember({"auto", "brute", "kd", "ball"}))
            ->capture_default_str();
        cmd->add_flag("--knn-mean", opt.knn_mean, "KNN: mean distance instead of kth");
        cmd->add_option("--mod-iterations", opt.mod_iterations, "MOD mean-shift rounds")
            ->capture_default_str();
        cmd->add_option("--trees", opt.trees, "iforest: trees")->capture_default_str();
        cmd->add_option("--subsample", opt.subsample, "iforest: subsample size")
            ->capture_default_str();
        cmd->add_option("--starts", opt.mcd_starts, "mcd: random starts")->capture_default_str();
        cmd->add_option("--csteps", opt.mcd_csteps, "mcd: max C-steps")->capture_default_str();
        cmd->add_option("--variance-floor", opt.variance_floor, "pcad: eigenvalue cutoff")
            ->capture_default_str();
        cmd->add_option("--scores", opt.scores_path, "external: score file, one real per line");
    };
    auto add_out = [&](CLI::App* cmd, bool required = false) {
        CLI::Option* o = cmd->add_option("--out", opt.out, "Output path (default: stdout)");
        if (required) o->required();
    };
    auto add_synth_flags = [&](CLI::App* cmd) {
        cmd->add_option("--normal", opt.synth_normal, "Inlier count")->capture_default_str();
        cmd->add_option("--outliers", opt.synth_outlier, "Outlier cluster size")
            ->capture_default_str();
        cmd->add_option("--separation", opt.synth_separation, "Cluster center distance")
            ->capture_default_str();
        cmd->add_option("--spread", opt.synth_spread, "Outlier spread ratio")
            ->capture_default_str();
        cmd->add_option("--synth-seed", opt.synth_seed, "Generator seed")->capture_default_str();
    };

    CLI::App* score = app.add_subcommand("score", "Score every row of a dataset");
    score->add_option("dataset", opt.datasets, "Input file (.csv or .arff)")
        ->required()
        ->expected(1);
    add_detector_flags(score);
    score->add_flag("--nr", opt.nr, "Score medoid-shift representatives and propagate");
    score->add_option("--iterations", opt.iterations, "NR medoid-shift iterations")
        ->capture_default_str();
    add_data_flags(score);
    add_out(score);

    CLI::App* bench = app.add_subcommand("bench", "Best-k benchmark over datasets x detectors");
    bench->add_option("datasets", opt.datasets, "Dataset files");
    bench->add_flag("--synth", opt.with_synth, "Also benchmark the built-in synthetic scene");
    add_synth_flags(bench);
    bench->add_option("--detector", opt.bench_detector, "Single detector, or 'all'")
        ->capture_default_str();
    bench->add_option("--k", opt.k, "Unused placeholder; protocol sweeps k")
        ->group("");  // hidden
    bench->add_option("--k-min", opt.k_min, "Sweep lower bound")->capture_default_str();
    bench->add_option("--k-max", opt.k_max, "Sweep upper bound")->capture_default_str();
    bench->add_option("--iterations", opt.iterations, "NR iterations")->capture_default_str();
    bench->add_option("--seed", opt.seed, "RNG seed")->capture_default_str();
    bench->add_option("--backend", opt.backend, "Neighbor search backend")
        ->check(CLI::IsMember({"auto", "brute", "kd", "ball"}))
        ->capture_default_str();
    bench->add_flag("--knn-mean", opt.knn_mean, "KNN: mean distance instead of kth");
    bench->add_option("--trees", opt.trees, "iforest: trees")->capture_default_str();
    bench->add_option("--subsample", opt.subsample, "iforest: subsample size")
        ->capture_default_str();
    bench->add_option("--starts", opt.mcd_starts, "mcd: random starts")->capture_default_str();
    bench->add_option("--csteps", opt.mcd_csteps, "mcd: max C-steps")->capture_default_str();
    bench->add_option("--variance-floor", opt.variance_floor, "pcad: eigenvalue cutoff")
        ->capture_default_str();
    bench->add_flag("--timing", opt.timing, "Include wall-time columns (non-reproducible)");
    bench->add_option("--format", opt.formats, "csv, json, or csv,json")
        ->delimiter(',')
        ->capture_default_str();
    add_data_flags(bench);
    bench->add_option("--out", opt.out, "Output base path")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "Per-k AUC curve for one detector");
    sweep->add_option("dataset", opt.datasets, "Input file")->required()->expected(1);
    add_detector_flags(sweep);
    sweep->add_flag("--nr", opt.nr, "Sweep NR mode instead of plain");
    sweep->add_option("--iterations", opt.iterations, "NR iterations")->capture_default_str();
    sweep->add_option("--k-min", opt.k_min, "Sweep lower bound")->capture_default_str();
    sweep->add_option("--k-max", opt.k_max, "Sweep upper bound")->capture_default_str();
    sweep->add_flag("--timing", opt.timing, "Include wall-time column");
    add_data_flags(sweep);
    add_out(sweep);

    CLI::App* iterstudy = app.add_subcommand("iterstudy", "Best-k AUC per NR iteration count");
    iterstudy->add_option("dataset", opt.datasets, "Input file")->required()->expected(1);
    add_detector_flags(iterstudy);
    iterstudy->add_option("--max-iterations", opt.max_iterations, "Largest iteration count")
        ->capture_default_str();
    iterstudy->add_option("--k-min", opt.k_min, "Sweep lower bound")->capture_default_str();
    iterstudy->add_option("--k-max", opt.k_max, "Sweep upper bound")->capture_default_str();
    add_data_flags(iterstudy);
    add_out(iterstudy);

    CLI::App* synth = app.add_subcommand("synth", "Write a collective-outlier CSV");
    add_synth_flags(synth);
    add_out(synth, true);

    CLI::App* auc = app.add_subcommand("auc", "AUC of a score file against labels");
    auc->add_option("scores", opt.datasets, "Score file, one real per line")
        ->required()
        ->expected(1);
    auc->add_option("--labels", opt.labels_path, "Label file: 0/1 per line, or .csv/.arff")
        ->required();
    add_data_flags(auc);
    add_out(auc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (score->parsed()) return cmd_score(opt);
        if (bench->parsed()) return cmd_bench(opt);
        if (sweep->parsed()) return cmd_sweep(opt);
        if (iterstudy->parsed()) return cmd_iterstudy(opt);
        if (synth->parsed()) return cmd_synth(opt);
        if (auc->parsed()) return cmd_auc(opt);
        std::cerr << "error: no command\n";
        return kExitUsage;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nrod::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
