// SPDX-License-Identifier: Apache-2.0
#ifndef NROD_DATASET_HPP
#define NROD_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrod/matrix.hpp"

namespace nrod {

/// Raised for malformed input files and validation failures. The CLI maps
/// this to its own exit code, distinct from usage and internal errors.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numeric dataset with optional binary outlier labels (0 = normal,
/// 1 = outlier) and optional attribute names. Every entry is finite.
struct LabeledDataset {
    Matrix data;
    std::vector<int> labels;         // empty when absent, else length == rows
    std::vector<std::string> names;  // empty when absent, else length == cols

    bool has_labels() const { return !labels.empty(); }
    std::size_t size() const { return data.rows; }
    std::size_t dim() const { return data.cols; }
};

/// Result of duplicate removal, with enough bookkeeping to map scores
/// computed on the deduplicated rows back onto the original row order.
struct DedupeResult {
    LabeledDataset data;
    std::vector<std::size_t> kept_rows;    // original index of each kept row
    std::vector<std::size_t> row_to_kept;  // original row -> index into kept rows
    std::vector<std::size_t> dropped_rows; // original indices removed as duplicates
};

/// Loads a comma-separated numeric file. When label_column is given it must
/// name a header column (has_header required) whose values are 0/1; that
/// column is extracted into labels. Parse failures name the offending cell.
LabeledDataset load_csv(const std::filesystem::path& path, bool has_header,
                        const std::optional<std::string>& label_column = std::nullopt);

/// Loads an ARFF file. Numeric attributes form the feature matrix, rows
/// whose label_attribute equals outlier_value get label 1 and all others 0.
/// Attributes named in exclude_attributes (e.g. "id") are skipped; any other
/// non-numeric attribute besides the label is an error.
LabeledDataset load_arff(const std::filesystem::path& path,
                         const std::string& label_attribute,
                         const std::string& outlier_value,
                         const std::vector<std::string>& exclude_attributes = {});

/// Options for load_auto. label_attribute names the ARFF label attribute or
/// the CSV label column; when unset, ARFF falls back to "outlier" and CSV
/// uses a column named "label" if one exists (otherwise no labels).
struct LoadOptions {
    bool has_header = true;
    std::optional<std::string> label_attribute;
    std::string outlier_value = "yes";
    std::vector<std::string> exclude_attributes = {"id"};
};

/// Loads a dataset, dispatching on the file extension: .arff goes through
/// load_arff, everything else through load_csv.
LabeledDataset load_auto(const std::filesystem::path& path, const LoadOptions& options = {});

/// Removes exact duplicate rows (bitwise-equal feature vectors). The first
/// occurrence wins, labels follow their row, and order is otherwise kept.
LabeledDataset dedupe(const LabeledDataset& ds);

/// dedupe plus the original-row bookkeeping needed by the CLI.
DedupeResult dedupe_indexed(const LabeledDataset& ds);

/// Centers each column to mean 0 and scales columns with positive spread to
/// population standard deviation 1 (divisor n). Zero-variance columns come
/// out all-zero.
LabeledDataset zscore_normalize(const LabeledDataset& ds);

/// Generates the two-cluster scenario used throughout the tests: n_normal
/// points from a unit isotropic Gaussian at the origin (label 0) and
/// n_outlier points from an isotropic Gaussian with standard deviation
/// spread_ratio centered at distance `separation` from the origin (label 1).
/// Deterministic for a fixed seed.
LabeledDataset synth_collective(std::size_t n_normal, std::size_t n_outlier,
                                double separation, double spread_ratio,
                                std::uint64_t seed);

/// Writes the dataset as CSV. Labels, when present, go into a final column
/// named "label". Values are printed with round-trip precision.
void write_csv(const std::filesystem::path& path, const LabeledDataset& ds,
               bool with_header = true);

}  // namespace nrod

#endif  // NROD_DATASET_HPP
