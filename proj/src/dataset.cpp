// SPDX-License-Identifier: Apache-2.0
#include "nrod/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "nrod/rng.hpp"

namespace nrod {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Strips surrounding single or double quotes, as found in ARFF nominals.
std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '\'' && s.back() == '\'') ||
                          (s.front() == '"' && s.back() == '"'))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

bool parse_double(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void validate_finite(const LabeledDataset& ds, const std::string& origin) {
    for (std::size_t i = 0; i < ds.data.rows; ++i) {
        for (std::size_t j = 0; j < ds.data.cols; ++j) {
            if (!std::isfinite(ds.data.at(i, j))) {
                throw DataError(origin + ": non-finite value at row " +
                                std::to_string(i + 1) + ", column " + std::to_string(j + 1));
            }
        }
    }
}

std::string row_key(const Matrix& x, std::size_t i) {
    return std::string(reinterpret_cast<const char*>(x.row(i)), x.cols * sizeof(double));
}

}  // namespace

LabeledDataset load_csv(const std::filesystem::path& path, bool has_header,
                        const std::optional<std::string>& label_column) {
    std::vector<std::string> lines = read_lines(path);
    // Drop trailing blank lines; blank lines in the middle are an error below.
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw DataError(path.string() + ": empty file");

    std::size_t first_data = 0;
    std::vector<std::string> header;
    if (has_header) {
        header = split_csv_line(lines[0]);
        for (auto& h : header) h = trim(h);
        first_data = 1;
    }
    if (label_column && !has_header) {
        throw DataError("label column requested but the file has no header");
    }

    std::size_t label_idx = std::size_t(-1);
    if (label_column) {
        auto it = std::find(header.begin(), header.end(), *label_column);
        if (it == header.end()) {
            throw DataError(path.string() + ": label column '" + *label_column +
                            "' not found in header");
        }
        label_idx = static_cast<std::size_t>(it - header.begin());
    }

    if (first_data >= lines.size()) throw DataError(path.string() + ": no data rows");

    const std::size_t ncols = split_csv_line(lines[first_data]).size();
    const std::size_t nfeat = label_column ? ncols - 1 : ncols;
    if (nfeat == 0) throw DataError(path.string() + ": no feature columns");

    LabeledDataset ds;
    ds.data = Matrix(lines.size() - first_data, nfeat);
    if (label_column) ds.labels.reserve(ds.data.rows);
    if (has_header) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j != label_idx) ds.names.push_back(header[j]);
        }
    }

    for (std::size_t r = first_data; r < lines.size(); ++r) {
        const std::vector<std::string> cells = split_csv_line(lines[r]);
        if (cells.size() != ncols) {
            throw DataError(path.string() + ": row " + std::to_string(r + 1) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(ncols));
        }
        std::size_t out_j = 0;
        for (std::size_t j = 0; j < cells.size(); ++j) {
            double v = 0.0;
            if (!parse_double(cells[j], v)) {
                throw DataError(path.string() + ": cannot parse '" + trim(cells[j]) +
                                "' as a number at row " + std::to_string(r + 1) +
                                ", column " + std::to_string(j + 1));
            }
            if (j == label_idx) {
                if (v != 0.0 && v != 1.0) {
                    throw DataError(path.string() + ": label at row " + std::to_string(r + 1) +
                                    " is " + trim(cells[j]) + ", expected 0 or 1");
                }
                ds.labels.push_back(static_cast<int>(v));
            } else {
                ds.data.at(r - first_data, out_j++) = v;
            }
        }
    }
    validate_finite(ds, path.string());
    return ds;
}

LabeledDataset load_arff(const std::filesystem::path& path,
                         const std::string& label_attribute,
                         const std::string& outlier_value,
                         const std::vector<std::string>& exclude_attributes) {
    std::vector<std::string> lines = read_lines(path);

    struct Attr {
        std::string name;
        bool numeric = false;
        bool excluded = false;
        bool is_label = false;
    };
    std::vector<Attr> attrs;
    std::size_t data_start = lines.size();

    auto is_excluded = [&](const std::string& name) {
        return std::find(exclude_attributes.begin(), exclude_attributes.end(), name) !=
               exclude_attributes.end();
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty() || line[0] == '%') continue;
        const std::string low = lower(line);
        if (low.rfind("@relation", 0) == 0) continue;
        if (low.rfind("@data", 0) == 0) {
            data_start = i + 1;
            break;
        }
        if (low.rfind("@attribute", 0) == 0) {
            // @attribute <name> <type>; the name may be quoted.
            std::string rest = trim(line.substr(std::string("@attribute").size()));
            std::string name;
            if (!rest.empty() && (rest[0] == '\'' || rest[0] == '"')) {
                const char q = rest[0];
                const std::size_t close = rest.find(q, 1);
                if (close == std::string::npos) {
                    throw DataError(path.string() + ": unterminated attribute name at line " +
                                    std::to_string(i + 1));
                }
                name = rest.substr(1, close - 1);
                rest = trim(rest.substr(close + 1));
            } else {
                const std::size_t sp = rest.find_first_of(" \t");
                if (sp == std::string::npos) {
                    throw DataError(path.string() + ": malformed @attribute at line " +
                                    std::to_string(i + 1));
                }
                name = rest.substr(0, sp);
                rest = trim(rest.substr(sp));
            }
            const std::string type_low = lower(rest);
            Attr a;
            a.name = name;
            a.numeric = type_low.rfind("numeric", 0) == 0 || type_low.rfind("real", 0) == 0 ||
                        type_low.rfind("integer", 0) == 0;
            a.excluded = is_excluded(name);
            a.is_label = (name == label_attribute);
            if (!a.numeric && !a.excluded && !a.is_label && rest.size() && rest[0] != '{') {
                throw DataError(path.string() + ": unsupported attribute type '" + rest +
                                "' for '" + name + "' at line " + std::to_string(i + 1));
            }
            if (!a.numeric && !a.excluded && !a.is_label) {
                throw DataError(path.string() + ": nominal attribute '" + name +
                                "' is neither the label nor excluded");
            }
            attrs.push_back(a);
            continue;
        }
        throw DataError(path.string() + ": unexpected line " + std::to_string(i + 1) +
                        " before @data: " + line);
    }

    if (data_start > lines.size()) throw DataError(path.string() + ": missing @data section");
    const bool has_label =
        std::any_of(attrs.begin(), attrs.end(), [](const Attr& a) { return a.is_label; });
    if (!has_label) {
        throw DataError(path.string() + ": label attribute '" + label_attribute + "' not found");
    }

    std::vector<std::size_t> feature_cols;
    std::size_t label_col = 0;
    for (std::size_t j = 0; j < attrs.size(); ++j) {
        if (attrs[j].is_label) {
            label_col = j;
        } else if (!attrs[j].excluded) {
            feature_cols.push_back(j);
        }
    }
    if (feature_cols.empty()) throw DataError(path.string() + ": no numeric feature attributes");

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i = data_start; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty() || line[0] == '%') continue;
        if (line[0] == '{') {
            throw DataError(path.string() + ": sparse ARFF rows are not supported (line " +
                            std::to_string(i + 1) + ")");
        }
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != attrs.size()) {
            throw DataError(path.string() + ": row at line " + std::to_string(i + 1) + " has " +
                            std::to_string(cells.size()) + " values, expected " +
                            std::to_string(attrs.size()));
        }
        std::vector<double> row(feature_cols.size());
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            const std::size_t j = feature_cols[f];
            if (!parse_double(cells[j], row[f])) {
                throw DataError(path.string() + ": cannot parse '" + trim(cells[j]) +
                                "' as a number at line " + std::to_string(i + 1) +
                                ", attribute '" + attrs[j].name + "'");
            }
        }
        labels.push_back(unquote(trim(cells[label_col])) == outlier_value ? 1 : 0);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(path.string() + ": no data rows");

    LabeledDataset ds;
    ds.data = Matrix(rows.size(), feature_cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) ds.data.set_row(i, rows[i].data());
    ds.labels = std::move(labels);
    for (std::size_t j : feature_cols) ds.names.push_back(attrs[j].name);
    validate_finite(ds, path.string());
    return ds;
}

LabeledDataset load_auto(const std::filesystem::path& path, const LoadOptions& options) {
    if (lower(path.extension().string()) == ".arff") {
        return load_arff(path, options.label_attribute.value_or("outlier"),
                         options.outlier_value, options.exclude_attributes);
    }
    std::optional<std::string> label = options.label_attribute;
    if (!label && options.has_header) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open file: " + path.string());
        std::string first;
        std::getline(in, first);
        if (!first.empty() && first.back() == '\r') first.pop_back();
        for (const std::string& cell : split_csv_line(first)) {
            if (trim(cell) == "label") {
                label = "label";
                break;
            }
        }
    }
    return load_csv(path, options.has_header, label);
}

DedupeResult dedupe_indexed(const LabeledDataset& ds) {
    DedupeResult result;
    result.row_to_kept.resize(ds.data.rows);
    std::unordered_map<std::string, std::size_t> seen;
    seen.reserve(ds.data.rows * 2);
    for (std::size_t i = 0; i < ds.data.rows; ++i) {
        auto [it, inserted] = seen.emplace(row_key(ds.data, i), result.kept_rows.size());
        if (inserted) {
            result.row_to_kept[i] = result.kept_rows.size();
            result.kept_rows.push_back(i);
        } else {
            result.row_to_kept[i] = it->second;
            result.dropped_rows.push_back(i);
        }
    }
    result.data.data = Matrix(result.kept_rows.size(), ds.data.cols);
    for (std::size_t r = 0; r < result.kept_rows.size(); ++r) {
        result.data.data.set_row(r, ds.data.row(result.kept_rows[r]));
        if (ds.has_labels()) result.data.labels.push_back(ds.labels[result.kept_rows[r]]);
    }
    result.data.names = ds.names;
    return result;
}

LabeledDataset dedupe(const LabeledDataset& ds) { return dedupe_indexed(ds).data; }

LabeledDataset zscore_normalize(const LabeledDataset& ds) {
    const std::size_t n = ds.data.rows;
    const std::size_t d = ds.data.cols;
    LabeledDataset out = ds;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += ds.data.at(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = ds.data.at(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var);
        if (sd > 0.0) {
            for (std::size_t i = 0; i < n; ++i) out.data.at(i, j) = (ds.data.at(i, j) - mean) / sd;
        } else {
            std::cerr << "nrod: column " << j + 1 << " has zero variance, normalized to zero\n";
            for (std::size_t i = 0; i < n; ++i) out.data.at(i, j) = 0.0;
        }
    }
    return out;
}

LabeledDataset synth_collective(std::size_t n_normal, std::size_t n_outlier, double separation,
                                double spread_ratio, std::uint64_t seed) {
    if (n_normal < 1) throw std::invalid_argument("synth_collective: n_normal must be >= 1");
    if (spread_ratio <= 0.0) throw std::invalid_argument("synth_collective: spread must be > 0");
    const double inv_sqrt2 = 0.70710678118654752440;
    const double cx = separation * inv_sqrt2;
    const double cy = -separation * inv_sqrt2;

    SplitMix64 rng(seed);
    LabeledDataset ds;
    ds.data = Matrix(n_normal + n_outlier, 2);
    ds.labels.assign(n_normal + n_outlier, 0);
    ds.names = {"x0", "x1"};
    for (std::size_t i = 0; i < n_normal; ++i) {
        ds.data.at(i, 0) = rng.next_normal();
        ds.data.at(i, 1) = rng.next_normal();
    }
    for (std::size_t i = 0; i < n_outlier; ++i) {
        const std::size_t r = n_normal + i;
        ds.data.at(r, 0) = cx + spread_ratio * rng.next_normal();
        ds.data.at(r, 1) = cy + spread_ratio * rng.next_normal();
        ds.labels[r] = 1;
    }
    return ds;
}

void write_csv(const std::filesystem::path& path, const LabeledDataset& ds, bool with_header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    char buf[64];
    if (with_header) {
        for (std::size_t j = 0; j < ds.data.cols; ++j) {
            if (j) out << ',';
            if (j < ds.names.size()) {
                out << ds.names[j];
            } else {
                out << 'x' << j;
            }
        }
        if (ds.has_labels()) out << ",label";
        out << '\n';
    }
    for (std::size_t i = 0; i < ds.data.rows; ++i) {
        for (std::size_t j = 0; j < ds.data.cols; ++j) {
            if (j) out << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", ds.data.at(i, j));
            out << buf;
        }
        if (ds.has_labels()) out << ',' << ds.labels[i];
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace nrod
