// SPDX-License-Identifier: Apache-2.0
#ifndef NROD_MATRIX_HPP
#define NROD_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <cstring>
#include <vector>

namespace nrod {

/// Dense row-major matrix of doubles. Rows are observations, columns are
/// features. All algorithms in this library operate on this type.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t n, std::size_t d) : rows(n), cols(d), values(n * d, 0.0) {}

    double* row(std::size_t i) { return values.data() + i * cols; }
    const double* row(std::size_t i) const { return values.data() + i * cols; }

    double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    void set_row(std::size_t i, const double* src) {
        std::memcpy(row(i), src, cols * sizeof(double));
    }

    bool rows_equal(std::size_t i, std::size_t j) const {
        return std::memcmp(row(i), row(j), cols * sizeof(double)) == 0;
    }

    bool operator==(const Matrix& other) const {
        return rows == other.rows && cols == other.cols && values == other.values;
    }
};

/// Squared Euclidean distance between two length-d vectors. Every backend
/// and detector funnels through this one loop so that equal inputs produce
/// bit-identical distances regardless of the code path.
inline double squared_distance(const double* a, const double* b, std::size_t d) {
    double sum = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
        const double diff = a[t] - b[t];
        sum += diff * diff;
    }
    return sum;
}

inline double euclidean_distance(const double* a, const double* b, std::size_t d) {
    return std::sqrt(squared_distance(a, b, d));
}

inline double row_distance(const Matrix& x, std::size_t i, std::size_t j) {
    return euclidean_distance(x.row(i), x.row(j), x.cols);
}

}  // namespace nrod

#endif  // NROD_MATRIX_HPP
