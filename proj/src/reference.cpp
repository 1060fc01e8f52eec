// SPDX-License-Identifier: Apache-2.0
#include "nrod/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nrod::ref {

namespace {

double dist(const Matrix& x, std::size_t a, std::size_t b) {
    double sum = 0.0;
    for (std::size_t t = 0; t < x.cols; ++t) {
        const double diff = x.at(a, t) - x.at(b, t);
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

}  // namespace

NeighborList knn_scan(const Matrix& x, std::size_t query, std::size_t k, bool include_self) {
    std::vector<std::pair<double, std::size_t>> all;
    all.reserve(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        if (!include_self && i == query) continue;
        all.emplace_back(dist(x, query, i), i);
    }
    if (k < 1 || k > all.size()) throw std::invalid_argument("ref::knn_scan: k out of range");
    std::sort(all.begin(), all.end());
    NeighborList out;
    for (std::size_t p = 0; p < k; ++p) {
        out.indices.push_back(all[p].second);
        out.distances.push_back(all[p].first);
    }
    return out;
}

std::vector<NeighborList> knn_scan_all(const Matrix& x, std::size_t k, bool include_self) {
    std::vector<NeighborList> out;
    out.reserve(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out.push_back(knn_scan(x, i, k, include_self));
    return out;
}

std::vector<double> knn_score(const Matrix& x, std::size_t k, bool mean_aggregate) {
    std::vector<double> scores(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const NeighborList nb = knn_scan(x, i, k, false);
        if (mean_aggregate) {
            double sum = 0.0;
            for (double d : nb.distances) sum += d;
            scores[i] = sum / static_cast<double>(k);
        } else {
            scores[i] = nb.distances.back();
        }
    }
    return scores;
}

std::vector<double> odin_score(const Matrix& x, std::size_t k) {
    std::vector<double> indegree(x.rows, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const NeighborList nb = knn_scan(x, i, k, false);
        for (std::size_t j : nb.indices) indegree[j] += 1.0;
    }
    for (double& v : indegree) v = -v;
    return indegree;
}

std::vector<double> lof_score(const Matrix& x, std::size_t k) {
    const std::size_t n = x.rows;
    std::vector<NeighborList> nb = knn_scan_all(x, k, false);
    std::vector<double> k_distance(n);
    for (std::size_t i = 0; i < n; ++i) k_distance[i] = nb[i].distances.back();

    std::vector<double> lrd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum_reach = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const std::size_t j = nb[i].indices[p];
            sum_reach += std::max(k_distance[j], nb[i].distances[p]);
        }
        lrd[i] = 1.0 / std::max(sum_reach / static_cast<double>(k), 1e-12);
    }

    std::vector<double> lof(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum_ratio = 0.0;
        for (std::size_t j : nb[i].indices) sum_ratio += lrd[j] / lrd[i];
        lof[i] = sum_ratio / static_cast<double>(k);
    }
    return lof;
}

std::size_t medoid(const std::vector<std::size_t>& subset, const Matrix& x) {
    if (subset.empty()) throw std::invalid_argument("ref::medoid: empty subset");
    std::size_t best = subset[0];
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::size_t a : subset) {
        double sum = 0.0;
        for (std::size_t b : subset) sum += dist(x, a, b);
        if (sum < best_sum || (sum == best_sum && a < best)) {
            best_sum = sum;
            best = a;
        }
    }
    return best;
}

Matrix medoid_shift(const Matrix& x, std::size_t k, std::size_t iterations) {
    Matrix cur = x;
    for (std::size_t it = 0; it < iterations; ++it) {
        Matrix next(cur.rows, cur.cols);
        for (std::size_t i = 0; i < cur.rows; ++i) {
            const NeighborList nb = knn_scan(cur, i, k, true);
            next.set_row(i, cur.row(medoid(nb.indices, cur)));
        }
        cur = next;
    }
    return cur;
}

Matrix mean_shift(const Matrix& x, std::size_t k, std::size_t iterations) {
    Matrix cur = x;
    for (std::size_t it = 0; it < iterations; ++it) {
        Matrix next(cur.rows, cur.cols);
        for (std::size_t i = 0; i < cur.rows; ++i) {
            const NeighborList nb = knn_scan(cur, i, k, true);
            for (std::size_t j : nb.indices) {
                for (std::size_t t = 0; t < cur.cols; ++t) next.at(i, t) += cur.at(j, t);
            }
            for (std::size_t t = 0; t < cur.cols; ++t) {
                next.at(i, t) /= static_cast<double>(nb.indices.size());
            }
        }
        cur = next;
    }
    return cur;
}

std::vector<double> mod_score(const Matrix& x, std::size_t k, std::size_t iterations) {
    const Matrix shifted = mean_shift(x, k, iterations);
    std::vector<double> scores(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        scores[i] = euclidean_distance(x.row(i), shifted.row(i), x.cols);
    }
    return scores;
}

double auc_pair_count(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("ref::auc_pair_count: length mismatch");
    }
    double concordant = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) {
                concordant += 1.0;
            } else if (scores[i] == scores[j]) {
                concordant += 0.5;
            }
        }
    }
    if (pairs == 0) throw std::invalid_argument("ref::auc_pair_count: need both classes");
    return concordant / static_cast<double>(pairs);
}

std::vector<double> mahalanobis_sq(const Matrix& x) {
    const std::size_t n = x.rows;
    const std::size_t d = x.cols;
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < d; ++t) mean[t] += x.at(i, t);
    }
    for (double& m : mean) m /= static_cast<double>(n);

    // Population covariance.
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < d; ++a) {
            const double ca = x.at(i, a) - mean[a];
            for (std::size_t b = 0; b < d; ++b) {
                cov[a * d + b] += ca * (x.at(i, b) - mean[b]);
            }
        }
    }
    for (double& c : cov) c /= static_cast<double>(n);

    // Gauss-Jordan inverse with partial pivoting.
    std::vector<double> inv(d * d, 0.0);
    for (std::size_t t = 0; t < d; ++t) inv[t * d + t] = 1.0;
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r) {
            if (std::fabs(cov[r * d + col]) > std::fabs(cov[pivot * d + col])) pivot = r;
        }
        if (cov[pivot * d + col] == 0.0) {
            throw std::invalid_argument("ref::mahalanobis_sq: singular covariance");
        }
        if (pivot != col) {
            for (std::size_t t = 0; t < d; ++t) {
                std::swap(cov[pivot * d + t], cov[col * d + t]);
                std::swap(inv[pivot * d + t], inv[col * d + t]);
            }
        }
        const double diag = cov[col * d + col];
        for (std::size_t t = 0; t < d; ++t) {
            cov[col * d + t] /= diag;
            inv[col * d + t] /= diag;
        }
        for (std::size_t r = 0; r < d; ++r) {
            if (r == col) continue;
            const double factor = cov[r * d + col];
            if (factor == 0.0) continue;
            for (std::size_t t = 0; t < d; ++t) {
                cov[r * d + t] -= factor * cov[col * d + t];
                inv[r * d + t] -= factor * inv[col * d + t];
            }
        }
    }

    std::vector<double> scores(n);
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < d; ++t) centered[t] = x.at(i, t) - mean[t];
        double q = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            double row = 0.0;
            for (std::size_t b = 0; b < d; ++b) row += inv[a * d + b] * centered[b];
            q += centered[a] * row;
        }
        scores[i] = q;
    }
    return scores;
}

}  // namespace nrod::ref
