#include "latent/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "latent/core.hpp"

namespace latent {

namespace {

std::size_t count_distinct_rows(const Matrix& points) {
    std::vector<std::size_t> order(points.rows);
    std::iota(order.begin(), order.end(), 0);
    auto row_less = [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(
            points.data.begin() + static_cast<std::ptrdiff_t>(a * points.cols),
            points.data.begin() + static_cast<std::ptrdiff_t>((a + 1) * points.cols),
            points.data.begin() + static_cast<std::ptrdiff_t>(b * points.cols),
            points.data.begin() + static_cast<std::ptrdiff_t>((b + 1) * points.cols));
    };
    std::sort(order.begin(), order.end(), row_less);
    std::size_t distinct = points.rows == 0 ? 0 : 1;
    for (std::size_t i = 1; i < points.rows; ++i) {
        if (row_less(order[i - 1], order[i])) ++distinct;
    }
    return distinct;
}

Matrix kmeanspp_init(const Matrix& points, int k, Rng& g) {
    const std::size_t n = points.rows, m = points.cols;
    Matrix centroids(static_cast<std::size_t>(k), m);
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());

    std::size_t first = uniform_below(g, n);
    std::copy_n(&points.data[first * m], m, &centroids.data[0]);

    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d2 = squared_distance(&points.data[i * m],
                                         &centroids.data[(static_cast<std::size_t>(c) - 1) * m], m);
            min_d2[i] = std::min(min_d2[i], d2);
            total += min_d2[i];
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = uniform_below(g, n);
        } else {
            double r = uniform01(g) * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += min_d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        std::copy_n(&points.data[pick * m], m, &centroids.data[static_cast<std::size_t>(c) * m]);
    }
    return centroids;
}

struct LloydResult {
    Matrix centroids;
    std::vector<int> assignments;
    double inertia = std::numeric_limits<double>::infinity();
};

// One assignment sweep; ties go to the lowest centroid index.
double assign_points(const Matrix& points, const Matrix& centroids, std::vector<int>& labels,
                     bool& changed) {
    const std::size_t n = points.rows, m = points.cols;
    const int k = static_cast<int>(centroids.rows);
    changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            double d2 = squared_distance(&points.data[i * m],
                                         &centroids.data[static_cast<std::size_t>(c) * m], m);
            if (d2 < best_d2) {
                best_d2 = d2;
                best = c;
            }
        }
        if (labels[i] != best) {
            labels[i] = best;
            changed = true;
        }
        inertia += best_d2;
    }
    return inertia;
}

LloydResult lloyd(const Matrix& points, int k, Rng& g, int max_iter, double tol) {
    const std::size_t n = points.rows, m = points.cols;
    LloydResult res;
    res.centroids = kmeanspp_init(points, k, g);
    res.assignments.assign(n, -1);

    double prev_inertia = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        double inertia = assign_points(points, res.centroids, res.assignments, changed);
        if (inertia > prev_inertia * (1.0 + 1e-12) + 1e-12) {
            throw DomainError("kmeans: inertia increased across iterations");
        }
        prev_inertia = inertia;
        if (!changed && iter > 0) break;

        Matrix sums(static_cast<std::size_t>(k), m);
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = static_cast<std::size_t>(res.assignments[i]);
            ++counts[c];
            for (std::size_t j = 0; j < m; ++j) sums(c, j) += points(i, j);
        }
        double max_shift2 = 0.0;
        bool repaired = false;
        std::vector<bool> taken(n, false);
        for (int c = 0; c < k; ++c) {
            auto cc = static_cast<std::size_t>(c);
            if (counts[cc] == 0) {
                // reseed the empty centroid at the point farthest from its
                // currently assigned centroid
                std::size_t far = 0;
                double far_d2 = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (taken[i]) continue;
                    double d2 = squared_distance(
                        &points.data[i * m],
                        &res.centroids.data[static_cast<std::size_t>(res.assignments[i]) * m], m);
                    if (d2 > far_d2) {
                        far_d2 = d2;
                        far = i;
                    }
                }
                taken[far] = true;
                std::copy_n(&points.data[far * m], m, &res.centroids.data[cc * m]);
                repaired = true;
                continue;
            }
            for (std::size_t j = 0; j < m; ++j) {
                double next = sums(cc, j) / static_cast<double>(counts[cc]);
                double d = next - res.centroids(cc, j);
                max_shift2 = std::max(max_shift2, d * d);
                res.centroids(cc, j) = next;
            }
        }
        if (!repaired && max_shift2 < tol * tol) {
            assign_points(points, res.centroids, res.assignments, changed);
            break;
        }
    }

    // Settle the exact fixpoint: centroids become the means of the final
    // assignment, so the mean invariant holds to machine precision.
    Matrix sums(static_cast<std::size_t>(k), m);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto c = static_cast<std::size_t>(res.assignments[i]);
        ++counts[c];
        for (std::size_t j = 0; j < m; ++j) sums(c, j) += points(i, j);
    }
    for (int c = 0; c < k; ++c) {
        auto cc = static_cast<std::size_t>(c);
        if (counts[cc] == 0) return res;  // empty final model: caller discards (inf inertia)
        for (std::size_t j = 0; j < m; ++j) {
            res.centroids(cc, j) = sums(cc, j) / static_cast<double>(counts[cc]);
        }
    }
    res.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        res.inertia += squared_distance(
            &points.data[i * m],
            &res.centroids.data[static_cast<std::size_t>(res.assignments[i]) * m], m);
    }
    return res;
}

}  // namespace

ClusterModel kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter, double tol,
                    int restarts) {
    if (k < 2) throw DomainError("kmeans: k must be at least 2");
    if (points.rows < static_cast<std::size_t>(k)) {
        throw DomainError("kmeans: need at least k points");
    }
    if (restarts < 1) throw DomainError("kmeans: restarts must be positive");
    std::size_t distinct = count_distinct_rows(points);
    if (distinct == 1) throw DomainError("kmeans: degenerate corpus (all points identical)");
    if (distinct < static_cast<std::size_t>(k)) {
        throw DomainError("kmeans: degenerate corpus (fewer distinct points than k)");
    }

    ClusterModel best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Rng g(derive_seed(seed, "kmeans-restart-" + std::to_string(r)));
        LloydResult res = lloyd(points, k, g, max_iter, tol);
        if (res.inertia < best.inertia) {
            best.k = k;
            best.centroids = std::move(res.centroids);
            best.assignments = std::move(res.assignments);
            best.inertia = res.inertia;
        }
    }
    if (!std::isfinite(best.inertia)) {
        throw DomainError("kmeans: no restart produced k nonempty clusters");
    }
    return best;
}

double silhouette(const Matrix& points, const std::vector<int>& assignments) {
    const std::size_t n = points.rows, m = points.cols;
    if (assignments.size() != n) throw DomainError("silhouette: label count mismatch");
    if (n == 0) throw DomainError("silhouette: empty input");
    int k = 0;
    for (int a : assignments) k = std::max(k, a + 1);
    if (k < 2) throw DomainError("silhouette: need at least 2 clusters");
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int a : assignments) {
        if (a < 0) throw DomainError("silhouette: negative label");
        ++counts[static_cast<std::size_t>(a)];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) throw DomainError("silhouette: empty cluster " + std::to_string(c));
    }

    double total = 0.0;
    std::vector<double> sum_to_cluster(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        auto ci = static_cast<std::size_t>(assignments[i]);
        if (counts[ci] == 1) continue;  // singleton contributes 0
        std::fill(sum_to_cluster.begin(), sum_to_cluster.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d = std::sqrt(squared_distance(&points.data[i * m], &points.data[j * m], m));
            sum_to_cluster[static_cast<std::size_t>(assignments[j])] += d;
        }
        double a = sum_to_cluster[ci] / static_cast<double>(counts[ci] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (c == ci) continue;
            b = std::min(b, sum_to_cluster[c] / static_cast<double>(counts[c]));
        }
        double denom = std::max(a, b);
        total += denom == 0.0 ? 0.0 : (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

KSelection select_k(const Matrix& points, int k_lo, int k_hi, std::uint64_t seed, int max_iter,
                    double tol, int restarts) {
    if (k_lo < 2 || k_hi < k_lo) throw DomainError("select_k: empty or invalid range");
    if (points.rows < static_cast<std::size_t>(k_hi) + 1) {
        throw DomainError("select_k: range must stay within [2, n-1]");
    }
    KSelection sel;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = k_lo; k <= k_hi; ++k) {
        ClusterModel model = kmeans(points, k, derive_seed(seed, "select-k-" + std::to_string(k)),
                                    max_iter, tol, restarts);
        double s = silhouette(points, model.assignments);
        sel.silhouettes.emplace_back(k, s);
        if (s > best) {
            best = s;
            sel.k_star = k;
        }
    }
    return sel;
}

}  // namespace latent
