#pragma once

#include <cstdint>
#include <vector>

#include "latent/linalg.hpp"

namespace latent {

struct ClusterModel {
    int k = 0;
    Matrix centroids;             // k x m
    std::vector<int> assignments;  // one label in [0, k) per input row
    double inertia = 0.0;
};

/// Lloyd's algorithm from k-means++ seeding, best of `restarts` by inertia.
/// Deterministic given the seed. Throws DomainError when n < k, when all
/// points coincide, or when there are fewer distinct points than k.
ClusterModel kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter = 300,
                    double tol = 1e-6, int restarts = 10);

/// Mean silhouette over all points, the O(n^2) definition: s = (b-a)/max(a,b)
/// with 0/0 := 0; singleton-cluster points contribute 0.
double silhouette(const Matrix& points, const std::vector<int>& assignments);

struct KSelection {
    int k_star = 0;
    std::vector<std::pair<int, double>> silhouettes;  // (k, score) per candidate
};

/// argmax-silhouette over k in [k_lo, k_hi]; ties go to the smaller k.
KSelection select_k(const Matrix& points, int k_lo, int k_hi, std::uint64_t seed,
                    int max_iter = 300, double tol = 1e-6, int restarts = 10);

}  // namespace latent
