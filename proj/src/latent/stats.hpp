#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace latent {

double mean_of(const std::vector<double>& xs);
/// Population variance (divides by n).
double variance_of(const std::vector<double>& xs);

/// Pearson correlation. nullopt when either column has zero variance.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided p-value for Pearson r with n samples, via the exact
/// t-distribution transform with n-2 degrees of freedom.
double pearson_pvalue(double r, std::size_t n);

/// Regularized incomplete beta I_x(a, b), continued fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Linear-interpolated percentile of a sample; p in [0, 100].
double percentile(std::vector<double> xs, double p);

struct Ci {
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile bootstrap 95% CI of the mean of `values`. Resample r draws its
/// indices from a generator seeded by (seed, r), so results are independent
/// of evaluation order.
Ci bootstrap_mean_ci(const std::vector<double>& values, int n_resamples, std::uint64_t seed);

/// Same, for sqrt(mean(values)); used for RMSE over squared errors.
Ci bootstrap_root_mean_ci(const std::vector<double>& values, int n_resamples,
                          std::uint64_t seed);

/// Adjusted Rand index between two labelings of the same points.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

/// Cosine similarity; pairs involving a zero vector map to 0.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace latent
