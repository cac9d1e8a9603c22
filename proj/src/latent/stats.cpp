#include "latent/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "latent/core.hpp"
#include "latent/linalg.hpp"

namespace latent {

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) throw DomainError("mean of empty sample");
    double s = 0.0;
    for (double v : xs) s += v;
    return s / static_cast<double>(xs.size());
}

double variance_of(const std::vector<double>& xs) {
    double m = mean_of(xs);
    double s = 0.0;
    for (double v : xs) s += (v - m) * (v - m);
    return s / static_cast<double>(xs.size());
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DomainError("pearson: length mismatch");
    if (x.size() < 2) throw DomainError("pearson: need at least 2 samples");
    double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
    const int kMaxIter = 300;
    const double eps = 3e-14, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw DomainError("incomplete_beta: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double pearson_pvalue(double r, std::size_t n) {
    if (n < 3) throw DomainError("pearson_pvalue: need n >= 3");
    double df = static_cast<double>(n - 2);
    r = std::clamp(r, -1.0, 1.0);
    if (std::fabs(r) >= 1.0) return 0.0;
    double t = r * std::sqrt(df / (1.0 - r * r));
    // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
    double x = df / (df + t * t);
    return incomplete_beta(df / 2.0, 0.5, x);
}

double percentile(std::vector<double> xs, double p) {
    if (xs.empty()) throw DomainError("percentile of empty sample");
    if (p < 0.0 || p > 100.0) throw DomainError("percentile out of range");
    std::sort(xs.begin(), xs.end());
    double rank = p / 100.0 * static_cast<double>(xs.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(rank));
    auto hi = static_cast<std::size_t>(std::ceil(rank));
    double frac = rank - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

namespace {

Ci bootstrap_ci_impl(const std::vector<double>& values, int n_resamples, std::uint64_t seed,
                     bool take_root) {
    if (values.size() < 3) throw DomainError("bootstrap: need at least 3 values");
    if (n_resamples <= 0) throw DomainError("bootstrap: n_resamples must be positive");
    const std::size_t n = values.size();
    std::vector<double> stats(static_cast<std::size_t>(n_resamples));
    for (int r = 0; r < n_resamples; ++r) {
        Rng g(splitmix64(seed ^ (0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(r) + 1))));
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += values[uniform_below(g, n)];
        double m = s / static_cast<double>(n);
        stats[static_cast<std::size_t>(r)] = take_root ? std::sqrt(m) : m;
    }
    return Ci{percentile(stats, 2.5), percentile(stats, 97.5)};
}

}  // namespace

Ci bootstrap_mean_ci(const std::vector<double>& values, int n_resamples, std::uint64_t seed) {
    return bootstrap_ci_impl(values, n_resamples, seed, false);
}

Ci bootstrap_root_mean_ci(const std::vector<double>& values, int n_resamples,
                          std::uint64_t seed) {
    return bootstrap_ci_impl(values, n_resamples, seed, true);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw DomainError("ARI: length mismatch");
    if (a.empty()) throw DomainError("ARI: empty labelings");
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ca, cb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        ca[a[i]] += 1.0;
        cb[b[i]] += 1.0;
    }
    auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (auto& [k, v] : joint) sum_joint += choose2(v);
    for (auto& [k, v] : ca) sum_a += choose2(v);
    for (auto& [k, v] : cb) sum_b += choose2(v);
    double total = choose2(static_cast<double>(a.size()));
    double expected = sum_a * sum_b / total;
    double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;  // both partitions trivial
    return (sum_joint - expected) / (max_index - expected);
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    double na = l2_norm(a), nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

}  // namespace latent
