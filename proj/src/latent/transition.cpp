#include "latent/transition.hpp"

#include <algorithm>
#include <cmath>

#include "latent/stats.hpp"

namespace latent {

TransitionMode transition_mode_from(std::string_view name) {
    if (name == "proximity") return TransitionMode::proximity;
    if (name == "temporal") return TransitionMode::temporal;
    throw ConfigError("transition mode must be proximity or temporal, got '" +
                      std::string(name) + "'");
}

std::string to_string(TransitionMode mode) {
    return mode == TransitionMode::proximity ? "proximity" : "temporal";
}

Matrix build_transition_matrix(const std::vector<LabeledPoint>& points, int k, double threshold,
                               TransitionMode mode) {
    if (k <= 1) throw DomainError("transition matrix needs k >= 2 states");
    if (mode == TransitionMode::proximity && threshold <= 0.0) {
        throw DomainError("proximity mode needs a positive distance threshold");
    }
    for (const auto& p : points) {
        if (p.label < 0 || p.label >= k) {
            throw DomainError("state label " + std::to_string(p.label) + " outside [0," +
                              std::to_string(k) + ")");
        }
    }
    auto kk = static_cast<std::size_t>(k);
    Matrix counts(kk, kk);
    if (mode == TransitionMode::proximity) {
        const double t2 = threshold * threshold;
        for (std::size_t p = 0; p < points.size(); ++p) {
            for (std::size_t q = 0; q < points.size(); ++q) {
                if (p == q) continue;
                double dx = points[p].x - points[q].x;
                double dy = points[p].y - points[q].y;
                if (dx * dx + dy * dy <= t2) {
                    counts(static_cast<std::size_t>(points[p].label),
                           static_cast<std::size_t>(points[q].label)) += 1.0;
                }
            }
        }
    } else {
        std::vector<const LabeledPoint*> sorted;
        sorted.reserve(points.size());
        for (const auto& p : points) sorted.push_back(&p);
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const LabeledPoint* a, const LabeledPoint* b) {
                             return a->date < b->date;
                         });
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            if (sorted[i + 1]->date.days - sorted[i]->date.days == 1) {
                counts(static_cast<std::size_t>(sorted[i]->label),
                       static_cast<std::size_t>(sorted[i + 1]->label)) += 1.0;
            }
        }
    }

    Matrix t(kk, kk);
    for (std::size_t i = 0; i < kk; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < kk; ++j) row_sum += counts(i, j);
        if (row_sum == 0.0) {
            for (std::size_t j = 0; j < kk; ++j) t(i, j) = 1.0 / static_cast<double>(k);
        } else {
            for (std::size_t j = 0; j < kk; ++j) t(i, j) = counts(i, j) / row_sum;
        }
    }
    return t;
}

PagerankResult pagerank(const Matrix& transition, double alpha, int max_iter, double tol) {
    const std::size_t k = transition.rows;
    if (transition.cols != k || k < 2) throw DomainError("pagerank: need a square k>=2 matrix");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("pagerank: alpha must lie in (0,1)");
    }
    if (max_iter < 1) throw DomainError("pagerank: max_iter must be positive");
    for (std::size_t i = 0; i < k; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (transition(i, j) < 0.0) throw DomainError("pagerank: negative transition entry");
            row_sum += transition(i, j);
        }
        if (std::fabs(row_sum - 1.0) > 1e-9) {
            throw DomainError("pagerank: row " + std::to_string(i) +
                              " is not stochastic (sum " + fmt_double(row_sum) + ")");
        }
    }

    PagerankResult res;
    res.values.assign(k, 1.0 / static_cast<double>(k));
    const double teleport = (1.0 - alpha) / static_cast<double>(k);
    std::vector<double> next(k);
    for (int iter = 0; iter < max_iter; ++iter) {
        for (std::size_t i = 0; i < k; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) acc += transition(j, i) * res.values[j];
            next[i] = teleport + alpha * acc;
        }
        double step = 0.0;
        for (std::size_t i = 0; i < k; ++i) step += std::fabs(next[i] - res.values[i]);
        res.values = next;
        ++res.iterations;
        if (step < tol) {
            res.converged = true;
            break;
        }
    }
    double total = 0.0;
    for (double v : res.values) total += v;
    for (double& v : res.values) v /= total;
    return res;
}

double resolve_threshold(const std::vector<LabeledPoint>& points,
                         const StateVectorOptions& opts) {
    if (opts.threshold_absolute) {
        if (*opts.threshold_absolute <= 0.0) {
            throw ConfigError("absolute distance threshold must be positive");
        }
        return *opts.threshold_absolute;
    }
    if (opts.threshold_quantile < 0.0 || opts.threshold_quantile > 1.0) {
        throw ConfigError("threshold quantile must lie in [0,1]");
    }
    if (points.size() < 2) return 1.0;
    std::vector<double> dists;
    dists.reserve(points.size() * (points.size() - 1) / 2);
    for (std::size_t p = 0; p < points.size(); ++p) {
        for (std::size_t q = p + 1; q < points.size(); ++q) {
            double dx = points[p].x - points[q].x;
            double dy = points[p].y - points[q].y;
            dists.push_back(std::sqrt(dx * dx + dy * dy));
        }
    }
    double t = percentile(std::move(dists), opts.threshold_quantile * 100.0);
    return std::max(t, 1e-12);
}

StateVector participant_state_vector(const std::string& participant_id, Date period_start,
                                     Date period_end, const std::vector<LabeledPoint>& points,
                                     const StateVectorOptions& opts, Matrix* transition_out) {
    if (points.empty()) {
        throw DomainError("state vector needs at least one day in the period");
    }
    StateVector sv;
    sv.participant_id = participant_id;
    sv.period_start = period_start;
    sv.period_end = period_end;
    sv.threshold = resolve_threshold(points, opts);
    Matrix t = build_transition_matrix(points, opts.k, sv.threshold, opts.mode);
    PagerankResult pr = pagerank(t, opts.alpha, opts.max_iter, opts.tol);
    sv.values = std::move(pr.values);
    sv.iterations = pr.iterations;
    sv.converged = pr.converged;
    if (transition_out) *transition_out = std::move(t);
    return sv;
}

}  // namespace latent
