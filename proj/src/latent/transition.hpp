#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latent/core.hpp"
#include "latent/linalg.hpp"

namespace latent {

enum class TransitionMode { proximity, temporal };

TransitionMode transition_mode_from(std::string_view name);
std::string to_string(TransitionMode mode);

/// One embedded day inside a participant-period cloud.
struct LabeledPoint {
    Date date;
    double x = 0.0;
    double y = 0.0;
    int label = 0;
};

/// Proximity mode counts ordered pairs of distinct points within the distance
/// threshold; temporal mode counts consecutive-calendar-day label pairs. Rows
/// are normalized to sum 1; all-zero rows become uniform (dangling repair).
Matrix build_transition_matrix(const std::vector<LabeledPoint>& points, int k, double threshold,
                               TransitionMode mode);

struct PagerankResult {
    std::vector<double> values;
    int iterations = 0;
    bool converged = false;
};

/// Damped power iteration p <- (1-alpha)/k + alpha * T^t p from a uniform
/// start, stopping when the L1 step drops below tol; the result is
/// renormalized to sum exactly 1.
PagerankResult pagerank(const Matrix& transition, double alpha = 0.85, int max_iter = 100,
                        double tol = 1e-8);

struct StateVector {
    std::string participant_id;
    Date period_start;  // inclusive
    Date period_end;    // exclusive
    std::vector<double> values;
    int iterations = 0;
    bool converged = false;
    double threshold = 0.0;  // resolved proximity threshold for this cloud
};

struct StateVectorOptions {
    int k = 5;
    double alpha = 0.85;
    TransitionMode mode = TransitionMode::proximity;
    /// Absolute threshold wins over the quantile when set.
    std::optional<double> threshold_absolute;
    double threshold_quantile = 0.10;
    int max_iter = 100;
    double tol = 1e-8;
};

/// Quantile-of-pairwise-distances threshold for one point cloud; clouds with
/// fewer than two points fall back to 1.0 (no pair can match anyway), and the
/// result is floored at 1e-12 so coincident points still count as near.
double resolve_threshold(const std::vector<LabeledPoint>& points,
                         const StateVectorOptions& opts);

/// Transition matrix + PageRank for one participant-period cloud.
StateVector participant_state_vector(const std::string& participant_id, Date period_start,
                                     Date period_end, const std::vector<LabeledPoint>& points,
                                     const StateVectorOptions& opts, Matrix* transition_out = nullptr);

}  // namespace latent
