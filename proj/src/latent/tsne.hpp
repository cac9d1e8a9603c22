#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "latent/linalg.hpp"

namespace latent {

struct TsneConfig {
    double perplexity = 30.0;
    int iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    int exaggeration_iters = 250;
    std::uint64_t seed = 0;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    int momentum_switch_iter = 250;
    int kl_log_every = 1;  // KL is also always logged at the exaggeration
                           // boundary and at the final iteration
};

struct TsneResult {
    Matrix layout;                                // n x 2
    std::vector<std::pair<int, double>> kl_trace;  // (iteration, KL) after update
};

Matrix pairwise_squared_distances(const Matrix& x);

/// Per-row Gaussian bandwidths found by bisection so each conditional row's
/// entropy matches log(perplexity) within 1e-5. Zero off-diagonal distances
/// are lifted by 1e-12 to keep the search well-posed.
Matrix conditional_affinities(Matrix d2, double perplexity,
                              std::vector<double>* betas = nullptr);

/// P = (P_cond + P_cond^T) / (2n); entries sum to 1.
Matrix symmetrize_affinities(const Matrix& p_cond);

Matrix calibrate_affinities(Matrix d2, double perplexity);

/// Student-t joint Q for a 2-D layout; entries positive off the diagonal and
/// summing to 1.
Matrix student_t_q(const Matrix& y);

double kl_divergence(const Matrix& p, const Matrix& y);

/// Analytic exact-t-SNE gradient of KL(p_scale * P || Q) at layout y.
/// p_scale implements early exaggeration; 1.0 gives the true gradient.
Matrix kl_gradient(const Matrix& p, const Matrix& y, double p_scale = 1.0);

TsneResult tsne(const Matrix& embeddings, const TsneConfig& config);

}  // namespace latent
