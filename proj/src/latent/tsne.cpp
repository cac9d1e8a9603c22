#include "latent/tsne.hpp"

#include <cmath>
#include <limits>
#include <thread>

#include "latent/core.hpp"

namespace latent {

namespace {

// Runs fn over contiguous index chunks. Chunking depends only on the thread
// budget, so any reduction combined in chunk order is reproducible for a
// fixed seed and thread count.
template <typename Fn>
void for_chunks(std::size_t n, Fn&& fn) {
    int t = thread_count();
    if (t <= 1 || n < 128) {
        fn(std::size_t{0}, n, 0);
        return;
    }
    auto chunks = static_cast<std::size_t>(t);
    std::size_t per = (n + chunks - 1) / chunks;
    std::vector<std::thread> workers;
    for (std::size_t c = 0; c < chunks; ++c) {
        std::size_t lo = c * per;
        std::size_t hi = std::min(n, lo + per);
        if (lo >= hi) break;
        workers.emplace_back([&fn, lo, hi, c] { fn(lo, hi, static_cast<int>(c)); });
    }
    for (auto& w : workers) w.join();
}

void validate_square_distance_matrix(const Matrix& d2) {
    if (d2.rows != d2.cols) throw DomainError("affinities: distance matrix must be square");
    if (d2.rows < 4) throw DomainError("affinities: need at least 4 points");
    for (std::size_t i = 0; i < d2.rows; ++i) {
        if (d2(i, i) != 0.0) throw DomainError("affinities: nonzero diagonal");
        for (std::size_t j = i + 1; j < d2.cols; ++j) {
            if (std::fabs(d2(i, j) - d2(j, i)) > 1e-9) {
                throw DomainError("affinities: distance matrix not symmetric");
            }
            if (d2(i, j) < 0.0) throw DomainError("affinities: negative squared distance");
        }
    }
}

}  // namespace

Matrix pairwise_squared_distances(const Matrix& x) {
    const std::size_t n = x.rows, m = x.cols;
    Matrix d2(n, n);
    for_chunks(n, [&](std::size_t lo, std::size_t hi, int) {
        for (std::size_t i = lo; i < hi; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                d2(i, j) = squared_distance(&x.data[i * m], &x.data[j * m], m);
            }
        }
    });
    return d2;
}

Matrix conditional_affinities(Matrix d2, double perplexity, std::vector<double>* betas) {
    validate_square_distance_matrix(d2);
    const std::size_t n = d2.rows;
    if (perplexity < 1.0) throw DomainError("affinities: perplexity must be >= 1");
    const double target_entropy = std::log(perplexity);
    if (target_entropy >= std::log(static_cast<double>(n - 1))) {
        throw DomainError("affinities: perplexity " + std::to_string(perplexity) +
                          " infeasible for " + std::to_string(n) + " points");
    }
    // lift exact duplicates so the bandwidth search stays well-posed
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && d2(i, j) == 0.0) d2(i, j) = 1e-12;
        }
    }

    Matrix p(n, n);
    if (betas) betas->assign(n, 0.0);
    std::vector<std::string> row_errors(n);

    for_chunks(n, [&](std::size_t lo, std::size_t hi, int) {
        std::vector<double> shifted(n);
        for (std::size_t i = lo; i < hi; ++i) {
            double dmin = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) dmin = std::min(dmin, d2(i, j));
            }
            for (std::size_t j = 0; j < n; ++j) shifted[j] = d2(i, j) - dmin;

            double beta = 1.0;
            double beta_lo = -std::numeric_limits<double>::infinity();
            double beta_hi = std::numeric_limits<double>::infinity();
            bool done = false;
            double z = 0.0;
            for (int iter = 0; iter < 256; ++iter) {
                z = 0.0;
                double weighted = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    double w = std::exp(-beta * shifted[j]);
                    z += w;
                    weighted += shifted[j] * w;
                }
                double entropy = std::log(z) + beta * weighted / z;
                double diff = entropy - target_entropy;
                if (std::fabs(diff) < 1e-5) {
                    done = true;
                    break;
                }
                if (diff > 0.0) {
                    beta_lo = beta;
                    beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
                } else {
                    beta_hi = beta;
                    beta = std::isinf(beta_lo) ? beta * 0.5 : 0.5 * (beta + beta_lo);
                }
            }
            if (!done) {
                row_errors[i] = "affinities: bandwidth search failed for row " +
                                std::to_string(i);
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                p(i, j) = j == i ? 0.0 : std::exp(-beta * shifted[j]) / z;
            }
            if (betas) (*betas)[i] = beta;
        }
    });
    for (const auto& err : row_errors) {
        if (!err.empty()) throw DomainError(err);
    }
    return p;
}

Matrix symmetrize_affinities(const Matrix& p_cond) {
    const std::size_t n = p_cond.rows;
    Matrix p(n, n);
    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            p(i, j) = (p_cond(i, j) + p_cond(j, i)) * scale;
        }
    }
    return p;
}

Matrix calibrate_affinities(Matrix d2, double perplexity) {
    return symmetrize_affinities(conditional_affinities(std::move(d2), perplexity));
}

namespace {

// Student-t numerators 1/(1 + |y_i - y_j|^2) and their total, in one pass.
double t_numerators(const Matrix& y, Matrix& num) {
    const std::size_t n = y.rows;
    std::vector<double> partial(static_cast<std::size_t>(thread_count()), 0.0);
    for_chunks(n, [&](std::size_t lo, std::size_t hi, int chunk) {
        double local = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double yi0 = y(i, 0), yi1 = y(i, 1);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    num(i, j) = 0.0;
                    continue;
                }
                double d0 = yi0 - y(j, 0);
                double d1 = yi1 - y(j, 1);
                double v = 1.0 / (1.0 + d0 * d0 + d1 * d1);
                num(i, j) = v;
                local += v;
            }
        }
        partial[static_cast<std::size_t>(chunk)] += local;
    });
    double sum = 0.0;
    for (double v : partial) sum += v;  // fixed chunk order
    return sum;
}

}  // namespace

Matrix student_t_q(const Matrix& y) {
    const std::size_t n = y.rows;
    Matrix q(n, n);
    double sum = t_numerators(y, q);
    if (sum <= 0.0) throw DomainError("tsne: degenerate layout (all points coincide)");
    for (auto& v : q.data) v /= sum;
    return q;
}

double kl_divergence(const Matrix& p, const Matrix& y) {
    const std::size_t n = y.rows;
    Matrix num(n, n);
    double sum = t_numerators(y, num);
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double pij = p(i, j);
            if (pij <= 0.0 || j == i) continue;
            double qij = num(i, j) / sum;
            kl += pij * std::log(pij / qij);
        }
    }
    return kl;
}

Matrix kl_gradient(const Matrix& p, const Matrix& y, double p_scale) {
    const std::size_t n = y.rows;
    Matrix num(n, n);
    double sum = t_numerators(y, num);
    Matrix grad(n, 2);
    for_chunks(n, [&](std::size_t lo, std::size_t hi, int) {
        for (std::size_t i = lo; i < hi; ++i) {
            double g0 = 0.0, g1 = 0.0;
            const double yi0 = y(i, 0), yi1 = y(i, 1);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double mult = (p_scale * p(i, j) - num(i, j) / sum) * num(i, j);
                g0 += mult * (yi0 - y(j, 0));
                g1 += mult * (yi1 - y(j, 1));
            }
            grad(i, 0) = 4.0 * g0;
            grad(i, 1) = 4.0 * g1;
        }
    });
    return grad;
}

TsneResult tsne(const Matrix& embeddings, const TsneConfig& config) {
    const std::size_t n = embeddings.rows;
    if (n < 4) throw DomainError("tsne: need at least 4 points");
    if (config.perplexity <= 1.0) throw ConfigError("tsne: perplexity must exceed 1");
    if (config.perplexity >= static_cast<double>(n - 1) / 3.0) {
        throw DomainError("tsne: perplexity too large for " + std::to_string(n) +
                          " points (needs perplexity < (n-1)/3)");
    }
    if (config.iterations < 0) throw ConfigError("tsne: iterations must be nonnegative");
    if (config.learning_rate <= 0.0) throw ConfigError("tsne: learning rate must be positive");
    if (config.early_exaggeration < 1.0) {
        throw ConfigError("tsne: early exaggeration must be >= 1");
    }
    if (config.kl_log_every < 1) throw ConfigError("tsne: kl_log_every must be positive");

    TsneResult res;
    res.layout = Matrix(n, 2);
    Rng g(config.seed);
    for (auto& v : res.layout.data) v = gaussian(g) * 1e-4;
    if (config.iterations == 0) return res;

    Matrix p = calibrate_affinities(pairwise_squared_distances(embeddings), config.perplexity);

    Matrix velocity(n, 2), gains(n, 2, 1.0);
    for (int t = 0; t < config.iterations; ++t) {
        double p_scale = t < config.exaggeration_iters ? config.early_exaggeration : 1.0;
        Matrix grad = kl_gradient(p, res.layout, p_scale);
        for (double v : grad.data) {
            if (!std::isfinite(v)) {
                throw DomainError("tsne: non-finite gradient at iteration " +
                                  std::to_string(t + 1));
            }
        }
        double momentum =
            t < config.momentum_switch_iter ? config.momentum_initial : config.momentum_final;
        for (std::size_t idx = 0; idx < grad.data.size(); ++idx) {
            bool same_sign = (grad.data[idx] > 0.0) == (velocity.data[idx] > 0.0);
            gains.data[idx] = same_sign ? gains.data[idx] * 0.8 : gains.data[idx] + 0.2;
            if (gains.data[idx] < 0.01) gains.data[idx] = 0.01;
            velocity.data[idx] =
                momentum * velocity.data[idx] - config.learning_rate * gains.data[idx] * grad.data[idx];
            res.layout.data[idx] += velocity.data[idx];
        }
        // keep the layout centered
        double c0 = 0.0, c1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            c0 += res.layout(i, 0);
            c1 += res.layout(i, 1);
        }
        c0 /= static_cast<double>(n);
        c1 /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            res.layout(i, 0) -= c0;
            res.layout(i, 1) -= c1;
        }

        int it = t + 1;
        if (it % config.kl_log_every == 0 || it == config.exaggeration_iters ||
            it == config.iterations) {
            res.kl_trace.emplace_back(it, kl_divergence(p, res.layout));
        }
    }
    return res;
}

}  // namespace latent
