#pragma once

#include <cstddef>
#include <vector>

namespace latent {

/// Row-major dense matrix. Sizes in this project stay small (k <= 8 states,
/// a few dozen regression features), so plain Gaussian elimination is enough.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

/// Solve A x = b by Gaussian elimination with partial pivoting.
/// Throws DomainError when the system is singular to working precision.
std::vector<double> solve_linear(Matrix a, std::vector<double> b);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double l1_distance(const std::vector<double>& a, const std::vector<double>& b);
double l2_norm(const std::vector<double>& a);
double squared_distance(const double* a, const double* b, std::size_t n);

}  // namespace latent
