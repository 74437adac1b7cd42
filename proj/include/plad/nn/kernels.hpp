#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace plad::nn {

// Row-major dense kernels. Shapes: A is n x k, B is k x m, C is n x m unless
// noted otherwise. All of them accumulate into C.

/// C += A B
void gemm_nn(int n, int k, int m, const double* a, const double* b, double* c);
/// C += A B^T, with B stored m x k.
void gemm_nt(int n, int k, int m, const double* a, const double* b, double* c);
/// C (k x m) += A^T B, with A stored n x k and B stored n x m.
void gemm_tn(int n, int k, int m, const double* a, const double* b, double* c);

inline constexpr double kLayerNormEps = 1e-5;

/// Normalizes each row of x (rows x cols) into y and stores the inverse
/// standard deviation per row in inv_std.
void layer_norm_rows(int rows, int cols, const double* x, const double* gamma, const double* beta, double* y,
                     double* normalized, double* inv_std);

// tanh approximation of GELU
inline double gelu(double x) {
    constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
    const double u = c * (x + 0.044715 * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

inline double gelu_grad(double x) {
    constexpr double c = 0.7978845608028654;
    const double u = c * (x + 0.044715 * x * x * x);
    const double t = std::tanh(u);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3 * 0.044715 * x * x);
}

/// log(sum(exp(v[i]))) over entries whose mask is set (all when mask is empty).
double log_sum_exp(std::span<const double> v, std::span<const unsigned char> mask = {});

}  // namespace plad::nn
