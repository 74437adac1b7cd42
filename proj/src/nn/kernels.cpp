#include "plad/nn/kernels.hpp"

#include <algorithm>
#include <limits>

namespace plad::nn {

void gemm_nn(int n, int k, int m, const double* a, const double* b, double* c) {
    for (int i = 0; i < n; ++i) {
        double* crow = c + static_cast<std::ptrdiff_t>(i) * m;
        const double* arow = a + static_cast<std::ptrdiff_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + static_cast<std::ptrdiff_t>(p) * m;
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt(int n, int k, int m, const double* a, const double* b, double* c) {
    for (int i = 0; i < n; ++i) {
        const double* arow = a + static_cast<std::ptrdiff_t>(i) * k;
        double* crow = c + static_cast<std::ptrdiff_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double* brow = b + static_cast<std::ptrdiff_t>(j) * k;
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] += s;
        }
    }
}

void gemm_tn(int n, int k, int m, const double* a, const double* b, double* c) {
    for (int i = 0; i < n; ++i) {
        const double* arow = a + static_cast<std::ptrdiff_t>(i) * k;
        const double* brow = b + static_cast<std::ptrdiff_t>(i) * m;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + static_cast<std::ptrdiff_t>(p) * m;
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

void layer_norm_rows(int rows, int cols, const double* x, const double* gamma, const double* beta, double* y,
                     double* normalized, double* inv_std) {
    for (int r = 0; r < rows; ++r) {
        const double* xr = x + static_cast<std::ptrdiff_t>(r) * cols;
        double mean = 0.0;
        for (int j = 0; j < cols; ++j) mean += xr[j];
        mean /= cols;
        double var = 0.0;
        for (int j = 0; j < cols; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= cols;
        const double is = 1.0 / std::sqrt(var + kLayerNormEps);
        if (inv_std) inv_std[r] = is;
        double* yr = y + static_cast<std::ptrdiff_t>(r) * cols;
        double* nr = normalized ? normalized + static_cast<std::ptrdiff_t>(r) * cols : nullptr;
        for (int j = 0; j < cols; ++j) {
            const double xh = (xr[j] - mean) * is;
            if (nr) nr[j] = xh;
            yr[j] = xh * gamma[j] + beta[j];
        }
    }
}

double log_sum_exp(std::span<const double> v, std::span<const unsigned char> mask) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask.empty() || mask[i]) hi = std::max(hi, v[i]);
    }
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask.empty() || mask[i]) s += std::exp(v[i] - hi);
    }
    return hi + std::log(s);
}

}  // namespace plad::nn
