// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/kernels.hpp"

#include <cmath>
#include <cstring>

namespace mst::kernels {
namespace {

// Reference kernels. Reductions keep four accumulator lanes (lane = index
// mod 4) combined as ((l0+l2)+(l1+l3)) plus a sequential tail; the AVX2
// kernels replay the same order, so results match bit for bit.

void gemm_nn_scalar(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = a[i * k + kk];
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
    const std::size_t nb = n / 4 * 4;
    for (std::size_t i = 0; i < nb; i += 4) {
        l0 += a[i] * b[i];
        l1 += a[i + 1] * b[i + 1];
        l2 += a[i + 2] * b[i + 2];
        l3 += a[i + 3] * b[i + 3];
    }
    double tail = 0;
    for (std::size_t i = nb; i < n; ++i) tail += a[i] * b[i];
    return ((l0 + l2) + (l1 + l3)) + tail;
}

void gemm_nt_scalar(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = dot_scalar(a + i * k, b + j * k, k);
            if (accumulate) c[i * n + j] += d;
            else c[i * n + j] = d;
        }
    }
}

void gemm_tn_scalar(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double* arow = a + kk * m;
        const double* brow = b + kk * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double aki = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
        }
    }
}

void add_scalar(const double* a, const double* b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void scale_scalar(const double* x, double a, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * a;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double sum_scalar(const double* x, std::size_t n) {
    double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
    const std::size_t nb = n / 4 * 4;
    for (std::size_t i = 0; i < nb; i += 4) {
        l0 += x[i];
        l1 += x[i + 1];
        l2 += x[i + 2];
        l3 += x[i + 3];
    }
    double tail = 0;
    for (std::size_t i = nb; i < n; ++i) tail += x[i];
    return ((l0 + l2) + (l1 + l3)) + tail;
}

void adam_scalar(double* p, const double* g, double* m, double* v, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] = p[i] - lr * (mhat / (std::sqrt(vhat) + eps));
    }
}

}  // namespace

const Backend& scalar_backend() {
    static const Backend backend = {
        "scalar",
        gemm_nn_scalar, gemm_nt_scalar, gemm_tn_scalar,
        add_scalar, sub_scalar, mul_scalar, scale_scalar, axpy_scalar,
        sum_scalar, dot_scalar,
        adam_scalar,
    };
    return backend;
}

}  // namespace mst::kernels
