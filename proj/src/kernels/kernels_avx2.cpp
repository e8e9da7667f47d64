// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

// AVX2 variants of the dense kernels. Compiled with -mavx2 only in this
// translation unit; callers go through the dispatch table and never reach
// this code on CPUs without AVX2.
//
// Bit-compatibility contract with the scalar reference: identical loop
// order, separate mul/add (no FMA contraction; built with -ffp-contract=off)
// and the shared four-lane reduction order. sqrt and div are IEEE
// correctly-rounded, so the Adam kernel also matches exactly.

#include "mst/kernels.hpp"

#if defined(MST_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace mst::kernels {
namespace {

inline double hsum(__m256d acc) {
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d s = _mm_add_pd(lo, hi);  // [l0+l2, l1+l3]
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

void gemm_nn_avx2(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    const std::size_t nb = n / 4 * 4;
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = a[i * k + kk];
            const __m256d va = _mm256_set1_pd(aik);
            const double* brow = b + kk * n;
            std::size_t j = 0;
            for (; j < nb; j += 4) {
                const __m256d vb = _mm256_loadu_pd(brow + j);
                const __m256d vc = _mm256_loadu_pd(crow + j);
                _mm256_storeu_pd(crow + j, _mm256_add_pd(vc, _mm256_mul_pd(va, vb)));
            }
            for (; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t nb = n / 4 * 4;
    for (std::size_t i = 0; i < nb; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vb = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    double tail = 0;
    for (std::size_t i = nb; i < n; ++i) tail += a[i] * b[i];
    return hsum(acc) + tail;
}

void gemm_nt_avx2(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = dot_avx2(a + i * k, b + j * k, k);
            if (accumulate) c[i * n + j] += d;
            else c[i * n + j] = d;
        }
    }
}

void gemm_tn_avx2(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    const std::size_t nbv = n / 4 * 4;
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double* arow = a + kk * m;
        const double* brow = b + kk * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double aki = arow[i];
            const __m256d va = _mm256_set1_pd(aki);
            double* crow = c + i * n;
            std::size_t j = 0;
            for (; j < nbv; j += 4) {
                const __m256d vb = _mm256_loadu_pd(brow + j);
                const __m256d vc = _mm256_loadu_pd(crow + j);
                _mm256_storeu_pd(crow + j, _mm256_add_pd(vc, _mm256_mul_pd(va, vb)));
            }
            for (; j < n; ++j) crow[j] += aki * brow[j];
        }
    }
}

void add_avx2(const double* a, const double* b, double* y, std::size_t n) {
    const std::size_t nb = n / 4 * 4;
    std::size_t i = 0;
    for (; i < nb; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) y[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* y, std::size_t n) {
    const std::size_t nb = n / 4 * 4;
    std::size_t i = 0;
    for (; i < nb; i += 4)
        _mm256_storeu_pd(y + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) y[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* y, std::size_t n) {
    const std::size_t nb = n / 4 * 4;
    std::size_t i = 0;
    for (; i < nb; i += 4)
        _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) y[i] = a[i] * b[i];
}

void scale_avx2(const double* x, double a, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const std::size_t nb = n / 4 * 4;
    std::size_t i = 0;
    for (; i < nb; i += 4)
        _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    for (; i < n; ++i) y[i] = x[i] * a;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const std::size_t nb = n / 4 * 4;
    std::size_t i = 0;
    for (; i < nb; i += 4) {
        const __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t nb = n / 4 * 4;
    for (std::size_t i = 0; i < nb; i += 4)
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double tail = 0;
    for (std::size_t i = nb; i < n; ++i) tail += x[i];
    return hsum(acc) + tail;
}

void adam_avx2(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double beta1, double beta2, double eps,
               double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vomb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d vomb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vlr = _mm256_set1_pd(lr);
    const std::size_t nb = n / 4 * 4;
    std::size_t i = 0;
    for (; i < nb; i += 4) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        vm = _mm256_add_pd(_mm256_mul_pd(vb1, vm), _mm256_mul_pd(vomb1, vg));
        vv = _mm256_add_pd(_mm256_mul_pd(vb2, vv), _mm256_mul_pd(vomb2, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_div_pd(vm, vbc1);
        const __m256d vhat = _mm256_div_pd(vv, vbc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        const __m256d vp = _mm256_loadu_pd(p + i);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(vp, _mm256_mul_pd(vlr, _mm256_div_pd(mhat, denom))));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] = p[i] - lr * (mhat / (std::sqrt(vhat) + eps));
    }
}

}  // namespace

const Backend* avx2_backend_impl() {
    static const Backend backend = {
        "avx2",
        gemm_nn_avx2, gemm_nt_avx2, gemm_tn_avx2,
        add_avx2, sub_avx2, mul_avx2, scale_avx2, axpy_avx2,
        sum_avx2, dot_avx2,
        adam_avx2,
    };
    return &backend;
}

}  // namespace mst::kernels

#endif  // MST_HAVE_AVX2
