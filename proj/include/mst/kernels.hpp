// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstddef>

namespace mst::kernels {

/// Dense double-precision kernels behind the tensor core.
///
/// Every kernel has a scalar reference implementation and, on x86-64 with
/// AVX2, a vectorized variant. Both follow the same accumulation-order
/// contract (reductions use four lanes combined as ((l0+l2)+(l1+l3)) plus a
/// sequential tail), so the two backends produce bit-identical results and
/// the equivalence tests can assert exact equality.
struct Backend {
    const char* name;

    // c (+)= a[m x k] * b[k x n]
    void (*gemm_nn)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate);
    // c (+)= a[m x k] * b^T, with b stored [n x k]
    void (*gemm_nt)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate);
    // c (+)= a^T * b, with a stored [k x m], b stored [k x n]
    void (*gemm_tn)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate);

    void (*add)(const double* a, const double* b, double* y, std::size_t n);
    void (*sub)(const double* a, const double* b, double* y, std::size_t n);
    void (*mul)(const double* a, const double* b, double* y, std::size_t n);
    void (*scale)(const double* x, double a, double* y, std::size_t n);
    void (*axpy)(double a, const double* x, double* y, std::size_t n);  // y += a*x

    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);

    // Adam update with bias correction factors bc1 = 1-beta1^t, bc2 = 1-beta2^t.
    void (*adam_step)(double* p, const double* g, double* m, double* v, std::size_t n,
                      double lr, double beta1, double beta2, double eps,
                      double bc1, double bc2);
};

const Backend& scalar_backend();

/// AVX2 backend, or nullptr when unsupported by the compiler or the CPU.
const Backend* avx2_backend();

/// Backend selected at startup: AVX2 when available, else scalar.
/// MST_KERNEL_BACKEND=scalar|avx2 overrides the choice.
const Backend& active();

}  // namespace mst::kernels
