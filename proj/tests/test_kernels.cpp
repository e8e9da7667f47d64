// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "mst/kernels.hpp"
#include "mst/rng.hpp"

using namespace mst;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal(0, 1);
    return v;
}

void naive_gemm(const std::vector<double>& a, const std::vector<double>& b,
                std::vector<double>& c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (std::size_t kk = 0; kk < k; ++kk) s += a[i * k + kk] * b[kk * n + j];
            c[i * n + j] = s;
        }
}

}  // namespace

TEST_CASE("gemm_nn matches a naive triple loop") {
    Rng rng(7);
    for (auto [m, k, n] : {std::array<std::size_t, 3>{1, 1, 1},
                           std::array<std::size_t, 3>{3, 5, 2},
                           std::array<std::size_t, 3>{8, 16, 12},
                           std::array<std::size_t, 3>{5, 7, 3}}) {
        const auto a = random_vec(rng, m * k);
        const auto b = random_vec(rng, k * n);
        std::vector<double> want(m * n), got(m * n);
        naive_gemm(a, b, want, m, k, n);
        kernels::active().gemm_nn(a.data(), b.data(), got.data(), m, k, n, false);
        for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("gemm transpose variants match explicit transposition") {
    Rng rng(8);
    const std::size_t m = 4, k = 6, n = 5;
    const auto a = random_vec(rng, m * k);
    const auto bt = random_vec(rng, n * k);  // represents B^T stored [n x k]
    std::vector<double> b(k * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) b[j * n + i] = bt[i * k + j];
    std::vector<double> want(m * n), got(m * n);
    naive_gemm(a, b, want, m, k, n);
    kernels::active().gemm_nt(a.data(), bt.data(), got.data(), m, k, n, false);
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

    const auto at = random_vec(rng, k * m);  // A^T stored [k x m]
    std::vector<double> a2(m * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < m; ++j) a2[j * k + i] = at[i * m + j];
    const auto b2 = random_vec(rng, k * n);
    naive_gemm(a2, b2, want, m, k, n);
    kernels::active().gemm_tn(at.data(), b2.data(), got.data(), m, k, n, false);
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("avx2 backend is bit-identical to the scalar reference") {
    const kernels::Backend* avx2 = kernels::avx2_backend();
    if (avx2 == nullptr) {
        MESSAGE("AVX2 unavailable on this machine; dispatch falls back to scalar");
        CHECK(std::string(kernels::active().name) == "scalar");
        return;
    }
    const kernels::Backend& ref = kernels::scalar_backend();
    Rng rng(99);

    // sizes chosen to cover vector bodies and every remainder lane
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 64u, 65u, 257u}) {
        const auto x = random_vec(rng, n);
        const auto y = random_vec(rng, n);
        std::vector<double> r1(n), r2(n);

        ref.add(x.data(), y.data(), r1.data(), n);
        avx2->add(x.data(), y.data(), r2.data(), n);
        CHECK(r1 == r2);
        ref.sub(x.data(), y.data(), r1.data(), n);
        avx2->sub(x.data(), y.data(), r2.data(), n);
        CHECK(r1 == r2);
        ref.mul(x.data(), y.data(), r1.data(), n);
        avx2->mul(x.data(), y.data(), r2.data(), n);
        CHECK(r1 == r2);
        ref.scale(x.data(), 1.7, r1.data(), n);
        avx2->scale(x.data(), 1.7, r2.data(), n);
        CHECK(r1 == r2);

        std::vector<double> acc1 = y, acc2 = y;
        ref.axpy(-0.3, x.data(), acc1.data(), n);
        avx2->axpy(-0.3, x.data(), acc2.data(), n);
        CHECK(acc1 == acc2);

        CHECK(ref.sum(x.data(), n) == avx2->sum(x.data(), n));
        CHECK(ref.dot(x.data(), y.data(), n) == avx2->dot(x.data(), y.data(), n));
    }

    for (auto [m, k, n] : {std::array<std::size_t, 3>{3, 5, 2},
                           std::array<std::size_t, 3>{8, 16, 12},
                           std::array<std::size_t, 3>{7, 9, 11},
                           std::array<std::size_t, 3>{1, 33, 4}}) {
        const auto a = random_vec(rng, m * k);
        const auto b = random_vec(rng, k * n);
        const auto bt = random_vec(rng, n * k);
        const auto at = random_vec(rng, k * m);
        std::vector<double> c1(m * n, 0.5), c2(m * n, 0.5);
        ref.gemm_nn(a.data(), b.data(), c1.data(), m, k, n, true);
        avx2->gemm_nn(a.data(), b.data(), c2.data(), m, k, n, true);
        CHECK(c1 == c2);
        ref.gemm_nt(a.data(), bt.data(), c1.data(), m, k, n, false);
        avx2->gemm_nt(a.data(), bt.data(), c2.data(), m, k, n, false);
        CHECK(c1 == c2);
        ref.gemm_tn(at.data(), b.data(), c1.data(), m, k, n, false);
        avx2->gemm_tn(at.data(), b.data(), c2.data(), m, k, n, false);
        CHECK(c1 == c2);
    }

    // adam: sqrt/div are correctly rounded, so this matches exactly too
    for (std::size_t n : {1u, 5u, 8u, 33u}) {
        auto p1 = random_vec(rng, n);
        auto p2 = p1;
        const auto g = random_vec(rng, n);
        std::vector<double> m1(n, 0.01), v1(n, 0.02), m2 = m1, v2 = v1;
        ref.adam_step(p1.data(), g.data(), m1.data(), v1.data(), n, 1e-3, 0.9, 0.999, 1e-8,
                      0.1, 0.001999);
        avx2->adam_step(p2.data(), g.data(), m2.data(), v2.data(), n, 1e-3, 0.9, 0.999, 1e-8,
                        0.1, 0.001999);
        CHECK(p1 == p2);
        CHECK(m1 == m2);
        CHECK(v1 == v2);
    }
}

TEST_CASE("dispatch honors MST_KERNEL_BACKEND and CPU support") {
    const kernels::Backend& b = kernels::active();
    CHECK((std::string(b.name) == "scalar" || std::string(b.name) == "avx2"));
}
