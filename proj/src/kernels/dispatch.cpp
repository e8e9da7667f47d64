// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace mst::kernels {

#if defined(MST_HAVE_AVX2)
const Backend* avx2_backend_impl();
#endif

const Backend* avx2_backend() {
#if defined(MST_HAVE_AVX2)
    if (__builtin_cpu_supports("avx2")) return avx2_backend_impl();
#endif
    return nullptr;
}

namespace {

const Backend* select() {
    const char* env = std::getenv("MST_KERNEL_BACKEND");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return &scalar_backend();
        if (std::strcmp(env, "avx2") == 0 && avx2_backend() != nullptr) return avx2_backend();
    }
    if (const Backend* b = avx2_backend()) return b;
    return &scalar_backend();
}

}  // namespace

const Backend& active() {
    static const Backend* chosen = select();
    return *chosen;
}

}  // namespace mst::kernels
