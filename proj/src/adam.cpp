// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/adam.hpp"

#include <cmath>

#include "mst/kernels.hpp"

namespace mst {

Adam::Adam(ParamList params) : params_(std::move(params)) {
    std::size_t total = 0;
    for (const auto& p : params_) {
        offsets_.push_back(total);
        total += p.tensor.numel();
    }
    m_.assign(total, 0.0);
    v_.assign(total, 0.0);
}

void Adam::step(double lr) {
    if (lr <= 0) throw error("adam: learning rate must be positive");
    ++step_count_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        TensorNode* node = params_[i].tensor.n.get();
        const std::size_t n = node->numel();
        node->ensure_grad();
        kernels::active().adam_step(node->value.data(), node->grad.data(), m_.data() + offsets_[i],
                                    v_.data() + offsets_[i], n, lr, kBeta1, kBeta2, kEps, bc1, bc2);
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace mst
