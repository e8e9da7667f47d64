// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <string>
#include <vector>

#include "mst/tensor.hpp"

namespace mst {

struct NamedParam {
    std::string name;
    Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

/// Adam with bias correction. One state per parameter group; moment buffers
/// are laid out in the order the parameters were registered.
class Adam {
public:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    explicit Adam(ParamList params);

    /// Applies one update from the accumulated gradients. Parameters with no
    /// gradient buffer yet are treated as zero-gradient.
    void step(double lr);

    void zero_grad();
    std::int64_t step_count() const { return step_count_; }

    const ParamList& params() const { return params_; }
    std::vector<double>& moment1() { return m_; }
    std::vector<double>& moment2() { return v_; }
    const std::vector<double>& moment1() const { return m_; }
    const std::vector<double>& moment2() const { return v_; }
    void set_step_count(std::int64_t t) { step_count_ = t; }

private:
    ParamList params_;
    std::vector<double> m_, v_;
    std::vector<std::size_t> offsets_;
    std::int64_t step_count_ = 0;
};

}  // namespace mst
