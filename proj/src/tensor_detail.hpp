// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mst/tensor.hpp"

namespace mst::detail {

std::shared_ptr<TensorNode> make_node(std::vector<std::size_t> shape);
void finish(const std::shared_ptr<TensorNode>& out,
            std::vector<std::shared_ptr<TensorNode>> parents,
            std::function<void()> backward_fn);

}  // namespace mst::detail
