// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <string>

#include "mst/adam.hpp"

namespace mst {

/// Versioned binary container: named f64 tensors with shape headers
/// (little-endian), both optimizer states, the iteration counter and the
/// sampler RNG state. save(load(x)) is byte-identical.
struct CheckpointState {
    std::uint64_t iteration = 0;
    std::string rng_state;
};

void save_checkpoint(const std::string& path, const ParamList& model_params,
                     const Adam& model_opt, const ParamList& disc_params, const Adam& disc_opt,
                     const CheckpointState& state);

CheckpointState load_checkpoint(const std::string& path, ParamList& model_params,
                                Adam& model_opt, ParamList& disc_params, Adam& disc_opt);

/// Loads only the tensors (no optimizer state required), e.g. for inference.
CheckpointState load_checkpoint_params(const std::string& path, ParamList& model_params,
                                       ParamList& disc_params);

}  // namespace mst
