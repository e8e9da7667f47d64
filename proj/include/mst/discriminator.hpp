// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "mst/encoder.hpp"

namespace mst {

/// Single-block transformer discriminator with its own embedding weights:
/// embed, one part+temporal attention block, mean-pool over valid frame
/// rows, FC readout, sigmoid.
class Discriminator {
public:
    Discriminator(const PartGrouping& grouping, const HyperParams& hp, Rng& rng, ParamList& reg);

    /// Probability in (0,1) as a [1x1] tensor on the tape.
    Tensor discriminate(const MotionTensors& mt) const;

private:
    std::size_t tokens_, d_;
    PartEmbedding embed_;
    Tensor pos_;
    std::vector<AttentionBlock> block_;
    Tensor readout_w_, readout_b_;
};

}  // namespace mst
