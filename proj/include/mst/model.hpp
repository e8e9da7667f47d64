// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "mst/discriminator.hpp"
#include "mst/generator.hpp"
#include "mst/psm.hpp"

namespace mst {

/// The full style-transfer network: Siamese encoder, part-attentive style
/// modulator and generator sharing one parameter registry. The composition
/// is transfer(content, style) = generate(Y_content, modulate(S_style |
/// C_style, C_content)).
class StyleTransferModel {
public:
    StyleTransferModel(const PartGrouping& grouping, const HyperParams& hp, Rng& rng);

    struct Output {
        MotionTensors motion;
        EncodeOut enc_content, enc_style;
        Tensor content_code_c, content_code_s;  // pooled dynamics, [(P+1) x d]
        Psm::Result modulation;
    };

    Output transfer(const MotionTensors& content, const MotionTensors& style) const;

    /// Same composition with both encodings already available (they are
    /// reused across the loss terms of a training step).
    Output transfer_encoded(const EncodeOut& enc_content, const EncodeOut& enc_style) const;

    const Encoder& encoder() const { return encoder_; }
    const Psm& psm() const { return psm_; }
    const Generator& generator() const { return generator_; }
    const PartGrouping& grouping() const { return grouping_; }
    const HyperParams& hyper() const { return hp_; }

    ParamList& params() { return params_; }
    const ParamList& params() const { return params_; }

private:
    PartGrouping grouping_;
    HyperParams hp_;
    ParamList params_;
    Encoder encoder_;
    Psm psm_;
    Generator generator_;
};

}  // namespace mst
