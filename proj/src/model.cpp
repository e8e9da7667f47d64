// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/model.hpp"

namespace mst {

StyleTransferModel::StyleTransferModel(const PartGrouping& grouping, const HyperParams& hp,
                                       Rng& rng)
    : grouping_(grouping),
      hp_([&hp] {
          hp.validate();
          return hp;
      }()),
      encoder_(grouping_, hp_, rng, params_),
      psm_(grouping_.parts() + 1, hp_, rng, params_),
      generator_(grouping_, hp_, rng, params_) {}

StyleTransferModel::Output StyleTransferModel::transfer_encoded(const EncodeOut& enc_content,
                                                                const EncodeOut& enc_style) const {
    const std::size_t tokens = grouping_.parts() + 1;
    Output out;
    out.enc_content = enc_content;
    out.enc_style = enc_style;
    out.content_code_c = temporal_pool(enc_content, tokens, hp_.embed_dim);
    out.content_code_s = temporal_pool(enc_style, tokens, hp_.embed_dim);
    out.modulation = psm_.modulate(enc_style.style, out.content_code_c, out.content_code_s);
    out.motion = generator_.generate(enc_content.dynamics, out.modulation.modulated,
                                     enc_content.frame_valid, enc_content.t_actual);
    return out;
}

StyleTransferModel::Output StyleTransferModel::transfer(const MotionTensors& content,
                                                        const MotionTensors& style) const {
    return transfer_encoded(encoder_.encode(content), encoder_.encode(style));
}

}  // namespace mst
