// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "mst/config.hpp"

namespace mst {

/// Clips prepared for training: parsed, reduced to the configured joint set,
/// lifted to the canonical representation and downsampled. All clips share
/// one reduced skeleton.
struct Dataset {
    Skeleton skeleton;
    std::vector<MotionSequence> clips;

    std::vector<std::string> style_labels() const;
    std::vector<std::string> content_labels() const;
    std::vector<std::size_t> cell(const std::string& style, const std::string& content) const;
};

/// Manifest rows are tab- (or whitespace-) separated: path, style label,
/// content label. Paths resolve relative to the manifest file.
Dataset load_dataset(const std::string& manifest_path, const RunConfig& cfg);

/// One clip through the same preparation pipeline.
MotionSequence prepare_clip(const BvhDocument& doc, const RunConfig& cfg, Skeleton* out_skel);

}  // namespace mst
