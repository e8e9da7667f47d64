// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mst/embedding.hpp"
#include "mst/motion.hpp"

namespace mst {

/// Run configuration parsed from UTF-8 `key = value` text (# comments).
/// Unknown keys are rejected. Paths are resolved relative to the config file
/// unless absolute; out_dir additionally honors the MST_OUTPUT_ROOT
/// environment variable as a root for relative values.
struct RunConfig {
    std::uint64_t seed = 1;
    std::size_t iterations = 2000;
    std::size_t checkpoint_every = 500;
    std::size_t min_crop = 24;
    std::size_t downsample_factor = 1;
    std::string manifest;
    std::string out_dir = "runs/out";

    HyperParams hyper;

    std::vector<std::string> keep_joints;  // empty = use files as-is
    std::vector<std::string> part_names;
    std::map<std::string, std::vector<std::string>> part_joints;
    ContactParams contact;
    BodyFrameSpec body;

    std::string source_text;  // raw config text, for the reproducibility stamp

    void validate() const;
    PartGrouping resolve_grouping(const Skeleton& skel) const;
};

RunConfig parse_config_text(const std::string& text, const std::string& base_dir);
RunConfig load_config(const std::string& path);

/// Desk-scale defaults used by tests and the synthetic workflow.
RunConfig desk_config();

std::uint64_t fnv1a64(const std::string& s);

}  // namespace mst
