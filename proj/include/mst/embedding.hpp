// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <string>
#include <vector>

#include "mst/adam.hpp"
#include "mst/motion.hpp"
#include "mst/rng.hpp"
#include "mst/tensor.hpp"

namespace mst {

struct HyperParams {
    std::size_t embed_dim = 64;   // d (even; the global token splits d/2 + d/2)
    std::size_t proj_dim = 32;    // d', per-head projection width for part tokens
    std::size_t heads = 4;        // h
    std::size_t blocks = 3;       // N
    std::size_t t_max = 200;      // T
    std::size_t mlp_hidden = 128;

    double lambda_adv = 1.0;
    double lambda_d = 1.0;
    double lambda_vel = 1.0;
    double lambda_foot = 1.0;
    double lambda_recon = 3.0;
    double lambda_cyc = 3.0;
    double lambda_acc = 0.1;

    double lr_encgen = 1e-5;
    double lr_disc = 1e-6;
    std::size_t batch = 8;

    void validate() const;
};

/// Body parts as ordered joint-index lists; together with the extra global
/// translation token this fixes the (P+1) token order of the model input.
struct PartGrouping {
    std::vector<std::string> part_names;
    std::vector<std::vector<int>> joints;  // indices into the sequence joint order

    std::size_t parts() const { return joints.size(); }
    std::size_t part_size(std::size_t i) const { return joints[i].size(); }
    std::size_t total_joints() const;

    /// Resolves name lists against a skeleton and checks the parts partition
    /// its joints (disjoint and exhaustive).
    static PartGrouping resolve(const std::vector<std::string>& part_names,
                                const std::vector<std::vector<std::string>>& joint_names,
                                const Skeleton& skel);
};

/// A motion lifted into tape tensors, zero-padded to t_max frames. Generated
/// motions reuse this shape with graph-connected tensors.
struct MotionTensors {
    std::vector<Tensor> parts;  // per part i: [t_max x 7*N_i]
    Tensor root;                // [t_max x 7]
    Tensor vel;                 // [t_max x 4]
    std::vector<std::uint8_t> frame_valid;
    std::size_t t_actual = 0;
};

MotionTensors motion_to_tensors(const MotionSequence& ms, const PartGrouping& grouping,
                                std::size_t t_max);

/// Reads a generated MotionTensors back into a MotionSequence (valid frames
/// only). Quaternions are taken verbatim; normalization is left to BVH export.
MotionSequence tensors_to_motion(const MotionTensors& mt, const PartGrouping& grouping,
                                 double fps);

Tensor init_normal(Rng& rng, std::vector<std::size_t> shape, double stddev = 0.02);
Tensor register_param(ParamList& reg, const std::string& name, Tensor t);

/// Per-part and global-translation FC embeddings. One instance feeds the
/// Siamese encoder; the discriminator owns a separate instance.
class PartEmbedding {
public:
    PartEmbedding(const PartGrouping& grouping, const HyperParams& hp, const std::string& prefix,
                  Rng& rng, ParamList& reg);

    /// X as [t_max x (P+1)*d] with rows beyond t_actual zeroed.
    Tensor embed(const MotionTensors& mt) const;

    std::size_t token_dim() const { return d_; }

private:
    std::size_t d_;
    std::vector<Tensor> w_part_, b_part_;
    Tensor w_root_, b_root_, w_vel_, b_vel_;
};

}  // namespace mst
