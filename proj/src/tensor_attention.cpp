// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

// Scaled dot-product attention as a single tape op. Projections stay outside
// (plain matmuls); this op owns the per-head softmax(Q K^T * scale) V part,
// which keeps the graph small and lets the forward attention weights be
// retained verbatim for export and tests.

#include <cmath>
#include <memory>

#include "mst/kernels.hpp"
#include "mst/tensor.hpp"
#include "tensor_detail.hpp"

namespace mst {

namespace {

struct AttnPlan {
    std::size_t groups, heads, g, width;  // g = rows per group, width = per-head width
};

// weights layout: [group][head][query][key], keys = g
AttentionResult attention_impl(const Tensor& q, const Tensor& k, const Tensor& v,
                               std::size_t heads, double scale, std::size_t group_size,
                               const std::vector<std::uint8_t>& key_valid) {
    if (q.shape() != k.shape() || q.shape() != v.shape())
        throw error("attention: q/k/v shapes differ: " + shape_str(q.shape()) + " " +
                    shape_str(k.shape()) + " " + shape_str(v.shape()));
    const std::size_t rows = q.rows(), total_w = q.cols();
    if (heads == 0 || total_w % heads != 0)
        throw error("attention: width " + std::to_string(total_w) + " not divisible by " +
                    std::to_string(heads) + " heads");
    if (group_size == 0 || rows % group_size != 0)
        throw error("attention: rows " + std::to_string(rows) + " not divisible by group size " +
                    std::to_string(group_size));
    if (!key_valid.empty() && key_valid.size() != rows)
        throw error("attention: key mask length " + std::to_string(key_valid.size()) +
                    " does not match " + std::to_string(rows) + " rows");
    if (!key_valid.empty()) {
        bool any = false;
        for (auto m : key_valid) any = any || m;
        if (!any) throw error("attention: all keys masked");
    }

    const AttnPlan plan{rows / group_size, heads, group_size, total_w / heads};
    auto weights = std::make_shared<std::vector<double>>(
        plan.groups * plan.heads * plan.g * plan.g, 0.0);

    Tensor out = Tensor::zeros(q.shape());
    const double* qd = q.n->value.data();
    const double* kd = k.n->value.data();
    const double* vd = v.n->value.data();
    double* od = out.n->value.data();

    std::vector<double> scores(plan.g);
    for (std::size_t b = 0; b < plan.groups; ++b) {
        const std::size_t row0 = b * plan.g;
        for (std::size_t h = 0; h < plan.heads; ++h) {
            const std::size_t col0 = h * plan.width;
            double* w = weights->data() + ((b * plan.heads + h) * plan.g) * plan.g;
            for (std::size_t qi = 0; qi < plan.g; ++qi) {
                const double* qrow = qd + (row0 + qi) * total_w + col0;
                double mx = -1e300;
                for (std::size_t ki = 0; ki < plan.g; ++ki) {
                    if (!key_valid.empty() && !key_valid[row0 + ki]) continue;
                    const double* krow = kd + (row0 + ki) * total_w + col0;
                    scores[ki] = scale * kernels::active().dot(qrow, krow, plan.width);
                    mx = std::max(mx, scores[ki]);
                }
                double sum = 0;
                double* wrow = w + qi * plan.g;
                for (std::size_t ki = 0; ki < plan.g; ++ki) {
                    if (!key_valid.empty() && !key_valid[row0 + ki]) {
                        wrow[ki] = 0.0;
                        continue;
                    }
                    wrow[ki] = std::exp(scores[ki] - mx);
                    sum += wrow[ki];
                }
                for (std::size_t ki = 0; ki < plan.g; ++ki) wrow[ki] /= sum;
                double* orow = od + (row0 + qi) * total_w + col0;
                for (std::size_t ki = 0; ki < plan.g; ++ki) {
                    if (wrow[ki] == 0.0) continue;
                    kernels::active().axpy(wrow[ki], vd + (row0 + ki) * total_w + col0, orow,
                                           plan.width);
                }
            }
        }
    }

    TensorNode* qn = q.n.get();
    TensorNode* kn = k.n.get();
    TensorNode* vn = v.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {q.n, k.n, v.n}, [qn, kn, vn, on, weights, plan, scale, total_w] {
        qn->ensure_grad();
        kn->ensure_grad();
        vn->ensure_grad();
        std::vector<double> da(plan.g);
        std::vector<double> ds(plan.g);
        for (std::size_t b = 0; b < plan.groups; ++b) {
            const std::size_t row0 = b * plan.g;
            for (std::size_t h = 0; h < plan.heads; ++h) {
                const std::size_t col0 = h * plan.width;
                const double* w = weights->data() + ((b * plan.heads + h) * plan.g) * plan.g;
                for (std::size_t qi = 0; qi < plan.g; ++qi) {
                    const double* go = on->grad.data() + (row0 + qi) * total_w + col0;
                    const double* wrow = w + qi * plan.g;
                    // dV_k += w_qk * dO_q ; dA_qk = dO_q . V_k
                    double dot_wa = 0;
                    for (std::size_t ki = 0; ki < plan.g; ++ki) {
                        if (wrow[ki] != 0.0) {
                            kernels::active().axpy(wrow[ki], go,
                                                   vn->grad.data() + (row0 + ki) * total_w + col0,
                                                   plan.width);
                            da[ki] = kernels::active().dot(
                                go, vn->value.data() + (row0 + ki) * total_w + col0, plan.width);
                        } else {
                            da[ki] = 0.0;
                        }
                        dot_wa += da[ki] * wrow[ki];
                    }
                    // softmax backward: dS = A .* (dA - sum(dA .* A))
                    for (std::size_t ki = 0; ki < plan.g; ++ki)
                        ds[ki] = wrow[ki] * (da[ki] - dot_wa);
                    // dQ_q += scale * sum_k dS_qk K_k ; dK_k += scale * dS_qk Q_q
                    double* gq = qn->grad.data() + (row0 + qi) * total_w + col0;
                    const double* qrow = qn->value.data() + (row0 + qi) * total_w + col0;
                    for (std::size_t ki = 0; ki < plan.g; ++ki) {
                        if (ds[ki] == 0.0) continue;
                        kernels::active().axpy(scale * ds[ki],
                                               kn->value.data() + (row0 + ki) * total_w + col0, gq,
                                               plan.width);
                        kernels::active().axpy(scale * ds[ki], qrow,
                                               kn->grad.data() + (row0 + ki) * total_w + col0,
                                               plan.width);
                    }
                }
            }
        }
    });

    AttentionResult res;
    res.out = out;
    res.weights = weights;
    res.groups = plan.groups;
    res.heads = plan.heads;
    res.queries = plan.g;
    res.keys = plan.g;
    return res;
}

}  // namespace

AttentionResult attention_groups(const Tensor& q, const Tensor& k, const Tensor& v,
                                 std::size_t heads, double scale, std::size_t group_size) {
    return attention_impl(q, k, v, heads, scale, group_size, {});
}

AttentionResult attention_masked(const Tensor& q, const Tensor& k, const Tensor& v,
                                 std::size_t heads, double scale,
                                 const std::vector<std::uint8_t>& key_valid) {
    return attention_impl(q, k, v, heads, scale, q.rows(), key_valid);
}

}  // namespace mst
