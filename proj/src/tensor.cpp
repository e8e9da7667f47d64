// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <unordered_set>

#include "mst/kernels.hpp"

namespace mst {

namespace {
std::atomic<std::uint64_t> g_next_id{1};
}

namespace detail {

thread_local bool g_grad_enabled = true;

std::shared_ptr<TensorNode> make_node(std::vector<std::size_t> shape) {
    std::size_t numel = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw error("tensor extents must be positive, got " + shape_str(shape));
        numel *= e;
    }
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->value.resize(numel);
    n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
    return n;
}

// Attach parents and a backward closure when any input needs gradients.
void finish(const std::shared_ptr<TensorNode>& out,
            std::vector<std::shared_ptr<TensorNode>> parents,
            std::function<void()> backward_fn) {
    if (!g_grad_enabled) return;
    bool needs = false;
    for (const auto& p : parents)
        if (p->requires_grad) needs = true;
    if (!needs) return;
    out->requires_grad = true;
    out->parents = std::move(parents);
    out->backward_fn = std::move(backward_fn);
}

}  // namespace detail

NoGradGuard::NoGradGuard() : prev_(detail::g_grad_enabled) { detail::g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { detail::g_grad_enabled = prev_; }

std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << ")";
    return os.str();
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    Tensor t;
    t.n = detail::make_node(std::move(shape));
    t.n->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.n->value.begin(), t.n->value.end(), v);
    return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data,
                    bool requires_grad) {
    Tensor t;
    t.n = detail::make_node(std::move(shape));
    if (data.size() != t.n->value.size())
        throw error("tensor data length " + std::to_string(data.size()) +
                    " does not match shape " + shape_str(t.n->shape));
    t.n->value = std::move(data);
    t.n->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

std::size_t Tensor::rows() const {
    if (rank() != 2) throw error("expected a rank-2 tensor, got " + shape_str(shape()));
    return shape()[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw error("expected a rank-2 tensor, got " + shape_str(shape()));
    return shape()[1];
}

double Tensor::item() const {
    if (numel() != 1) throw error("item() on non-scalar tensor " + shape_str(shape()));
    return n->value[0];
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw error("backward requires a scalar loss");
    if (!loss.n->requires_grad)
        throw error("backward: loss does not depend on any gradient-tracked tensor");
    if (loss.n->consumed)
        throw error("backward already ran on this tape; re-run the forward pass first");

    // Gather the reachable gradient-tracked subgraph.
    std::vector<TensorNode*> nodes;
    std::unordered_set<TensorNode*> seen;
    std::vector<TensorNode*> stack{loss.n.get()};
    seen.insert(loss.n.get());
    while (!stack.empty()) {
        TensorNode* cur = stack.back();
        stack.pop_back();
        if (cur->consumed)
            throw error("backward already ran on part of this tape; re-run the forward pass first");
        nodes.push_back(cur);
        for (const auto& p : cur->parents) {
            if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
        }
    }

    // Creation ids give a topological order; run strictly in reverse.
    std::sort(nodes.begin(), nodes.end(),
              [](const TensorNode* a, const TensorNode* b) { return a->id > b->id; });

    loss.n->ensure_grad();
    loss.n->grad[0] += 1.0;
    for (TensorNode* node : nodes) {
        if (node->backward_fn) {
            node->backward_fn();
            node->backward_fn = nullptr;
            node->consumed = true;
        }
    }
}

// ---------------------------------------------------------------------------
// structural ops

Tensor detach(const Tensor& a) {
    Tensor t;
    t.n = detail::make_node(a.shape());
    t.n->value = a.n->value;
    return t;
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
    Tensor out;
    out.n = detail::make_node(std::move(shape));
    if (out.numel() != a.numel())
        throw error("reshape from " + shape_str(a.shape()) + " to " + shape_str(out.shape()) +
                    " changes the element count");
    out.n->value = a.n->value;
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on] {
        an->ensure_grad();
        kernels::active().add(an->grad.data(), on->grad.data(), an->grad.data(), an->numel());
    });
    return out;
}

Tensor transpose(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.n->value[j * r + i] = a.n->value[i * c + j];
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on, r, c] {
        an->ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) an->grad[i * c + j] += on->grad[j * r + i];
    });
    return out;
}

Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
    const std::size_t r = a.shape()[0];
    if (r0 >= r1 || r1 > r)
        throw error("slice_rows [" + std::to_string(r0) + "," + std::to_string(r1) +
                    ") out of range for " + shape_str(a.shape()));
    const std::size_t width = a.numel() / r;
    std::vector<std::size_t> shape = a.shape();
    shape[0] = r1 - r0;
    Tensor out;
    out.n = detail::make_node(std::move(shape));
    std::copy_n(a.n->value.begin() + static_cast<std::ptrdiff_t>(r0 * width),
                (r1 - r0) * width, out.n->value.begin());
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on, r0, width] {
        an->ensure_grad();
        kernels::active().add(an->grad.data() + r0 * width, on->grad.data(),
                              an->grad.data() + r0 * width, on->numel());
    });
    return out;
}

Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
    const std::size_t r = a.rows(), c = a.cols();
    if (c0 >= c1 || c1 > c)
        throw error("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) +
                    ") out of range for " + shape_str(a.shape()));
    const std::size_t w = c1 - c0;
    Tensor out = Tensor::zeros({r, w});
    for (std::size_t i = 0; i < r; ++i)
        std::copy_n(a.n->value.begin() + static_cast<std::ptrdiff_t>(i * c + c0), w,
                    out.n->value.begin() + static_cast<std::ptrdiff_t>(i * w));
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on, r, c, c0, w] {
        an->ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < w; ++j) an->grad[i * c + c0 + j] += on->grad[i * w + j];
    });
    return out;
}

Tensor concat_rows(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw error("concat_rows of zero tensors");
    const std::size_t width = xs[0].numel() / xs[0].shape()[0];
    std::size_t total = 0;
    for (const auto& x : xs) {
        if (x.numel() / x.shape()[0] != width)
            throw error("concat_rows width mismatch: " + shape_str(xs[0].shape()) + " vs " +
                        shape_str(x.shape()));
        total += x.shape()[0];
    }
    std::vector<std::size_t> shape = xs[0].shape();
    shape[0] = total;
    Tensor out;
    out.n = detail::make_node(std::move(shape));
    std::size_t off = 0;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::vector<std::pair<TensorNode*, std::size_t>> spans;  // (node, start offset)
    for (const auto& x : xs) {
        std::copy_n(x.n->value.begin(), x.numel(),
                    out.n->value.begin() + static_cast<std::ptrdiff_t>(off));
        parents.push_back(x.n);
        spans.emplace_back(x.n.get(), off);
        off += x.numel();
    }
    TensorNode* on = out.n.get();
    detail::finish(out.n, std::move(parents), [on, spans] {
        for (const auto& [node, start] : spans) {
            if (!node->requires_grad) continue;
            node->ensure_grad();
            kernels::active().add(node->grad.data(), on->grad.data() + start, node->grad.data(),
                                  node->numel());
        }
    });
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw error("concat_cols of zero tensors");
    const std::size_t r = xs[0].rows();
    std::size_t total = 0;
    for (const auto& x : xs) {
        if (x.rows() != r)
            throw error("concat_cols row mismatch: " + shape_str(xs[0].shape()) + " vs " +
                        shape_str(x.shape()));
        total += x.cols();
    }
    Tensor out = Tensor::zeros({r, total});
    std::size_t coff = 0;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::vector<std::pair<TensorNode*, std::size_t>> spans;
    for (const auto& x : xs) {
        const std::size_t w = x.cols();
        for (std::size_t i = 0; i < r; ++i)
            std::copy_n(x.n->value.begin() + static_cast<std::ptrdiff_t>(i * w), w,
                        out.n->value.begin() + static_cast<std::ptrdiff_t>(i * total + coff));
        parents.push_back(x.n);
        spans.emplace_back(x.n.get(), coff);
        coff += w;
    }
    TensorNode* on = out.n.get();
    detail::finish(out.n, std::move(parents), [on, spans, r, total] {
        for (const auto& [node, start] : spans) {
            if (!node->requires_grad) continue;
            node->ensure_grad();
            const std::size_t w = node->numel() / r;
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < w; ++j)
                    node->grad[i * w + j] += on->grad[i * total + start + j];
        }
    });
    return out;
}

Tensor row_diff(const Tensor& a) {
    const std::size_t r = a.shape()[0];
    if (r < 2) throw error("row_diff needs at least 2 rows, got " + shape_str(a.shape()));
    const std::size_t width = a.numel() / r;
    std::vector<std::size_t> shape = a.shape();
    shape[0] = r - 1;
    Tensor out;
    out.n = detail::make_node(std::move(shape));
    kernels::active().sub(a.n->value.data() + width, a.n->value.data(), out.n->value.data(),
                          (r - 1) * width);
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on, r, width] {
        an->ensure_grad();
        for (std::size_t i = 0; i + 1 < r; ++i) {
            const double* g = on->grad.data() + i * width;
            kernels::active().add(an->grad.data() + (i + 1) * width, g,
                                  an->grad.data() + (i + 1) * width, width);
            kernels::active().axpy(-1.0, g, an->grad.data() + i * width, width);
        }
    });
    return out;
}

Tensor zero_rows(const Tensor& a, const std::vector<std::uint8_t>& valid) {
    const std::size_t r = a.shape()[0];
    if (valid.size() != r)
        throw error("zero_rows mask length " + std::to_string(valid.size()) +
                    " does not match rows of " + shape_str(a.shape()));
    const std::size_t width = a.numel() / r;
    Tensor out;
    out.n = detail::make_node(a.shape());
    for (std::size_t i = 0; i < r; ++i) {
        if (valid[i])
            std::copy_n(a.n->value.begin() + static_cast<std::ptrdiff_t>(i * width), width,
                        out.n->value.begin() + static_cast<std::ptrdiff_t>(i * width));
        // zeros otherwise
    }
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on, valid, r, width] {
        an->ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
            if (valid[i])
                kernels::active().add(an->grad.data() + i * width, on->grad.data() + i * width,
                                      an->grad.data() + i * width, width);
    });
    return out;
}

}  // namespace mst
