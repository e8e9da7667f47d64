// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mst/error.hpp"

namespace mst {

/// One node of the recorded computation graph. Nodes are created in
/// execution order and carry a monotonically increasing id, so the id order
/// is a topological order of the tape; backward walks ids in reverse.
struct TensorNode {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized lazily, same length as value
    bool requires_grad = false;
    bool consumed = false;  // backward already ran through this node
    std::uint64_t id = 0;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void()> backward_fn;

    std::size_t numel() const { return value.size(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

/// Value-semantics handle to a graph node. Dense row-major 64-bit floats.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> shape, double v, bool requires_grad = false);
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return n != nullptr; }
    const std::vector<std::size_t>& shape() const { return n->shape; }
    std::size_t numel() const { return n->value.size(); }
    std::size_t rank() const { return n->shape.size(); }
    std::size_t rows() const;  // rank-2 helpers
    std::size_t cols() const;

    std::span<const double> value() const { return n->value; }
    /// Mutable access to a leaf's storage (parameter init, finite differences).
    std::span<double> value_mut() { return n->value; }
    std::span<const double> grad() const { return n->grad; }
    bool requires_grad() const { return n->requires_grad; }
    void zero_grad() { n->grad.assign(n->value.size(), 0.0); }

    double item() const;

    std::shared_ptr<TensorNode> n;
};

std::string shape_str(const std::vector<std::size_t>& s);

/// Scoped switch that stops the tape from recording; forwards built under it
/// behave as constants (stop-gradient).
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

/// Reverse-mode sweep from a scalar loss. Gradients accumulate (sum
/// semantics) into every requires_grad tensor reachable from the loss.
/// Running backward twice through the same recorded nodes is an error; the
/// forward pass must be re-run first.
void backward(const Tensor& loss);

// ---- elementwise / structural ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor one_minus(const Tensor& a);                 // 1 - x
Tensor log_floor(const Tensor& a, double floor);   // log(max(x, floor))
Tensor gelu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor detach(const Tensor& a);
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
Tensor transpose(const Tensor& a);
Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1);
Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1);
Tensor concat_rows(const std::vector<Tensor>& xs);
Tensor concat_cols(const std::vector<Tensor>& xs);
Tensor row_diff(const Tensor& a);                               // y_r = x_{r+1} - x_r
Tensor zero_rows(const Tensor& a, const std::vector<std::uint8_t>& valid);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);
/// Affine map along the last dimension: x[... x in] * w[in x out] + b[out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// ---- last-dimension broadcasts (v has the width of a's last dim) ----
Tensor add_lastdim(const Tensor& a, const Tensor& v);
Tensor sub_lastdim(const Tensor& a, const Tensor& v);
Tensor mul_lastdim(const Tensor& a, const Tensor& v);
Tensor div_lastdim(const Tensor& a, const Tensor& v);

// ---- normalization / reductions ----
Tensor softmax_lastdim(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
/// Channel-wise mean and standard deviation over all leading positions
/// (rows), restricted to valid rows when a mask is given. sigma is
/// sqrt(var + eps).
std::pair<Tensor, Tensor> channel_stats(const Tensor& x,
                                        const std::vector<std::uint8_t>& valid_rows = {},
                                        double eps = 1e-5);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
/// Sum of row-wise l2 norms, optionally restricted to valid rows. The
/// gradient at an exactly-zero row is zero.
Tensor rownorm_sum(const Tensor& a, const std::vector<std::uint8_t>& valid_rows = {});
Tensor mean_rows_masked(const Tensor& a, const std::vector<std::uint8_t>& valid_rows);

// ---- fused attention ----
struct AttentionResult {
    Tensor out;
    /// Row-stochastic weights exactly as used in the forward pass,
    /// laid out [group][head][query][key].
    std::shared_ptr<const std::vector<double>> weights;
    std::size_t groups = 0, heads = 0, queries = 0, keys = 0;
};

/// Scaled dot-product attention applied independently to consecutive row
/// groups of size group_size (queries and keys are the same group).
/// q,k,v: [G*group_size x heads*head_width].
AttentionResult attention_groups(const Tensor& q, const Tensor& k, const Tensor& v,
                                 std::size_t heads, double scale, std::size_t group_size);

/// Attention over the full row sequence with invalid keys excluded from the
/// softmax. key_valid has one flag per row.
AttentionResult attention_masked(const Tensor& q, const Tensor& k, const Tensor& v,
                                 std::size_t heads, double scale,
                                 const std::vector<std::uint8_t>& key_valid);

}  // namespace mst
