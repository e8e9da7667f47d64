// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include <cmath>
#include <string>

#include "mst/kernels.hpp"
#include "mst/tensor.hpp"
#include "tensor_detail.hpp"

namespace mst {

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw error(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                    shape_str(b.shape()));
}

std::size_t last_dim(const Tensor& a) { return a.shape().back(); }

void check_lastdim(const char* op, const Tensor& a, const Tensor& v) {
    if (v.numel() != last_dim(a))
        throw error(std::string(op) + ": vector " + shape_str(v.shape()) +
                    " does not match last dim of " + shape_str(a.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    Tensor out;
    out.n = detail::make_node(a.shape());
    kernels::active().add(a.n->value.data(), b.n->value.data(), out.n->value.data(), a.numel());
    TensorNode* an = a.n.get();
    TensorNode* bn = b.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n, b.n}, [an, bn, on] {
        if (an->requires_grad) {
            an->ensure_grad();
            kernels::active().add(an->grad.data(), on->grad.data(), an->grad.data(), an->numel());
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            kernels::active().add(bn->grad.data(), on->grad.data(), bn->grad.data(), bn->numel());
        }
    });
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    Tensor out;
    out.n = detail::make_node(a.shape());
    kernels::active().sub(a.n->value.data(), b.n->value.data(), out.n->value.data(), a.numel());
    TensorNode* an = a.n.get();
    TensorNode* bn = b.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n, b.n}, [an, bn, on] {
        if (an->requires_grad) {
            an->ensure_grad();
            kernels::active().add(an->grad.data(), on->grad.data(), an->grad.data(), an->numel());
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            kernels::active().axpy(-1.0, on->grad.data(), bn->grad.data(), bn->numel());
        }
    });
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    Tensor out;
    out.n = detail::make_node(a.shape());
    kernels::active().mul(a.n->value.data(), b.n->value.data(), out.n->value.data(), a.numel());
    TensorNode* an = a.n.get();
    TensorNode* bn = b.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n, b.n}, [an, bn, on] {
        const std::size_t n = on->numel();
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) bn->grad[i] += on->grad[i] * an->value[i];
        }
    });
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out;
    out.n = detail::make_node(a.shape());
    kernels::active().scale(a.n->value.data(), c, out.n->value.data(), a.numel());
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on, c] {
        an->ensure_grad();
        kernels::active().axpy(c, on->grad.data(), an->grad.data(), an->numel());
    });
    return out;
}

Tensor one_minus(const Tensor& a) {
    Tensor out;
    out.n = detail::make_node(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.n->value[i] = 1.0 - a.n->value[i];
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on] {
        an->ensure_grad();
        kernels::active().axpy(-1.0, on->grad.data(), an->grad.data(), an->numel());
    });
    return out;
}

Tensor log_floor(const Tensor& a, double floor) {
    Tensor out;
    out.n = detail::make_node(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i)
        out.n->value[i] = std::log(std::max(a.n->value[i], floor));
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on, floor] {
        an->ensure_grad();
        for (std::size_t i = 0; i < an->numel(); ++i)
            if (an->value[i] > floor) an->grad[i] += on->grad[i] / an->value[i];
    });
    return out;
}

Tensor gelu(const Tensor& a) {
    // tanh form; smooth everywhere, which keeps finite-difference checks clean
    constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double kA = 0.044715;
    Tensor out;
    out.n = detail::make_node(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double x = a.n->value[i];
        const double t = std::tanh(kC * (x + kA * x * x * x));
        out.n->value[i] = 0.5 * x * (1.0 + t);
    }
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on] {
        an->ensure_grad();
        for (std::size_t i = 0; i < an->numel(); ++i) {
            const double x = an->value[i];
            const double u = kC * (x + kA * x * x * x);
            const double t = std::tanh(u);
            const double du = kC * (1.0 + 3.0 * kA * x * x);
            const double d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
            an->grad[i] += on->grad[i] * d;
        }
    });
    return out;
}

Tensor sigmoid(const Tensor& a) {
    Tensor out;
    out.n = detail::make_node(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double x = a.n->value[i];
        out.n->value[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                                 : std::exp(x) / (1.0 + std::exp(x));
    }
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on] {
        an->ensure_grad();
        for (std::size_t i = 0; i < an->numel(); ++i) {
            const double y = on->value[i];
            an->grad[i] += on->grad[i] * y * (1.0 - y);
        }
    });
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols();
    if (b.rows() != k)
        throw error("matmul: inner extents differ, " + shape_str(a.shape()) + " * " +
                    shape_str(b.shape()));
    const std::size_t n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    kernels::active().gemm_nn(a.n->value.data(), b.n->value.data(), out.n->value.data(), m, k, n,
                              false);
    TensorNode* an = a.n.get();
    TensorNode* bn = b.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n, b.n}, [an, bn, on, m, k, n] {
        if (an->requires_grad) {
            an->ensure_grad();
            // dA += dC * B^T
            kernels::active().gemm_nt(on->grad.data(), bn->value.data(), an->grad.data(), m, n, k,
                                      true);
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            // dB += A^T * dC
            kernels::active().gemm_tn(an->value.data(), on->grad.data(), bn->grad.data(), k, m, n,
                                      true);
        }
    });
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t in = w.rows(), out_w = w.cols();
    if (last_dim(x) != in)
        throw error("linear: input " + shape_str(x.shape()) + " does not match weight " +
                    shape_str(w.shape()));
    if (b.numel() != out_w)
        throw error("linear: bias " + shape_str(b.shape()) + " does not match weight " +
                    shape_str(w.shape()));
    const std::size_t rows = x.numel() / in;
    Tensor x2 = x.rank() == 2 ? x : reshape(x, {rows, in});
    Tensor y = add_lastdim(matmul(x2, w), b);
    if (x.rank() == 2) return y;
    std::vector<std::size_t> shape = x.shape();
    shape.back() = out_w;
    return reshape(y, std::move(shape));
}

Tensor add_lastdim(const Tensor& a, const Tensor& v) {
    check_lastdim("add_lastdim", a, v);
    const std::size_t d = last_dim(a);
    const std::size_t rows = a.numel() / d;
    Tensor out;
    out.n = detail::make_node(a.shape());
    for (std::size_t r = 0; r < rows; ++r)
        kernels::active().add(a.n->value.data() + r * d, v.n->value.data(),
                              out.n->value.data() + r * d, d);
    TensorNode* an = a.n.get();
    TensorNode* vn = v.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n, v.n}, [an, vn, on, rows, d] {
        if (an->requires_grad) {
            an->ensure_grad();
            kernels::active().add(an->grad.data(), on->grad.data(), an->grad.data(), an->numel());
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                kernels::active().add(vn->grad.data(), on->grad.data() + r * d, vn->grad.data(), d);
        }
    });
    return out;
}

Tensor sub_lastdim(const Tensor& a, const Tensor& v) {
    check_lastdim("sub_lastdim", a, v);
    const std::size_t d = last_dim(a);
    const std::size_t rows = a.numel() / d;
    Tensor out;
    out.n = detail::make_node(a.shape());
    for (std::size_t r = 0; r < rows; ++r)
        kernels::active().sub(a.n->value.data() + r * d, v.n->value.data(),
                              out.n->value.data() + r * d, d);
    TensorNode* an = a.n.get();
    TensorNode* vn = v.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n, v.n}, [an, vn, on, rows, d] {
        if (an->requires_grad) {
            an->ensure_grad();
            kernels::active().add(an->grad.data(), on->grad.data(), an->grad.data(), an->numel());
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                kernels::active().axpy(-1.0, on->grad.data() + r * d, vn->grad.data(), d);
        }
    });
    return out;
}

Tensor mul_lastdim(const Tensor& a, const Tensor& v) {
    check_lastdim("mul_lastdim", a, v);
    const std::size_t d = last_dim(a);
    const std::size_t rows = a.numel() / d;
    Tensor out;
    out.n = detail::make_node(a.shape());
    for (std::size_t r = 0; r < rows; ++r)
        kernels::active().mul(a.n->value.data() + r * d, v.n->value.data(),
                              out.n->value.data() + r * d, d);
    TensorNode* an = a.n.get();
    TensorNode* vn = v.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n, v.n}, [an, vn, on, rows, d] {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    an->grad[r * d + c] += on->grad[r * d + c] * vn->value[c];
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    vn->grad[c] += on->grad[r * d + c] * an->value[r * d + c];
        }
    });
    return out;
}

Tensor div_lastdim(const Tensor& a, const Tensor& v) {
    check_lastdim("div_lastdim", a, v);
    const std::size_t d = last_dim(a);
    const std::size_t rows = a.numel() / d;
    Tensor out;
    out.n = detail::make_node(a.shape());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < d; ++c)
            out.n->value[r * d + c] = a.n->value[r * d + c] / v.n->value[c];
    TensorNode* an = a.n.get();
    TensorNode* vn = v.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n, v.n}, [an, vn, on, rows, d] {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    an->grad[r * d + c] += on->grad[r * d + c] / vn->value[c];
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    vn->grad[c] -= on->grad[r * d + c] * on->value[r * d + c] / vn->value[c];
        }
    });
    return out;
}

Tensor softmax_lastdim(const Tensor& a) {
    const std::size_t d = last_dim(a);
    if (d < 1) throw error("softmax_lastdim: empty last dimension");
    const std::size_t rows = a.numel() / d;
    Tensor out;
    out.n = detail::make_node(a.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = a.n->value.data() + r * d;
        double* y = out.n->value.data() + r * d;
        double mx = x[0];
        for (std::size_t c = 1; c < d; ++c) mx = std::max(mx, x[c]);
        double s = 0;
        for (std::size_t c = 0; c < d; ++c) {
            y[c] = std::exp(x[c] - mx);
            s += y[c];
        }
        for (std::size_t c = 0; c < d; ++c) y[c] /= s;
    }
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on, rows, d] {
        an->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = on->value.data() + r * d;
            const double* g = on->grad.data() + r * d;
            const double dotyg = kernels::active().dot(y, g, d);
            for (std::size_t c = 0; c < d; ++c) an->grad[r * d + c] += y[c] * (g[c] - dotyg);
        }
    });
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    const std::size_t d = last_dim(x);
    if (d < 2) throw error("layer_norm needs last dim >= 2, got " + shape_str(x.shape()));
    check_lastdim("layer_norm gain", x, gain);
    check_lastdim("layer_norm bias", x, bias);
    const std::size_t rows = x.numel() / d;
    Tensor out;
    out.n = detail::make_node(x.shape());
    auto xhat = std::make_shared<std::vector<double>>(x.numel());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.n->value.data() + r * d;
        const double mu = kernels::active().sum(xr, d) / static_cast<double>(d);
        double var = 0;
        for (std::size_t c = 0; c < d; ++c) var += (xr[c] - mu) * (xr[c] - mu);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = inv;
        for (std::size_t c = 0; c < d; ++c) {
            const double h = (xr[c] - mu) * inv;
            (*xhat)[r * d + c] = h;
            out.n->value[r * d + c] = gain.n->value[c] * h + bias.n->value[c];
        }
    }
    TensorNode* xn = x.n.get();
    TensorNode* gn = gain.n.get();
    TensorNode* bn = bias.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {x.n, gain.n, bias.n}, [xn, gn, bn, on, xhat, inv_std, rows, d] {
        for (std::size_t r = 0; r < rows; ++r) {
            const double* g = on->grad.data() + r * d;
            const double* h = xhat->data() + r * d;
            if (xn->requires_grad) {
                xn->ensure_grad();
                double sum_dh = 0, sum_dh_h = 0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double dh = g[c] * gn->value[c];
                    sum_dh += dh;
                    sum_dh_h += dh * h[c];
                }
                const double inv = (*inv_std)[r];
                const double nd = static_cast<double>(d);
                for (std::size_t c = 0; c < d; ++c) {
                    const double dh = g[c] * gn->value[c];
                    xn->grad[r * d + c] += inv * (dh - sum_dh / nd - h[c] * sum_dh_h / nd);
                }
            }
            if (gn->requires_grad) {
                gn->ensure_grad();
                for (std::size_t c = 0; c < d; ++c) gn->grad[c] += g[c] * h[c];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t c = 0; c < d; ++c) bn->grad[c] += g[c];
            }
        }
    });
    return out;
}

std::pair<Tensor, Tensor> channel_stats(const Tensor& x,
                                        const std::vector<std::uint8_t>& valid_rows, double eps) {
    const std::size_t d = last_dim(x);
    const std::size_t rows = x.numel() / d;
    if (!valid_rows.empty() && valid_rows.size() != rows)
        throw error("channel_stats mask length " + std::to_string(valid_rows.size()) +
                    " does not match " + std::to_string(rows) + " rows");
    std::size_t count = 0;
    if (valid_rows.empty()) {
        count = rows;
    } else {
        for (auto v : valid_rows) count += v ? 1 : 0;
    }
    if (count < 2) throw error("channel_stats needs at least 2 valid rows");

    Tensor mu = Tensor::zeros({d});
    Tensor sigma = Tensor::zeros({d});
    const double inv_n = 1.0 / static_cast<double>(count);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!valid_rows.empty() && !valid_rows[r]) continue;
        kernels::active().add(mu.n->value.data(), x.n->value.data() + r * d, mu.n->value.data(), d);
    }
    kernels::active().scale(mu.n->value.data(), inv_n, mu.n->value.data(), d);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!valid_rows.empty() && !valid_rows[r]) continue;
        const double* xr = x.n->value.data() + r * d;
        for (std::size_t c = 0; c < d; ++c) {
            const double dc = xr[c] - mu.n->value[c];
            sigma.n->value[c] += dc * dc;
        }
    }
    for (std::size_t c = 0; c < d; ++c)
        sigma.n->value[c] = std::sqrt(sigma.n->value[c] * inv_n + eps);

    TensorNode* xn = x.n.get();
    TensorNode* mn = mu.n.get();
    TensorNode* sn = sigma.n.get();
    auto mask = valid_rows;  // shared by both closures
    detail::finish(mu.n, {x.n}, [xn, mn, mask, rows, d, inv_n] {
        xn->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            if (!mask.empty() && !mask[r]) continue;
            kernels::active().axpy(inv_n, mn->grad.data(), xn->grad.data() + r * d, d);
        }
    });
    detail::finish(sigma.n, {x.n}, [xn, mn, sn, mask, rows, d, inv_n] {
        xn->ensure_grad();
        // d sigma / d x_rc = (x_rc - mu_c) / (n * sigma_c)
        for (std::size_t r = 0; r < rows; ++r) {
            if (!mask.empty() && !mask[r]) continue;
            const double* xr = xn->value.data() + r * d;
            for (std::size_t c = 0; c < d; ++c)
                xn->grad[r * d + c] +=
                    sn->grad[c] * (xr[c] - mn->value[c]) * inv_n / sn->value[c];
        }
    });
    return {mu, sigma};
}

Tensor sum_all(const Tensor& a) {
    Tensor out;
    out.n = detail::make_node({1});
    out.n->value[0] = kernels::active().sum(a.n->value.data(), a.numel());
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    detail::finish(out.n, {a.n}, [an, on] {
        an->ensure_grad();
        const double g = on->grad[0];
        for (std::size_t i = 0; i < an->numel(); ++i) an->grad[i] += g;
    });
    return out;
}

Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0 / static_cast<double>(a.numel())); }

Tensor rownorm_sum(const Tensor& a, const std::vector<std::uint8_t>& valid_rows) {
    const std::size_t r = a.shape()[0];
    const std::size_t width = a.numel() / r;
    if (!valid_rows.empty() && valid_rows.size() != r)
        throw error("rownorm_sum mask length " + std::to_string(valid_rows.size()) +
                    " does not match rows of " + shape_str(a.shape()));
    Tensor out;
    out.n = detail::make_node({1});
    auto norms = std::make_shared<std::vector<double>>(r, 0.0);
    double total = 0;
    for (std::size_t i = 0; i < r; ++i) {
        if (!valid_rows.empty() && !valid_rows[i]) continue;
        const double* xr = a.n->value.data() + i * width;
        const double nrm = std::sqrt(kernels::active().dot(xr, xr, width));
        (*norms)[i] = nrm;
        total += nrm;
    }
    out.n->value[0] = total;
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    auto mask = valid_rows;
    detail::finish(out.n, {a.n}, [an, on, norms, mask, r, width] {
        an->ensure_grad();
        const double g = on->grad[0];
        for (std::size_t i = 0; i < r; ++i) {
            if (!mask.empty() && !mask[i]) continue;
            const double nrm = (*norms)[i];
            if (nrm == 0.0) continue;  // subgradient 0 at the kink
            kernels::active().axpy(g / nrm, an->value.data() + i * width,
                                   an->grad.data() + i * width, width);
        }
    });
    return out;
}

Tensor mean_rows_masked(const Tensor& a, const std::vector<std::uint8_t>& valid_rows) {
    const std::size_t r = a.shape()[0];
    const std::size_t width = a.numel() / r;
    if (valid_rows.size() != r)
        throw error("mean_rows_masked mask length " + std::to_string(valid_rows.size()) +
                    " does not match rows of " + shape_str(a.shape()));
    std::size_t count = 0;
    for (auto v : valid_rows) count += v ? 1 : 0;
    if (count == 0) throw error("mean_rows_masked: no valid rows");
    Tensor out = Tensor::zeros({1, width});
    for (std::size_t i = 0; i < r; ++i) {
        if (!valid_rows[i]) continue;
        kernels::active().add(out.n->value.data(), a.n->value.data() + i * width,
                              out.n->value.data(), width);
    }
    const double inv_n = 1.0 / static_cast<double>(count);
    kernels::active().scale(out.n->value.data(), inv_n, out.n->value.data(), width);
    TensorNode* an = a.n.get();
    TensorNode* on = out.n.get();
    auto mask = valid_rows;
    detail::finish(out.n, {a.n}, [an, on, mask, r, width, inv_n] {
        an->ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
            if (!mask[i]) continue;
            kernels::active().axpy(inv_n, on->grad.data(), an->grad.data() + i * width, width);
        }
    });
    return out;
}

}  // namespace mst
