#pragma once

// Dense 64-bit float tensors with reverse-mode differentiation. The engine
// records a DAG of operations as tensors are produced; backward() walks the
// records once in reverse topological order. Only the handful of operations
// the classifier needs are provided.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "cif/errors.hpp"

namespace cif {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

namespace detail {

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// One computation record: the produced buffer plus everything the backward
// rule needs (operation tag, input nodes, a closure over saved context).
struct TensorNode {
    Shape shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::vector<double> grad;  // empty until materialized
    std::uint64_t id = 0;
    const char* op = "leaf";
    std::vector<NodePtr> inputs;
    std::function<void(TensorNode&)> backprop;

    bool is_leaf() const { return inputs.empty(); }

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
};

inline std::uint64_t next_node_id() {
    static std::uint64_t counter = 0;
    return ++counter;
}

inline void check_finite(const std::vector<double>& values, const char* op) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value produced by '") + op + "'");
        }
    }
}

}  // namespace detail

class Tensor {
public:
    Tensor() = default;

    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false) {
        if (numel(shape) != values.size()) {
            throw DimensionError("tensor shape does not match value count");
        }
        detail::check_finite(values, "leaf");
        node_ = std::make_shared<detail::TensorNode>();
        node_->shape = std::move(shape);
        node_->values = std::move(values);
        node_->requires_grad = requires_grad;
        node_->id = detail::next_node_id();
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        std::vector<double> values(numel(shape), 0.0);
        return Tensor(std::move(shape), std::move(values), requires_grad);
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return Tensor({1}, {v}, requires_grad);
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->values.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape.at(i); }

    const std::vector<double>& values() const { return node_->values; }
    // In-place access for optimizers. Mutating a tensor that participates in
    // a live graph invalidates that graph; only touch leaves between steps.
    std::vector<double>& mutable_values() { return node_->values; }

    double value() const {
        if (size() != 1) throw DimensionError("value() requires a scalar tensor");
        return node_->values[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    const std::vector<double>& grad() const {
        if (node_->grad.empty()) throw GraphError("gradient has not been computed");
        return node_->grad;
    }
    void zero_grad() { node_->grad.assign(node_->values.size(), 0.0); }

    std::uint64_t id() const { return node_->id; }
    const char* op() const { return node_->op; }

    detail::NodePtr node() const { return node_; }

    explicit Tensor(detail::NodePtr node) : node_(std::move(node)) {}

private:
    detail::NodePtr node_;
};

namespace detail {

inline Tensor make_result(Shape shape, std::vector<double> values, const char* op,
                          std::vector<NodePtr> inputs,
                          std::function<void(TensorNode&)> backprop) {
    check_finite(values, op);
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->op = op;
    node->id = next_node_id();
    bool needs_grad = false;
    for (const auto& in : inputs) needs_grad = needs_grad || in->requires_grad;
    node->requires_grad = needs_grad;
    if (needs_grad) {
        node->inputs = std::move(inputs);
        node->backprop = std::move(backprop);
    }
    return Tensor(std::move(node));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and reduction operations
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw DimensionError("add: shape mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    auto an = a.node();
    auto bn = b.node();
    return detail::make_result(
        a.shape(), std::move(out), "add", {an, bn}, [an, bn](detail::TensorNode& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
            }
        });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw DimensionError("mul: shape mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    auto an = a.node();
    auto bn = b.node();
    return detail::make_result(
        a.shape(), std::move(out), "mul", {an, bn}, [an, bn](detail::TensorNode& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    an->grad[i] += self.grad[i] * bn->values[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    bn->grad[i] += self.grad[i] * an->values[i];
            }
        });
}

inline Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * c;
    auto an = a.node();
    return detail::make_result(a.shape(), std::move(out), "scale", {an},
                               [an, c](detail::TensorNode& self) {
                                   an->ensure_grad();
                                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                                       an->grad[i] += self.grad[i] * c;
                               });
}

inline Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.values()) total += v;
    auto an = a.node();
    return detail::make_result(Shape{1}, {total}, "sum", {an}, [an](detail::TensorNode& self) {
        an->ensure_grad();
        for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += self.grad[0];
    });
}

// Exact-erf GELU: x * Phi(x).
inline double gelu_scalar(double x) {
    return x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
}

inline Tensor gelu(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = gelu_scalar(a.values()[i]);
    auto an = a.node();
    return detail::make_result(
        a.shape(), std::move(out), "gelu", {an}, [an](detail::TensorNode& self) {
            an->ensure_grad();
            constexpr double inv_sqrt2 = 0.7071067811865475244;
            constexpr double inv_sqrt2pi = 0.3989422804014326779;
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const double x = an->values[i];
                const double phi = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
                const double density = inv_sqrt2pi * std::exp(-0.5 * x * x);
                an->grad[i] += self.grad[i] * (phi + x * density);
            }
        });
}

// ---------------------------------------------------------------------------
// Shape operations
// ---------------------------------------------------------------------------

// Reverses the time axis of a B x C x T tensor.
inline Tensor flip_time(const Tensor& x) {
    if (x.rank() != 3) throw DimensionError("flip_time: expected rank-3 tensor");
    const std::size_t batch = x.dim(0), channels = x.dim(1), steps = x.dim(2);
    std::vector<double> out(x.size());
    const auto& in = x.values();
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t base = (b * channels + c) * steps;
            for (std::size_t t = 0; t < steps; ++t) out[base + t] = in[base + steps - 1 - t];
        }
    auto xn = x.node();
    return detail::make_result(
        x.shape(), std::move(out), "flip_time", {xn},
        [xn, batch, channels, steps](detail::TensorNode& self) {
            xn->ensure_grad();
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t c = 0; c < channels; ++c) {
                    const std::size_t base = (b * channels + c) * steps;
                    for (std::size_t t = 0; t < steps; ++t)
                        xn->grad[base + steps - 1 - t] += self.grad[base + t];
                }
        });
}

// B x T x C -> B x C x T.
inline Tensor transpose_time_channel(const Tensor& x) {
    if (x.rank() != 3) throw DimensionError("transpose_time_channel: expected rank-3 tensor");
    const std::size_t batch = x.dim(0), steps = x.dim(1), channels = x.dim(2);
    std::vector<double> out(x.size());
    const auto& in = x.values();
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t c = 0; c < channels; ++c)
                out[(b * channels + c) * steps + t] = in[(b * steps + t) * channels + c];
    auto xn = x.node();
    return detail::make_result(
        Shape{batch, channels, steps}, std::move(out), "transpose_tc", {xn},
        [xn, batch, steps, channels](detail::TensorNode& self) {
            xn->ensure_grad();
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t t = 0; t < steps; ++t)
                    for (std::size_t c = 0; c < channels; ++c)
                        xn->grad[(b * steps + t) * channels + c] +=
                            self.grad[(b * channels + c) * steps + t];
        });
}

// ---------------------------------------------------------------------------
// Convolution, pooling, linear
// ---------------------------------------------------------------------------

// Causal dilated 1-D convolution with implicit left zero padding of
// (k-1)*dilation: y[b,o,t] = bias[o] + sum_{c,i} x[b,c,t-i*d] * w[o,c,i].
// Output at time t depends only on inputs at times <= t.
inline Tensor conv1d_causal(const Tensor& x, const Tensor& weight, const Tensor& bias,
                            std::size_t dilation) {
    if (x.rank() != 3) throw DimensionError("conv1d_causal: input must be B x C x T");
    if (weight.rank() != 3) throw DimensionError("conv1d_causal: weight must be Cout x Cin x k");
    if (dilation < 1) throw DimensionError("conv1d_causal: dilation must be >= 1");
    const std::size_t batch = x.dim(0), c_in = x.dim(1), steps = x.dim(2);
    const std::size_t c_out = weight.dim(0), kernel = weight.dim(2);
    if (weight.dim(1) != c_in) throw DimensionError("conv1d_causal: channel mismatch");
    if (bias.size() != c_out) throw DimensionError("conv1d_causal: bias size mismatch");
    if (steps < 1 || kernel < 1) throw DimensionError("conv1d_causal: empty input or kernel");

    std::vector<double> out(batch * c_out * steps);
    const auto& xv = x.values();
    const auto& wv = weight.values();
    const auto& bv = bias.values();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < c_out; ++o) {
            double* y = &out[(b * c_out + o) * steps];
            std::fill(y, y + steps, bv[o]);
            for (std::size_t c = 0; c < c_in; ++c) {
                const double* xc = &xv[(b * c_in + c) * steps];
                for (std::size_t i = 0; i < kernel; ++i) {
                    const std::size_t lag = i * dilation;
                    if (lag >= steps) break;
                    const double w = wv[(o * c_in + c) * kernel + i];
                    for (std::size_t t = lag; t < steps; ++t) y[t] += w * xc[t - lag];
                }
            }
        }
    }

    auto xn = x.node();
    auto wn = weight.node();
    auto bn = bias.node();
    return detail::make_result(
        Shape{batch, c_out, steps}, std::move(out), "conv1d_causal", {xn, wn, bn},
        [xn, wn, bn, batch, c_in, c_out, steps, kernel, dilation](detail::TensorNode& self) {
            if (xn->requires_grad) xn->ensure_grad();
            if (wn->requires_grad) wn->ensure_grad();
            if (bn->requires_grad) bn->ensure_grad();
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t o = 0; o < c_out; ++o) {
                    const double* gy = &self.grad[(b * c_out + o) * steps];
                    if (bn->requires_grad) {
                        double acc = 0.0;
                        for (std::size_t t = 0; t < steps; ++t) acc += gy[t];
                        bn->grad[o] += acc;
                    }
                    for (std::size_t c = 0; c < c_in; ++c) {
                        const double* xc = &xn->values[(b * c_in + c) * steps];
                        double* gx = xn->requires_grad ? &xn->grad[(b * c_in + c) * steps] : nullptr;
                        for (std::size_t i = 0; i < kernel; ++i) {
                            const std::size_t lag = i * dilation;
                            if (lag >= steps) break;
                            const double w = wn->values[(o * c_in + c) * kernel + i];
                            if (gx) {
                                for (std::size_t t = lag; t < steps; ++t)
                                    gx[t - lag] += w * gy[t];
                            }
                            if (wn->requires_grad) {
                                double acc = 0.0;
                                for (std::size_t t = lag; t < steps; ++t) acc += xc[t - lag] * gy[t];
                                wn->grad[(o * c_in + c) * kernel + i] += acc;
                            }
                        }
                    }
                }
            }
        });
}

// Mean over the time axis: B x C x T -> B x C.
inline Tensor global_avg_pool_time(const Tensor& x) {
    if (x.rank() != 3) throw DimensionError("global_avg_pool_time: expected B x C x T");
    const std::size_t batch = x.dim(0), channels = x.dim(1), steps = x.dim(2);
    std::vector<double> out(batch * channels);
    const auto& xv = x.values();
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
            const double* xc = &xv[(b * channels + c) * steps];
            double acc = 0.0;
            for (std::size_t t = 0; t < steps; ++t) acc += xc[t];
            out[b * channels + c] = acc / static_cast<double>(steps);
        }
    auto xn = x.node();
    return detail::make_result(
        Shape{batch, channels}, std::move(out), "global_avg_pool_time", {xn},
        [xn, batch, channels, steps](detail::TensorNode& self) {
            xn->ensure_grad();
            const double inv = 1.0 / static_cast<double>(steps);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t c = 0; c < channels; ++c) {
                    const double g = self.grad[b * channels + c] * inv;
                    double* gx = &xn->grad[(b * channels + c) * steps];
                    for (std::size_t t = 0; t < steps; ++t) gx[t] += g;
                }
        });
}

// y = x W^T + bias, with x: B x F, weight: O x F.
inline Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (x.rank() != 2 || weight.rank() != 2)
        throw DimensionError("linear: expected x B x F and weight O x F");
    const std::size_t batch = x.dim(0), features = x.dim(1), out_dim = weight.dim(0);
    if (weight.dim(1) != features) throw DimensionError("linear: feature mismatch");
    if (bias.size() != out_dim) throw DimensionError("linear: bias size mismatch");
    std::vector<double> out(batch * out_dim);
    const auto& xv = x.values();
    const auto& wv = weight.values();
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < out_dim; ++o) {
            double acc = bias.values()[o];
            for (std::size_t f = 0; f < features; ++f) acc += xv[b * features + f] * wv[o * features + f];
            out[b * out_dim + o] = acc;
        }
    auto xn = x.node();
    auto wn = weight.node();
    auto bn = bias.node();
    return detail::make_result(
        Shape{batch, out_dim}, std::move(out), "linear", {xn, wn, bn},
        [xn, wn, bn, batch, features, out_dim](detail::TensorNode& self) {
            if (xn->requires_grad) xn->ensure_grad();
            if (wn->requires_grad) wn->ensure_grad();
            if (bn->requires_grad) bn->ensure_grad();
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out_dim; ++o) {
                    const double g = self.grad[b * out_dim + o];
                    if (bn->requires_grad) bn->grad[o] += g;
                    for (std::size_t f = 0; f < features; ++f) {
                        if (xn->requires_grad) xn->grad[b * features + f] += g * wn->values[o * features + f];
                        if (wn->requires_grad) wn->grad[o * features + f] += g * xn->values[b * features + f];
                    }
                }
        });
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

// Row-wise softmax of a B x K value buffer, stabilized by max subtraction.
inline std::vector<double> softmax_rows(const std::vector<double>& logits, std::size_t batch,
                                        std::size_t classes) {
    std::vector<double> probs(logits.size());
    for (std::size_t b = 0; b < batch; ++b) {
        const double* row = &logits[b * classes];
        double* out = &probs[b * classes];
        double mx = row[0];
        for (std::size_t k = 1; k < classes; ++k) mx = std::max(mx, row[k]);
        double denom = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
            out[k] = std::exp(row[k] - mx);
            denom += out[k];
        }
        for (std::size_t k = 0; k < classes; ++k) out[k] /= denom;
    }
    return probs;
}

// Mean over the batch of -log softmax(logits)[label].
inline Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw DimensionError("softmax_cross_entropy: logits must be B x K");
    const std::size_t batch = logits.dim(0), classes = logits.dim(1);
    if (labels.size() != batch) throw DimensionError("softmax_cross_entropy: label count mismatch");
    for (int label : labels)
        if (label < 0 || static_cast<std::size_t>(label) >= classes)
            throw DimensionError("softmax_cross_entropy: label out of range");

    auto probs = softmax_rows(logits.values(), batch, classes);
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        const double p = std::max(probs[b * classes + static_cast<std::size_t>(labels[b])], 1e-300);
        loss -= std::log(p);
    }
    loss /= static_cast<double>(batch);

    auto ln = logits.node();
    auto shared_probs = std::make_shared<std::vector<double>>(std::move(probs));
    auto shared_labels = std::make_shared<std::vector<int>>(labels);
    return detail::make_result(
        Shape{1}, {loss}, "softmax_cross_entropy", {ln},
        [ln, shared_probs, shared_labels, batch, classes](detail::TensorNode& self) {
            ln->ensure_grad();
            const double g = self.grad[0] / static_cast<double>(batch);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t k = 0; k < classes; ++k) {
                    double delta = (static_cast<std::size_t>((*shared_labels)[b]) == k) ? 1.0 : 0.0;
                    ln->grad[b * classes + k] += g * ((*shared_probs)[b * classes + k] - delta);
                }
        });
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

// Populates grad buffers with d(loss)/d(tensor) for every tensor that
// requires gradients. Leaf gradients accumulate across calls; intermediate
// node gradients are reset per call.
inline void backward(const Tensor& loss) {
    if (loss.size() != 1) throw GraphError("backward: loss must be a scalar");
    auto root = loss.node();
    if (root->is_leaf() && !root->requires_grad)
        throw GraphError("backward: tensor is not connected to a recorded computation");

    // Iterative post-order DFS; the reversed order is a valid reverse
    // topological order of the recorded DAG.
    std::vector<detail::TensorNode*> order;
    std::unordered_set<detail::TensorNode*> visited;
    struct Frame {
        detail::TensorNode* node;
        std::size_t next_input;
    };
    std::vector<Frame> stack{{root.get(), 0}};
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& frame = stack.back();
        if (frame.next_input < frame.node->inputs.size()) {
            detail::TensorNode* child = frame.node->inputs[frame.next_input++].get();
            if (child->requires_grad && !visited.count(child)) {
                visited.insert(child);
                stack.push_back({child, 0});
            }
        } else {
            order.push_back(frame.node);
            stack.pop_back();
        }
    }

    // Fresh transient gradients for interior nodes; leaves keep accumulating.
    for (auto* node : order) {
        if (!node->is_leaf()) node->grad.assign(node->values.size(), 0.0);
    }
    root->ensure_grad();
    root->grad[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::TensorNode* node = *it;
        if (node->backprop) node->backprop(*node);
    }
}

// ---------------------------------------------------------------------------
// Finite-difference oracle
// ---------------------------------------------------------------------------

// Central-difference gradient of a scalar-valued function of one tensor.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> bumped = x.values();
        bumped[i] += h;
        const double up = f(Tensor(x.shape(), bumped));
        bumped[i] = x.values()[i] - h;
        const double down = f(Tensor(x.shape(), bumped));
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

// Max elementwise relative error with an absolute floor on the denominator,
// so near-zero gradients compare absolutely at floor * tolerance scale.
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                                 double floor = 1e-4) {
    if (a.size() != b.size()) throw DimensionError("max_relative_error: size mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), floor});
        worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
    }
    return worst;
}

// Runs f twice: once through the graph to get reverse-mode gradients, once
// per perturbed coordinate for central differences. Returns the max relative
// error between the two gradients.
inline double finite_difference_check(const std::function<Tensor(const Tensor&)>& graph_fn,
                                      const Tensor& x, double h = 1e-5, double floor = 1e-4) {
    Tensor probe(x.shape(), x.values(), /*requires_grad=*/true);
    Tensor loss = graph_fn(probe);
    backward(loss);
    const std::vector<double> analytic = probe.grad();
    auto scalar_fn = [&graph_fn](const Tensor& t) { return graph_fn(t).value(); };
    const std::vector<double> numeric = finite_difference_gradient(scalar_fn, x, h);
    return max_relative_error(analytic, numeric, floor);
}

}  // namespace cif
