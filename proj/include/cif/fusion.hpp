#pragma once

// Channel-Imposed Fusion: overwrite one group of n channels with a linear
// combination a * (front group) + b * (back group), where the sign of t
// selects which side receives the fused block. Also the pairwise variant
// (physiological symmetry fusion) driven by an explicit channel-pair map.

#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cif/errors.hpp"
#include "cif/tensor.hpp"

namespace cif {

enum class CoefficientMode {
    Fixed,
    LearnableCoupling,     // a > 0, b > 0
    LearnableSuppression,  // a > 0, b < 0
};

struct ChannelPair {
    std::size_t source = 0;
    std::size_t partner = 0;
    std::size_t destination = 0;

    bool operator==(const ChannelPair&) const = default;
};

struct CifConfig {
    int side = 1;        // t: only the sign is used; t > 0 overwrites the front group
    std::size_t width = 1;  // n: channels per group
    double a = 1.0;
    double b = 1.0;
    CoefficientMode coefficient_mode = CoefficientMode::Fixed;
    std::vector<ChannelPair> pair_map;  // non-empty selects the pairwise variant

    bool learnable() const { return coefficient_mode != CoefficientMode::Fixed; }

    void validate(std::size_t channels) const {
        if (!pair_map.empty()) {
            std::vector<bool> used(channels, false);
            for (const auto& p : pair_map) {
                if (p.source >= channels || p.partner >= channels || p.destination >= channels)
                    throw ConfigError("cif: pair channel index out of range");
                if (used[p.destination])
                    throw ConfigError("cif: duplicate destination channel in pair map");
                used[p.destination] = true;
            }
            return;
        }
        if (width < 1 || 2 * width > channels)
            throw ConfigError("cif: group width must satisfy 1 <= n <= C/2");
    }
};

namespace detail {

inline void check_rank3(const Tensor& x, const char* where) {
    if (x.rank() != 3) throw DimensionError(std::string(where) + ": expected B x T x C input");
}

}  // namespace detail

// Front/back fusion on a B x T x C tensor, per the module pseudocode:
// added = a * x[:, :, :n] + b * x[:, :, C-n:]; the block lands on the front
// channels when side > 0, on the back channels otherwise. The coefficients
// come from the scalar tensors so learnable (a, b) receive gradients; the
// backward rule also routes gradients into x through both the fused block
// and the untouched passthrough channels.
inline Tensor apply_cif(const Tensor& x, const CifConfig& cfg, const Tensor& a_coef,
                        const Tensor& b_coef) {
    detail::check_rank3(x, "apply_cif");
    if (a_coef.size() != 1 || b_coef.size() != 1)
        throw DimensionError("apply_cif: coefficients must be scalars");
    const std::size_t batch = x.dim(0), steps = x.dim(1), channels = x.dim(2);
    CifConfig checked = cfg;
    checked.pair_map.clear();
    checked.validate(channels);

    const std::size_t n = cfg.width;
    const bool front_dest = cfg.side > 0;
    const std::size_t dest = front_dest ? 0 : channels - n;
    const std::size_t back = channels - n;
    const double a = a_coef.value();
    const double b = b_coef.value();

    std::vector<double> out = x.values();
    for (std::size_t bt = 0; bt < batch * steps; ++bt) {
        const double* row = &x.values()[bt * channels];
        double* dst = &out[bt * channels + dest];
        for (std::size_t j = 0; j < n; ++j) dst[j] = a * row[j] + b * row[back + j];
    }

    auto xn = x.node();
    auto an = a_coef.node();
    auto bn = b_coef.node();
    return detail::make_result(
        x.shape(), std::move(out), "apply_cif", {xn, an, bn},
        [xn, an, bn, batch, steps, channels, n, dest, back, a, b](cif::detail::TensorNode& self) {
            if (xn->requires_grad) xn->ensure_grad();
            if (an->requires_grad) an->ensure_grad();
            if (bn->requires_grad) bn->ensure_grad();
            double da = 0.0, db = 0.0;
            for (std::size_t bt = 0; bt < batch * steps; ++bt) {
                const std::size_t base = bt * channels;
                const double* row = &xn->values[base];
                const double* g = &self.grad[base];
                if (xn->requires_grad) {
                    double* gx = &xn->grad[base];
                    for (std::size_t c = 0; c < channels; ++c) {
                        const bool replaced = c >= dest && c < dest + n;
                        if (!replaced) gx[c] += g[c];
                    }
                    for (std::size_t j = 0; j < n; ++j) {
                        gx[j] += a * g[dest + j];
                        gx[back + j] += b * g[dest + j];
                    }
                }
                for (std::size_t j = 0; j < n; ++j) {
                    da += g[dest + j] * row[j];
                    db += g[dest + j] * row[back + j];
                }
            }
            if (an->requires_grad) an->grad[0] += da;
            if (bn->requires_grad) bn->grad[0] += db;
        });
}

inline Tensor apply_cif(const Tensor& x, const CifConfig& cfg) {
    return apply_cif(x, cfg, Tensor::scalar(cfg.a), Tensor::scalar(cfg.b));
}

// Pairwise fusion: out[:, :, dst] = a * x[:, :, src] + b * x[:, :, partner]
// for each pair; all other channels pass through untouched.
inline Tensor apply_psf(const Tensor& x, const std::vector<ChannelPair>& pairs, const Tensor& a_coef,
                        const Tensor& b_coef) {
    detail::check_rank3(x, "apply_psf");
    const std::size_t batch = x.dim(0), steps = x.dim(1), channels = x.dim(2);
    CifConfig checked;
    checked.pair_map = pairs;
    checked.validate(channels);
    const double a = a_coef.value();
    const double b = b_coef.value();

    std::vector<double> out = x.values();
    for (std::size_t bt = 0; bt < batch * steps; ++bt) {
        const double* row = &x.values()[bt * channels];
        double* dst = &out[bt * channels];
        for (const auto& p : pairs) dst[p.destination] = a * row[p.source] + b * row[p.partner];
    }

    auto xn = x.node();
    auto an = a_coef.node();
    auto bn = b_coef.node();
    auto shared_pairs = std::make_shared<std::vector<ChannelPair>>(pairs);
    return detail::make_result(
        x.shape(), std::move(out), "apply_psf", {xn, an, bn},
        [xn, an, bn, shared_pairs, batch, steps, channels, a, b](cif::detail::TensorNode& self) {
            if (xn->requires_grad) xn->ensure_grad();
            if (an->requires_grad) an->ensure_grad();
            if (bn->requires_grad) bn->ensure_grad();
            std::vector<bool> replaced(channels, false);
            for (const auto& p : *shared_pairs) replaced[p.destination] = true;
            double da = 0.0, db = 0.0;
            for (std::size_t bt = 0; bt < batch * steps; ++bt) {
                const std::size_t base = bt * channels;
                const double* row = &xn->values[base];
                const double* g = &self.grad[base];
                if (xn->requires_grad) {
                    double* gx = &xn->grad[base];
                    for (std::size_t c = 0; c < channels; ++c)
                        if (!replaced[c]) gx[c] += g[c];
                    for (const auto& p : *shared_pairs) {
                        gx[p.source] += a * g[p.destination];
                        gx[p.partner] += b * g[p.destination];
                    }
                }
                for (const auto& p : *shared_pairs) {
                    da += g[p.destination] * row[p.source];
                    db += g[p.destination] * row[p.partner];
                }
            }
            if (an->requires_grad) an->grad[0] += da;
            if (bn->requires_grad) bn->grad[0] += db;
        });
}

inline Tensor apply_psf(const Tensor& x, const std::vector<ChannelPair>& pairs, double a, double b) {
    return apply_psf(x, pairs, Tensor::scalar(a), Tensor::scalar(b));
}

// Expresses the front/back fusion as an equivalent pair map, used as an
// oracle-equivalence path in the tests.
inline std::vector<ChannelPair> cif_as_pairs(const CifConfig& cfg, std::size_t channels) {
    CifConfig checked = cfg;
    checked.pair_map.clear();
    checked.validate(channels);
    std::vector<ChannelPair> pairs;
    pairs.reserve(cfg.width);
    const std::size_t back = channels - cfg.width;
    for (std::size_t j = 0; j < cfg.width; ++j) {
        const std::size_t dest = cfg.side > 0 ? j : back + j;
        pairs.push_back({j, back + j, dest});
    }
    return pairs;
}

// Closed-form coefficient gradients: dL/da = sum(upstream * front block),
// dL/db = sum(upstream * back block), with upstream restricted to the fused
// block (shape B x T x n).
inline std::pair<double, double> cif_coefficient_gradients(const Tensor& upstream, const Tensor& x,
                                                           const CifConfig& cfg) {
    detail::check_rank3(x, "cif_coefficient_gradients");
    const std::size_t batch = x.dim(0), steps = x.dim(1), channels = x.dim(2);
    CifConfig checked = cfg;
    checked.pair_map.clear();
    checked.validate(channels);
    const std::size_t n = cfg.width;
    if (upstream.rank() != 3 || upstream.dim(0) != batch || upstream.dim(1) != steps ||
        upstream.dim(2) != n)
        throw DimensionError("cif_coefficient_gradients: upstream must be B x T x n");
    const std::size_t back = channels - n;
    double da = 0.0, db = 0.0;
    for (std::size_t bt = 0; bt < batch * steps; ++bt) {
        const double* row = &x.values()[bt * channels];
        const double* g = &upstream.values()[bt * n];
        for (std::size_t j = 0; j < n; ++j) {
            da += g[j] * row[j];
            db += g[j] * row[back + j];
        }
    }
    return {da, db};
}

// Projects (a, b) onto the open sign orthant demanded by the mode, clamping
// to +/- epsilon when the value has the wrong sign or sits inside the band.
inline std::pair<double, double> constrain_coefficients(double a, double b, CoefficientMode mode,
                                                        double epsilon = 1e-6) {
    switch (mode) {
        case CoefficientMode::Fixed:
            return {a, b};
        case CoefficientMode::LearnableCoupling:
            return {std::max(a, epsilon), std::max(b, epsilon)};
        case CoefficientMode::LearnableSuppression:
            return {std::max(a, epsilon), std::min(b, -epsilon)};
    }
    throw ConfigError("constrain_coefficients: unknown mode");
}

}  // namespace cif
