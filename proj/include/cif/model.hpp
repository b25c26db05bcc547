#pragma once

// HM-BiTCN: stacked bidirectional dilated causal convolution blocks with a
// nonincreasing dilation schedule, GELU activations, residual connections,
// an optional channel-fusion front end, and a pool-then-linear head.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cif/errors.hpp"
#include "cif/fusion.hpp"
#include "cif/io.hpp"
#include "cif/rng.hpp"
#include "cif/tensor.hpp"

namespace cif {

enum class DirectionMode { Forward, Backward, Both };

inline const char* to_string(DirectionMode mode) {
    switch (mode) {
        case DirectionMode::Forward: return "forward";
        case DirectionMode::Backward: return "backward";
        case DirectionMode::Both: return "both";
    }
    return "?";
}

inline DirectionMode direction_from_string(const std::string& s) {
    if (s == "forward") return DirectionMode::Forward;
    if (s == "backward") return DirectionMode::Backward;
    if (s == "both") return DirectionMode::Both;
    throw ConfigError("unknown direction mode '" + s + "'");
}

// A pair of independent causal convolutions, one applied chronologically and
// one applied to the time-reversed sequence (then reversed back).
struct BiCausalConv {
    std::size_t kernel_size = 1;
    std::size_t dilation_forward = 1;
    std::size_t dilation_backward = 1;
    Tensor forward_weight, forward_bias;
    Tensor backward_weight, backward_bias;
};

// y_f = causal conv; y_b = flip(causal conv(flip(x))); Both sums the two.
inline Tensor bidirectional_causal_conv(const Tensor& x, const BiCausalConv& layer,
                                        DirectionMode mode) {
    switch (mode) {
        case DirectionMode::Forward:
            return conv1d_causal(x, layer.forward_weight, layer.forward_bias,
                                 layer.dilation_forward);
        case DirectionMode::Backward:
            return flip_time(conv1d_causal(flip_time(x), layer.backward_weight,
                                           layer.backward_bias, layer.dilation_backward));
        case DirectionMode::Both: {
            Tensor y_f = conv1d_causal(x, layer.forward_weight, layer.forward_bias,
                                       layer.dilation_forward);
            Tensor y_b = flip_time(conv1d_causal(flip_time(x), layer.backward_weight,
                                                 layer.backward_bias, layer.dilation_backward));
            return add(y_f, y_b);
        }
    }
    throw ConfigError("bidirectional_causal_conv: unknown mode");
}

struct BiDilatedBlock {
    BiCausalConv conv1;
    BiCausalConv conv2;
    bool has_projector = false;  // present iff C_in != C_out or final block
    Tensor projector_weight, projector_bias;  // 1x1 convolution
    bool is_final = false;
};

// GELU -> biconv -> GELU -> biconv plus a residual path (identity or 1x1).
inline Tensor block_forward(const Tensor& x, const BiDilatedBlock& block, DirectionMode mode) {
    Tensor res = block.has_projector
                     ? conv1d_causal(x, block.projector_weight, block.projector_bias, 1)
                     : x;
    Tensor h = gelu(x);
    h = bidirectional_causal_conv(h, block.conv1, mode);
    h = gelu(h);
    h = bidirectional_causal_conv(h, block.conv2, mode);
    return add(h, res);
}

struct HmBiTcnConfig {
    std::size_t input_channels = 0;
    std::size_t kernel_size = 3;
    std::vector<std::size_t> channel_widths = {16, 16, 16};
    std::vector<std::size_t> dilation_schedule = {4, 2, 1};
    DirectionMode direction_mode = DirectionMode::Both;
    std::size_t num_classes = 2;
    std::optional<CifConfig> cif;

    void validate() const {
        if (input_channels < 1) throw ConfigError("model: input_channels must be >= 1");
        if (kernel_size < 1) throw ConfigError("model: kernel_size must be >= 1");
        if (num_classes < 2) throw ConfigError("model: need at least two classes");
        if (channel_widths.empty()) throw ConfigError("model: need at least one layer");
        if (channel_widths.size() != dilation_schedule.size())
            throw ConfigError("model: widths and dilation schedule differ in length");
        for (std::size_t i = 0; i < dilation_schedule.size(); ++i) {
            if (dilation_schedule[i] < 1) throw ConfigError("model: dilation must be >= 1");
            if (i > 0 && dilation_schedule[i] > dilation_schedule[i - 1])
                throw ConfigError("model: dilation schedule must be nonincreasing");
        }
        if (cif) cif->validate(input_channels);
    }

    // Canonical architecture string used as the parameter-file digest input.
    std::string digest_text() const {
        std::ostringstream out;
        out << "C=" << input_channels << ";k=" << kernel_size << ";w=";
        for (std::size_t w : channel_widths) out << w << ",";
        out << ";d=";
        for (std::size_t d : dilation_schedule) out << d << ",";
        out << ";dir=" << to_string(direction_mode) << ";K=" << num_classes;
        if (cif) {
            out << ";cif.t=" << cif->side << ";cif.n=" << cif->width << ";cif.a=" << cif->a
                << ";cif.b=" << cif->b << ";cif.mode=" << static_cast<int>(cif->coefficient_mode)
                << ";cif.pairs=";
            for (const auto& p : cif->pair_map)
                out << p.source << ":" << p.partner << ":" << p.destination << ",";
        }
        return out.str();
    }
};

class HmBiTcn {
public:
    HmBiTcn(HmBiTcnConfig config, std::uint64_t seed) : cfg_(std::move(config)) {
        cfg_.validate();
        if (cfg_.cif) {
            const bool learnable = cfg_.cif->learnable();
            cif_a_ = Tensor::scalar(cfg_.cif->a, learnable);
            cif_b_ = Tensor::scalar(cfg_.cif->b, learnable);
        }
        std::uint64_t stream = 0;
        std::size_t c_in = cfg_.input_channels;
        for (std::size_t layer = 0; layer < cfg_.channel_widths.size(); ++layer) {
            const std::size_t c_out = cfg_.channel_widths[layer];
            const std::size_t d = cfg_.dilation_schedule[layer];
            BiDilatedBlock block;
            block.is_final = layer + 1 == cfg_.channel_widths.size();
            block.conv1 = make_biconv(c_in, c_out, d, seed, stream);
            block.conv2 = make_biconv(c_out, c_out, d, seed, stream);
            block.has_projector = (c_in != c_out) || block.is_final;
            if (block.has_projector) {
                // Identity-like 1x1: ones on the diagonal up to min(C_in, C_out).
                std::vector<double> w(c_out * c_in, 0.0);
                for (std::size_t i = 0; i < std::min(c_in, c_out); ++i) w[i * c_in + i] = 1.0;
                block.projector_weight = Tensor({c_out, c_in, 1}, std::move(w), true);
                block.projector_bias = Tensor::zeros({c_out}, true);
            }
            blocks_.push_back(std::move(block));
            c_in = c_out;
        }
        const std::size_t features = cfg_.channel_widths.back();
        const double bound = std::sqrt(1.0 / static_cast<double>(features));
        Rng rng(substream_seed(seed, stream++));
        std::vector<double> hw(cfg_.num_classes * features);
        for (auto& v : hw) v = rng.uniform(-bound, bound);
        std::vector<double> hb(cfg_.num_classes);
        for (auto& v : hb) v = rng.uniform(-bound, bound);
        head_weight_ = Tensor({cfg_.num_classes, features}, std::move(hw), true);
        head_bias_ = Tensor({cfg_.num_classes}, std::move(hb), true);
    }

    const HmBiTcnConfig& config() const { return cfg_; }
    const std::vector<BiDilatedBlock>& blocks() const { return blocks_; }
    double cif_a() const { return cif_a_.value(); }
    double cif_b() const { return cif_b_.value(); }

    // x: B x T x C -> logits B x K.
    Tensor forward(const Tensor& x) const {
        if (x.rank() != 3) throw DimensionError("model forward: expected B x T x C input");
        if (x.dim(2) != cfg_.input_channels)
            throw DimensionError("model forward: input channel count mismatch");
        Tensor h = x;
        if (cfg_.cif) {
            h = cfg_.cif->pair_map.empty()
                    ? apply_cif(h, *cfg_.cif, cif_a_, cif_b_)
                    : apply_psf(h, cfg_.cif->pair_map, cif_a_, cif_b_);
        }
        h = transpose_time_channel(h);
        for (const auto& block : blocks_) h = block_forward(h, block, cfg_.direction_mode);
        h = global_avg_pool_time(h);
        return linear(h, head_weight_, head_bias_);
    }

    // Deterministic parameter order: CIF coefficients first (when learnable),
    // then per block conv1/conv2/projector weights and biases, then the head.
    std::vector<Tensor> parameters() const {
        std::vector<Tensor> params;
        if (cfg_.cif && cfg_.cif->learnable()) {
            params.push_back(cif_a_);
            params.push_back(cif_b_);
        }
        for (const auto& block : blocks_) {
            for (const auto* conv : {&block.conv1, &block.conv2}) {
                params.push_back(conv->forward_weight);
                params.push_back(conv->forward_bias);
                params.push_back(conv->backward_weight);
                params.push_back(conv->backward_bias);
            }
            if (block.has_projector) {
                params.push_back(block.projector_weight);
                params.push_back(block.projector_bias);
            }
        }
        params.push_back(head_weight_);
        params.push_back(head_bias_);
        return params;
    }

    std::size_t count_parameters() const {
        std::size_t n = 0;
        for (const auto& p : parameters()) n += p.size();
        return n;
    }

    void zero_grad() const {
        for (auto& p : parameters()) p.zero_grad();
    }

    // Re-projects learnable fusion coefficients onto their sign orthant.
    void apply_coefficient_constraints() {
        if (!cfg_.cif || !cfg_.cif->learnable()) return;
        auto [a, b] = constrain_coefficients(cif_a_.value(), cif_b_.value(),
                                             cfg_.cif->coefficient_mode);
        cif_a_.mutable_values()[0] = a;
        cif_b_.mutable_values()[0] = b;
    }

    void save_parameters(const std::filesystem::path& path) const {
        std::string bytes;
        bytes += "HMBT";
        io::put_u32(bytes, kFormatVersion);
        io::put_u64(bytes, io::fnv1a(cfg_.digest_text()));
        for (const auto& p : parameters())
            for (double v : p.values()) io::put_f64(bytes, v);
        io::write_file_atomic(path, bytes);
    }

    void load_parameters(const std::filesystem::path& path) {
        io::Reader reader(io::read_file(path));
        if (reader.magic(4) != "HMBT") throw IoError("parameter file: bad magic");
        if (reader.u32() != kFormatVersion) throw IoError("parameter file: unsupported version");
        if (reader.u64() != io::fnv1a(cfg_.digest_text()))
            throw IoError("parameter file: config digest mismatch");
        if (reader.remaining() != count_parameters() * 8)
            throw IoError("parameter file: wrong payload size");
        for (auto& p : parameters())
            for (double& v : p.mutable_values()) v = reader.f64();
    }

    std::vector<std::vector<double>> snapshot_parameters() const {
        std::vector<std::vector<double>> snap;
        for (const auto& p : parameters()) snap.push_back(p.values());
        return snap;
    }

    void restore_parameters(const std::vector<std::vector<double>>& snap) const {
        auto params = parameters();
        if (snap.size() != params.size()) throw DimensionError("restore: parameter count mismatch");
        for (std::size_t i = 0; i < snap.size(); ++i) params[i].mutable_values() = snap[i];
    }

    static constexpr std::uint32_t kFormatVersion = 1;

private:
    // Fan-in uniform init (+-sqrt(1/(C_in*k))) for both directions, each
    // direction drawing from its own seeded substream.
    BiCausalConv make_biconv(std::size_t c_in, std::size_t c_out, std::size_t dilation,
                             std::uint64_t seed, std::uint64_t& stream) const {
        BiCausalConv conv;
        conv.kernel_size = cfg_.kernel_size;
        conv.dilation_forward = dilation;
        conv.dilation_backward = dilation;
        const std::size_t k = cfg_.kernel_size;
        const double bound = std::sqrt(1.0 / static_cast<double>(c_in * k));
        auto init = [&](Tensor& weight, Tensor& bias) {
            Rng rng(substream_seed(seed, stream++));
            std::vector<double> w(c_out * c_in * k);
            for (auto& v : w) v = rng.uniform(-bound, bound);
            std::vector<double> b(c_out);
            for (auto& v : b) v = rng.uniform(-bound, bound);
            weight = Tensor({c_out, c_in, k}, std::move(w), true);
            bias = Tensor({c_out}, std::move(b), true);
        };
        init(conv.forward_weight, conv.forward_bias);
        init(conv.backward_weight, conv.backward_bias);
        return conv;
    }

    HmBiTcnConfig cfg_;
    Tensor cif_a_ = Tensor::scalar(1.0);
    Tensor cif_b_ = Tensor::scalar(0.0);
    std::vector<BiDilatedBlock> blocks_;
    Tensor head_weight_, head_bias_;
};

// Receptive field after layer l (1-indexed) as written in the source
// analysis: r_l = k + (k-1) * sum_{j=1}^{l-1} d_j.
inline std::size_t receptive_field_paper(std::size_t kernel_size,
                                         const std::vector<std::size_t>& dilations,
                                         std::size_t layer) {
    if (layer < 1 || layer > dilations.size())
        throw ConfigError("receptive_field: layer out of range");
    std::size_t acc = 0;
    for (std::size_t j = 0; j + 1 < layer; ++j) acc += dilations[j];
    return kernel_size + (kernel_size - 1) * acc;
}

// Standard stacked-dilation count: 1 + (k-1) * sum_{j=1}^{l} d_j.
inline std::size_t receptive_field_stacked(std::size_t kernel_size,
                                           const std::vector<std::size_t>& dilations,
                                           std::size_t layer) {
    if (layer < 1 || layer > dilations.size())
        throw ConfigError("receptive_field: layer out of range");
    std::size_t acc = 0;
    for (std::size_t j = 0; j < layer; ++j) acc += dilations[j];
    return 1 + (kernel_size - 1) * acc;
}

// Perturbation probe: stacks one single-channel forward causal convolution
// per scheduled layer (all-ones kernels, so contributions cannot cancel) and
// measures how far back an input perturbation can reach the fixed output
// step t: the receptive field is t - t0_min + 1. Individual dilated taps are
// sparse, so the influenced positions may have gaps; the field is the span.
inline std::size_t receptive_field_empirical(std::size_t kernel_size,
                                             const std::vector<std::size_t>& dilations,
                                             std::size_t layer) {
    if (layer < 1 || layer > dilations.size())
        throw ConfigError("receptive_field: layer out of range");
    const std::size_t steps = receptive_field_stacked(kernel_size, dilations, layer) + 8;

    auto run_stack = [&](const std::vector<double>& input) {
        Tensor h({1, 1, steps}, input);
        Tensor weight({1, 1, kernel_size}, std::vector<double>(kernel_size, 1.0));
        Tensor bias = Tensor::zeros({1});
        for (std::size_t j = 0; j < layer; ++j) h = conv1d_causal(h, weight, bias, dilations[j]);
        return h.values()[steps - 1];
    };

    const std::vector<double> zeros(steps, 0.0);
    const double baseline = run_stack(zeros);
    for (std::size_t t0 = 0; t0 < steps; ++t0) {
        std::vector<double> bumped = zeros;
        bumped[t0] = 1.0;
        if (run_stack(bumped) != baseline) return steps - t0;
    }
    return 0;
}

struct TimingReport {
    std::size_t parameter_count = 0;
    double forward_seconds = 0.0;
    double backward_seconds = 0.0;
    std::size_t batch = 0;
    std::size_t steps = 0;
};

// Wall-clock for one forward and one backward pass on a random batch.
inline TimingReport timing_report(const HmBiTcnConfig& cfg, std::size_t batch, std::size_t steps,
                                  std::uint64_t seed = 7) {
    HmBiTcn model(cfg, seed);
    Rng rng(substream_seed(seed, 99));
    std::vector<double> xv(batch * steps * cfg.input_channels);
    for (auto& v : xv) v = rng.normal();
    Tensor x({batch, steps, cfg.input_channels}, std::move(xv));
    std::vector<int> labels(batch);
    for (auto& l : labels) l = static_cast<int>(rng.below(cfg.num_classes));

    const auto t0 = std::chrono::steady_clock::now();
    Tensor logits = model.forward(x);
    const auto t1 = std::chrono::steady_clock::now();
    Tensor loss = softmax_cross_entropy(logits, labels);
    backward(loss);
    const auto t2 = std::chrono::steady_clock::now();

    TimingReport report;
    report.parameter_count = model.count_parameters();
    report.forward_seconds = std::chrono::duration<double>(t1 - t0).count();
    report.backward_seconds = std::chrono::duration<double>(t2 - t1).count();
    report.batch = batch;
    report.steps = steps;
    return report;
}

}  // namespace cif
