#pragma once

// Labeled multichannel time-series container with a JSON manifest and a
// little-endian binary payload, plus a synthetic generator that instantiates
// the two-channel signal/noise correlation model as a classification task.
// Generated datasets keep their ground-truth signal/noise decomposition in a
// sidecar so tests can measure SNR on real fused samples.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cif/errors.hpp"
#include "cif/io.hpp"
#include "cif/rng.hpp"
#include "cif/tensor.hpp"

namespace cif {

struct Sample {
    std::vector<double> values;  // T x C, row-major
    int label = 0;
    std::string subject_id;
};

struct Dataset {
    std::size_t classes = 0;
    std::size_t steps = 0;
    std::size_t channels = 0;
    std::vector<Sample> samples;
    // Ground-truth decomposition (same T x C layout), present for synthetic data.
    std::vector<std::vector<double>> signal_parts;
    std::vector<std::vector<double>> noise_parts;

    bool has_decomposition() const { return !signal_parts.empty(); }

    void validate() const {
        if (classes < 2) throw ConfigError("dataset: need at least two classes");
        if (steps == 0 || channels == 0) throw ConfigError("dataset: empty sample shape");
        for (const auto& s : samples) {
            if (s.values.size() != steps * channels)
                throw ConfigError("dataset: sample size does not match manifest shape");
            if (s.label < 0 || static_cast<std::size_t>(s.label) >= classes)
                throw ConfigError("dataset: label out of declared range");
        }
        if (has_decomposition() &&
            (signal_parts.size() != samples.size() || noise_parts.size() != samples.size()))
            throw ConfigError("dataset: decomposition does not cover all samples");
    }

    // Stacks the selected samples into a B x T x C tensor.
    Tensor batch(const std::vector<std::size_t>& indices) const {
        std::vector<double> values;
        values.reserve(indices.size() * steps * channels);
        for (std::size_t idx : indices) {
            const auto& sample = samples.at(idx).values;
            values.insert(values.end(), sample.begin(), sample.end());
        }
        return Tensor({indices.size(), steps, channels}, std::move(values));
    }

    std::vector<int> labels(const std::vector<std::size_t>& indices) const {
        std::vector<int> out;
        out.reserve(indices.size());
        for (std::size_t idx : indices) out.push_back(samples.at(idx).label);
        return out;
    }
};

struct SyntheticSpec {
    std::size_t classes = 2;
    std::size_t subjects_per_class = 8;
    std::size_t samples_per_subject = 12;
    std::size_t steps = 64;
    std::size_t channels = 4;  // must be even; channel j pairs with j + C/2
    double sigma_s2 = 0.25;
    double sigma_e2 = 1.0;
    double rho = 0.0;    // signal correlation within a pair
    double gamma = 0.9;  // noise correlation within a pair
    std::uint64_t seed = 1;

    void validate() const {
        if (classes < 2) throw ConfigError("synthetic: need at least two classes");
        if (subjects_per_class == 0 || samples_per_subject == 0)
            throw ConfigError("synthetic: need subjects and samples");
        if (steps < 8) throw ConfigError("synthetic: steps too small");
        if (channels == 0 || channels % 2 != 0)
            throw ConfigError("synthetic: channel count must be even and positive");
        if (!(sigma_s2 > 0.0) || !(sigma_e2 >= 0.0))
            throw ConfigError("synthetic: invalid variances");
        if (std::fabs(rho) > 1.0 || std::fabs(gamma) > 1.0)
            throw ConfigError("synthetic: correlations must lie in [-1, 1]");
    }
};

namespace detail_data {

// Class template: two sinusoids at distinct integer frequencies. Over a full
// window these are exactly orthogonal and zero-mean, and each contributes
// variance 1/2, so the sum has unit variance regardless of phase.
inline std::vector<double> sinusoid_template(std::size_t steps, std::size_t f1, std::size_t f2,
                                             double phase1, double phase2) {
    std::vector<double> out(steps);
    const double w1 = 2.0 * Rng::pi() * static_cast<double>(f1) / static_cast<double>(steps);
    const double w2 = 2.0 * Rng::pi() * static_cast<double>(f2) / static_cast<double>(steps);
    for (std::size_t t = 0; t < steps; ++t)
        out[t] = std::sin(w1 * static_cast<double>(t) + phase1) +
                 std::sin(w2 * static_cast<double>(t) + phase2);
    return out;
}

}  // namespace detail_data

// Builds K * subjects_per_class * samples_per_subject samples. Each channel
// pair (j, j + C/2) carries a class-specific deterministic template on the
// front channel and a rho-mixed partner template on the back channel, plus
// zero-mean Gaussian noise with within-pair correlation gamma. Subject
// identity enters through per-subject template phases.
inline Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    Dataset data;
    data.classes = spec.classes;
    data.steps = spec.steps;
    data.channels = spec.channels;

    const std::size_t pairs = spec.channels / 2;
    const std::size_t max_freq = spec.steps / 2 - 1;
    if (max_freq < 4) throw ConfigError("synthetic: steps too small for distinct frequencies");
    const double sigma_s = std::sqrt(spec.sigma_s2);
    const double sigma_e = std::sqrt(spec.sigma_e2);
    const double rho_tail = std::sqrt(std::max(0.0, 1.0 - spec.rho * spec.rho));
    const double gamma_tail = std::sqrt(std::max(0.0, 1.0 - spec.gamma * spec.gamma));

    std::uint64_t sample_stream = 0;
    for (std::size_t k = 0; k < spec.classes; ++k) {
        for (std::size_t subj = 0; subj < spec.subjects_per_class; ++subj) {
            const std::size_t subject_index = k * spec.subjects_per_class + subj;
            Rng phase_rng(substream_seed(seed, 1'000'000 + subject_index));

            // Per-pair templates for this subject. Frequencies are distinct
            // integers so templates are exactly orthogonal and unit variance.
            std::vector<std::vector<double>> primary(pairs), secondary(pairs);
            for (std::size_t p = 0; p < pairs; ++p) {
                const std::size_t g = k * pairs + p;
                const std::size_t f1 = 1 + (4 * g) % max_freq;
                const std::size_t f2 = 1 + (4 * g + 1) % max_freq;
                const std::size_t f3 = 1 + (4 * g + 2) % max_freq;
                const std::size_t f4 = 1 + (4 * g + 3) % max_freq;
                const double ph1 = phase_rng.uniform(0.0, 2.0 * Rng::pi());
                const double ph2 = phase_rng.uniform(0.0, 2.0 * Rng::pi());
                const double ph3 = phase_rng.uniform(0.0, 2.0 * Rng::pi());
                const double ph4 = phase_rng.uniform(0.0, 2.0 * Rng::pi());
                primary[p] = detail_data::sinusoid_template(spec.steps, f1, f2, ph1, ph2);
                secondary[p] = detail_data::sinusoid_template(spec.steps, f3, f4, ph3, ph4);
            }

            for (std::size_t s = 0; s < spec.samples_per_subject; ++s) {
                Rng noise_rng(substream_seed(seed, 2'000'000 + sample_stream++));
                Sample sample;
                sample.label = static_cast<int>(k);
                sample.subject_id = "c" + std::to_string(k) + "s" + std::to_string(subj);
                sample.values.resize(spec.steps * spec.channels);
                std::vector<double> signal(spec.steps * spec.channels);
                std::vector<double> noise(spec.steps * spec.channels);
                for (std::size_t t = 0; t < spec.steps; ++t) {
                    for (std::size_t p = 0; p < pairs; ++p) {
                        const double s_front = sigma_s * primary[p][t];
                        const double s_back =
                            sigma_s * (spec.rho * primary[p][t] + rho_tail * secondary[p][t]);
                        const double z1 = noise_rng.normal();
                        const double z2 = noise_rng.normal();
                        const double e_front = sigma_e * z1;
                        const double e_back = sigma_e * (spec.gamma * z1 + gamma_tail * z2);
                        const std::size_t front = t * spec.channels + p;
                        const std::size_t back = t * spec.channels + pairs + p;
                        signal[front] = s_front;
                        signal[back] = s_back;
                        noise[front] = e_front;
                        noise[back] = e_back;
                        sample.values[front] = s_front + e_front;
                        sample.values[back] = s_back + e_back;
                    }
                }
                data.samples.push_back(std::move(sample));
                data.signal_parts.push_back(std::move(signal));
                data.noise_parts.push_back(std::move(noise));
            }
        }
    }
    data.validate();
    return data;
}

inline Dataset generate_synthetic(const SyntheticSpec& spec) {
    return generate_synthetic(spec, spec.seed);
}

// ---------------------------------------------------------------------------
// Container format: <dir>/manifest.json + <dir>/data.bin (magic "MTSD"),
// optional <dir>/decomposition.bin (magic "MTSS") with per-sample signal
// then noise blocks. Payloads are little-endian 64-bit floats, row-major
// T x C, in manifest order. Round-trips are bit-exact.
// ---------------------------------------------------------------------------

constexpr std::uint32_t kDatasetFormatVersion = 1;

inline void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
    data.validate();
    std::filesystem::create_directories(dir);

    nlohmann::json manifest;
    manifest["format"] = "mtsd";
    manifest["version"] = kDatasetFormatVersion;
    manifest["prng"] = "xoshiro256++";
    manifest["classes"] = data.classes;
    manifest["steps"] = data.steps;
    manifest["channels"] = data.channels;
    manifest["decomposition"] = data.has_decomposition();
    auto& list = manifest["samples"] = nlohmann::json::array();
    for (const auto& s : data.samples)
        list.push_back({{"label", s.label}, {"subject_id", s.subject_id}});
    io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

    std::string payload;
    payload.reserve(12 + data.samples.size() * data.steps * data.channels * 8);
    payload += "MTSD";
    io::put_u32(payload, kDatasetFormatVersion);
    for (const auto& s : data.samples)
        for (double v : s.values) io::put_f64(payload, v);
    io::write_file_atomic(dir / "data.bin", payload);

    if (data.has_decomposition()) {
        std::string sidecar;
        sidecar += "MTSS";
        io::put_u32(sidecar, kDatasetFormatVersion);
        for (std::size_t i = 0; i < data.samples.size(); ++i) {
            for (double v : data.signal_parts[i]) io::put_f64(sidecar, v);
            for (double v : data.noise_parts[i]) io::put_f64(sidecar, v);
        }
        io::write_file_atomic(dir / "decomposition.bin", sidecar);
    }
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(io::read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("manifest parse error: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "mtsd") throw IoError("manifest: not a dataset manifest");
    if (manifest.value("version", 0u) != kDatasetFormatVersion)
        throw IoError("manifest: unsupported version");

    Dataset data;
    data.classes = manifest.at("classes").get<std::size_t>();
    data.steps = manifest.at("steps").get<std::size_t>();
    data.channels = manifest.at("channels").get<std::size_t>();
    const std::size_t values_per_sample = data.steps * data.channels;

    io::Reader reader(io::read_file(dir / "data.bin"));
    if (reader.magic(4) != "MTSD") throw IoError("data.bin: bad magic");
    if (reader.u32() != kDatasetFormatVersion) throw IoError("data.bin: unsupported version");
    for (const auto& entry : manifest.at("samples")) {
        Sample sample;
        sample.label = entry.at("label").get<int>();
        sample.subject_id = entry.at("subject_id").get<std::string>();
        sample.values.resize(values_per_sample);
        for (auto& v : sample.values) v = reader.f64();
        data.samples.push_back(std::move(sample));
    }
    if (!reader.exhausted()) throw IoError("data.bin: trailing bytes");

    if (manifest.value("decomposition", false)) {
        io::Reader side(io::read_file(dir / "decomposition.bin"));
        if (side.magic(4) != "MTSS") throw IoError("decomposition.bin: bad magic");
        if (side.u32() != kDatasetFormatVersion)
            throw IoError("decomposition.bin: unsupported version");
        for (std::size_t i = 0; i < data.samples.size(); ++i) {
            std::vector<double> signal(values_per_sample), noise(values_per_sample);
            for (auto& v : signal) v = side.f64();
            for (auto& v : noise) v = side.f64();
            data.signal_parts.push_back(std::move(signal));
            data.noise_parts.push_back(std::move(noise));
        }
        if (!side.exhausted()) throw IoError("decomposition.bin: trailing bytes");
    }
    data.validate();
    return data;
}

}  // namespace cif
