#pragma once

// SNR-gain law for two-channel linear fusion and its Monte-Carlo
// verification. For y = a*x1 + b*x2 with x_i = s_i + e_i, signal correlation
// rho and noise correlation gamma, the output SNR is the input SNR times
// (a^2 + b^2 + 2ab*rho) / (a^2 + b^2 + 2ab*gamma).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cif/errors.hpp"
#include "cif/rng.hpp"

namespace cif {

struct SignalModel {
    double sigma_s2 = 1.0;  // signal variance
    double sigma_e2 = 1.0;  // noise variance
    double rho = 0.0;       // signal correlation between the two channels
    double gamma = 0.0;     // noise correlation between the two channels

    void validate() const {
        if (!(sigma_s2 > 0.0) || !(sigma_e2 > 0.0))
            throw ConfigError("signal model: variances must be positive");
        if (std::fabs(rho) > 1.0 || std::fabs(gamma) > 1.0)
            throw ConfigError("signal model: correlations must lie in [-1, 1]");
    }

    double snr_in() const { return sigma_s2 / sigma_e2; }
};

enum class FusionMode { Difference, Cooperative, Neutral, Degrading };

inline const char* to_string(FusionMode mode) {
    switch (mode) {
        case FusionMode::Difference: return "difference";
        case FusionMode::Cooperative: return "cooperative";
        case FusionMode::Neutral: return "neutral";
        case FusionMode::Degrading: return "degrading";
    }
    return "?";
}

constexpr double kDegenerateDenominator = 1e-12;

// Multiplicative SNR gain of the fusion. Throws when the noise term of the
// combination cancels (gain would be unbounded).
inline double theoretical_gain(double a, double b, double rho, double gamma) {
    const double numerator = a * a + b * b + 2.0 * a * b * rho;
    const double denominator = a * a + b * b + 2.0 * a * b * gamma;
    if (denominator <= kDegenerateDenominator)
        throw NumericError("theoretical_gain: total noise cancellation, gain unbounded");
    return numerator / denominator;
}

// Gain > 1 exactly when 2ab(rho - gamma) > 0, which splits into the
// difference regime (ab < 0, rho < gamma) and the cooperative regime
// (ab > 0, rho > gamma).
inline FusionMode classify_mode(double a, double b, double rho, double gamma) {
    const double indicator = 2.0 * a * b * (rho - gamma);
    if (indicator == 0.0) return FusionMode::Neutral;
    if (a * b < 0.0 && rho < gamma) return FusionMode::Difference;
    if (a * b > 0.0 && rho > gamma) return FusionMode::Cooperative;
    return FusionMode::Degrading;
}

struct CorrelatedPairs {
    std::vector<double> s1, s2, e1, e2;
};

// Draws zero-mean bivariate Gaussian pairs for signal and noise with the
// model's variances and correlations, signal independent of noise. The
// Cholesky construction s2 = rho*z1 + sqrt(1-rho^2)*z2 gives the exact
// correlation in distribution.
inline CorrelatedPairs sample_correlated_pairs(const SignalModel& model, std::size_t count,
                                               std::uint64_t seed) {
    model.validate();
    if (count == 0) throw ConfigError("sample_correlated_pairs: count must be positive");
    CorrelatedPairs out;
    out.s1.resize(count);
    out.s2.resize(count);
    out.e1.resize(count);
    out.e2.resize(count);
    Rng rng(seed);
    const double sigma_s = std::sqrt(model.sigma_s2);
    const double sigma_e = std::sqrt(model.sigma_e2);
    const double rho_tail = std::sqrt(std::max(0.0, 1.0 - model.rho * model.rho));
    const double gamma_tail = std::sqrt(std::max(0.0, 1.0 - model.gamma * model.gamma));
    for (std::size_t i = 0; i < count; ++i) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        const double z3 = rng.normal();
        const double z4 = rng.normal();
        out.s1[i] = sigma_s * z1;
        out.s2[i] = sigma_s * (model.rho * z1 + rho_tail * z2);
        out.e1[i] = sigma_e * z3;
        out.e2[i] = sigma_e * (model.gamma * z3 + gamma_tail * z4);
    }
    return out;
}

inline double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) throw ConfigError("sample_variance: need at least two samples");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(xs.size() - 1);
}

inline double sample_correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw ConfigError("sample_correlation: need two equal-length series");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double denom = std::sqrt(sxx * syy);
    if (denom <= 0.0) throw NumericError("sample_correlation: zero variance");
    return sxy / denom;
}

// Measured gain: [var(a*s1 + b*s2) / var(a*e1 + b*e2)] / [var(s1) / var(e1)].
inline double empirical_snr_gain(double a, double b, const std::vector<double>& s1,
                                 const std::vector<double>& s2, const std::vector<double>& e1,
                                 const std::vector<double>& e2) {
    const std::size_t n = s1.size();
    if (s2.size() != n || e1.size() != n || e2.size() != n)
        throw DimensionError("empirical_snr_gain: series length mismatch");
    std::vector<double> fused_signal(n), fused_noise(n);
    for (std::size_t i = 0; i < n; ++i) {
        fused_signal[i] = a * s1[i] + b * s2[i];
        fused_noise[i] = a * e1[i] + b * e2[i];
    }
    const double noise_out = sample_variance(fused_noise);
    const double noise_in = sample_variance(e1);
    if (noise_out <= 0.0 || noise_in <= 0.0)
        throw NumericError("empirical_snr_gain: zero sample noise variance");
    const double snr_out = sample_variance(fused_signal) / noise_out;
    const double snr_in = sample_variance(s1) / noise_in;
    return snr_out / snr_in;
}

struct GainOptimum {
    double a = 1.0;
    double b = 0.0;
    double gain = 1.0;
    FusionMode mode = FusionMode::Neutral;
};

// Angle-grid maximizer of the theoretical gain over the unit circle
// a^2 + b^2 = 1 (the gain is invariant to uniform rescaling of (a, b)).
// Angles whose denominator degenerates are skipped.
inline GainOptimum grid_search_coefficients(double rho, double gamma,
                                            std::size_t grid_resolution = 3600) {
    if (grid_resolution < 2) throw ConfigError("grid_search_coefficients: resolution too small");
    GainOptimum best;
    best.gain = -1.0;
    for (std::size_t i = 0; i < grid_resolution; ++i) {
        const double theta = 2.0 * Rng::pi() * static_cast<double>(i) /
                             static_cast<double>(grid_resolution);
        const double a = std::cos(theta);
        const double b = std::sin(theta);
        const double denominator = a * a + b * b + 2.0 * a * b * gamma;
        if (denominator <= kDegenerateDenominator) continue;
        const double gain = theoretical_gain(a, b, rho, gamma);
        if (gain > best.gain) {
            best.a = a;
            best.b = b;
            best.gain = gain;
        }
    }
    if (best.gain < 0.0) throw NumericError("grid_search_coefficients: all angles degenerate");
    best.mode = best.gain > 1.0 ? classify_mode(best.a, best.b, rho, gamma) : FusionMode::Neutral;
    return best;
}

}  // namespace cif
