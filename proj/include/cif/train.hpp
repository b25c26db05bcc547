#pragma once

// Training loop (Adam, early stopping on validation macro-F1), subject-based
// dataset splitting, and multi-seed aggregation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "cif/dataset.hpp"
#include "cif/errors.hpp"
#include "cif/metrics.hpp"
#include "cif/model.hpp"
#include "cif/rng.hpp"
#include "cif/tensor.hpp"

namespace cif {

struct TrainConfig {
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    std::vector<std::uint64_t> seeds = {41, 42, 43, 44, 45};

    void validate() const {
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
        if (patience > max_epochs) throw ConfigError("train: patience must be <= max_epochs");
        if (seeds.empty()) throw ConfigError("train: need at least one seed");
        if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
    }
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
    std::size_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    void reset(const std::vector<Tensor>& params) {
        step = 0;
        m.clear();
        v.clear();
        for (const auto& p : params) {
            m.emplace_back(p.size(), 0.0);
            v.emplace_back(p.size(), 0.0);
        }
    }
};

// Bias-corrected Adam update. Parameters whose grad buffer was never
// materialized this step are treated as having zero gradient.
inline void adam_step(const std::vector<Tensor>& params, AdamState& state, const TrainConfig& cfg) {
    if (state.m.size() != params.size()) state.reset(params);
    ++state.step;
    const double correction1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& values = const_cast<Tensor&>(params[i]).mutable_values();
        auto& m = state.m[i];
        auto& v = state.v[i];
        const bool has_grad = params[i].has_grad();
        for (std::size_t j = 0; j < values.size(); ++j) {
            const double g = has_grad ? params[i].grad()[j] : 0.0;
            m[j] = cfg.adam_beta1 * m[j] + (1.0 - cfg.adam_beta1) * g;
            v[j] = cfg.adam_beta2 * v[j] + (1.0 - cfg.adam_beta2) * g * g;
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            values[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

enum class SplitMode { SubjectDependent, SubjectIndependent };

inline const char* to_string(SplitMode mode) {
    return mode == SplitMode::SubjectDependent ? "subject-dependent" : "subject-independent";
}

inline SplitMode split_mode_from_string(const std::string& s) {
    if (s == "subject-dependent") return SplitMode::SubjectDependent;
    if (s == "subject-independent") return SplitMode::SubjectIndependent;
    throw ConfigError("unknown split mode '" + s + "'");
}

struct SplitSpec {
    SplitMode mode = SplitMode::SubjectIndependent;
    double train_ratio = 0.6;
    double val_ratio = 0.2;
    double test_ratio = 0.2;
    std::uint64_t seed = 7;
    // Explicit subject assignment overrides the ratios when non-empty.
    std::vector<std::string> train_subjects, val_subjects, test_subjects;

    bool explicit_assignment() const {
        return !(train_subjects.empty() && val_subjects.empty() && test_subjects.empty());
    }

    void validate() const {
        if (explicit_assignment()) return;
        if (train_ratio < 0.0 || val_ratio < 0.0 || test_ratio < 0.0)
            throw ConfigError("split: ratios must be nonnegative");
        if (std::fabs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
            throw ConfigError("split: ratios must sum to 1");
    }
};

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

namespace detail_split {

inline std::vector<std::string> subjects_in_order(const Dataset& data) {
    std::vector<std::string> order;
    std::unordered_map<std::string, bool> seen;
    for (const auto& s : data.samples) {
        if (!seen.count(s.subject_id)) {
            seen[s.subject_id] = true;
            order.push_back(s.subject_id);
        }
    }
    return order;
}

// Partition counts by floor(ratio * total), remainder to the test side.
inline std::array<std::size_t, 3> partition_counts(std::size_t total, const SplitSpec& spec) {
    const auto n_train = static_cast<std::size_t>(std::floor(spec.train_ratio * total));
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val_ratio * total));
    if (n_train + n_val > total) throw ConfigError("split: ratios exceed population");
    const std::size_t n_test = total - n_train - n_val;
    if ((spec.train_ratio > 0.0 && n_train == 0) || (spec.val_ratio > 0.0 && n_val == 0) ||
        (spec.test_ratio > 0.0 && n_test == 0))
        throw ConfigError("split: population too small for the requested ratios");
    return {n_train, n_val, n_test};
}

}  // namespace detail_split

// Deterministic three-way split. Subject-independent mode assigns whole
// subjects, so the subject-ID sets of the three parts are pairwise disjoint;
// subject-dependent mode assigns samples regardless of subject.
inline SplitIndices split(const Dataset& data, const SplitSpec& spec) {
    spec.validate();
    if (data.samples.empty()) throw ConfigError("split: empty dataset");
    SplitIndices out;

    if (spec.mode == SplitMode::SubjectDependent) {
        std::vector<std::size_t> indices(data.samples.size());
        std::iota(indices.begin(), indices.end(), 0);
        Rng rng(spec.seed);
        rng.shuffle(indices);
        const auto counts = detail_split::partition_counts(indices.size(), spec);
        out.train.assign(indices.begin(), indices.begin() + counts[0]);
        out.val.assign(indices.begin() + counts[0], indices.begin() + counts[0] + counts[1]);
        out.test.assign(indices.begin() + counts[0] + counts[1], indices.end());
        return out;
    }

    std::vector<std::string> subjects = detail_split::subjects_in_order(data);
    std::unordered_map<std::string, int> assignment;  // 0 train, 1 val, 2 test
    if (spec.explicit_assignment()) {
        for (const auto& s : spec.train_subjects) assignment[s] = 0;
        for (const auto& s : spec.val_subjects) {
            if (assignment.count(s)) throw ConfigError("split: subject assigned twice: " + s);
            assignment[s] = 1;
        }
        for (const auto& s : spec.test_subjects) {
            if (assignment.count(s)) throw ConfigError("split: subject assigned twice: " + s);
            assignment[s] = 2;
        }
        for (const auto& s : subjects)
            if (!assignment.count(s)) throw ConfigError("split: subject not assigned: " + s);
    } else {
        if (subjects.size() < 3)
            throw ConfigError("split: subject-independent mode needs at least three subjects");
        Rng rng(spec.seed);
        rng.shuffle(subjects);
        const auto counts = detail_split::partition_counts(subjects.size(), spec);
        for (std::size_t i = 0; i < subjects.size(); ++i)
            assignment[subjects[i]] = i < counts[0] ? 0 : (i < counts[0] + counts[1] ? 1 : 2);
    }

    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        switch (assignment.at(data.samples[i].subject_id)) {
            case 0: out.train.push_back(i); break;
            case 1: out.val.push_back(i); break;
            default: out.test.push_back(i); break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_f1 = 0.0;
};

struct TrainResult {
    std::size_t best_epoch = 0;
    double best_val_f1 = -1.0;
    std::vector<EpochRecord> history;
};

// Softmax probabilities for a list of samples, evaluated in chunks.
inline std::vector<double> predict_probabilities(const HmBiTcn& model, const Dataset& data,
                                                 const std::vector<std::size_t>& indices,
                                                 std::size_t chunk = 256) {
    std::vector<double> probs;
    probs.reserve(indices.size() * model.config().num_classes);
    for (std::size_t start = 0; start < indices.size(); start += chunk) {
        const std::size_t end = std::min(indices.size(), start + chunk);
        std::vector<std::size_t> slice(indices.begin() + start, indices.begin() + end);
        Tensor logits = model.forward(data.batch(slice));
        auto chunk_probs = softmax_rows(logits.values(), slice.size(), model.config().num_classes);
        probs.insert(probs.end(), chunk_probs.begin(), chunk_probs.end());
    }
    return probs;
}

inline EvalResult evaluate(const HmBiTcn& model, const Dataset& data,
                           const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw ConfigError("evaluate: empty split");
    const auto probs = predict_probabilities(model, data, indices);
    return evaluate_scores(data.labels(indices), probs, model.config().num_classes);
}

// Trains in place. Mini-batches are reshuffled every epoch from a seeded
// stream; validation macro-F1 drives early stopping (strict improvement,
// counted per epoch) and the best-epoch parameters are restored on exit.
inline TrainResult train(HmBiTcn& model, const Dataset& data, const SplitIndices& splits,
                         const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (splits.train.empty() || splits.val.empty()) throw ConfigError("train: empty split");

    AdamState state;
    state.reset(model.parameters());
    Rng shuffle_rng(substream_seed(seed, 17));
    std::vector<std::size_t> order = splits.train;

    TrainResult result;
    auto best_snapshot = model.snapshot_parameters();
    std::size_t epochs_since_best = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::size_t> batch_indices(order.begin() + start, order.begin() + end);
            Tensor logits = model.forward(data.batch(batch_indices));
            Tensor loss = softmax_cross_entropy(logits, data.labels(batch_indices));
            if (!std::isfinite(loss.value()))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
            loss_sum += loss.value();
            ++batches;
            model.zero_grad();
            backward(loss);
            adam_step(model.parameters(), state, cfg);
            model.apply_coefficient_constraints();
        }

        const auto val_probs = predict_probabilities(model, data, splits.val);
        std::vector<int> val_pred(splits.val.size());
        const std::size_t classes = model.config().num_classes;
        for (std::size_t i = 0; i < splits.val.size(); ++i) {
            const double* row = &val_probs[i * classes];
            std::size_t best = 0;
            for (std::size_t k = 1; k < classes; ++k)
                if (row[k] > row[best]) best = k;
            val_pred[i] = static_cast<int>(best);
        }
        const double val_f1 =
            confusion_metrics(data.labels(splits.val), val_pred, classes).f1_macro;

        result.history.push_back({epoch, loss_sum / static_cast<double>(batches), val_f1});
        if (val_f1 > result.best_val_f1) {
            result.best_val_f1 = val_f1;
            result.best_epoch = epoch;
            best_snapshot = model.snapshot_parameters();
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= cfg.patience) break;
        }
    }

    model.restore_parameters(best_snapshot);
    return result;
}

// Runs one training per seed on fixed splits; model init and batch shuffling
// are reseeded per run. Returns per-seed test metrics.
struct MultiSeedResult {
    MetricsReport report;
    std::vector<TrainResult> train_results;
};

inline MultiSeedResult run_multi_seed(const HmBiTcnConfig& model_cfg, const Dataset& data,
                                      const SplitIndices& splits, const TrainConfig& train_cfg) {
    train_cfg.validate();
    MultiSeedResult out;
    for (std::uint64_t seed : train_cfg.seeds) {
        HmBiTcn model(model_cfg, seed);
        out.train_results.push_back(train(model, data, splits, train_cfg, seed));
        out.report.runs.push_back(evaluate(model, data, splits.test));
    }
    return out;
}

}  // namespace cif
