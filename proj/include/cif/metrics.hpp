#pragma once

// Classification metrics: accuracy, macro precision/recall/F1 from the
// confusion matrix, and one-vs-rest macro AUROC / AUPRC from class scores.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cif/errors.hpp"

namespace cif {

struct ConfusionMetrics {
    double accuracy = 0.0;
    std::vector<double> precision;  // per class
    std::vector<double> recall;
    std::vector<double> f1;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
};

// Per-class precision = TP/(TP+FP), recall = TP/(TP+FN), F1 their harmonic
// mean; a class with an empty denominator scores 0. Macro averages are
// unweighted means over all K classes.
inline ConfusionMetrics confusion_metrics(const std::vector<int>& y_true,
                                          const std::vector<int>& y_pred, std::size_t classes) {
    if (y_true.size() != y_pred.size() || y_true.empty())
        throw DimensionError("confusion_metrics: need equal-length nonempty label arrays");
    for (std::size_t i = 0; i < y_true.size(); ++i)
        if (y_true[i] < 0 || static_cast<std::size_t>(y_true[i]) >= classes || y_pred[i] < 0 ||
            static_cast<std::size_t>(y_pred[i]) >= classes)
            throw DimensionError("confusion_metrics: label out of range");

    std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == y_pred[i]) {
            ++correct;
            ++tp[static_cast<std::size_t>(y_true[i])];
        } else {
            ++fp[static_cast<std::size_t>(y_pred[i])];
            ++fn[static_cast<std::size_t>(y_true[i])];
        }
    }

    ConfusionMetrics out;
    out.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());
    out.precision.resize(classes);
    out.recall.resize(classes);
    out.f1.resize(classes);
    for (std::size_t k = 0; k < classes; ++k) {
        const double denom_p = static_cast<double>(tp[k] + fp[k]);
        const double denom_r = static_cast<double>(tp[k] + fn[k]);
        out.precision[k] = denom_p > 0.0 ? static_cast<double>(tp[k]) / denom_p : 0.0;
        out.recall[k] = denom_r > 0.0 ? static_cast<double>(tp[k]) / denom_r : 0.0;
        const double pr = out.precision[k] + out.recall[k];
        out.f1[k] = pr > 0.0 ? 2.0 * out.precision[k] * out.recall[k] / pr : 0.0;
        out.precision_macro += out.precision[k];
        out.recall_macro += out.recall[k];
        out.f1_macro += out.f1[k];
    }
    out.precision_macro /= static_cast<double>(classes);
    out.recall_macro /= static_cast<double>(classes);
    out.f1_macro /= static_cast<double>(classes);
    return out;
}

namespace detail_metrics {

// AUROC for one binary problem via the rank identity (Mann-Whitney U with
// midranks), equivalent to trapezoidal integration of the ROC step curve;
// tied scores contribute 1/2.
inline double binary_auroc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    std::size_t pos = 0;
    for (bool p : positive) pos += p ? 1 : 0;
    const std::size_t neg = positive.size() - pos;
    if (pos == 0 || neg == 0) throw NumericError("auroc undefined without both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (positive[order[k]]) positive_rank_sum += midrank;
        i = j;
    }
    const double u = positive_rank_sum -
                     static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

// AUPRC for one binary problem: step integration of precision over recall
// across descending distinct-score thresholds.
inline double binary_auprc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    std::size_t pos = 0;
    for (bool p : positive) pos += p ? 1 : 0;
    if (pos == 0) throw NumericError("auprc undefined without positives");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double area = 0.0;
    double previous_recall = 0.0;
    std::size_t tp = 0, predicted = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) {
            ++predicted;
            if (positive[order[k]]) ++tp;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(predicted);
        area += (recall - previous_recall) * precision;
        previous_recall = recall;
        i = j;
    }
    return area;
}

}  // namespace detail_metrics

// One-vs-rest macro AUROC over classes present in y_true with both a
// positive and a negative example; other classes are skipped.
inline double auroc_macro(const std::vector<int>& y_true, const std::vector<double>& scores,
                          std::size_t classes) {
    if (scores.size() != y_true.size() * classes)
        throw DimensionError("auroc_macro: score matrix must be B x K");
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t k = 0; k < classes; ++k) {
        std::vector<double> class_scores(y_true.size());
        std::vector<bool> positive(y_true.size());
        std::size_t pos = 0;
        for (std::size_t i = 0; i < y_true.size(); ++i) {
            class_scores[i] = scores[i * classes + k];
            positive[i] = static_cast<std::size_t>(y_true[i]) == k;
            pos += positive[i] ? 1 : 0;
        }
        if (pos == 0 || pos == y_true.size()) continue;
        total += detail_metrics::binary_auroc(class_scores, positive);
        ++counted;
    }
    if (counted == 0) throw NumericError("auroc_macro: no class with both outcomes");
    return total / static_cast<double>(counted);
}

inline double auprc_macro(const std::vector<int>& y_true, const std::vector<double>& scores,
                          std::size_t classes) {
    if (scores.size() != y_true.size() * classes)
        throw DimensionError("auprc_macro: score matrix must be B x K");
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t k = 0; k < classes; ++k) {
        std::vector<double> class_scores(y_true.size());
        std::vector<bool> positive(y_true.size());
        std::size_t pos = 0;
        for (std::size_t i = 0; i < y_true.size(); ++i) {
            class_scores[i] = scores[i * classes + k];
            positive[i] = static_cast<std::size_t>(y_true[i]) == k;
            pos += positive[i] ? 1 : 0;
        }
        if (pos == 0) continue;
        total += detail_metrics::binary_auprc(class_scores, positive);
        ++counted;
    }
    if (counted == 0) throw NumericError("auprc_macro: no class with positives");
    return total / static_cast<double>(counted);
}

struct EvalResult {
    double accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
    double auroc_macro = 0.0;
    double auprc_macro = 0.0;
};

inline EvalResult evaluate_scores(const std::vector<int>& y_true,
                                  const std::vector<double>& probabilities, std::size_t classes) {
    std::vector<int> y_pred(y_true.size());
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double* row = &probabilities[i * classes];
        std::size_t best = 0;
        for (std::size_t k = 1; k < classes; ++k)
            if (row[k] > row[best]) best = k;
        y_pred[i] = static_cast<int>(best);
    }
    const ConfusionMetrics cm = confusion_metrics(y_true, y_pred, classes);
    EvalResult out;
    out.accuracy = cm.accuracy;
    out.precision_macro = cm.precision_macro;
    out.recall_macro = cm.recall_macro;
    out.f1_macro = cm.f1_macro;
    out.auroc_macro = auroc_macro(y_true, probabilities, classes);
    out.auprc_macro = auprc_macro(y_true, probabilities, classes);
    return out;
}

// Mean and sample standard deviation of each metric across seed runs.
struct MetricsReport {
    std::vector<EvalResult> runs;

    static std::pair<double, double> mean_std(const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        if (xs.size() < 2) return {mean, 0.0};
        double acc = 0.0;
        for (double x : xs) acc += (x - mean) * (x - mean);
        return {mean, std::sqrt(acc / static_cast<double>(xs.size() - 1))};
    }

    std::pair<double, double> accuracy() const { return field(&EvalResult::accuracy); }
    std::pair<double, double> precision() const { return field(&EvalResult::precision_macro); }
    std::pair<double, double> recall() const { return field(&EvalResult::recall_macro); }
    std::pair<double, double> f1() const { return field(&EvalResult::f1_macro); }
    std::pair<double, double> auroc() const { return field(&EvalResult::auroc_macro); }
    std::pair<double, double> auprc() const { return field(&EvalResult::auprc_macro); }

private:
    std::pair<double, double> field(double EvalResult::* member) const {
        std::vector<double> xs;
        xs.reserve(runs.size());
        for (const auto& r : runs) xs.push_back(r.*member);
        return mean_std(xs);
    }
};

}  // namespace cif
