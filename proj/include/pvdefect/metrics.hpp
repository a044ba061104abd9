#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "image.hpp"

namespace pvdefect {

/// k x k counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int k = kNumClasses) : k_(k), counts_(static_cast<std::size_t>(k) * k, 0) {
        require(k >= 1, Errc::InvalidArgument, "confusion matrix needs at least one class");
    }

    int classes() const { return k_; }
    std::uint64_t& at(int truth, int pred) { return counts_[index(truth, pred)]; }
    std::uint64_t at(int truth, int pred) const { return counts_[index(truth, pred)]; }

    std::uint64_t total() const {
        std::uint64_t s = 0;
        for (auto v : counts_) s += v;
        return s;
    }
    std::uint64_t trace() const {
        std::uint64_t s = 0;
        for (int c = 0; c < k_; ++c) s += at(c, c);
        return s;
    }
    std::uint64_t row_sum(int c) const {
        std::uint64_t s = 0;
        for (int j = 0; j < k_; ++j) s += at(c, j);
        return s;
    }
    std::uint64_t col_sum(int c) const {
        std::uint64_t s = 0;
        for (int i = 0; i < k_; ++i) s += at(i, c);
        return s;
    }

    // One-vs-rest reduction for class c.
    std::uint64_t tp(int c) const { return at(c, c); }
    std::uint64_t fp(int c) const { return col_sum(c) - at(c, c); }
    std::uint64_t fn(int c) const { return row_sum(c) - at(c, c); }
    std::uint64_t tn(int c) const { return total() - tp(c) - fp(c) - fn(c); }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t index(int truth, int pred) const {
        require(truth >= 0 && truth < k_ && pred >= 0 && pred < k_, Errc::LabelOutOfRange, "class index out of range");
        return static_cast<std::size_t>(truth) * k_ + pred;
    }
    int k_;
    std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> pred, int k = kNumClasses) {
    require(truth.size() == pred.size(), Errc::LengthMismatch, "truth and prediction lists differ in length");
    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        require(truth[i] >= 0 && truth[i] < k && pred[i] >= 0 && pred[i] < k, Errc::LabelOutOfRange,
                "label out of range at sample " + std::to_string(i));
        ++cm.at(truth[i], pred[i]);
    }
    return cm;
}

inline ConfusionMatrix confusion_matrix(std::span<const ClassLabel> truth, std::span<const ClassLabel> pred) {
    require(truth.size() == pred.size(), Errc::LengthMismatch, "truth and prediction lists differ in length");
    std::vector<int> t(truth.size()), p(pred.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = label_code(truth[i]);
        p[i] = label_code(pred[i]);
    }
    return confusion_matrix(t, p, kNumClasses);
}

enum class Averaging { Macro, Weighted };

inline std::string_view averaging_name(Averaging a) { return a == Averaging::Macro ? "macro" : "weighted"; }

inline Averaging parse_averaging(std::string_view s) {
    if (s == "macro") return Averaging::Macro;
    if (s == "weighted") return Averaging::Weighted;
    throw Error(Errc::InvalidArgument, "unknown averaging '" + std::string(s) + "'");
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
    bool active = false;              // class occurs in truth or predictions
    bool precision_undefined = false; // never predicted: 0/0 counted as 0
    bool recall_undefined = false;    // never present: 0/0 counted as 0
};

/// Fractions in [0, 1].
struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Averaging averaging = Averaging::Macro;
    std::vector<ClassMetrics> per_class;
    int undefined_terms = 0;
};

/**
 * accuracy = trace / total; per class precision = TP/(TP+FP),
 * recall = TP/(TP+FN), F1 = 2PR/(P+R). Averages run over classes that occur
 * in the truth or the predictions; macro weights them equally, weighted by
 * support. A 0/0 term counts as zero and is tallied in `undefined_terms`.
 */
inline Metrics compute_metrics(const ConfusionMatrix& cm, Averaging avg = Averaging::Macro) {
    const auto total = cm.total();
    require(total > 0, Errc::EmptyMatrix, "confusion matrix is empty");
    Metrics m;
    m.averaging = avg;
    m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
    double wsum = 0.0;
    for (int c = 0; c < cm.classes(); ++c) {
        ClassMetrics pc;
        const auto tp = cm.tp(c), fp = cm.fp(c), fn = cm.fn(c);
        pc.support = tp + fn;
        pc.active = tp + fp + fn > 0;
        if (pc.active) {
            if (tp + fp > 0) pc.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
            else pc.precision_undefined = true;
            if (tp + fn > 0) pc.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
            else pc.recall_undefined = true;
            if (pc.precision + pc.recall > 0) pc.f1 = 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall);
            m.undefined_terms += pc.precision_undefined + pc.recall_undefined;
            const double w = avg == Averaging::Macro ? 1.0 : static_cast<double>(pc.support);
            m.precision += w * pc.precision;
            m.recall += w * pc.recall;
            m.f1 += w * pc.f1;
            wsum += w;
        }
        m.per_class.push_back(pc);
    }
    if (wsum > 0) {
        m.precision /= wsum;
        m.recall /= wsum;
        m.f1 /= wsum;
    }
    return m;
}

}  // namespace pvdefect
