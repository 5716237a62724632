#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "boweldet/dataset.hpp"
#include "boweldet/inference.hpp"

namespace boweldet {

using BinMask = std::vector<std::uint8_t>;

/// Bin t is set iff its centre (t + 0.5)/rate lies inside some interval.
BinMask binary_mask(const IntervalSet& intervals, std::size_t n_bins, int time_bins_per_s);
BinMask binary_mask(std::span<const SoundEvent> events, std::size_t n_bins, int time_bins_per_s);

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
};

/// Throws MaskLengthError when the masks differ in length.
ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

struct ClassificationMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    double f1 = 0.0;
};

/// Ratios with empty denominators are 0.
ClassificationMetrics classification_metrics(const ConfusionCounts& counts);
ClassificationMetrics classification_metrics(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

/// Mean over ground-truth events of the best IoU reached by any predicted
/// interval; 0 for an empty ground truth.
double avg_event_iou(const IntervalSet& pred, std::span<const SoundEvent> truth);

/// Accumulates bin counts and per-event IoU over many recordings.
struct EvaluationTotals {
    ConfusionCounts counts;
    double iou_sum = 0.0;
    std::size_t events = 0;

    void add(const IntervalSet& pred, std::span<const SoundEvent> truth, std::size_t n_bins, int time_bins_per_s);
    EvaluationTotals& operator+=(const EvaluationTotals& o);
};

struct MetricsRow {
    double avg_iou = 0.0;
    ClassificationMetrics bins;
};

MetricsRow summarize(const EvaluationTotals& totals);

}  // namespace boweldet
