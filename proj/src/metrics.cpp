#include "boweldet/metrics.hpp"

#include <algorithm>

#include "boweldet/errors.hpp"
#include "boweldet/losses.hpp"

namespace boweldet {

BinMask binary_mask(const IntervalSet& intervals, std::size_t n_bins, int time_bins_per_s) {
    BinMask mask(n_bins, 0);
    for (const Interval& iv : intervals) {
        const auto [first, last] = covered_bins(iv, time_bins_per_s, n_bins);
        std::fill(mask.begin() + static_cast<std::ptrdiff_t>(first), mask.begin() + static_cast<std::ptrdiff_t>(last), 1);
    }
    return mask;
}

BinMask binary_mask(std::span<const SoundEvent> events, std::size_t n_bins, int time_bins_per_s) {
    std::vector<Interval> ivs;
    ivs.reserve(events.size());
    for (const auto& ev : events) ivs.push_back({ev.start_s, ev.end_s});
    return binary_mask(IntervalSet(std::move(ivs)), n_bins, time_bins_per_s);
}

ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
    if (pred.size() != truth.size()) {
        throw MaskLengthError("prediction mask has " + std::to_string(pred.size()) + " bins, ground truth " +
                              std::to_string(truth.size()));
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0;
        const bool t = truth[i] != 0;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ClassificationMetrics classification_metrics(const ConfusionCounts& c) {
    ClassificationMetrics m;
    m.accuracy = ratio(c.tp + c.tn, c.total());
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.specificity = ratio(c.tn, c.tn + c.fp);
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

ClassificationMetrics classification_metrics(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
    return classification_metrics(confusion(pred, truth));
}

double avg_event_iou(const IntervalSet& pred, std::span<const SoundEvent> truth) {
    if (truth.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& ev : truth) {
        double best = 0.0;
        for (const Interval& iv : pred) {
            best = std::max(best, interval_iou({ev.center(), ev.duration()},
                                               {0.5 * (iv.start_s + iv.end_s), iv.length()}));
        }
        sum += best;
    }
    return sum / static_cast<double>(truth.size());
}

void EvaluationTotals::add(const IntervalSet& pred, std::span<const SoundEvent> truth, std::size_t n_bins,
                           int time_bins_per_s) {
    counts += confusion(binary_mask(pred, n_bins, time_bins_per_s), binary_mask(truth, n_bins, time_bins_per_s));
    iou_sum += avg_event_iou(pred, truth) * static_cast<double>(truth.size());
    events += truth.size();
}

EvaluationTotals& EvaluationTotals::operator+=(const EvaluationTotals& o) {
    counts += o.counts;
    iou_sum += o.iou_sum;
    events += o.events;
    return *this;
}

MetricsRow summarize(const EvaluationTotals& totals) {
    MetricsRow row;
    row.avg_iou = totals.events ? totals.iou_sum / static_cast<double>(totals.events) : 0.0;
    row.bins = classification_metrics(totals.counts);
    return row;
}

}  // namespace boweldet
