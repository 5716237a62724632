#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "boweldet/errors.hpp"
#include "boweldet/losses.hpp"
#include "boweldet/metrics.hpp"
#include "boweldet/rng.hpp"

using namespace boweldet;

namespace {

BinMask random_mask(Rng& rng, std::size_t n, double p) {
    BinMask m(n);
    for (auto& b : m) b = rng.bernoulli(p) ? 1 : 0;
    return m;
}

// Straight per-bin counting and textbook ratios.
ClassificationMetrics naive(const BinMask& pred, const BinMask& truth) {
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && truth[i]) tp += 1;
        if (pred[i] && !truth[i]) fp += 1;
        if (!pred[i] && !truth[i]) tn += 1;
        if (!pred[i] && truth[i]) fn += 1;
    }
    ClassificationMetrics m;
    m.accuracy = (tp + tn) / (tp + fp + tn + fn);
    m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    m.specificity = tn + fp > 0 ? tn / (tn + fp) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

std::vector<SoundEvent> events_of(std::initializer_list<std::pair<double, double>> spans) {
    std::vector<SoundEvent> out;
    for (auto [a, b] : spans) out.push_back({a, b, EventKind::single_burst});
    return out;
}

}  // namespace

TEST_CASE("binary_mask examples") {
    const BinMask none = binary_mask(IntervalSet{}, 1260, 630);
    CHECK(std::count(none.begin(), none.end(), 1) == 0);

    const BinMask all = binary_mask(IntervalSet({{0.0, 2.0}}), 1260, 630);
    CHECK(std::count(all.begin(), all.end(), 1) == 1260);

    const BinMask part = binary_mask(IntervalSet({{0.1, 0.2}}), 1260, 630);
    for (std::size_t t = 0; t < 1260; ++t) {
        CAPTURE(t);
        CHECK(part[t] == ((t >= 63 && t <= 125) ? 1 : 0));
    }

    const auto ev = events_of({{0.1, 0.2}});
    CHECK(binary_mask(ev, 1260, 630) == part);
}

TEST_CASE("classification_metrics examples") {
    Rng rng(1);
    const BinMask gt = random_mask(rng, 500, 0.3);
    const auto same = classification_metrics(gt, gt);
    CHECK(same.accuracy == 1.0);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.f1 == 1.0);
    CHECK(same.specificity == 1.0);

    BinMask inv = gt;
    for (auto& b : inv) b = b ? 0 : 1;
    const auto flipped = classification_metrics(inv, gt);
    CHECK(flipped.accuracy == 0.0);
    CHECK(flipped.f1 == 0.0);

    const BinMask empty(500, 0);
    const auto quiet = classification_metrics(empty, gt);
    CHECK(quiet.recall == 0.0);
    CHECK(quiet.precision == 0.0);
    CHECK(quiet.specificity == 1.0);
    CHECK(quiet.f1 == 0.0);

    CHECK_THROWS_AS(confusion(BinMask(3), BinMask(4)), MaskLengthError);
}

TEST_CASE("classification_metrics agrees with naive counting") {
    Rng rng(77);
    for (int c = 0; c < 300; ++c) {
        const double p = rng.uniform(0.0, 1.0);
        const double q = rng.uniform(0.0, 1.0);
        const BinMask pred = random_mask(rng, 1000, p);
        const BinMask gt = random_mask(rng, 1000, q);
        const auto got = classification_metrics(pred, gt);
        const auto want = naive(pred, gt);
        CHECK(got.accuracy == doctest::Approx(want.accuracy).epsilon(1e-12));
        CHECK(got.precision == doctest::Approx(want.precision).epsilon(1e-12));
        CHECK(got.recall == doctest::Approx(want.recall).epsilon(1e-12));
        CHECK(got.specificity == doctest::Approx(want.specificity).epsilon(1e-12));
        CHECK(got.f1 == doctest::Approx(want.f1).epsilon(1e-12));
        CHECK(confusion(pred, gt).total() == 1000);
    }
}

TEST_CASE("avg_event_iou examples") {
    const auto gt = events_of({{0.0, 1.0}});
    CHECK(avg_event_iou(IntervalSet({{0.5, 1.5}, {2.0, 3.0}}), gt) == doctest::Approx(1.0 / 3.0));
    CHECK(avg_event_iou(IntervalSet{}, gt) == 0.0);
    CHECK(avg_event_iou(IntervalSet({{0.0, 1.0}}), gt) == doctest::Approx(1.0));
    CHECK(avg_event_iou(IntervalSet({{0.0, 1.0}}), {}) == 0.0);

    const auto two = events_of({{0.0, 1.0}, {4.0, 5.0}});
    CHECK(avg_event_iou(IntervalSet({{0.0, 1.0}}), two) == doctest::Approx(0.5));
}

TEST_CASE("avg_event_iou is order-invariant and monotone under better matches") {
    Rng rng(3);
    for (int c = 0; c < 300; ++c) {
        std::vector<SoundEvent> gt;
        for (std::size_t i = 0, n = 1 + rng.below(5); i < n; ++i) {
            const double s = rng.uniform(0.0, 9.0);
            gt.push_back({s, s + rng.uniform(0.01, 0.5), EventKind::single_burst});
        }
        std::vector<Interval> pred;
        for (std::size_t i = 0, n = rng.below(5); i < n; ++i) {
            const double s = rng.uniform(0.0, 9.0);
            pred.push_back({s, s + rng.uniform(0.01, 0.5)});
        }
        const double base = avg_event_iou(IntervalSet(pred), gt);
        std::vector<SoundEvent> shuffled = gt;
        rng.shuffle(std::span<SoundEvent>(shuffled));
        CHECK(avg_event_iou(IntervalSet(pred), shuffled) == doctest::Approx(base).epsilon(1e-12));

        // adding an exact copy of one event can only help
        pred.push_back({gt[0].start_s, gt[0].end_s});
        CHECK(avg_event_iou(IntervalSet(pred), gt) >= base - 1e-12);
        CHECK(base >= 0.0);
        CHECK(base <= 1.0);
    }
}

TEST_CASE("totals pool bins and events across recordings") {
    EvaluationTotals a;
    a.add(IntervalSet({{0.1, 0.2}}), events_of({{0.1, 0.2}}), 1260, 630);
    EvaluationTotals b;
    b.add(IntervalSet{}, events_of({{0.5, 0.6}}), 1260, 630);
    a += b;
    CHECK(a.events == 2);
    CHECK(a.counts.total() == 2520);
    const auto row = summarize(a);
    CHECK(row.avg_iou == doctest::Approx(0.5));
    CHECK(row.bins.precision == 1.0);
    CHECK(row.bins.recall == doctest::Approx(63.0 / 126.0));
}

TEST_CASE("interval_iou basics") {
    CHECK(interval_iou({0.5, 1.0}, {1.0, 1.0}) == doctest::Approx(1.0 / 3.0));
    CHECK(interval_iou({0.0, 1.0}, {5.0, 1.0}) == 0.0);
    CHECK(interval_iou({0.0, 1.0}, {0.0, 1.0}) == doctest::Approx(1.0));
}
