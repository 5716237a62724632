#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "boweldet/errors.hpp"
#include "boweldet/inference.hpp"
#include "boweldet/rng.hpp"

using namespace boweldet;

namespace {

// Network that ignores its input: zero weights, the given head biases.
Network constant_classifier(float bias) {
    Network net({1, 126, 64}, {LayerSpec::flatten(), LayerSpec::dense(1), LayerSpec::sigmoid()}, 1);
    auto params = net.parameters();
    std::fill(params[0]->value.values.begin(), params[0]->value.values.end(), 0.0f);
    params[1]->value.values[0] = bias;
    return net;
}

Network constant_regressor(float offset_logit, float scale_logit) {
    Network net({1, 126, 64}, {LayerSpec::flatten(), LayerSpec::dense(2), LayerSpec::interval_head()}, 1);
    auto params = net.parameters();
    std::fill(params[0]->value.values.begin(), params[0]->value.values.end(), 0.0f);
    params[1]->value.values = {offset_logit, scale_logit};
    return net;
}

struct Recording {
    std::vector<float> values;
    RecordingView view;
};

Recording flat_recording(std::size_t rows) {
    Recording r;
    r.values.assign(rows * 64, 0.5f);
    r.view.id = "r";
    r.view.rows = rows;
    r.view.n_mels = 64;
    r.view.time_bins_per_s = 630;
    r.view.values = r.values;
    return r;
}

// Per-bin brute force: bin t is covered when its centre lies in [start, end).
std::vector<bool> oracle_mask(const std::vector<Detection>& dets, double needed, std::size_t n, int rate) {
    std::vector<bool> mask(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double c = (static_cast<double>(t) + 0.5) / rate;
        double acc = 0.0;
        for (const auto& d : dets) {
            if (c >= d.interval.start_s && c < d.interval.end_s) acc += d.confidence;
        }
        mask[t] = acc > 0.0 && acc >= needed;
    }
    return mask;
}

std::vector<bool> set_mask(const IntervalSet& s, std::size_t n, int rate) {
    std::vector<bool> mask(n);
    for (const auto& iv : s) {
        const auto [a, b] = covered_bins(iv, rate, n);
        for (std::size_t t = a; t < b; ++t) mask[t] = true;
    }
    return mask;
}

std::vector<Detection> random_detections(Rng& rng, std::size_t n_bins, int rate) {
    std::vector<Detection> out(rng.below(12));
    const double end = static_cast<double>(n_bins) / rate;
    for (auto& d : out) {
        const double a = rng.uniform(0.0, end);
        const double len = rng.uniform(0.001, 0.3);
        d.interval = {a, std::min(end, a + len)};
        d.confidence = rng.uniform(0.01, 1.0);
    }
    return out;
}

bool subset(const std::vector<bool>& a, const std::vector<bool>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] && !b[i]) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("window geometry") {
    CHECK(window_bins(0.2, 630) == 126);
    CHECK(window_stride(126, 10) == 13);
    CHECK(window_stride(126, 1) == 126);
    CHECK(window_stride(126, 126) == 1);
    CHECK(window_stride(126, 500) == 1);
}

TEST_CASE("slide_windows examples") {
    const auto tiles = slide_windows(1260, 0.2, 1, 630);
    REQUIRE(tiles.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(tiles[i] == 126 * i);

    const auto ten = slide_windows(1260, 0.2, 10, 630);
    CHECK(ten.size() == 88);
    CHECK(ten[1] == 13);
    CHECK(ten.back() + 126 <= 1260);
    CHECK(ten.back() + 13 + 126 > 1260);

    const auto dense = slide_windows(1260, 0.2, 126, 630);
    CHECK(dense.size() == 1260 - 126 + 1);
    CHECK(dense[5] == 5);

    CHECK(slide_windows(126, 0.2, 10, 630).size() == 1);
    CHECK_THROWS_AS(slide_windows(125, 0.2, 1, 630), WindowTooLarge);
}

TEST_CASE("refine_interval examples") {
    const Interval whole = refine_interval(1.0, 0.2, 0.0, 1.0, 10.0);
    CHECK(whole.start_s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(whole.end_s == doctest::Approx(1.2).epsilon(1e-12));

    // inverse of labelling event [0.10, 0.13] in window [0.05, 0.25]
    const Interval inner = refine_interval(0.05, 0.2, -0.175, 0.15, 10.0);
    CHECK(inner.start_s == doctest::Approx(0.100).epsilon(1e-12));
    CHECK(inner.end_s == doctest::Approx(0.130).epsilon(1e-12));
    const Interval shifted = refine_interval(1.0, 0.2, -0.175, 0.15, 10.0);
    CHECK(shifted.start_s == doctest::Approx(1.050).epsilon(1e-12));
    CHECK(shifted.end_s == doctest::Approx(1.080).epsilon(1e-12));

    const Interval right = refine_interval(0.0, 0.2, 0.25, 0.5, 10.0);
    CHECK(right.start_s == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(right.end_s == doctest::Approx(0.20).epsilon(1e-12));

    // clipped to the recording
    const Interval clipped = refine_interval(9.9, 0.2, 0.5, 1.0, 10.0);
    CHECK(clipped.end_s == 10.0);
    CHECK(refine_interval(0.0, 0.2, -0.5, 1.0, 10.0).start_s == 0.0);
}

TEST_CASE("detect with stub networks") {
    const auto rec = flat_recording(1260);
    PredictConfig cfg;

    const Detector silent{constant_classifier(-30.0f), constant_regressor(0.0f, 30.0f), "h"};
    CHECK(detect(silent, rec.view, "h", cfg).empty());

    const Detector always{constant_classifier(30.0f), constant_regressor(0.0f, 30.0f), "h"};
    const auto dets = detect(always, rec.view, "h", cfg);
    const auto starts = slide_windows(1260, 0.2, 10, 630);
    REQUIRE(dets.size() == starts.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
        CHECK(dets[i].confidence == doctest::Approx(1.0));
        CHECK(dets[i].interval.start_s == doctest::Approx(starts[i] / 630.0).epsilon(1e-6));
        CHECK(dets[i].interval.end_s == doctest::Approx(starts[i] / 630.0 + 0.2).epsilon(1e-6));
    }

    CHECK_THROWS_AS(detect(always, rec.view, "other", cfg), IncompatibleModel);
}

TEST_CASE("threshold is strict") {
    const auto rec = flat_recording(300);
    // sigmoid(0) = 0.5 exactly
    const Detector half{constant_classifier(0.0f), constant_regressor(0.0f, 30.0f), "h"};
    PredictConfig cfg;
    cfg.threshold = 0.5;
    CHECK(detect(half, rec.view, "h", cfg).empty());
    cfg.threshold = 0.49;
    CHECK(!detect(half, rec.view, "h", cfg).empty());
}

TEST_CASE("aggregate examples") {
    PredictConfig cfg;  // vote threshold 0.1 * 10 = 1.0
    const std::vector<Detection> one{{{0.5, 0.7}, 1.0}};
    const auto s = aggregate(one, cfg, 1260, 630);
    REQUIRE(s.size() == 1);
    CHECK(s.intervals()[0].start_s == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(s.intervals()[0].end_s == doctest::Approx(0.7).epsilon(1e-9));

    const std::vector<Detection> two{{{0.5, 0.7}, 0.4}, {{0.5, 0.7}, 0.4}};
    CHECK(aggregate(two, cfg, 1260, 630).empty());
    CHECK(aggregate({}, cfg, 1260, 630).empty());
}

TEST_CASE("aggregate equals the per-bin oracle on random cases") {
    Rng rng(2024);
    for (int c = 0; c < 1000; ++c) {
        const std::size_t n = 100 + rng.below(700);
        const int rate = rng.bernoulli(0.5) ? 630 : 100;
        PredictConfig cfg;
        cfg.overlap = 1 + static_cast<int>(rng.below(12));
        cfg.vote_fraction = rng.uniform(0.01, 1.0);
        const auto dets = random_detections(rng, n, rate);
        const auto got = set_mask(aggregate(dets, cfg, n, rate), n, rate);
        CHECK(got == oracle_mask(dets, cfg.vote_threshold(), n, rate));
    }
}

TEST_CASE("positive bins shrink as threshold or vote fraction grow") {
    Rng rng(5);
    for (int c = 0; c < 200; ++c) {
        // synthetic scores stand in for network output
        WindowScores scores;
        scores.starts = slide_windows(1260, 0.2, 10, 630);
        scores.window_rows = 126;
        scores.time_bins_per_s = 630;
        scores.recording_end_s = 2.0;
        for (std::size_t i = 0; i < scores.starts.size(); ++i) {
            scores.probability.push_back(static_cast<float>(rng.uniform()));
            scores.offset.push_back(static_cast<float>(rng.uniform(-0.5, 0.5)));
            scores.scale.push_back(static_cast<float>(rng.uniform(0.05, 1.0)));
            scores.regressed.push_back(true);
        }
        PredictConfig cfg;
        cfg.vote_fraction = rng.uniform(0.02, 0.5);
        const double t1 = rng.uniform(0.05, 0.9);
        const double t2 = rng.uniform(t1, 0.95);
        const auto lo = set_mask(aggregate(detections_from_scores(scores, t1), cfg, 1260, 630), 1260, 630);
        const auto hi = set_mask(aggregate(detections_from_scores(scores, t2), cfg, 1260, 630), 1260, 630);
        CHECK(detections_from_scores(scores, t2).size() <= detections_from_scores(scores, t1).size());
        CHECK(subset(hi, lo));

        PredictConfig stricter = cfg;
        stricter.vote_fraction = std::min(1.0, cfg.vote_fraction + rng.uniform(0.0, 0.5));
        const auto dets = detections_from_scores(scores, t1);
        CHECK(subset(set_mask(aggregate(dets, stricter, 1260, 630), 1260, 630), lo));
    }
}

TEST_CASE("meta_combine examples and laws") {
    const IntervalSet a({{0.0, 2.0}});
    const IntervalSet b({{1.0, 3.0}});
    CHECK(meta_combine(MetaMode::intersect, a, b) == IntervalSet({{1.0, 2.0}}));
    CHECK(meta_combine(MetaMode::sum, a, b) == IntervalSet({{0.0, 3.0}}));
    CHECK(meta_combine(MetaMode::intersect, a, a) == a);
    CHECK(meta_combine(MetaMode::sum, a, a) == a);

    const IntervalSet c({{5.0, 6.0}});
    CHECK(meta_combine(MetaMode::intersect, a, c).empty());
    CHECK(meta_combine(MetaMode::sum, a, c) == IntervalSet({{0.0, 2.0}, {5.0, 6.0}}));

    Rng rng(9);
    for (int k = 0; k < 300; ++k) {
        auto random_set = [&] {
            std::vector<Interval> v(rng.below(6));
            for (auto& iv : v) {
                const double s = rng.uniform(0.0, 10.0);
                iv = {s, s + rng.uniform(0.01, 2.0)};
            }
            return IntervalSet(v);
        };
        const auto x = random_set();
        const auto y = random_set();
        const auto inter = meta_combine(MetaMode::intersect, x, y);
        const auto uni = meta_combine(MetaMode::sum, x, y);
        CHECK(inter == meta_combine(MetaMode::intersect, y, x));
        CHECK(uni == meta_combine(MetaMode::sum, y, x));
        const auto mx = set_mask(x, 700, 63);
        CHECK(subset(set_mask(inter, 700, 63), mx));
        CHECK(subset(mx, set_mask(uni, 700, 63)));
    }
    CHECK_THROWS_AS(parse_meta_mode("xor"), InvalidConfig);
}

TEST_CASE("IntervalSet canonical form") {
    const IntervalSet s({{3.0, 4.0}, {0.0, 1.0}, {1.0, 2.0}, {5.0, 5.0}, {3.5, 3.8}});
    REQUIRE(s.size() == 2);
    CHECK(s.intervals()[0] == Interval{0.0, 2.0});
    CHECK(s.intervals()[1] == Interval{3.0, 4.0});
}

TEST_CASE("predict config validation") {
    PredictConfig cfg;
    cfg.threshold = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    cfg = PredictConfig{};
    cfg.vote_fraction = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    cfg = PredictConfig{};
    cfg.overlap = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
}
