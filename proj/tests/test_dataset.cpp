#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "boweldet/dataset.hpp"
#include "boweldet/errors.hpp"
#include "boweldet/inference.hpp"

using namespace boweldet;

TEST_CASE("parse_annotations basics") {
    const auto one = parse_annotations("0.120,0.150,sb\n");
    REQUIRE(one.size() == 1);
    CHECK(one[0].start_s == 0.120);
    CHECK(one[0].end_s == 0.150);
    CHECK(one[0].kind == EventKind::single_burst);
    CHECK(parse_annotations("").empty());
    CHECK(parse_annotations("\n# only a comment\n\n").empty());

    const auto many = parse_annotations("1.0 1.1 mb\n0.2\t0.3\tdb\n0.5;0.6;whistle\n0.7,0.8\n");
    REQUIRE(many.size() == 4);
    CHECK(many[0].start_s == 0.2);
    CHECK(many[0].kind == EventKind::distinct_burst);
    CHECK(many[1].kind == EventKind::other);
    CHECK(many[2].kind == EventKind::other);
    CHECK(many[3].kind == EventKind::multiple_burst);
}

TEST_CASE("parse_annotations errors carry line numbers") {
    try {
        parse_annotations("0.1,0.2,sb\n0.3,abc,sb\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_annotations("0.3,0.2,sb\n"), InvalidInterval);
    CHECK_THROWS_AS(parse_annotations("0.3,0.3,sb\n"), InvalidInterval);
    CHECK_THROWS_AS(parse_annotations("-0.1,0.3,sb\n"), InvalidInterval);
    CHECK_THROWS_AS(parse_annotations("0.3\n"), ParseError);
}

TEST_CASE("event kind tokens") {
    CHECK(parse_event_kind("sb") == EventKind::single_burst);
    CHECK(parse_event_kind("db") == EventKind::distinct_burst);
    CHECK(parse_event_kind("mb") == EventKind::multiple_burst);
    CHECK(parse_event_kind("crbs") == EventKind::continuous);
    CHECK(parse_event_kind("h") == EventKind::other);
    for (EventKind k : {EventKind::single_burst, EventKind::distinct_burst, EventKind::multiple_burst,
                        EventKind::continuous, EventKind::other}) {
        CHECK(parse_event_kind(to_string(k)) == k);
    }
}

TEST_CASE("format then parse round-trips") {
    std::vector<SoundEvent> ev{{0.1, 0.125, EventKind::single_burst}, {0.5, 1.75, EventKind::continuous}};
    CHECK(parse_annotations(format_annotations(ev)).size() == 2);
    const auto back = parse_annotations(format_annotations(ev));
    for (std::size_t i = 0; i < ev.size(); ++i) {
        CHECK(back[i].start_s == ev[i].start_s);
        CHECK(back[i].end_s == ev[i].end_s);
        CHECK(back[i].kind == ev[i].kind);
    }
}

TEST_CASE("filter_events") {
    EventFilter f;
    std::vector<SoundEvent> ev{{0.0, 1.5, EventKind::multiple_burst},
                               {0.1, 0.13, EventKind::single_burst},
                               {0.2, 0.25, EventKind::continuous},
                               {0.3, 0.6, EventKind::single_burst},
                               {0.7, 0.85, EventKind::distinct_burst}};
    const auto kept = filter_events(ev, f);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].start_s == 0.1);
    CHECK(kept[1].start_s == 0.7);
    CHECK(filter_events(std::vector<SoundEvent>{}, f).empty());
}

namespace {

std::vector<AnnotatedRecording> corpus(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<AnnotatedRecording> recs(n);
    for (std::size_t i = 0; i < n; ++i) {
        recs[i].id = "rec" + std::to_string(1000 + i);
        const std::size_t k = rng.below(12);
        for (std::size_t e = 0; e < k; ++e) recs[i].events.push_back({0.1 * e, 0.1 * e + 0.02});
        recs[i].duration_s = 2.0;
    }
    return recs;
}

std::size_t stratum(std::size_t events) { return events == 0 ? 0 : events <= 3 ? 1 : events <= 7 ? 2 : 3; }

}  // namespace

TEST_CASE("split: 10 recordings gives 7/2/1 with a stratification warning") {
    auto recs = corpus(10, 1);
    for (auto& r : recs) r.events.assign(2, {0.1, 0.12});
    const auto split = split_dataset(recs, {0.7, 0.2, 0.1}, 42);
    CHECK(split.train.size() == 7);
    CHECK(split.valid.size() == 2);
    CHECK(split.test.size() == 1);
    CHECK_FALSE(split.warnings.empty());
}

TEST_CASE("split: partition, determinism, seed sensitivity") {
    const auto recs = corpus(200, 2);
    const auto a = split_dataset(recs, {0.7, 0.2, 0.1}, 42);
    const auto b = split_dataset(recs, {0.7, 0.2, 0.1}, 42);
    CHECK(nlohmann::json(a).dump() == nlohmann::json(b).dump());
    const auto c = split_dataset(recs, {0.7, 0.2, 0.1}, 43);
    CHECK(nlohmann::json(a).dump() != nlohmann::json(c).dump());
    std::set<std::string> seen;
    for (const auto* part : {&a.train, &a.valid, &a.test}) {
        for (const auto& id : *part) CHECK(seen.insert(id).second);
    }
    CHECK(seen.size() == 200);
    CHECK(a.warnings.empty());
    CHECK(nlohmann::json(a).get<DatasetSplit>().train == a.train);
}

TEST_CASE("split: 1605 recordings lands within one of 1123/321/161") {
    const auto recs = corpus(1605, 3);
    const auto s = split_dataset(recs, {0.7, 0.2, 0.1}, 42);
    CHECK(std::abs(static_cast<long>(s.train.size()) - 1123) <= 1);
    CHECK(std::abs(static_cast<long>(s.valid.size()) - 321) <= 1);
    CHECK(std::abs(static_cast<long>(s.test.size()) - 161) <= 1);
}

TEST_CASE("split: every stratum is spread proportionally") {
    const auto recs = corpus(400, 4);
    const auto s = split_dataset(recs, {0.7, 0.2, 0.1}, 7);
    std::map<std::string, std::size_t> events;
    for (const auto& r : recs) events[r.id] = r.events.size();
    std::array<std::array<double, 3>, 4> counts{};
    std::array<double, 4> totals{};
    const std::array<const std::vector<std::string>*, 3> parts{&s.train, &s.valid, &s.test};
    for (std::size_t p = 0; p < 3; ++p) {
        for (const auto& id : *parts[p]) {
            counts[stratum(events[id])][p] += 1;
            totals[stratum(events[id])] += 1;
        }
    }
    const std::array<double, 3> ratios{0.7, 0.2, 0.1};
    for (std::size_t st = 0; st < 4; ++st) {
        for (std::size_t p = 0; p < 3; ++p) {
            CHECK(std::abs(counts[st][p] - ratios[p] * totals[st]) <= 2.0);
        }
    }
}

TEST_CASE("split rejects ratios that do not sum to one") {
    CHECK_THROWS_AS(split_dataset(corpus(20, 1), {0.5, 0.2, 0.1}, 1), InvalidConfig);
    CHECK(split_dataset(std::vector<AnnotatedRecording>{}, {0.7, 0.2, 0.1}, 1).train.empty());
}

TEST_CASE("label_window examples") {
    std::vector<SoundEvent> ev{{0.10, 0.13}};
    auto l = label_window(0.05, 0.2, ev);
    CHECK(l.positive);
    CHECK(l.target_offset == doctest::Approx(-0.175));
    CHECK(l.target_scale == doctest::Approx(0.15));

    std::vector<SoundEvent> centred{{1.0, 1.2}};
    l = label_window(1.0, 0.2, centred);
    CHECK(l.positive);
    CHECK(l.target_offset == doctest::Approx(0.0));
    CHECK(l.target_scale == doctest::Approx(1.0));

    std::vector<SoundEvent> edge{{0.00, 0.04}};
    CHECK_FALSE(label_window(0.03, 0.2, edge).positive);
    CHECK_FALSE(label_window(0.5, 0.2, std::vector<SoundEvent>{}).positive);
}

namespace {

// Exhaustive labeler: every event, overlap arithmetic, best overlap then earliest start.
WindowLabel oracle_label(double ws, double w, const std::vector<SoundEvent>& events) {
    WindowLabel out;
    double best = 0.0;
    double best_start = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const double lo = std::max(ws, events[i].start_s);
        const double hi = std::min(ws + w, events[i].end_s);
        const double ov = hi - lo;
        if (!(ov > 0.0) || ov < 0.5 * (events[i].end_s - events[i].start_s)) continue;
        if (!out.positive || ov > best || (ov == best && events[i].start_s < best_start)) {
            out.positive = true;
            out.event_index = i;
            best = ov;
            best_start = events[i].start_s;
        }
    }
    if (out.positive) {
        const auto& e = events[*out.event_index];
        const double off = ((e.start_s + e.end_s) / 2.0 - (ws + w / 2.0)) / w;
        out.target_offset = std::min(0.5, std::max(-0.5, off));
        out.target_scale = std::min(1.0, (e.end_s - e.start_s) / w);
    }
    return out;
}

}  // namespace

TEST_CASE("label_window agrees with the brute-force labeler on 10^4 cases") {
    Rng rng(99);
    for (int c = 0; c < 10000; ++c) {
        std::vector<SoundEvent> ev;
        const std::size_t n = rng.below(6);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = rng.uniform(0.0, 1.8);
            ev.push_back({s, s + rng.uniform(0.005, 0.3)});
        }
        const double ws = rng.uniform(0.0, 1.8);
        const double w = rng.uniform(0.05, 0.4);
        const auto got = label_window(ws, w, ev);
        const auto want = oracle_label(ws, w, ev);
        REQUIRE(got.positive == want.positive);
        if (want.positive) {
            CHECK(*got.event_index == *want.event_index);
            CHECK(got.target_offset == doctest::Approx(want.target_offset).epsilon(1e-12));
            CHECK(got.target_scale == doctest::Approx(want.target_scale).epsilon(1e-12));
            // Reconstructing from targets recovers >= half of the event.
            const auto iv = refine_interval(ws, w, got.target_offset, got.target_scale, 1e9);
            const auto& e = ev[*got.event_index];
            const double ov = std::min(iv.end_s, e.end_s) - std::max(iv.start_s, e.start_s);
            CHECK(ov >= 0.5 * e.duration() - 1e-12);
        }
    }
}

namespace {

struct ToyCorpus {
    std::vector<std::vector<float>> storage;
    std::vector<RecordingView> views;
};

ToyCorpus toy(std::size_t n, std::uint64_t seed, int mels = 4) {
    Rng rng(seed);
    ToyCorpus c;
    c.storage.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t rows = 1260;
        c.storage[i].resize(rows * static_cast<std::size_t>(mels));
        for (std::size_t k = 0; k < c.storage[i].size(); ++k) c.storage[i][k] = static_cast<float>((k + i) % 97) / 97.0f;
        RecordingView v;
        v.id = "r" + std::to_string(i);
        v.values = c.storage[i];
        v.rows = rows;
        v.n_mels = mels;
        v.time_bins_per_s = 630;
        for (int e = 0; e < 3; ++e) {
            const double s = 0.2 + 0.55 * e + rng.uniform(0.0, 0.2);
            v.events.push_back({s, s + rng.uniform(0.01, 0.04)});
        }
        c.views.push_back(std::move(v));
    }
    return c;
}

}  // namespace

TEST_CASE("extract_window copies the right rows") {
    auto c = toy(1, 1);
    const auto w = extract_window(c.views[0], 10, 126);
    CHECK(w.spec_slice.size() == 126u * 4u);
    CHECK(w.spec_slice[0] == c.storage[0][40]);
    CHECK(w.spec_slice.back() == c.storage[0][(10 + 126) * 4 - 1]);
    CHECK_THROWS_AS(extract_window(c.views[0], 1200, 126), WindowTooLarge);
}

TEST_CASE("sampler: 1:3 ratio over 4000 draws") {
    auto c = toy(5, 2);
    WindowSampler s(c.views, 126, {1, 3}, 42);
    int positives = 0;
    for (int i = 0; i < 4000; ++i) {
        const auto w = s.next();
        positives += w.positive ? 1 : 0;
        const auto& rec = c.views[w.recording];
        const auto label = label_window(w.start_bin / 630.0, 0.2, rec.events);
        CHECK(label.positive == w.positive);
        if (w.positive) {
            CHECK(w.target_offset == doctest::Approx(label.target_offset));
            CHECK(w.target_scale > 0.0f);
            CHECK(w.target_scale <= 1.0f);
            CHECK(w.target_offset >= -0.5f);
            CHECK(w.target_offset <= 0.5f);
        }
    }
    CHECK(std::abs(positives - 1000) <= 60);
}

TEST_CASE("sampler: positives sit within a quarter window of an event centre") {
    auto c = toy(3, 3);
    WindowSampler s(c.views, 126, {1, 0}, 5);
    for (int i = 0; i < 500; ++i) {
        const auto w = s.next();
        REQUIRE(w.positive);
        const double centre = (w.start_bin + 63.0) / 630.0;
        double nearest = 1e9;
        for (const auto& e : c.views[w.recording].events) nearest = std::min(nearest, std::abs(e.center() - centre));
        CHECK(nearest <= 0.25 * 0.2 + 1.0 / 630.0);
    }
}

TEST_CASE("sampler determinism and empty classes") {
    auto c = toy(4, 4);
    WindowSampler a(c.views, 126, {1, 3}, 11);
    WindowSampler b(c.views, 126, {1, 3}, 11);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        const auto y = b.next();
        CHECK(x.recording == y.recording);
        CHECK(x.start_bin == y.start_bin);
        CHECK(x.spec_slice == y.spec_slice);
    }
    auto empty = toy(2, 5);
    for (auto& v : empty.views) v.events.clear();
    CHECK_THROWS_AS(WindowSampler(empty.views, 126, {1, 3}, 1), EmptyClassError);
    CHECK_NOTHROW(WindowSampler(empty.views, 126, {0, 1}, 1));
}

TEST_CASE("augment_gaussian") {
    auto c = toy(1, 6);
    Rng rng(8);
    WindowSample base = extract_window(c.views[0], 0, 126);
    base.positive = true;
    base.target_offset = 0.1f;
    base.target_scale = 0.2f;
    const auto same = augment_gaussian(base, 0.0, rng);
    CHECK(same.spec_slice == base.spec_slice);

    WindowSample half = base;
    half.spec_slice.assign(10000, 0.5f);
    double abs_sum = 0.0;
    std::size_t cells = 0;
    for (int k = 0; k < 20; ++k) {
        const auto noisy = augment_gaussian(half, 0.15, rng);
        CHECK(noisy.positive);
        CHECK(noisy.target_offset == 0.1f);
        CHECK(noisy.target_scale == 0.2f);
        for (float v : noisy.spec_slice) {
            abs_sum += std::abs(v - 0.5);
            ++cells;
        }
    }
    CHECK(abs_sum / static_cast<double>(cells) < 0.12);

    WindowSample ones = base;
    ones.spec_slice.assign(500, 1.0f);
    for (float v : augment_gaussian(ones, 0.5, rng).spec_slice) {
        CHECK(v <= 1.0f);
        CHECK(v >= 0.0f);
    }
}
