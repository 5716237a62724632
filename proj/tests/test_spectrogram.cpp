#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "boweldet/errors.hpp"
#include "boweldet/spectrogram.hpp"
#include "support.hpp"

using namespace boweldet;

TEST_CASE("hz_to_mel closed forms") {
    CHECK(hz_to_mel(0.0) == 0.0);
    CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
    CHECK(hz_to_mel(700.0) == doctest::Approx(781.17).epsilon(1e-4));
    CHECK(hz_to_mel(1000.0) == doctest::Approx(999.99).epsilon(1e-4));
    CHECK_THROWS_AS(hz_to_mel(-1.0), InvalidFrequency);
    double prev = -1.0;
    for (double f = 0.0; f < 22050.0; f += 37.0) {
        const double m = hz_to_mel(f);
        CHECK(m > prev);
        CHECK(mel_to_hz(m) == doctest::Approx(f).epsilon(1e-9));
        prev = m;
    }
}

TEST_CASE("default config validates at 44.1 kHz only when the hop divides") {
    SpectrogramConfig cfg;
    CHECK(cfg.hop_samples(44100) == 70);
    CHECK_NOTHROW(cfg.validate(44100));
    CHECK_THROWS_AS(cfg.validate(48000), InvalidConfig);
    SpectrogramConfig bad = cfg;
    bad.f_max = 30000.0;
    CHECK_THROWS_AS(bad.validate(44100), InvalidConfig);
    bad = cfg;
    bad.f_min = 2000.0;
    CHECK_THROWS_AS(bad.validate(44100), InvalidConfig);
}

TEST_CASE("2 s at 44.1 kHz gives 1260 x 64") {
    const auto s = testing::white_noise(2.0, 5);
    const auto spec = mel_spectrogram(s, SpectrogramConfig{});
    CHECK(spec.rows == 1260);
    CHECK(spec.n_mels == 64);
    CHECK(spec.values.size() == 1260u * 64u);
}

TEST_CASE("shape law: rows = floor(duration * rate)") {
    for (double seconds : {0.5, 1.0, 1.37, 3.0}) {
        const auto s = testing::white_noise(seconds, 9);
        const auto spec = mel_spectrogram(s, SpectrogramConfig{});
        CHECK(spec.rows == s.samples.size() / 70);
    }
}

TEST_CASE("440 Hz sine peaks in the mel bin whose centre is nearest") {
    SpectrogramConfig cfg;
    const auto spec = mel_spectrogram(testing::sine(440.0, 2.0), cfg);
    std::vector<double> mean(64, 0.0);
    for (std::size_t t = 0; t < spec.rows; ++t) {
        for (int m = 0; m < 64; ++m) mean[static_cast<std::size_t>(m)] += spec.at(t, m);
    }
    const auto peak = std::max_element(mean.begin(), mean.end()) - mean.begin();
    const auto centres = mel_center_frequencies(cfg);
    std::size_t nearest = 0;
    for (std::size_t m = 0; m < centres.size(); ++m) {
        if (std::abs(centres[m] - 440.0) < std::abs(centres[nearest] - 440.0)) nearest = m;
    }
    CHECK(static_cast<std::size_t>(peak) == nearest);
}

TEST_CASE("silence gives identical rows at log10(eps)") {
    PcmSignal z;
    z.sample_rate = 44100;
    z.samples.assign(44100, 0.0);
    const auto spec = mel_spectrogram(z, SpectrogramConfig{});
    for (float v : spec.values) CHECK(v == static_cast<float>(std::log10(kLogFloor)));
}

TEST_CASE("too short and invalid config") {
    PcmSignal s = testing::sine(440, 0.005);
    CHECK_THROWS_AS(mel_spectrogram(s, SpectrogramConfig{}), SignalTooShort);
    SpectrogramConfig cfg;
    cfg.time_bins_per_s = 641;
    CHECK_THROWS_AS(mel_spectrogram(testing::sine(440, 1.0), cfg), InvalidConfig);
}

TEST_CASE("filterbank: positive rows, bounded peaks, interior partition of unity") {
    SpectrogramConfig cfg;
    const auto fb = mel_filterbank(cfg, 44100);
    const std::size_t bins = static_cast<std::size_t>(cfg.fft_size / 2 + 1);
    REQUIRE(fb.size() == 64 * bins);
    for (std::size_t m = 0; m < 64; ++m) {
        double sum = 0.0;
        double peak = 0.0;
        for (std::size_t k = 0; k < bins; ++k) {
            sum += fb[m * bins + k];
            peak = std::max(peak, fb[m * bins + k]);
        }
        CHECK(sum > 0.0);
        CHECK(peak <= 1.0);
        CHECK(peak > 0.0);
    }
    const auto centres = mel_center_frequencies(cfg);
    const double df = 44100.0 / cfg.fft_size;
    for (std::size_t k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * df;
        if (f < centres.front() || f > centres.back()) continue;
        double col = 0.0;
        for (std::size_t m = 0; m < 64; ++m) col += fb[m * bins + k];
        CHECK(col == doctest::Approx(1.0).epsilon(1e-9));
    }
}

namespace {

Spectrogram grid(std::size_t rows, int mels, int rate, std::vector<float> values) {
    Spectrogram s;
    s.rows = rows;
    s.n_mels = mels;
    s.time_bins_per_s = rate;
    s.values = std::move(values);
    return s;
}

}  // namespace

TEST_CASE("normalize_segments: midpoint, constant block, errors") {
    auto s = normalize_segments(grid(1, 3, 10, {-8.0f, -5.0f, -2.0f}), 1.0);
    CHECK(s.values[0] == 0.0f);
    CHECK(s.values[1] == doctest::Approx(0.5));
    CHECK(s.values[2] == 1.0f);
    auto c = normalize_segments(grid(2, 2, 10, {3.0f, 3.0f, 3.0f, 3.0f}), 1.0);
    for (float v : c.values) CHECK(v == 0.0f);
    CHECK_THROWS_AS(normalize_segments(grid(1, 1, 10, {1.0f}), 0.0), InvalidConfig);
}

TEST_CASE("4 s spectrogram normalizes as two independent 1260-row blocks") {
    const auto raw = mel_spectrogram(testing::white_noise(4.0, 11), SpectrogramConfig{});
    REQUIRE(raw.rows == 2520);
    const auto norm = normalize_segments(raw, 2.0);
    for (std::size_t block = 0; block < 2; ++block) {
        const auto first = norm.values.begin() + static_cast<std::ptrdiff_t>(block * 1260 * 64);
        const auto [lo, hi] = std::minmax_element(first, first + 1260 * 64);
        CHECK(*lo == 0.0f);
        CHECK(*hi == 1.0f);
    }
    for (float v : norm.values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    const auto twice = normalize_segments(norm, 2.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < norm.values.size(); ++i) {
        worst = std::max(worst, static_cast<double>(std::abs(twice.values[i] - norm.values[i])));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("normalized output is invariant to input gain on broadband noise") {
    const auto x = testing::white_noise(2.0, 21);
    auto x2 = x;
    for (auto& v : x2.samples) v *= 2.0;
    SpectrogramConfig cfg;
    const auto a = normalize_segments(mel_spectrogram(x, cfg), 2.0);
    const auto b = normalize_segments(mel_spectrogram(x2, cfg), 2.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        worst = std::max(worst, static_cast<double>(std::abs(a.values[i] - b.values[i])));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("config hash tracks every field and JSON round-trips") {
    SpectrogramConfig a;
    SpectrogramConfig b;
    CHECK(a.hash() == b.hash());
    b.n_mels = 126;
    CHECK(a.hash() != b.hash());
    b = a;
    b.low_pass_hz = 1500.0;
    CHECK(a.hash() != b.hash());
    nlohmann::json j = a;
    CHECK(j.get<SpectrogramConfig>().hash() == a.hash());
}
