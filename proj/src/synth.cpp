#include "boweldet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numbers>

#include <fftw3.h>
#include <nlohmann/json.hpp>

#include "boweldet/errors.hpp"
#include "boweldet/rng.hpp"

namespace boweldet {

void SynthSpec::validate() const {
    if (n_recordings < 0 || !(duration_s > 0.0) || sample_rate <= 0) {
        throw InvalidConfig("synthetic corpus needs a non-negative count, positive duration and rate");
    }
    if (bursts_min < 0 || bursts_max < bursts_min) {
        throw InvalidConfig("require 0 <= bursts_min <= bursts_max");
    }
    if (!(burst_min_s > 0.0) || burst_max_s < burst_min_s) {
        throw InvalidConfig("require 0 < burst_min_s <= burst_max_s");
    }
    if (!(band_lo_hz >= 0.0) || !(band_hi_hz > band_lo_hz) || band_hi_hz > sample_rate / 2.0) {
        throw InvalidConfig("burst band must satisfy 0 <= lo < hi <= sample_rate/2");
    }
    if (snr_max_db < snr_min_db || !(min_gap_s >= 0.0) || !(background_rms > 0.0)) {
        throw InvalidConfig("invalid SNR range, gap or background level");
    }
    const double needed = bursts_max * burst_max_s + (bursts_max + 1) * min_gap_s;
    if (needed > duration_s) {
        throw PackingError(std::to_string(bursts_max) + " bursts of " + std::to_string(burst_max_s) +
                           " s with gaps of " + std::to_string(min_gap_s) + " s do not fit in " +
                           std::to_string(duration_s) + " s");
    }
}

void to_json(nlohmann::json& j, const SynthSpec& s) {
    j = nlohmann::json{{"n_recordings", s.n_recordings}, {"duration_s", s.duration_s},
                       {"sample_rate", s.sample_rate},   {"bursts", {s.bursts_min, s.bursts_max}},
                       {"burst_s", {s.burst_min_s, s.burst_max_s}},
                       {"band_hz", {s.band_lo_hz, s.band_hi_hz}},
                       {"snr_db", {s.snr_min_db, s.snr_max_db}},
                       {"min_gap_s", s.min_gap_s},       {"background_rms", s.background_rms},
                       {"seed", s.seed},                 {"id_prefix", s.id_prefix}};
}

void from_json(const nlohmann::json& j, SynthSpec& s) {
    SynthSpec d;
    s.n_recordings = j.value("n_recordings", d.n_recordings);
    s.duration_s = j.value("duration_s", d.duration_s);
    s.sample_rate = j.value("sample_rate", d.sample_rate);
    if (j.contains("bursts")) {
        s.bursts_min = j["bursts"].at(0).get<int>();
        s.bursts_max = j["bursts"].at(1).get<int>();
    }
    if (j.contains("burst_s")) {
        s.burst_min_s = j["burst_s"].at(0).get<double>();
        s.burst_max_s = j["burst_s"].at(1).get<double>();
    }
    if (j.contains("band_hz")) {
        s.band_lo_hz = j["band_hz"].at(0).get<double>();
        s.band_hi_hz = j["band_hz"].at(1).get<double>();
    }
    if (j.contains("snr_db")) {
        s.snr_min_db = j["snr_db"].at(0).get<double>();
        s.snr_max_db = j["snr_db"].at(1).get<double>();
    }
    s.min_gap_s = j.value("min_gap_s", d.min_gap_s);
    s.background_rms = j.value("background_rms", d.background_rms);
    s.seed = j.value("seed", d.seed);
    s.id_prefix = j.value("id_prefix", d.id_prefix);
}

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct Spectrum {
    std::vector<double> re;
    std::vector<double> im;
};

Spectrum forward_fft(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    const int bins = n / 2 + 1;
    double* in = fftw_alloc_real(static_cast<std::size_t>(n));
    fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(bins));
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    }
    std::copy(x.begin(), x.end(), in);
    fftw_execute(plan);
    Spectrum s{std::vector<double>(static_cast<std::size_t>(bins)), std::vector<double>(static_cast<std::size_t>(bins))};
    for (int k = 0; k < bins; ++k) {
        s.re[static_cast<std::size_t>(k)] = out[k][0];
        s.im[static_cast<std::size_t>(k)] = out[k][1];
    }
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return s;
}

std::vector<double> inverse_fft(const Spectrum& s, int n) {
    const int bins = n / 2 + 1;
    fftw_complex* in = fftw_alloc_complex(static_cast<std::size_t>(bins));
    double* out = fftw_alloc_real(static_cast<std::size_t>(n));
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
    }
    for (int k = 0; k < bins; ++k) {
        in[k][0] = s.re[static_cast<std::size_t>(k)];
        in[k][1] = s.im[static_cast<std::size_t>(k)];
    }
    fftw_execute(plan);
    std::vector<double> x(out, out + n);
    for (double& v : x) v /= n;
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return x;
}

// Paul Kellet's economy pink filter over white noise.
std::vector<double> pink_noise(std::size_t n, Rng& rng) {
    std::vector<double> out(n);
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = rng.normal();
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        out[i] = b0 + b1 + b2 + w * 0.1848;
    }
    return out;
}

std::vector<double> band_noise(std::size_t n, int sample_rate, double lo_hz, double hi_hz, Rng& rng) {
    const int len = static_cast<int>(n);
    const int bins = len / 2 + 1;
    Spectrum s{std::vector<double>(static_cast<std::size_t>(bins), 0.0),
               std::vector<double>(static_cast<std::size_t>(bins), 0.0)};
    for (int k = 1; k < bins; ++k) {
        const double f = static_cast<double>(k) * sample_rate / len;
        if (f >= lo_hz && f <= hi_hz) {
            s.re[static_cast<std::size_t>(k)] = rng.normal();
            s.im[static_cast<std::size_t>(k)] = rng.normal();
        }
    }
    return inverse_fft(s, len);
}

double mean_square(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

}  // namespace

double band_power(const std::vector<double>& samples, int sample_rate, double lo_hz, double hi_hz) {
    const int n = static_cast<int>(samples.size());
    if (n < 2) return 0.0;
    const Spectrum s = forward_fft(samples);
    double acc = 0.0;
    for (std::size_t k = 1; k < s.re.size(); ++k) {
        const double f = static_cast<double>(k) * sample_rate / n;
        if (f < lo_hz || f > hi_hz) continue;
        const double mag2 = s.re[k] * s.re[k] + s.im[k] * s.im[k];
        const bool nyquist = n % 2 == 0 && static_cast<int>(k) == n / 2;
        acc += nyquist ? mag2 : 2.0 * mag2;
    }
    return acc / (static_cast<double>(n) * n);
}

SynthRecording generate_one(const SynthSpec& spec, int index) {
    spec.validate();
    // Independent stream per recording so recordings can be generated in parallel.
    Rng rng(spec.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(index) + 1);

    SynthRecording rec;
    char id[64];
    std::snprintf(id, sizeof id, "%s_%04d", spec.id_prefix.c_str(), index);
    rec.id = id;
    const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate));
    rec.signal.sample_rate = spec.sample_rate;

    std::vector<double> x = pink_noise(n, rng);
    const double scale = spec.background_rms / std::sqrt(std::max(mean_square(x), 1e-30));
    for (double& v : x) v *= scale;
    const double background_band = band_power(x, spec.sample_rate, spec.band_lo_hz, spec.band_hi_hz);

    const int bursts = spec.bursts_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.bursts_max - spec.bursts_min + 1)));
    std::vector<double> durations(static_cast<std::size_t>(bursts));
    double total = 0.0;
    for (double& d : durations) {
        d = rng.uniform(spec.burst_min_s, spec.burst_max_s);
        total += d;
    }
    const double free_s = spec.duration_s - total - (bursts + 1) * spec.min_gap_s;
    std::vector<double> slack(static_cast<std::size_t>(bursts));
    for (double& u : slack) u = rng.uniform(0.0, std::max(free_s, 0.0));
    std::sort(slack.begin(), slack.end());

    double cursor = spec.min_gap_s;
    for (int b = 0; b < bursts; ++b) {
        const double start_s = cursor + slack[static_cast<std::size_t>(b)];
        const auto start = static_cast<std::size_t>(std::llround(start_s * spec.sample_rate));
        const auto len = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(durations[static_cast<std::size_t>(b)] * spec.sample_rate)));

        const double lo = rng.uniform(spec.band_lo_hz, std::max(spec.band_lo_hz, spec.band_hi_hz - 400.0));
        const double hi = rng.uniform(std::min(lo + 300.0, spec.band_hi_hz), spec.band_hi_hz);
        std::vector<double> burst = band_noise(len, spec.sample_rate, lo, hi, rng);
        for (std::size_t i = 0; i < len; ++i) {
            burst[i] *= 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len - 1));
        }
        const double snr = rng.uniform(spec.snr_min_db, spec.snr_max_db);
        const double gain = std::sqrt(background_band * std::pow(10.0, snr / 10.0) / std::max(mean_square(burst), 1e-30));
        for (std::size_t i = 0; i < len && start + i < n; ++i) {
            x[start + i] += gain * burst[i];
        }

        SoundEvent ev;
        ev.start_s = static_cast<double>(start) / spec.sample_rate;
        ev.end_s = static_cast<double>(start + len) / spec.sample_rate;
        ev.kind = EventKind::single_burst;
        rec.events.push_back(ev);
        rec.snr_db.push_back(snr);
        cursor += durations[static_cast<std::size_t>(b)] + spec.min_gap_s;
    }

    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > 0.9) {
        for (double& v : x) v *= 0.9 / peak;
    }
    rec.signal.samples = std::move(x);
    return rec;
}

std::vector<SynthRecording> generate(const SynthSpec& spec) {
    spec.validate();
    std::vector<SynthRecording> out(static_cast<std::size_t>(spec.n_recordings));
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < spec.n_recordings; ++i) {
        out[static_cast<std::size_t>(i)] = generate_one(spec, i);
    }
    return out;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<SynthRecording>& corpus) {
    std::filesystem::create_directories(dir);
    for (const auto& rec : corpus) {
        write_wav(dir / (rec.id + ".wav"), rec.signal, 24);
        std::ofstream ann(dir / (rec.id + ".txt"));
        ann << format_annotations(rec.events);
    }
}

}  // namespace boweldet
