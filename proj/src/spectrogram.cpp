#include "boweldet/spectrogram.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>

#include <fftw3.h>
#include <nlohmann/json.hpp>

#include "boweldet/errors.hpp"
#include "boweldet/hash.hpp"

namespace boweldet {

void SpectrogramConfig::validate(int sample_rate) const {
    if (n_mels <= 0 || time_bins_per_s <= 0 || win_length <= 0 || fft_size <= 0) {
        throw InvalidConfig("spectrogram sizes must be positive");
    }
    if (win_length > fft_size) {
        throw InvalidConfig("win_length exceeds fft_size");
    }
    if (sample_rate <= 0 || sample_rate % time_bins_per_s != 0) {
        throw InvalidConfig("sample rate " + std::to_string(sample_rate) +
                            " is not divisible by time_bins_per_s " + std::to_string(time_bins_per_s));
    }
    if (!(f_min >= 0.0) || !(f_min < f_max) || f_max > sample_rate / 2.0) {
        throw InvalidConfig("require 0 <= f_min < f_max <= sample_rate/2");
    }
    if (!(segment_norm_s > 0.0)) {
        throw InvalidConfig("segment_norm_s must be positive");
    }
}

std::uint64_t SpectrogramConfig::hash() const {
    nlohmann::json j = *this;
    return fnv1a(j.dump());
}

void to_json(nlohmann::json& j, const SpectrogramConfig& cfg) {
    j = nlohmann::json{{"n_mels", cfg.n_mels},
                       {"time_bins_per_s", cfg.time_bins_per_s},
                       {"win_length", cfg.win_length},
                       {"fft_size", cfg.fft_size},
                       {"f_min", cfg.f_min},
                       {"f_max", cfg.f_max},
                       {"segment_norm_s", cfg.segment_norm_s},
                       {"low_pass_hz", cfg.low_pass_hz}};
}

void from_json(const nlohmann::json& j, SpectrogramConfig& cfg) {
    SpectrogramConfig d;
    cfg.n_mels = j.value("n_mels", d.n_mels);
    cfg.time_bins_per_s = j.value("time_bins_per_s", d.time_bins_per_s);
    cfg.win_length = j.value("win_length", d.win_length);
    cfg.fft_size = j.value("fft_size", d.fft_size);
    cfg.f_min = j.value("f_min", d.f_min);
    cfg.f_max = j.value("f_max", d.f_max);
    cfg.segment_norm_s = j.value("segment_norm_s", d.segment_norm_s);
    cfg.low_pass_hz = j.value("low_pass_hz", d.low_pass_hz);
}

double hz_to_mel(double hz) {
    if (!(hz >= 0.0)) {
        throw InvalidFrequency("negative frequency " + std::to_string(hz));
    }
    return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges(const SpectrogramConfig& cfg) {
    const double lo = hz_to_mel(cfg.f_min);
    const double hi = hz_to_mel(cfg.f_max);
    std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels + 2));
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (cfg.n_mels + 1));
    }
    return edges;
}

struct FftwPlan {
    int n = 0;
    double* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;
};

// Planning is not thread-safe in FFTW; execution on fresh arrays is.
const FftwPlan& r2c_plan(int n) {
    static std::mutex mutex;
    static std::vector<std::unique_ptr<FftwPlan>> plans;
    std::lock_guard lock(mutex);
    for (const auto& p : plans) {
        if (p->n == n) {
            return *p;
        }
    }
    auto p = std::make_unique<FftwPlan>();
    p->n = n;
    p->in = fftw_alloc_real(static_cast<std::size_t>(n));
    p->out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    p->plan = fftw_plan_dft_r2c_1d(n, p->in, p->out, FFTW_ESTIMATE);
    plans.push_back(std::move(p));
    return *plans.back();
}

}  // namespace

std::vector<double> mel_center_frequencies(const SpectrogramConfig& cfg) {
    const auto edges = mel_edges(cfg);
    return {edges.begin() + 1, edges.end() - 1};
}

std::vector<double> mel_filterbank(const SpectrogramConfig& cfg, int sample_rate) {
    const auto edges = mel_edges(cfg);
    const int n_bins = cfg.fft_size / 2 + 1;
    std::vector<double> fb(static_cast<std::size_t>(cfg.n_mels) * n_bins, 0.0);
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double lo = edges[m];
        const double centre = edges[m + 1];
        const double hi = edges[m + 2];
        for (int k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / cfg.fft_size;
            const double rise = (f - lo) / (centre - lo);
            const double fall = (hi - f) / (hi - centre);
            fb[static_cast<std::size_t>(m) * n_bins + k] = std::max(0.0, std::min(rise, fall));
        }
    }
    return fb;
}

Spectrogram mel_spectrogram(const PcmSignal& signal, const SpectrogramConfig& cfg) {
    cfg.validate(signal.sample_rate);
    const auto n = static_cast<std::ptrdiff_t>(signal.samples.size());
    if (n < cfg.win_length) {
        throw SignalTooShort("signal has " + std::to_string(n) + " samples; need at least " +
                             std::to_string(cfg.win_length));
    }
    const int hop = cfg.hop_samples(signal.sample_rate);
    const std::size_t rows = static_cast<std::size_t>(n / hop);
    const int n_bins = cfg.fft_size / 2 + 1;
    const auto fb = mel_filterbank(cfg, signal.sample_rate);

    // Only the bins some filter touches contribute.
    int first_bin = n_bins;
    int last_bin = 0;
    for (int m = 0; m < cfg.n_mels; ++m) {
        for (int k = 0; k < n_bins; ++k) {
            if (fb[static_cast<std::size_t>(m) * n_bins + k] > 0.0) {
                first_bin = std::min(first_bin, k);
                last_bin = std::max(last_bin, k + 1);
            }
        }
    }

    std::vector<double> window(static_cast<std::size_t>(cfg.win_length));
    for (int i = 0; i < cfg.win_length; ++i) {
        window[static_cast<std::size_t>(i)] =
            0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / cfg.win_length);
    }

    const FftwPlan& plan = r2c_plan(cfg.fft_size);
    Spectrogram spec;
    spec.rows = rows;
    spec.n_mels = cfg.n_mels;
    spec.time_bins_per_s = cfg.time_bins_per_s;
    spec.values.resize(rows * static_cast<std::size_t>(cfg.n_mels));

#pragma omp parallel
    {
        double* in = fftw_alloc_real(static_cast<std::size_t>(cfg.fft_size));
        fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(n_bins));
        std::vector<double> power(static_cast<std::size_t>(n_bins));
        std::fill(in, in + cfg.fft_size, 0.0);

#pragma omp for schedule(static)
        for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(rows); ++t) {
            const std::ptrdiff_t start = t * hop;
            for (std::ptrdiff_t i = 0; i < cfg.win_length; ++i) {
                std::ptrdiff_t idx = start + i;
                if (idx >= n) {
                    idx = 2 * (n - 1) - idx;  // reflect at the right edge
                }
                in[i] = signal.samples[static_cast<std::size_t>(std::max<std::ptrdiff_t>(idx, 0))] *
                        window[static_cast<std::size_t>(i)];
            }
            fftw_execute_dft_r2c(plan.plan, in, out);
            for (int k = first_bin; k < last_bin; ++k) {
                power[static_cast<std::size_t>(k)] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
            }
            float* dst = spec.values.data() + static_cast<std::size_t>(t) * cfg.n_mels;
            for (int m = 0; m < cfg.n_mels; ++m) {
                const double* w = fb.data() + static_cast<std::size_t>(m) * n_bins;
                double e = 0.0;
                for (int k = first_bin; k < last_bin; ++k) {
                    e += w[k] * power[static_cast<std::size_t>(k)];
                }
                dst[m] = static_cast<float>(std::log10(kLogFloor + e));
            }
        }
        fftw_free(in);
        fftw_free(out);
    }
    return spec;
}

Spectrogram normalize_segments(Spectrogram spec, double segment_s) {
    if (!(segment_s > 0.0)) {
        throw InvalidConfig("segment length must be positive");
    }
    const auto block_rows =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(segment_s * spec.time_bins_per_s)));
    const std::size_t width = static_cast<std::size_t>(spec.n_mels);
    for (std::size_t begin = 0; begin < spec.rows; begin += block_rows) {
        const std::size_t end = std::min(spec.rows, begin + block_rows);
        float* first = spec.values.data() + begin * width;
        float* last = spec.values.data() + end * width;
        const auto [lo_it, hi_it] = std::minmax_element(first, last);
        const double lo = *lo_it;
        const double hi = *hi_it;
        if (hi == lo) {
            std::fill(first, last, 0.0f);
            continue;
        }
        const double range = hi - lo;
        for (float* v = first; v != last; ++v) {
            *v = static_cast<float>(std::clamp((static_cast<double>(*v) - lo) / range, 0.0, 1.0));
        }
    }
    return spec;
}

}  // namespace boweldet
