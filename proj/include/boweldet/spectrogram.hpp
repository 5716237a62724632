#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "boweldet/audio.hpp"

namespace boweldet {

struct SpectrogramConfig {
    int n_mels = 64;
    int time_bins_per_s = 630;
    /// Hann analysis window length in samples; sets the time resolution.
    int win_length = 2048;
    /// FFT length; frames shorter than this are zero-padded.
    int fft_size = 2048;
    double f_min = 0.0;
    double f_max = 2000.0;
    double segment_norm_s = 2.0;
    double low_pass_hz = 2000.0;

    /// Throws InvalidConfig when the configuration cannot be used at `sample_rate`.
    void validate(int sample_rate) const;
    int hop_samples(int sample_rate) const { return sample_rate / time_bins_per_s; }
    std::uint64_t hash() const;
};

void to_json(nlohmann::json& j, const SpectrogramConfig& cfg);
void from_json(const nlohmann::json& j, SpectrogramConfig& cfg);

/// Row-major [rows x n_mels] grid; row t covers time t / time_bins_per_s.
struct Spectrogram {
    std::vector<float> values;
    std::size_t rows = 0;
    int n_mels = 0;
    int time_bins_per_s = 0;

    float at(std::size_t t, int m) const { return values[t * static_cast<std::size_t>(n_mels) + m]; }
    std::span<const float> row(std::size_t t) const {
        return {values.data() + t * static_cast<std::size_t>(n_mels), static_cast<std::size_t>(n_mels)};
    }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular unit-peak mel filters spanning [f_min, f_max], row-major
/// [n_mels x (fft_size/2 + 1)].
std::vector<double> mel_filterbank(const SpectrogramConfig& cfg, int sample_rate);
/// Centre frequency of each mel filter in Hz.
std::vector<double> mel_center_frequencies(const SpectrogramConfig& cfg);

inline constexpr double kLogFloor = 1e-10;

/// log10(kLogFloor + mel energy) per frame; frame k starts at sample k*hop.
Spectrogram mel_spectrogram(const PcmSignal& signal, const SpectrogramConfig& cfg);

/// Min-max rescales each consecutive block of `segment_s` seconds to [0, 1].
/// Constant blocks become all zeros.
Spectrogram normalize_segments(Spectrogram spec, double segment_s);

}  // namespace boweldet
