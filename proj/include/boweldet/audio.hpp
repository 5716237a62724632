#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace boweldet {

/// Mono audio, samples in [-1, 1].
struct PcmSignal {
    std::vector<double> samples;
    int sample_rate = 0;

    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

/// Decodes a RIFF/WAVE container holding 16- or 24-bit integer PCM with one
/// or two channels. Channels are averaged per frame.
PcmSignal decode_wav(std::span<const std::uint8_t> bytes);
PcmSignal read_wav(const std::filesystem::path& path);

/// Mono integer PCM writer; `bits` is 16 or 24. Samples are scaled by
/// 2^(bits-1), rounded, and clamped to the integer range.
std::vector<std::uint8_t> encode_wav(const PcmSignal& signal, int bits = 24);
void write_wav(const std::filesystem::path& path, const PcmSignal& signal, int bits = 24);

struct LowPassOptions {
    int taps = 101;
};

/// Hamming-windowed sinc FIR taps with unit DC gain. `taps` must be odd.
std::vector<double> design_low_pass(double cutoff_hz, int sample_rate, int taps = 101);

/// Zero-phase low-pass: the symmetric FIR is applied centred on each sample,
/// with reflection padding at both ends, so the output length equals the
/// input length and no group delay is introduced.
PcmSignal low_pass(const PcmSignal& signal, double cutoff_hz, LowPassOptions options = {});

}  // namespace boweldet
