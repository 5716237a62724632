#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "boweldet/audio.hpp"
#include "boweldet/dataset.hpp"

namespace boweldet {

/// Parameters of a synthetic corpus: short band-limited noise bursts over a
/// pink-ish background, annotated as single bursts.
struct SynthSpec {
    int n_recordings = 200;
    double duration_s = 2.0;
    int sample_rate = 44100;
    int bursts_min = 1;
    int bursts_max = 4;
    double burst_min_s = 0.01;
    double burst_max_s = 0.04;
    double band_lo_hz = 60.0;
    double band_hi_hz = 2000.0;
    double snr_min_db = 15.0;
    double snr_max_db = 25.0;
    /// Minimum silence between consecutive bursts and at either end.
    double min_gap_s = 0.05;
    double background_rms = 0.05;
    std::uint64_t seed = 7;
    std::string id_prefix = "synth";

    void validate() const;
};

void to_json(nlohmann::json& j, const SynthSpec& spec);
void from_json(const nlohmann::json& j, SynthSpec& spec);

struct SynthRecording {
    std::string id;
    PcmSignal signal;
    std::vector<SoundEvent> events;
    std::vector<double> snr_db;
};

/// Throws PackingError when bursts_max bursts of burst_max_s cannot fit.
std::vector<SynthRecording> generate(const SynthSpec& spec);
SynthRecording generate_one(const SynthSpec& spec, int index);

/// Writes <id>.wav (24-bit mono) and <id>.txt (annotations) into `dir`.
void write_corpus(const std::filesystem::path& dir, const std::vector<SynthRecording>& corpus);

/// Mean-square power of the part of `samples` inside [lo_hz, hi_hz].
double band_power(const std::vector<double>& samples, int sample_rate, double lo_hz, double hi_hz);

}  // namespace boweldet
