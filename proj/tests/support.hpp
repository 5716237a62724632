#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>
#include <vector>

#include "boweldet/audio.hpp"
#include "boweldet/rng.hpp"

namespace testing {

// Hand-assembled RIFF/WAVE bytes, independent of encode_wav.
inline std::vector<std::uint8_t> make_wav(const std::vector<std::int32_t>& frames, int channels, int bits,
                                          int sample_rate, std::uint16_t format = 1) {
    std::vector<std::uint8_t> out;
    auto put = [&out](std::uint32_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    auto tag = [&out](const char* s) { out.insert(out.end(), s, s + 4); };
    const int bytes = bits / 8;
    const std::uint32_t data_size = static_cast<std::uint32_t>(frames.size()) * bytes;
    tag("RIFF");
    put(36 + data_size, 4);
    tag("WAVE");
    tag("fmt ");
    put(16, 4);
    put(format, 2);
    put(static_cast<std::uint32_t>(channels), 2);
    put(static_cast<std::uint32_t>(sample_rate), 4);
    put(static_cast<std::uint32_t>(sample_rate * channels * bytes), 4);
    put(static_cast<std::uint32_t>(channels * bytes), 2);
    put(static_cast<std::uint32_t>(bits), 2);
    tag("data");
    put(data_size, 4);
    for (std::int32_t v : frames) put(static_cast<std::uint32_t>(v), bytes);
    return out;
}

inline boweldet::PcmSignal sine(double hz, double seconds, int rate = 44100, double amp = 0.5) {
    boweldet::PcmSignal s;
    s.sample_rate = rate;
    const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
    s.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
    }
    return s;
}

inline boweldet::PcmSignal white_noise(double seconds, std::uint64_t seed, int rate = 44100, double amp = 0.3) {
    boweldet::Rng rng(seed);
    boweldet::PcmSignal s;
    s.sample_rate = rate;
    s.samples.resize(static_cast<std::size_t>(std::llround(seconds * rate)));
    for (auto& v : s.samples) v = amp * rng.uniform(-1.0, 1.0);
    return s;
}

inline double rms(const std::vector<double>& x, std::size_t skip = 0) {
    double acc = 0.0;
    for (std::size_t i = skip; i + skip < x.size(); ++i) acc += x[i] * x[i];
    return std::sqrt(acc / static_cast<double>(x.size() - 2 * skip));
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() / ("boweldet_test_" + name);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

inline std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
