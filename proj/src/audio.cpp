#include "boweldet/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "boweldet/errors.hpp"

namespace boweldet {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    }
}

struct FmtChunk {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t block_align = 0;
    std::uint16_t bits = 0;
};

}  // namespace

PcmSignal decode_wav(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw DecodeError("not a RIFF/WAVE container");
    }

    FmtChunk fmt;
    bool have_fmt = false;
    const std::uint8_t* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* chunk = bytes.data() + pos;
        const std::uint32_t size = read_u32(chunk + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16 || body + size > bytes.size()) {
                throw DecodeError("truncated fmt chunk");
            }
            const std::uint8_t* f = bytes.data() + body;
            fmt.format = read_u16(f);
            fmt.channels = read_u16(f + 2);
            fmt.sample_rate = read_u32(f + 4);
            fmt.block_align = read_u16(f + 12);
            fmt.bits = read_u16(f + 14);
            if (fmt.format == kFormatExtensible && size >= 40) {
                // Sub-format GUID starts at offset 24; its first two bytes carry the codec.
                fmt.format = read_u16(f + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes.data() + body;
            // Streams written before their length was known may overstate it.
            data_size = std::min<std::size_t>(size, bytes.size() - body);
            break;
        }
        pos = body + size + (size & 1u);
    }

    if (!have_fmt) {
        throw DecodeError("missing fmt chunk");
    }
    if (data == nullptr) {
        throw DecodeError("missing data chunk");
    }
    if (fmt.format != kFormatPcm) {
        throw UnsupportedFormat("unsupported WAV codec " + std::to_string(fmt.format) +
                                " (only integer PCM)");
    }
    if (fmt.bits != 16 && fmt.bits != 24) {
        throw UnsupportedFormat("unsupported bit depth " + std::to_string(fmt.bits));
    }
    if (fmt.channels < 1 || fmt.channels > 2) {
        throw UnsupportedFormat("unsupported channel count " + std::to_string(fmt.channels));
    }
    if (fmt.sample_rate == 0) {
        throw DecodeError("zero sample rate");
    }
    const std::size_t bytes_per_sample = fmt.bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
    if (fmt.block_align != frame_bytes) {
        throw DecodeError("block alignment does not match channels and bit depth");
    }

    const std::size_t frames = data_size / frame_bytes;
    const double scale = 1.0 / static_cast<double>(1u << (fmt.bits - 1));

    PcmSignal out;
    out.sample_rate = static_cast<int>(fmt.sample_rate);
    out.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const std::uint8_t* frame = data + i * frame_bytes;
        double acc = 0.0;
        for (std::size_t c = 0; c < fmt.channels; ++c) {
            const std::uint8_t* s = frame + c * bytes_per_sample;
            std::int32_t v;
            if (fmt.bits == 16) {
                v = static_cast<std::int16_t>(read_u16(s));
            } else {
                // Sign-extend the packed little-endian 24-bit value.
                const std::uint32_t raw = static_cast<std::uint32_t>(s[0]) |
                                          (static_cast<std::uint32_t>(s[1]) << 8) |
                                          (static_cast<std::uint32_t>(s[2]) << 16);
                v = static_cast<std::int32_t>(raw << 8) >> 8;
            }
            acc += static_cast<double>(v) * scale;
        }
        out.samples[i] = acc / static_cast<double>(fmt.channels);
    }
    return out;
}

PcmSignal read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DecodeError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const PcmSignal& signal, int bits) {
    if (bits != 16 && bits != 24) {
        throw UnsupportedFormat("encode_wav supports 16 or 24 bits");
    }
    if (signal.sample_rate <= 0) {
        throw InvalidConfig("sample rate must be positive");
    }
    const std::uint32_t bytes_per_sample = static_cast<std::uint32_t>(bits / 8);
    const auto data_size = static_cast<std::uint32_t>(signal.samples.size() * bytes_per_sample);
    const double full_scale = static_cast<double>(1u << (bits - 1));
    const double max_code = full_scale - 1.0;

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_size + 1);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_size + (data_size & 1u));
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, kFormatPcm);
    put_u16(out, 1);
    put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * bytes_per_sample);
    put_u16(out, static_cast<std::uint16_t>(bytes_per_sample));
    put_u16(out, static_cast<std::uint16_t>(bits));
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_size);

    for (double s : signal.samples) {
        const double code = std::clamp(std::round(s * full_scale), -full_scale, max_code);
        const auto v = static_cast<std::int32_t>(code);
        out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
        if (bits == 24) {
            out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
        }
    }
    if (data_size & 1u) {
        out.push_back(0);
    }
    return out;
}

void write_wav(const std::filesystem::path& path, const PcmSignal& signal, int bits) {
    const auto bytes = encode_wav(signal, bits);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> design_low_pass(double cutoff_hz, int sample_rate, int taps) {
    if (sample_rate <= 0 || !(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate / 2.0)) {
        throw InvalidCutoff("cutoff " + std::to_string(cutoff_hz) + " Hz outside (0, " +
                            std::to_string(sample_rate / 2.0) + ")");
    }
    if (taps < 1 || taps % 2 == 0) {
        throw InvalidConfig("FIR tap count must be odd and positive");
    }
    const double fc = cutoff_hz / sample_rate;
    const int half = taps / 2;
    std::vector<double> h(static_cast<std::size_t>(taps));
    double sum = 0.0;
    for (int i = 0; i < taps; ++i) {
        const int n = i - half;
        const double sinc = n == 0 ? 2.0 * fc
                                   : std::sin(2.0 * std::numbers::pi * fc * n) / (std::numbers::pi * n);
        const double window =
            taps == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (taps - 1));
        h[static_cast<std::size_t>(i)] = sinc * window;
        sum += h[static_cast<std::size_t>(i)];
    }
    for (double& v : h) {
        v /= sum;
    }
    return h;
}

PcmSignal low_pass(const PcmSignal& signal, double cutoff_hz, LowPassOptions options) {
    const std::vector<double> h = design_low_pass(cutoff_hz, signal.sample_rate, options.taps);
    const auto n = static_cast<std::ptrdiff_t>(signal.samples.size());
    PcmSignal out;
    out.sample_rate = signal.sample_rate;
    out.samples.assign(signal.samples.size(), 0.0);
    if (n == 0) {
        return out;
    }

    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(h.size() / 2);
    // Reflect without repeating the edge sample; repeat reflection for very short inputs.
    auto reflect = [n](std::ptrdiff_t i) {
        if (n == 1) {
            return std::ptrdiff_t{0};
        }
        const std::ptrdiff_t period = 2 * (n - 1);
        i %= period;
        if (i < 0) {
            i += period;
        }
        return i < n ? i : period - i;
    };

    std::vector<double> padded(static_cast<std::size_t>(n + 2 * half));
    for (std::ptrdiff_t i = 0; i < n + 2 * half; ++i) {
        padded[static_cast<std::size_t>(i)] = signal.samples[static_cast<std::size_t>(reflect(i - half))];
    }

    const std::size_t taps = h.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double* x = padded.data() + i;
        double acc = 0.0;
        for (std::size_t k = 0; k < taps; ++k) {
            acc += h[k] * x[k];
        }
        out.samples[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

}  // namespace boweldet
