#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "boweldet/rng.hpp"

namespace boweldet {

enum class EventKind { single_burst, distinct_burst, multiple_burst, continuous, other };

std::string_view to_string(EventKind kind);
/// Accepts short dataset tokens ("sb", "db", "mb", "cb"/"crbs") and full names;
/// anything else maps to EventKind::other.
EventKind parse_event_kind(std::string_view token);

struct SoundEvent {
    double start_s = 0.0;
    double end_s = 0.0;
    EventKind kind = EventKind::single_burst;

    double duration() const { return end_s - start_s; }
    double center() const { return 0.5 * (start_s + end_s); }
};

struct AnnotatedRecording {
    std::string id;
    std::filesystem::path audio_path;
    std::vector<SoundEvent> events;
    double duration_s = 0.0;
};

/// One record per line: start_s, end_s, kind token (comma or whitespace
/// separated). Blank lines and lines starting with '#' are ignored. The kind
/// column is optional. Result is sorted by start time.
std::vector<SoundEvent> parse_annotations(std::string_view text);
std::vector<SoundEvent> read_annotations(const std::filesystem::path& path);
std::string format_annotations(std::span<const SoundEvent> events);

struct EventFilter {
    double max_duration_s = 0.2;
    std::vector<EventKind> allowed_kinds{EventKind::single_burst, EventKind::distinct_burst};
};

std::vector<SoundEvent> filter_events(std::span<const SoundEvent> events, const EventFilter& filter);

struct DatasetSplit {
    std::uint64_t seed = 0;
    std::vector<std::string> train;
    std::vector<std::string> valid;
    std::vector<std::string> test;
    /// Non-fatal conditions, e.g. stratification fell back to a plain shuffle.
    std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const DatasetSplit& split);
void from_json(const nlohmann::json& j, DatasetSplit& split);

/// Stratifies by event-count bin {0, 1-3, 4-7, 8+}, shuffles each stratum
/// with `seed`, and deals recordings so every split stays proportional. Split
/// sizes are the largest-remainder rounding of n * ratios.
DatasetSplit split_dataset(std::span<const AnnotatedRecording> recordings,
                           std::array<double, 3> ratios, std::uint64_t seed);

struct WindowLabel {
    bool positive = false;
    double target_offset = 0.0;
    double target_scale = 0.0;
    std::optional<std::size_t> event_index;
};

/// Positive iff some event overlaps the window by at least half of the
/// event's own duration. The qualifying event with the largest overlap
/// (earliest start on ties) supplies the regression targets.
WindowLabel label_window(double window_start_s, double window_s, std::span<const SoundEvent> events);

/// Spectrogram rows of one recording plus its filtered events. Does not own
/// the values.
struct RecordingView {
    std::string id;
    std::span<const float> values;
    std::size_t rows = 0;
    int n_mels = 0;
    int time_bins_per_s = 0;
    std::vector<SoundEvent> events;
};

struct WindowSample {
    std::vector<float> spec_slice;  // [rows x n_mels]
    int rows = 0;
    int n_mels = 0;
    bool positive = false;
    float target_offset = 0.0f;
    float target_scale = 0.0f;
    std::size_t recording = 0;
    std::size_t start_bin = 0;
};

WindowSample extract_window(const RecordingView& rec, std::size_t start_bin, int window_rows);

struct ClassRatio {
    int positive = 1;
    int negative = 3;
};

/// Infinite, deterministic stream of labelled windows. Each draw is positive
/// with probability p/(p+n). Positives are jittered uniformly within +-25% of
/// the window length around an event centre; negatives are drawn uniformly
/// from all window starts that label negative.
class WindowSampler {
public:
    WindowSampler(std::span<const RecordingView> recordings, int window_rows, ClassRatio ratio,
                  std::uint64_t seed);

    WindowSample next();

    std::size_t positive_candidates() const { return events_.size(); }
    std::size_t negative_candidates() const { return negatives_.size(); }

private:
    struct EventRef {
        std::size_t recording;
        std::size_t event;
    };
    struct StartRef {
        std::size_t recording;
        std::size_t start_bin;
    };

    WindowSample draw_positive();
    WindowSample draw_negative();
    WindowSample labelled(std::size_t recording, std::size_t start_bin) const;
    std::size_t jittered_start(const EventRef& ref);

    std::span<const RecordingView> recordings_;
    int window_rows_;
    ClassRatio ratio_;
    Rng rng_;
    std::vector<EventRef> events_;
    std::vector<StartRef> negatives_;
};

/// Adds N(0, sigma^2) noise with sigma ~ U(0, std_max), then clamps to [0, 1].
WindowSample augment_gaussian(WindowSample sample, double std_max, Rng& rng);

}  // namespace boweldet
