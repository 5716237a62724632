#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "boweldet/dataset.hpp"
#include "boweldet/layers.hpp"

namespace boweldet {

struct PredictConfig {
    double threshold = 0.9;
    double vote_fraction = 0.1;
    int overlap = 10;
    double window_s = 0.2;

    void validate() const;
    /// Accumulated confidence a bin needs: vote_fraction * overlap.
    double vote_threshold() const { return vote_fraction * overlap; }
};

void to_json(nlohmann::json& j, const PredictConfig& cfg);
void from_json(const nlohmann::json& j, PredictConfig& cfg);

struct Interval {
    double start_s = 0.0;
    double end_s = 0.0;

    double length() const { return end_s - start_s; }
    bool operator==(const Interval&) const = default;
};

struct Detection {
    Interval interval;
    double confidence = 0.0;
};

/// Sorted, non-overlapping intervals with strictly positive gaps. Touching
/// or overlapping input intervals are merged; empty ones dropped.
class IntervalSet {
public:
    IntervalSet() = default;
    explicit IntervalSet(std::vector<Interval> intervals);

    const std::vector<Interval>& intervals() const { return intervals_; }
    std::size_t size() const { return intervals_.size(); }
    bool empty() const { return intervals_.empty(); }
    auto begin() const { return intervals_.begin(); }
    auto end() const { return intervals_.end(); }
    bool operator==(const IntervalSet&) const = default;

private:
    std::vector<Interval> intervals_;
};

/// Window length in bins: round(window_s * time_bins_per_s).
std::size_t window_bins(double window_s, int time_bins_per_s);
/// Stride in bins: round-half-up(window_bins / overlap), at least 1.
std::size_t window_stride(std::size_t window_bins, int overlap);

/// Window start bins 0, stride, 2*stride, ... while the window fits.
std::vector<std::size_t> slide_windows(std::size_t n_time_bins, double window_s, int overlap, int time_bins_per_s);

/// centre = window centre + offset*window_s, length = scale*window_s,
/// clipped to [0, recording_end_s].
Interval refine_interval(double window_start_s, double window_s, double offset, double scale,
                         double recording_end_s);

/// Half-open bin range [first, last) whose bin centres (t + 0.5)/rate lie in
/// [start_s, end_s), clamped to [0, n_bins).
std::pair<std::size_t, std::size_t> covered_bins(const Interval& interval, int time_bins_per_s, std::size_t n_bins);

/// Trained classifier/regressor pair tied to the spectrogram config they were
/// trained on.
struct Detector {
    Network classifier;
    Network regressor;
    std::string spectrogram_hash;
};

/// Classifier probability for every window, plus regressor output for the
/// windows above `regress_above`.
struct WindowScores {
    std::vector<std::size_t> starts;
    std::vector<float> probability;
    std::vector<float> offset;
    std::vector<float> scale;
    std::vector<bool> regressed;
    std::size_t window_rows = 0;
    int time_bins_per_s = 0;
    double recording_end_s = 0.0;
};

WindowScores score_windows(const Detector& detector, const RecordingView& recording, const PredictConfig& cfg,
                           double regress_above);
/// Detections for windows with probability strictly above `threshold`.
std::vector<Detection> detections_from_scores(const WindowScores& scores, double threshold);

/// Throws IncompatibleModel when `spectrogram_hash` differs from the detector's.
std::vector<Detection> detect(const Detector& detector, const RecordingView& recording,
                              const std::string& spectrogram_hash, const PredictConfig& cfg);

/// Confidence-weighted vote per bin; bins with acc >= vote_threshold() are
/// positive and consecutive positive bins merge into intervals.
IntervalSet aggregate(const std::vector<Detection>& detections, const PredictConfig& cfg, std::size_t n_time_bins,
                      int time_bins_per_s);

enum class MetaMode { intersect, sum };

MetaMode parse_meta_mode(const std::string& name);
/// intersect: covered by both; sum: covered by either.
IntervalSet meta_combine(MetaMode mode, const IntervalSet& a, const IntervalSet& b);

}  // namespace boweldet
