#include "boweldet/inference.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "boweldet/errors.hpp"
#include "boweldet/hash.hpp"

namespace boweldet {

void PredictConfig::validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw InvalidConfig("threshold must lie in (0, 1)");
    }
    if (!(vote_fraction > 0.0 && vote_fraction <= 1.0)) {
        throw InvalidConfig("vote_fraction must lie in (0, 1]");
    }
    if (overlap < 1) {
        throw InvalidConfig("overlap must be >= 1");
    }
    if (!(window_s > 0.0)) {
        throw InvalidConfig("window_s must be positive");
    }
}

void to_json(nlohmann::json& j, const PredictConfig& cfg) {
    j = nlohmann::json{{"threshold", cfg.threshold},
                       {"vote_fraction", cfg.vote_fraction},
                       {"overlap", cfg.overlap},
                       {"window_s", cfg.window_s}};
}

void from_json(const nlohmann::json& j, PredictConfig& cfg) {
    PredictConfig d;
    cfg.threshold = j.value("threshold", d.threshold);
    cfg.vote_fraction = j.value("vote_fraction", d.vote_fraction);
    cfg.overlap = j.value("overlap", d.overlap);
    cfg.window_s = j.value("window_s", d.window_s);
}

IntervalSet::IntervalSet(std::vector<Interval> intervals) {
    std::erase_if(intervals, [](const Interval& iv) { return !(iv.end_s > iv.start_s); });
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.start_s < b.start_s; });
    for (const Interval& iv : intervals) {
        if (!intervals_.empty() && iv.start_s <= intervals_.back().end_s) {
            intervals_.back().end_s = std::max(intervals_.back().end_s, iv.end_s);
        } else {
            intervals_.push_back(iv);
        }
    }
}

std::size_t window_bins(double window_s, int time_bins_per_s) {
    return static_cast<std::size_t>(std::llround(window_s * time_bins_per_s));
}

std::size_t window_stride(std::size_t window_bins, int overlap) {
    if (overlap < 1) {
        throw InvalidConfig("overlap must be >= 1");
    }
    const double exact = static_cast<double>(window_bins) / overlap;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact + 0.5)));
}

std::vector<std::size_t> slide_windows(std::size_t n_time_bins, double window_s, int overlap, int time_bins_per_s) {
    const std::size_t width = window_bins(window_s, time_bins_per_s);
    if (width == 0) {
        throw InvalidConfig("window shorter than one time bin");
    }
    if (width > n_time_bins) {
        throw WindowTooLarge("window of " + std::to_string(width) + " bins exceeds recording of " +
                             std::to_string(n_time_bins) + " bins");
    }
    const std::size_t stride = window_stride(width, overlap);
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + width <= n_time_bins; s += stride) {
        starts.push_back(s);
    }
    return starts;
}

Interval refine_interval(double window_start_s, double window_s, double offset, double scale,
                         double recording_end_s) {
    const double center = window_start_s + 0.5 * window_s + offset * window_s;
    const double half = 0.5 * scale * window_s;
    return {std::clamp(center - half, 0.0, recording_end_s), std::clamp(center + half, 0.0, recording_end_s)};
}

std::pair<std::size_t, std::size_t> covered_bins(const Interval& interval, int time_bins_per_s, std::size_t n_bins) {
    const double rate = time_bins_per_s;
    auto center = [rate](std::size_t t) { return (static_cast<double>(t) + 0.5) / rate; };
    // Estimate, then settle on the exact predicate so callers agree bin-for-bin.
    auto first_at_or_after = [&](double x) {
        double guess = std::ceil(x * rate - 0.5);
        std::size_t t = guess <= 0.0 ? 0 : std::min(n_bins, static_cast<std::size_t>(guess));
        while (t > 0 && center(t - 1) >= x) --t;
        while (t < n_bins && center(t) < x) ++t;
        return t;
    };
    const std::size_t first = first_at_or_after(interval.start_s);
    const std::size_t last = first_at_or_after(interval.end_s);
    return {first, std::max(first, last)};
}

WindowScores score_windows(const Detector& detector, const RecordingView& recording, const PredictConfig& cfg,
                           double regress_above) {
    cfg.validate();
    WindowScores scores;
    scores.window_rows = window_bins(cfg.window_s, recording.time_bins_per_s);
    scores.time_bins_per_s = recording.time_bins_per_s;
    scores.recording_end_s = static_cast<double>(recording.rows) / recording.time_bins_per_s;
    scores.starts = slide_windows(recording.rows, cfg.window_s, cfg.overlap, recording.time_bins_per_s);

    const std::size_t n = scores.starts.size();
    const std::size_t rows = scores.window_rows;
    const auto mels = static_cast<std::size_t>(recording.n_mels);
    scores.probability.assign(n, 0.0f);
    scores.offset.assign(n, 0.0f);
    scores.scale.assign(n, 0.0f);
    scores.regressed.assign(n, false);

    auto window_batch = [&](const std::vector<std::size_t>& which) {
        Tensor x({which.size(), 1, rows, mels});
        for (std::size_t i = 0; i < which.size(); ++i) {
            const float* src = recording.values.data() + scores.starts[which[i]] * mels;
            std::copy(src, src + rows * mels, x.item(i).begin());
        }
        return x;
    };

    constexpr std::size_t kChunk = 256;
    std::vector<std::size_t> selected;
    for (std::size_t begin = 0; begin < n; begin += kChunk) {
        std::vector<std::size_t> which;
        for (std::size_t i = begin; i < std::min(n, begin + kChunk); ++i) which.push_back(i);
        const Tensor p = detector.classifier.predict(window_batch(which));
        for (std::size_t i = 0; i < which.size(); ++i) {
            scores.probability[which[i]] = p.values[i];
            if (p.values[i] > regress_above) selected.push_back(which[i]);
        }
    }
    for (std::size_t begin = 0; begin < selected.size(); begin += kChunk) {
        const std::vector<std::size_t> which(selected.begin() + static_cast<std::ptrdiff_t>(begin),
                                             selected.begin() + static_cast<std::ptrdiff_t>(std::min(selected.size(), begin + kChunk)));
        const Tensor r = detector.regressor.predict(window_batch(which));
        for (std::size_t i = 0; i < which.size(); ++i) {
            scores.offset[which[i]] = r.values[2 * i];
            scores.scale[which[i]] = r.values[2 * i + 1];
            scores.regressed[which[i]] = true;
        }
    }
    return scores;
}

std::vector<Detection> detections_from_scores(const WindowScores& scores, double threshold) {
    std::vector<Detection> out;
    const double rate = scores.time_bins_per_s;
    const double window_s = static_cast<double>(scores.window_rows) / rate;
    for (std::size_t i = 0; i < scores.starts.size(); ++i) {
        if (!(scores.probability[i] > threshold)) continue;
        if (!scores.regressed[i]) {
            throw StateError("window " + std::to_string(i) + " above threshold was not regressed");
        }
        const Interval iv = refine_interval(static_cast<double>(scores.starts[i]) / rate, window_s, scores.offset[i],
                                            scores.scale[i], scores.recording_end_s);
        if (iv.end_s > iv.start_s) {
            out.push_back({iv, scores.probability[i]});
        }
    }
    return out;
}

std::vector<Detection> detect(const Detector& detector, const RecordingView& recording,
                              const std::string& spectrogram_hash, const PredictConfig& cfg) {
    if (spectrogram_hash != detector.spectrogram_hash) {
        throw IncompatibleModel("models were trained on spectrogram config " + detector.spectrogram_hash +
                                " but the input uses " + spectrogram_hash);
    }
    return detections_from_scores(score_windows(detector, recording, cfg, cfg.threshold), cfg.threshold);
}

IntervalSet aggregate(const std::vector<Detection>& detections, const PredictConfig& cfg, std::size_t n_time_bins,
                      int time_bins_per_s) {
    std::vector<double> acc(n_time_bins, 0.0);
    for (const Detection& d : detections) {
        const auto [first, last] = covered_bins(d.interval, time_bins_per_s, n_time_bins);
        for (std::size_t t = first; t < last; ++t) acc[t] += d.confidence;
    }
    const double needed = cfg.vote_threshold();
    const double rate = time_bins_per_s;
    std::vector<Interval> runs;
    std::size_t t = 0;
    while (t < n_time_bins) {
        if (acc[t] > 0.0 && acc[t] >= needed) {
            const std::size_t begin = t;
            while (t < n_time_bins && acc[t] > 0.0 && acc[t] >= needed) ++t;
            runs.push_back({static_cast<double>(begin) / rate, static_cast<double>(t) / rate});
        } else {
            ++t;
        }
    }
    return IntervalSet(std::move(runs));
}

MetaMode parse_meta_mode(const std::string& name) {
    if (name == "intersect") return MetaMode::intersect;
    if (name == "sum") return MetaMode::sum;
    throw InvalidConfig("meta mode must be 'intersect' or 'sum', got '" + name + "'");
}

IntervalSet meta_combine(MetaMode mode, const IntervalSet& a, const IntervalSet& b) {
    if (mode == MetaMode::sum) {
        std::vector<Interval> all(a.begin(), a.end());
        all.insert(all.end(), b.begin(), b.end());
        return IntervalSet(std::move(all));
    }
    std::vector<Interval> out;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        const double lo = std::max(ia->start_s, ib->start_s);
        const double hi = std::min(ia->end_s, ib->end_s);
        if (hi > lo) out.push_back({lo, hi});
        if (ia->end_s < ib->end_s) {
            ++ia;
        } else {
            ++ib;
        }
    }
    return IntervalSet(std::move(out));
}

}  // namespace boweldet
