#include "boweldet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "boweldet/errors.hpp"

namespace boweldet {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::single_burst: return "single_burst";
        case EventKind::distinct_burst: return "distinct_burst";
        case EventKind::multiple_burst: return "multiple_burst";
        case EventKind::continuous: return "continuous";
        case EventKind::other: return "other";
    }
    return "other";
}

EventKind parse_event_kind(std::string_view token) {
    std::string t(token);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "sb" || t == "single_burst") return EventKind::single_burst;
    if (t == "db" || t == "distinct_burst") return EventKind::distinct_burst;
    if (t == "mb" || t == "multiple_burst") return EventKind::multiple_burst;
    if (t == "cb" || t == "crbs" || t == "continuous") return EventKind::continuous;
    return EventKind::other;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r' || c == ';'; };
    while (i < line.size()) {
        while (i < line.size() && is_sep(line[i])) ++i;
        const std::size_t begin = i;
        while (i < line.size() && !is_sep(line[i])) ++i;
        if (i > begin) out.push_back(line.substr(begin, i - begin));
    }
    return out;
}

double parse_number(std::string_view field, std::size_t line_no) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line_no) + ": expected a number, got '" +
                         std::string(field) + "'");
    }
    return v;
}

}  // namespace

std::vector<SoundEvent> parse_annotations(std::string_view text) {
    std::vector<SoundEvent> events;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

        const auto fields = split_fields(line);
        if (fields.empty() || fields.front().front() == '#') {
            continue;
        }
        if (fields.size() < 2) {
            throw ParseError("line " + std::to_string(line_no) + ": expected start, end, kind");
        }
        SoundEvent ev;
        ev.start_s = parse_number(fields[0], line_no);
        ev.end_s = parse_number(fields[1], line_no);
        ev.kind = fields.size() >= 3 ? parse_event_kind(fields[2]) : EventKind::other;
        if (ev.start_s < 0.0 || ev.start_s >= ev.end_s) {
            throw InvalidInterval("line " + std::to_string(line_no) + ": start must be >= 0 and < end");
        }
        events.push_back(ev);
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const SoundEvent& a, const SoundEvent& b) { return a.start_s < b.start_s; });
    return events;
}

std::vector<SoundEvent> read_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_annotations(text);
}

std::string format_annotations(std::span<const SoundEvent> events) {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    for (const auto& ev : events) {
        out << ev.start_s << ',' << ev.end_s << ',' << to_string(ev.kind) << '\n';
    }
    return out.str();
}

std::vector<SoundEvent> filter_events(std::span<const SoundEvent> events, const EventFilter& filter) {
    if (!(filter.max_duration_s > 0.0)) {
        throw InvalidConfig("max_duration_s must be positive");
    }
    std::vector<SoundEvent> out;
    for (const auto& ev : events) {
        const bool kind_ok = std::find(filter.allowed_kinds.begin(), filter.allowed_kinds.end(), ev.kind) !=
                             filter.allowed_kinds.end();
        if (kind_ok && ev.duration() <= filter.max_duration_s) {
            out.push_back(ev);
        }
    }
    return out;
}

void to_json(nlohmann::json& j, const DatasetSplit& split) {
    j = nlohmann::json{{"seed", split.seed}, {"train", split.train}, {"valid", split.valid}, {"test", split.test}};
}

void from_json(const nlohmann::json& j, DatasetSplit& split) {
    split.seed = j.at("seed").get<std::uint64_t>();
    split.train = j.at("train").get<std::vector<std::string>>();
    split.valid = j.at("valid").get<std::vector<std::string>>();
    split.test = j.at("test").get<std::vector<std::string>>();
}

namespace {

int stratum_of(std::size_t event_count) {
    if (event_count == 0) return 0;
    if (event_count <= 3) return 1;
    if (event_count <= 7) return 2;
    return 3;
}

std::array<std::size_t, 3> largest_remainder(std::size_t n, const std::array<double, 3>& ratios) {
    std::array<std::size_t, 3> quota{};
    std::array<double, 3> rem{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        const double exact = static_cast<double>(n) * ratios[s];
        quota[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        rem[s] = exact - static_cast<double>(quota[s]);
        assigned += quota[s];
    }
    while (assigned < n) {
        std::size_t best = 0;
        for (std::size_t s = 1; s < 3; ++s) {
            if (rem[s] > rem[best] + 1e-12) best = s;
        }
        ++quota[best];
        rem[best] = -1.0;
        ++assigned;
    }
    return quota;
}

}  // namespace

DatasetSplit split_dataset(std::span<const AnnotatedRecording> recordings, std::array<double, 3> ratios,
                           std::uint64_t seed) {
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(total - 1.0) > 1e-9 || std::any_of(ratios.begin(), ratios.end(), [](double r) { return r < 0.0; })) {
        throw InvalidConfig("split ratios must be non-negative and sum to 1");
    }

    DatasetSplit split;
    split.seed = seed;
    const std::size_t n = recordings.size();
    constexpr std::size_t kStrata = 4;

    std::array<std::vector<std::size_t>, kStrata> strata;
    const bool stratify = n >= kStrata * 3;
    if (!stratify && n > 0) {
        split.warnings.push_back("StratificationWarning: " + std::to_string(n) +
                                 " recordings is fewer than strata x splits; using a plain shuffle");
    }
    for (std::size_t i = 0; i < n; ++i) {
        strata[stratify ? stratum_of(recordings[i].events.size()) : 0].push_back(i);
    }

    Rng rng(seed);
    std::vector<std::size_t> order;
    order.reserve(n);
    for (auto& stratum : strata) {
        std::sort(stratum.begin(), stratum.end(),
                  [&](std::size_t a, std::size_t b) { return recordings[a].id < recordings[b].id; });
        rng.shuffle(std::span<std::size_t>(stratum));
        order.insert(order.end(), stratum.begin(), stratum.end());
    }

    // Deal in order, always to the split furthest behind its proportional share.
    const auto quota = largest_remainder(n, ratios);
    std::array<std::size_t, 3> count{};
    std::array<std::vector<std::string>*, 3> dest{&split.train, &split.valid, &split.test};
    for (std::size_t i = 0; i < n; ++i) {
        int best = -1;
        double best_deficit = 0.0;
        for (int s = 0; s < 3; ++s) {
            if (count[s] >= quota[s]) continue;
            const double deficit = static_cast<double>(quota[s]) * static_cast<double>(i + 1) / static_cast<double>(n) -
                                   static_cast<double>(count[s]);
            if (best < 0 || deficit > best_deficit + 1e-12) {
                best = s;
                best_deficit = deficit;
            }
        }
        dest[best]->push_back(recordings[order[i]].id);
        ++count[best];
    }
    return split;
}

WindowLabel label_window(double window_start_s, double window_s, std::span<const SoundEvent> events) {
    if (!(window_s > 0.0)) {
        throw InvalidConfig("window length must be positive");
    }
    const double window_end = window_start_s + window_s;
    WindowLabel label;
    double best_overlap = -1.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        const double overlap = std::max(0.0, std::min(ev.end_s, window_end) - std::max(ev.start_s, window_start_s));
        if (overlap <= 0.0 || overlap < 0.5 * ev.duration()) {
            continue;
        }
        const bool better = overlap > best_overlap ||
                            (overlap == best_overlap && ev.start_s < events[*label.event_index].start_s);
        if (better) {
            best_overlap = overlap;
            label.event_index = i;
        }
    }
    if (label.event_index) {
        const auto& ev = events[*label.event_index];
        const double window_center = window_start_s + 0.5 * window_s;
        label.positive = true;
        label.target_offset = std::clamp((ev.center() - window_center) / window_s, -0.5, 0.5);
        label.target_scale = std::min(ev.duration() / window_s, 1.0);
    }
    return label;
}

WindowSample extract_window(const RecordingView& rec, std::size_t start_bin, int window_rows) {
    if (start_bin + static_cast<std::size_t>(window_rows) > rec.rows) {
        throw WindowTooLarge("window [" + std::to_string(start_bin) + ", +" + std::to_string(window_rows) +
                             ") exceeds recording " + rec.id);
    }
    WindowSample s;
    s.rows = window_rows;
    s.n_mels = rec.n_mels;
    s.recording = 0;
    s.start_bin = start_bin;
    const auto first = rec.values.begin() + static_cast<std::ptrdiff_t>(start_bin * rec.n_mels);
    s.spec_slice.assign(first, first + static_cast<std::ptrdiff_t>(window_rows) * rec.n_mels);
    return s;
}

WindowSampler::WindowSampler(std::span<const RecordingView> recordings, int window_rows, ClassRatio ratio,
                             std::uint64_t seed)
    : recordings_(recordings), window_rows_(window_rows), ratio_(ratio), rng_(seed) {
    if (window_rows <= 0 || ratio.positive < 0 || ratio.negative < 0 || ratio.positive + ratio.negative == 0) {
        throw InvalidConfig("sampler needs a positive window and a non-empty class ratio");
    }
    for (std::size_t r = 0; r < recordings.size(); ++r) {
        const auto& rec = recordings[r];
        if (rec.rows < static_cast<std::size_t>(window_rows)) {
            continue;
        }
        const double rate = rec.time_bins_per_s;
        const double window_s = window_rows / rate;
        const std::size_t last_start = rec.rows - static_cast<std::size_t>(window_rows);

        // An event is usable as a positive anchor if the window centred on it labels positive.
        for (std::size_t e = 0; e < rec.events.size(); ++e) {
            const double centred = rec.events[e].center() * rate - 0.5 * window_rows;
            const auto start = static_cast<std::size_t>(std::clamp(std::round(centred), 0.0, static_cast<double>(last_start)));
            if (label_window(start / rate, window_s, rec.events).positive) {
                events_.push_back({r, e});
            }
        }
        if (ratio.negative > 0) {
            for (std::size_t s = 0; s <= last_start; ++s) {
                if (!label_window(s / rate, window_s, rec.events).positive) {
                    negatives_.push_back({r, s});
                }
            }
        }
    }
    if (ratio.positive > 0 && events_.empty()) {
        throw EmptyClassError("no positive events available for sampling");
    }
    if (ratio.negative > 0 && negatives_.empty()) {
        throw EmptyClassError("no negative windows available for sampling");
    }
}

WindowSample WindowSampler::labelled(std::size_t recording, std::size_t start_bin) const {
    const auto& rec = recordings_[recording];
    WindowSample s = extract_window(rec, start_bin, window_rows_);
    s.recording = recording;
    const double rate = rec.time_bins_per_s;
    const auto label = label_window(start_bin / rate, window_rows_ / rate, rec.events);
    s.positive = label.positive;
    if (label.positive) {
        s.target_offset = static_cast<float>(label.target_offset);
        s.target_scale = static_cast<float>(label.target_scale);
    }
    return s;
}

std::size_t WindowSampler::jittered_start(const EventRef& ref) {
    const auto& rec = recordings_[ref.recording];
    const double rate = rec.time_bins_per_s;
    const double jitter = rng_.uniform(-0.25, 0.25) * window_rows_;
    const double start = rec.events[ref.event].center() * rate + jitter - 0.5 * window_rows_;
    const double last_start = static_cast<double>(rec.rows - static_cast<std::size_t>(window_rows_));
    return static_cast<std::size_t>(std::clamp(std::round(start), 0.0, last_start));
}

WindowSample WindowSampler::draw_positive() {
    const EventRef ref = events_[rng_.below(events_.size())];
    for (int attempt = 0; attempt < 64; ++attempt) {
        WindowSample s = labelled(ref.recording, jittered_start(ref));
        if (s.positive) {
            return s;
        }
    }
    // Anchors were checked at construction, so the centred window is positive.
    const auto& rec = recordings_[ref.recording];
    const double centred = rec.events[ref.event].center() * rec.time_bins_per_s - 0.5 * window_rows_;
    const double last_start = static_cast<double>(rec.rows - static_cast<std::size_t>(window_rows_));
    return labelled(ref.recording, static_cast<std::size_t>(std::clamp(std::round(centred), 0.0, last_start)));
}

WindowSample WindowSampler::draw_negative() {
    const StartRef ref = negatives_[rng_.below(negatives_.size())];
    return labelled(ref.recording, ref.start_bin);
}

WindowSample WindowSampler::next() {
    const double p_pos = static_cast<double>(ratio_.positive) / (ratio_.positive + ratio_.negative);
    return rng_.bernoulli(p_pos) ? draw_positive() : draw_negative();
}

WindowSample augment_gaussian(WindowSample sample, double std_max, Rng& rng) {
    if (!(std_max >= 0.0)) {
        throw InvalidConfig("std_max must be non-negative");
    }
    if (std_max == 0.0) {
        return sample;
    }
    const double sigma = rng.uniform(0.0, std_max);
    for (float& v : sample.spec_slice) {
        v = static_cast<float>(std::clamp(static_cast<double>(v) + sigma * rng.normal(), 0.0, 1.0));
    }
    return sample;
}

}  // namespace boweldet
