#include "boweldet/store.hpp"

#include <bit>
#include <fstream>

#include <nlohmann/json.hpp>

#include "boweldet/errors.hpp"

namespace boweldet {

static_assert(std::endian::native == std::endian::little, "spectrogram store assumes a little-endian host");

const StoreEntry* SpectrogramStore::find(const std::string& id) const {
    for (const auto& e : entries) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

RecordingView SpectrogramStore::view(const StoreEntry& entry, const EventFilter& filter) const {
    RecordingView v;
    v.id = entry.id;
    v.rows = entry.rows;
    v.n_mels = n_mels;
    v.time_bins_per_s = time_bins_per_s;
    v.values = std::span<const float>(values).subspan(entry.row_offset * static_cast<std::size_t>(n_mels),
                                                      entry.rows * static_cast<std::size_t>(n_mels));
    v.events = filter_events(entry.events, filter);
    return v;
}

std::vector<RecordingView> SpectrogramStore::views(const std::vector<std::string>& ids,
                                                   const EventFilter& filter) const {
    std::vector<RecordingView> out;
    std::vector<std::string> missing;
    for (const auto& id : ids) {
        if (const StoreEntry* e = find(id)) {
            out.push_back(view(*e, filter));
        } else {
            missing.push_back(id);
        }
    }
    if (!missing.empty()) {
        std::string msg = "recordings missing from the spectrogram store:";
        for (const auto& id : missing) msg += " " + id;
        throw EvaluationError(msg);
    }
    return out;
}

std::vector<AnnotatedRecording> SpectrogramStore::annotated(const EventFilter& filter) const {
    std::vector<AnnotatedRecording> out;
    for (const auto& e : entries) {
        out.push_back({e.id, e.audio_path, filter_events(e.events, filter), e.duration_s});
    }
    return out;
}

namespace {

nlohmann::json events_json(const std::vector<SoundEvent>& events) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& ev : events) {
        arr.push_back({ev.start_s, ev.end_s, to_string(ev.kind)});
    }
    return arr;
}

}  // namespace

void save_store(const std::filesystem::path& dir, const SpectrogramStore& store) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream bin(dir / "spectrograms.bin", std::ios::binary);
        bin.write(reinterpret_cast<const char*>(store.values.data()),
                  static_cast<std::streamsize>(store.values.size() * sizeof(float)));
        if (!bin) throw Error("failed writing spectrograms.bin");
    }
    nlohmann::json header{{"rows", store.total_rows()},
                          {"cols", store.n_mels},
                          {"time_bins_per_s", store.time_bins_per_s},
                          {"config_hash", store.config_hash}};
    std::ofstream(dir / "spectrograms.json") << header.dump(2) << '\n';

    nlohmann::json manifest{{"config_hash", store.config_hash}, {"spectrogram", store.config}};
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& e : store.entries) {
        recs.push_back({{"id", e.id},
                        {"audio_path", e.audio_path.string()},
                        {"row_offset", e.row_offset},
                        {"rows", e.rows},
                        {"duration_s", e.duration_s},
                        {"events", events_json(e.events)}});
    }
    manifest["recordings"] = recs;
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& s : store.skipped) skipped.push_back({{"path", s.path}, {"reason", s.reason}});
    manifest["skipped"] = skipped;
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

SpectrogramStore load_store(const std::filesystem::path& dir) {
    std::ifstream header_in(dir / "spectrograms.json");
    std::ifstream manifest_in(dir / "manifest.json");
    if (!header_in || !manifest_in) {
        throw InvalidConfig("no spectrogram store in " + dir.string() + " (run preprocess first)");
    }
    const auto header = nlohmann::json::parse(header_in);
    const auto manifest = nlohmann::json::parse(manifest_in);

    SpectrogramStore store;
    store.config = manifest.at("spectrogram").get<SpectrogramConfig>();
    store.config_hash = header.at("config_hash").get<std::string>();
    store.n_mels = header.at("cols").get<int>();
    store.time_bins_per_s = header.at("time_bins_per_s").get<int>();
    const auto rows = header.at("rows").get<std::size_t>();

    store.values.resize(rows * static_cast<std::size_t>(store.n_mels));
    std::ifstream bin(dir / "spectrograms.bin", std::ios::binary);
    bin.read(reinterpret_cast<char*>(store.values.data()),
             static_cast<std::streamsize>(store.values.size() * sizeof(float)));
    if (!bin && !store.values.empty()) {
        throw InvalidConfig("spectrograms.bin is shorter than its header declares");
    }

    for (const auto& r : manifest.at("recordings")) {
        StoreEntry e;
        e.id = r.at("id").get<std::string>();
        e.audio_path = r.at("audio_path").get<std::string>();
        e.row_offset = r.at("row_offset").get<std::size_t>();
        e.rows = r.at("rows").get<std::size_t>();
        e.duration_s = r.at("duration_s").get<double>();
        for (const auto& ev : r.at("events")) {
            e.events.push_back({ev.at(0).get<double>(), ev.at(1).get<double>(),
                                parse_event_kind(ev.at(2).get<std::string>())});
        }
        if (e.row_offset + e.rows > rows) {
            throw InvalidConfig("manifest entry " + e.id + " exceeds the stored rows");
        }
        store.entries.push_back(std::move(e));
    }
    for (const auto& s : manifest.value("skipped", nlohmann::json::array())) {
        store.skipped.push_back({s.at("path").get<std::string>(), s.at("reason").get<std::string>()});
    }
    return store;
}

}  // namespace boweldet
