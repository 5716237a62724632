#include "boweldet/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "boweldet/errors.hpp"
#include "boweldet/hash.hpp"

namespace boweldet {

void RunConfig::finalize() {
    const std::size_t rows = window_bins(predict.window_s, spectrogram.time_bins_per_s);
    for (ModelConfig* m : {&classifier, &regressor}) {
        m->input_rows = rows;
        m->input_mels = static_cast<std::size_t>(spectrogram.n_mels);
        model_layers(*m);
    }
    classifier.head = HeadKind::classifier;
    regressor.head = HeadKind::regressor;
    if (spectrogram.n_mels <= 0 || spectrogram.time_bins_per_s <= 0) {
        throw InvalidConfig("spectrogram n_mels and time_bins_per_s must be positive");
    }
    double ratio_sum = 0.0;
    for (double r : dataset.ratios) {
        if (!(r >= 0.0)) throw InvalidConfig("split ratios must be non-negative");
        ratio_sum += r;
    }
    if (!(ratio_sum > 0.0)) throw InvalidConfig("split ratios sum to zero");
    train.validate();
    predict.validate();
    if (sweep.seeds.empty()) throw InvalidConfig("sweep needs at least one seed");
    for (int o : sweep.overlaps) {
        if (o < 1) throw InvalidHyperparameter("overlap must be >= 1");
    }
}

std::string RunConfig::hash() const {
    nlohmann::json j = *this;
    j.erase("work_dir");
    j["dataset"].erase("data_dir");
    return hash_hex(fnv1a(j.dump()));
}

std::string RunConfig::training_hash() const {
    nlohmann::json j = *this;
    j.erase("work_dir");
    j.erase("predict");
    j.erase("sweep");
    j["dataset"].erase("data_dir");
    return hash_hex(fnv1a(j.dump()));
}

namespace {

nlohmann::json filter_json(const EventFilter& f) {
    nlohmann::json kinds = nlohmann::json::array();
    for (EventKind k : f.allowed_kinds) kinds.push_back(std::string(to_string(k)));
    return {{"max_duration_s", f.max_duration_s}, {"allowed_kinds", kinds}};
}

EventFilter filter_from(const nlohmann::json& j) {
    EventFilter f;
    f.max_duration_s = j.value("max_duration_s", f.max_duration_s);
    if (j.contains("allowed_kinds")) {
        f.allowed_kinds.clear();
        for (const auto& k : j["allowed_kinds"]) f.allowed_kinds.push_back(parse_event_kind(k.get<std::string>()));
    }
    return f;
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& item : j.items()) {
        if (!known.count(item.key())) {
            throw InvalidConfig("unknown key '" + item.key() + "' in " + where);
        }
    }
}

}  // namespace

void to_json(nlohmann::json& j, const RunConfig& cfg) {
    j = nlohmann::json{
        {"spectrogram", cfg.spectrogram},
        {"dataset",
         {{"data_dir", cfg.dataset.data_dir.string()},
          {"ratios", cfg.dataset.ratios},
          {"split_seed", cfg.dataset.split_seed},
          {"filter", filter_json(cfg.dataset.filter)}}},
        {"classifier", cfg.classifier},
        {"regressor", cfg.regressor},
        {"train", cfg.train},
        {"predict", cfg.predict},
        {"sweep",
         {{"thresholds", cfg.sweep.thresholds},
          {"overlaps", cfg.sweep.overlaps},
          {"vote_fractions", cfg.sweep.vote_fractions},
          {"seeds", cfg.sweep.seeds}}},
        {"work_dir", cfg.work_dir.string()},
    };
}

void from_json(const nlohmann::json& j, RunConfig& cfg) {
    if (!j.is_object()) throw InvalidConfig("config must be a JSON object");
    reject_unknown(j, {"spectrogram", "dataset", "classifier", "regressor", "train", "predict", "sweep", "work_dir"},
                   "config");
    RunConfig d;
    cfg = d;
    if (j.contains("spectrogram")) cfg.spectrogram = j["spectrogram"].get<SpectrogramConfig>();
    if (j.contains("dataset")) {
        const auto& ds = j["dataset"];
        reject_unknown(ds, {"data_dir", "ratios", "split_seed", "filter"}, "dataset");
        cfg.dataset.data_dir = ds.value("data_dir", std::string());
        if (ds.contains("ratios")) cfg.dataset.ratios = ds["ratios"].get<std::array<double, 3>>();
        cfg.dataset.split_seed = ds.value("split_seed", d.dataset.split_seed);
        if (ds.contains("filter")) cfg.dataset.filter = filter_from(ds["filter"]);
    }
    if (j.contains("classifier")) {
        auto c = j["classifier"];
        c["head"] = "classifier";
        cfg.classifier = c.get<ModelConfig>();
    }
    if (j.contains("regressor")) {
        auto r = j["regressor"];
        r["head"] = "regressor";
        cfg.regressor = r.get<ModelConfig>();
    }
    if (j.contains("train")) cfg.train = j["train"].get<TrainConfig>();
    if (j.contains("predict")) cfg.predict = j["predict"].get<PredictConfig>();
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        reject_unknown(s, {"thresholds", "overlaps", "vote_fractions", "seeds"}, "sweep");
        if (s.contains("thresholds")) cfg.sweep.thresholds = s["thresholds"].get<std::vector<double>>();
        if (s.contains("overlaps")) cfg.sweep.overlaps = s["overlaps"].get<std::vector<int>>();
        if (s.contains("vote_fractions")) cfg.sweep.vote_fractions = s["vote_fractions"].get<std::vector<double>>();
        if (s.contains("seeds")) cfg.sweep.seeds = s["seeds"].get<std::vector<std::uint64_t>>();
    }
    if (j.contains("work_dir")) cfg.work_dir = j["work_dir"].get<std::string>();
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig("config " + path.string() + ": " + e.what());
    }
    RunConfig cfg;
    try {
        cfg = j.get<RunConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig("config " + path.string() + ": " + e.what());
    }
    if (!cfg.dataset.data_dir.empty() && cfg.dataset.data_dir.is_relative()) {
        cfg.dataset.data_dir = path.parent_path() / cfg.dataset.data_dir;
    }
    return cfg;
}

}  // namespace boweldet
