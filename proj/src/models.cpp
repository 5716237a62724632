#include "boweldet/models.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "boweldet/errors.hpp"
#include "boweldet/hash.hpp"

namespace boweldet {

static_assert(std::endian::native == std::endian::little, "weight files assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'B', 'W', 'L', 'D', 'N', 'E', 'T', '1'};

}  // namespace

ModelConfig ModelConfig::classifier() { return ModelConfig{}; }

ModelConfig ModelConfig::regressor() {
    ModelConfig cfg;
    cfg.dense_units = {512, 512};
    cfg.head = HeadKind::regressor;
    return cfg;
}

ModelConfig ModelConfig::variant(const std::string& name, HeadKind head) {
    ModelConfig cfg = head == HeadKind::classifier ? classifier() : regressor();
    const std::size_t base_units = cfg.dense_units.front();
    if (name == "baseline") {
        return cfg;
    }
    if (name == "bigger") {
        cfg.conv_filters = {16, 32, 32, 32};
        cfg.pooled_blocks = 3;
        cfg.dense_units = {2 * base_units, 2 * base_units};
        return cfg;
    }
    if (name == "smaller") {
        cfg.conv_filters = {4, 8, 8};
        cfg.dense_units = {base_units / 2, base_units / 2};
        return cfg;
    }
    if (name == "increased_cnn_layers") {
        cfg.conv_filters = {8, 16, 16, 16, 16};
        cfg.pooled_blocks = 3;
        return cfg;
    }
    throw InvalidConfig("unknown model variant '" + name + "'");
}

void to_json(nlohmann::json& j, const ModelConfig& cfg) {
    j = nlohmann::json{{"input_shape", {cfg.input_rows, cfg.input_mels}},
                       {"conv_filters", cfg.conv_filters},
                       {"kernel", {cfg.kernel.first, cfg.kernel.second}},
                       {"pool", {cfg.pool.first, cfg.pool.second}},
                       {"pooled_blocks", cfg.pooled_blocks},
                       {"dense_units", cfg.dense_units},
                       {"head", cfg.head == HeadKind::classifier ? "classifier" : "regressor"},
                       {"dropout_p", cfg.dropout_p}};
}

void from_json(const nlohmann::json& j, ModelConfig& cfg) {
    const std::string head = j.value("head", std::string("classifier"));
    if (head != "classifier" && head != "regressor") {
        throw InvalidConfig("model head must be 'classifier' or 'regressor'");
    }
    cfg = head == "classifier" ? ModelConfig::classifier() : ModelConfig::regressor();
    if (j.contains("variant")) {
        cfg = ModelConfig::variant(j["variant"].get<std::string>(),
                                   head == "classifier" ? HeadKind::classifier : HeadKind::regressor);
    }
    if (j.contains("input_shape")) {
        cfg.input_rows = j["input_shape"].at(0).get<std::size_t>();
        cfg.input_mels = j["input_shape"].at(1).get<std::size_t>();
    }
    if (j.contains("conv_filters")) cfg.conv_filters = j["conv_filters"].get<std::vector<std::size_t>>();
    if (j.contains("kernel")) cfg.kernel = {j["kernel"].at(0).get<std::size_t>(), j["kernel"].at(1).get<std::size_t>()};
    if (j.contains("pool")) cfg.pool = {j["pool"].at(0).get<std::size_t>(), j["pool"].at(1).get<std::size_t>()};
    if (j.contains("pooled_blocks")) cfg.pooled_blocks = j["pooled_blocks"].get<int>();
    if (j.contains("dense_units")) cfg.dense_units = j["dense_units"].get<std::vector<std::size_t>>();
    if (j.contains("dropout_p")) cfg.dropout_p = j["dropout_p"].get<double>();
}

std::vector<LayerSpec> model_layers(const ModelConfig& cfg) {
    if (cfg.conv_filters.empty() || cfg.dense_units.empty()) {
        throw InvalidConfig("conv_filters and dense_units must be non-empty");
    }
    std::vector<LayerSpec> layers;
    std::size_t h = cfg.input_rows;
    std::size_t w = cfg.input_mels;
    const std::size_t pooled =
        cfg.pooled_blocks < 0 ? cfg.conv_filters.size() : static_cast<std::size_t>(cfg.pooled_blocks);
    for (std::size_t i = 0; i < cfg.conv_filters.size(); ++i) {
        if (h < cfg.kernel.first || w < cfg.kernel.second) {
            throw InvalidConfig("conv block " + std::to_string(i) + " kernel exceeds its " + std::to_string(h) + "x" +
                                std::to_string(w) + " input");
        }
        h -= cfg.kernel.first - 1;
        w -= cfg.kernel.second - 1;
        layers.push_back(LayerSpec::conv2d(cfg.conv_filters[i], cfg.kernel.first, cfg.kernel.second));
        layers.push_back(LayerSpec::relu());
        if (i < pooled) {
            if (h < cfg.pool.first || w < cfg.pool.second) {
                throw InvalidConfig("pooling underflow at conv block " + std::to_string(i) + ": " + std::to_string(h) +
                                    "x" + std::to_string(w) + " input");
            }
            h /= cfg.pool.first;
            w /= cfg.pool.second;
            layers.push_back(LayerSpec::maxpool2d(cfg.pool.first, cfg.pool.second, true));
        }
    }
    layers.push_back(LayerSpec::flatten());
    for (std::size_t units : cfg.dense_units) {
        layers.push_back(LayerSpec::dense(units));
        layers.push_back(LayerSpec::relu());
        if (cfg.dropout_p > 0.0) {
            layers.push_back(LayerSpec::dropout(cfg.dropout_p));
        }
    }
    if (cfg.head == HeadKind::classifier) {
        layers.push_back(LayerSpec::dense(1));
        layers.push_back(LayerSpec::sigmoid());
    } else {
        layers.push_back(LayerSpec::dense(2));
        layers.push_back(LayerSpec::interval_head());
    }
    return layers;
}

Network build_model(const ModelConfig& cfg, std::uint64_t seed) {
    return Network({1, cfg.input_rows, cfg.input_mels}, model_layers(cfg), seed);
}

void save_model(const std::filesystem::path& path, const Network& net, const std::string& spectrogram_hash,
                const nlohmann::json& meta) {
    std::string payload;
    nlohmann::json params = nlohmann::json::array();
    for (const Parameter* p : net.parameters()) {
        params.push_back({{"name", p->name}, {"shape", p->value.shape}});
        payload.append(reinterpret_cast<const char*>(p->value.values.data()), p->value.size() * sizeof(float));
    }
    nlohmann::json header{{"format", 1},
                          {"input_shape", net.input_shape()},
                          {"layers", net.specs()},
                          {"params", params},
                          {"seed", net.seed()},
                          {"spectrogram_hash", spectrogram_hash},
                          {"meta", meta},
                          {"payload_bytes", payload.size()},
                          {"payload_hash", hash_hex(fnv1a(payload))}};
    const std::string text = header.dump();
    const std::uint64_t len = text.size();

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write model file " + path.string());
    }
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) {
        throw Error("failed writing model file " + path.string());
    }
}

ModelFile load_model(const std::filesystem::path& path, const std::optional<std::string>& expected_spectrogram_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CorruptModel("cannot open model file " + path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw CorruptModel(path.string() + ": not a model file");
    }
    std::uint64_t len = 0;
    std::memcpy(&len, bytes.data() + 8, sizeof len);
    if (len > bytes.size() - 16) {
        throw CorruptModel(path.string() + ": truncated header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(16, len));
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModel(path.string() + ": unreadable header: " + e.what());
    }
    const std::string payload = bytes.substr(16 + len);
    if (payload.size() != header.at("payload_bytes").get<std::size_t>()) {
        throw CorruptModel(path.string() + ": payload has " + std::to_string(payload.size()) + " bytes, header says " +
                           std::to_string(header.at("payload_bytes").get<std::size_t>()));
    }
    if (hash_hex(fnv1a(payload)) != header.at("payload_hash").get<std::string>()) {
        throw CorruptModel(path.string() + ": payload hash mismatch");
    }

    ModelFile file{Network(header.at("input_shape").get<Shape>(), header.at("layers").get<std::vector<LayerSpec>>(),
                           header.at("seed").get<std::uint64_t>()),
                   header.at("spectrogram_hash").get<std::string>(), header.value("meta", nlohmann::json::object()),
                   {}};
    std::size_t offset = 0;
    for (Parameter* p : file.network.parameters()) {
        const std::size_t n = p->value.size() * sizeof(float);
        if (offset + n > payload.size()) {
            throw CorruptModel(path.string() + ": payload shorter than the declared layers");
        }
        std::memcpy(p->value.values.data(), payload.data() + offset, n);
        offset += n;
    }
    if (offset != payload.size()) {
        throw CorruptModel(path.string() + ": payload longer than the declared layers");
    }
    if (expected_spectrogram_hash && *expected_spectrogram_hash != file.spectrogram_hash) {
        file.warnings.push_back("model " + path.string() + " was trained on spectrogram config " +
                                file.spectrogram_hash + ", current config is " + *expected_spectrogram_hash);
    }
    return file;
}

}  // namespace boweldet
