#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "boweldet/errors.hpp"
#include "boweldet/models.hpp"
#include "boweldet/rng.hpp"
#include "support.hpp"

using namespace boweldet;

namespace {

// Closed-form count for unpadded stride-1 convs, floor pooling after the
// first `pooled` blocks, dense stack and head.
std::size_t expected_params(const ModelConfig& cfg) {
    std::size_t h = cfg.input_rows;
    std::size_t w = cfg.input_mels;
    std::size_t ch = 1;
    std::size_t total = 0;
    const std::size_t pooled =
        cfg.pooled_blocks < 0 ? cfg.conv_filters.size() : static_cast<std::size_t>(cfg.pooled_blocks);
    for (std::size_t i = 0; i < cfg.conv_filters.size(); ++i) {
        const std::size_t f = cfg.conv_filters[i];
        total += f * ch * cfg.kernel.first * cfg.kernel.second + f;
        ch = f;
        h = h - cfg.kernel.first + 1;
        w = w - cfg.kernel.second + 1;
        if (i < pooled) {
            h /= cfg.pool.first;
            w /= cfg.pool.second;
        }
    }
    std::size_t in = ch * h * w;
    for (std::size_t u : cfg.dense_units) {
        total += in * u + u;
        in = u;
    }
    const std::size_t out = cfg.head == HeadKind::classifier ? 1 : 2;
    return total + in * out + out;
}

Tensor random_batch(std::size_t n, const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    Tensor x({n, 1, cfg.input_rows, cfg.input_mels});
    for (auto& v : x.values) v = static_cast<float>(rng.uniform(0.0, 1.0));
    return x;
}

}  // namespace

TEST_CASE("default parameter counts match the closed form") {
    const auto cls = build_model(ModelConfig::classifier(), 42);
    const auto reg = build_model(ModelConfig::regressor(), 42);
    CHECK(cls.param_count() == expected_params(ModelConfig::classifier()));
    CHECK(reg.param_count() == expected_params(ModelConfig::regressor()));
    CHECK(cls.param_count() == 413937);
    CHECK(reg.param_count() == 955890);
}

TEST_CASE("head contracts") {
    const auto cfg = ModelConfig::classifier();
    const auto cls = build_model(cfg, 1);
    const Tensor x = random_batch(8, cfg, 3);
    const Tensor p = cls.predict(x);
    REQUIRE(p.shape == Shape{8, 1});
    for (float v : p.values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    auto rcfg = ModelConfig::regressor();
    auto reg = build_model(rcfg, 2);
    // push the pre-activations far out to probe the saturated ends
    for (Parameter* prm : reg.parameters()) {
        for (auto& v : prm->value.values) v *= 8.0f;
    }
    const Tensor r = reg.predict(random_batch(16, rcfg, 4));
    REQUIRE(r.shape == Shape{16, 2});
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(r.values[2 * i] >= -0.5f);
        CHECK(r.values[2 * i] <= 0.5f);
        CHECK(r.values[2 * i + 1] >= 0.0f);
        CHECK(r.values[2 * i + 1] <= 1.0f);
    }
}

TEST_CASE("variants build and keep the head contract") {
    for (const char* name : {"baseline", "bigger", "smaller", "increased_cnn_layers"}) {
        for (HeadKind head : {HeadKind::classifier, HeadKind::regressor}) {
            CAPTURE(name);
            const auto cfg = ModelConfig::variant(name, head);
            const auto net = build_model(cfg, 5);
            CHECK(net.param_count() == expected_params(cfg));
            const Tensor y = net.predict(random_batch(2, cfg, 6));
            CHECK(y.shape == Shape{2, head == HeadKind::classifier ? 1u : 2u});
        }
    }
    CHECK_THROWS_AS(ModelConfig::variant("huge", HeadKind::classifier), InvalidConfig);
}

TEST_CASE("variants expressible as json without code changes") {
    ModelConfig cfg = nlohmann::json{{"head", "regressor"}, {"variant", "smaller"}}.get<ModelConfig>();
    CHECK(cfg.conv_filters == std::vector<std::size_t>{4, 8, 8});
    CHECK(cfg.head == HeadKind::regressor);
    const nlohmann::json j = cfg;
    CHECK(j.get<ModelConfig>().dense_units == cfg.dense_units);
}

TEST_CASE("pooling underflow and empty stacks are rejected") {
    ModelConfig cfg = ModelConfig::classifier();
    cfg.input_rows = 12;
    CHECK_THROWS_AS(build_model(cfg, 1), InvalidConfig);
    cfg = ModelConfig::classifier();
    cfg.input_mels = 3;
    CHECK_THROWS_AS(build_model(cfg, 1), InvalidConfig);
    cfg = ModelConfig::classifier();
    cfg.conv_filters.clear();
    CHECK_THROWS_AS(build_model(cfg, 1), InvalidConfig);
    cfg = ModelConfig::classifier();
    cfg.dense_units.clear();
    CHECK_THROWS_AS(build_model(cfg, 1), InvalidConfig);
}

TEST_CASE("initialization is deterministic in the seed") {
    const auto cfg = ModelConfig::variant("smaller", HeadKind::classifier);
    const auto a = build_model(cfg, 11);
    const auto b = build_model(cfg, 11);
    const auto c = build_model(cfg, 12);
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    const auto pc = c.parameters();
    bool differs = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->value.values == pb[i]->value.values);
        differs = differs || pa[i]->value.values != pc[i]->value.values;
    }
    CHECK(differs);
}

TEST_CASE("save/load round trip is bit-identical") {
    testing::TempDir dir("models_roundtrip");
    const auto cfg = ModelConfig::variant("smaller", HeadKind::regressor);
    const auto net = build_model(cfg, 21);
    const auto path = dir.path / "reg.bwm";
    save_model(path, net, "abc123", {{"note", "x"}});
    const ModelFile file = load_model(path, std::string("abc123"));
    CHECK(file.warnings.empty());
    CHECK(file.spectrogram_hash == "abc123");
    CHECK(file.meta.at("note") == "x");
    CHECK(file.network.specs() == net.specs());
    const Tensor x = random_batch(4, cfg, 22);
    CHECK(file.network.predict(x).values == net.predict(x).values);

    // saving the loaded copy reproduces the file byte for byte
    const auto again = dir.path / "again.bwm";
    save_model(again, file.network, "abc123", {{"note", "x"}});
    CHECK(testing::read_bytes(path) == testing::read_bytes(again));
}

TEST_CASE("damaged files raise CorruptModel") {
    testing::TempDir dir("models_damaged");
    const auto net = build_model(ModelConfig::variant("smaller", HeadKind::classifier), 3);
    const auto path = dir.path / "m.bwm";
    save_model(path, net, "h");
    const std::string bytes = testing::read_bytes(path);

    const auto truncated = dir.path / "t.bwm";
    std::ofstream(truncated, std::ios::binary) << bytes.substr(0, bytes.size() - 7);
    CHECK_THROWS_AS(load_model(truncated), CorruptModel);

    std::string flipped = bytes;
    flipped[flipped.size() - 3] = static_cast<char>(flipped[flipped.size() - 3] ^ 0x10);
    const auto bad = dir.path / "f.bwm";
    std::ofstream(bad, std::ios::binary) << flipped;
    CHECK_THROWS_AS(load_model(bad), CorruptModel);

    const auto junk = dir.path / "j.bwm";
    std::ofstream(junk, std::ios::binary) << "not a model";
    CHECK_THROWS_AS(load_model(junk), CorruptModel);
    CHECK_THROWS_AS(load_model(dir.path / "missing.bwm"), CorruptModel);
}

TEST_CASE("spectrogram hash mismatch is a warning") {
    testing::TempDir dir("models_hashwarn");
    const auto net = build_model(ModelConfig::variant("smaller", HeadKind::classifier), 3);
    const auto path = dir.path / "m.bwm";
    save_model(path, net, "old");
    const ModelFile file = load_model(path, std::string("new"));
    REQUIRE(file.warnings.size() == 1);
    CHECK(file.warnings[0].find("old") != std::string::npos);
    CHECK(file.warnings[0].find("new") != std::string::npos);
}
