// boweldet: command-line front end for the bowel sound detector.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "boweldet/config.hpp"
#include "boweldet/errors.hpp"
#include "boweldet/pipeline.hpp"
#include "boweldet/synth.hpp"

namespace fs = std::filesystem;
using namespace boweldet;

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::string data_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;
    std::optional<double> vote_fraction;
    std::optional<int> overlap;
    std::optional<int> epochs;
    std::optional<int> steps;
    std::optional<int> batch_size;
    std::optional<double> lr;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON run config");
    cmd->add_option("--out", o.out, "work/output directory");
}

void add_predict_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--threshold", o.threshold, "classifier probability threshold");
    cmd->add_option("--vote-fraction", o.vote_fraction, "fraction of overlapping windows that must agree");
    cmd->add_option("--overlap", o.overlap, "windows covering each bin");
}

void add_train_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "training seed");
    cmd->add_option("--epochs", o.epochs);
    cmd->add_option("--steps", o.steps, "steps per epoch");
    cmd->add_option("--batch-size", o.batch_size);
    cmd->add_option("--lr", o.lr, "learning rate");
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
    if (!o.out.empty()) cfg.work_dir = o.out;
    if (!o.data_dir.empty()) cfg.dataset.data_dir = o.data_dir;
    if (o.seed) cfg.train.seed = *o.seed;
    if (o.threshold) cfg.predict.threshold = *o.threshold;
    if (o.vote_fraction) cfg.predict.vote_fraction = *o.vote_fraction;
    if (o.overlap) cfg.predict.overlap = *o.overlap;
    if (o.epochs) cfg.train.epochs = *o.epochs;
    if (o.steps) cfg.train.steps_per_epoch = *o.steps;
    if (o.batch_size) cfg.train.batch_size = *o.batch_size;
    if (o.lr) cfg.train.lr = *o.lr;
    cfg.finalize();
    return cfg;
}

std::ofstream open_out(const fs::path& path) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Bowel sound detection: preprocessing, training, prediction and evaluation"};
    app.require_subcommand(1);
    Overrides o;

    auto* pre = app.add_subcommand("preprocess", "build the spectrogram store and split");
    add_common(pre, o);
    pre->add_option("--data-dir", o.data_dir, "directory of <id>.wav + <id>.txt files");

    auto* stats = app.add_subcommand("dataset-stats", "summarize the preprocessed corpus");
    add_common(stats, o);

    std::string which = "both";
    auto* train = app.add_subcommand("train", "train classifier and/or regressor");
    add_common(train, o);
    add_train_flags(train, o);
    train->add_option("--model", which, "classifier, regressor or both");

    std::string split = "test";
    std::string meta;
    std::string external;
    auto* predict = app.add_subcommand("predict", "detect bowel sounds in a split");
    add_common(predict, o);
    add_predict_flags(predict, o);
    predict->add_option("--seed", o.seed, "seed of the models to use");
    predict->add_option("--split", split, "train, valid, test or all");
    predict->add_option("--meta", meta, "combine with external intervals: intersect or sum");
    predict->add_option("--external-intervals", external, "CSV recording_id,start_s,end_s");

    std::vector<std::string> predictions;
    bool force = false;
    auto* evaluate = app.add_subcommand("evaluate", "score interval predictions against annotations");
    add_common(evaluate, o);
    evaluate->add_option("--predictions", predictions, "intervals CSV files (default <out>/intervals.csv)");
    evaluate->add_option("--split", split, "ground-truth split");
    evaluate->add_flag("--force", force, "accept predictions from other configs");

    auto* sweep = app.add_subcommand("sweep", "threshold x overlap x vote-fraction grid over seeds");
    add_common(sweep, o);
    add_train_flags(sweep, o);

    SynthSpec synth_spec;
    std::string synth_out = "synth";
    auto* synth = app.add_subcommand("synth", "write a synthetic burst corpus");
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--n", synth_spec.n_recordings, "number of recordings");
    synth->add_option("--seed", synth_spec.seed);
    synth->add_option("--snr-min", synth_spec.snr_min_db);
    synth->add_option("--snr-max", synth_spec.snr_max_db);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    apply_thread_cap();

    if (synth->parsed()) {
        const auto corpus = generate(synth_spec);
        write_corpus(synth_out, corpus);
        std::cout << "wrote " << corpus.size() << " recordings to " << synth_out << '\n';
        return 0;
    }

    RunConfig cfg = resolve(o);
    std::cout << "run_hash " << cfg.hash() << '\n';

    if (pre->parsed()) {
        const auto report = preprocess(cfg, &std::cout);
        std::cout << "train " << report.split.train.size() << " valid " << report.split.valid.size() << " test "
                  << report.split.test.size() << '\n';
        if (!report.skipped.empty()) {
            std::cout << report.skipped.size() << " warning(s): files skipped, see manifest.json\n";
        }
        return 0;
    }
    if (stats->parsed()) {
        const auto store = load_store(cfg.work_dir);
        std::cout << dataset_stats(store, load_split(cfg.work_dir), cfg.dataset.filter).dump(2) << '\n';
        return 0;
    }
    if (train->parsed()) {
        const auto report = train_models(cfg, parse_train_target(which), &std::cout);
        if (report.classifier_params) std::cout << "classifier parameters " << report.classifier_params << '\n';
        if (report.regressor_params) std::cout << "regressor parameters " << report.regressor_params << '\n';
        std::cout << "models in " << report.model_dir.string() << '\n';
        return 0;
    }
    if (predict->parsed()) {
        if (!meta.empty() && external.empty()) throw InvalidConfig("--meta needs --external-intervals");
        if (meta.empty() && !external.empty()) throw InvalidConfig("--external-intervals needs --meta");
        const auto store = load_store(cfg.work_dir);
        const auto ids = split_ids(load_split(cfg.work_dir), split);
        const auto views = store.views(ids, cfg.dataset.filter);
        const Detector detector = load_detector(model_dir(cfg.work_dir, cfg.train.seed), store.config_hash, &std::cerr);
        auto run = predict_recordings(detector, views, cfg.predict, cfg.hash(), store.config_hash);
        if (!meta.empty()) apply_meta(run, parse_meta_mode(meta), read_intervals_csv(external));
        auto det_out = open_out(cfg.work_dir / "detections.csv");
        write_detections_csv(det_out, run);
        auto iv_out = open_out(cfg.work_dir / "intervals.csv");
        write_intervals_csv(iv_out, run);
        std::size_t n = 0;
        for (const auto& r : run.recordings) n += r.intervals.size();
        std::cout << "predicted " << n << " intervals in " << run.recordings.size() << " recordings\n";
        return 0;
    }
    if (evaluate->parsed()) {
        const auto store = load_store(cfg.work_dir);
        const auto ids = split_ids(load_split(cfg.work_dir), split);
        if (predictions.empty()) predictions.push_back((cfg.work_dir / "intervals.csv").string());
        std::vector<IntervalTable> tables;
        for (const auto& p : predictions) tables.push_back(read_intervals_csv(p));
        const MetricsRow row = evaluate_tables(store, ids, cfg.dataset.filter, tables, force);
        const std::string run_hash = tables.size() == 1 ? tables.front().run_hash : cfg.hash();
        auto out = open_out(cfg.work_dir / "metrics.csv");
        for (std::ostream* s : {static_cast<std::ostream*>(&out), static_cast<std::ostream*>(&std::cout)}) {
            write_hash_line(*s, run_hash, store.config_hash);
            write_metrics_header(*s);
            write_metrics_row(*s, "bowelrcnn", row);
        }
        return 0;
    }
    if (sweep->parsed()) {
        const auto result = run_sweep(cfg, &std::cout);
        const auto store_hash = load_store(cfg.work_dir).config_hash;
        auto runs = open_out(cfg.work_dir / "sweep_runs.csv");
        write_hash_line(runs, cfg.hash(), store_hash);
        write_sweep_runs_csv(runs, result);
        auto cells = open_out(cfg.work_dir / "sweep.csv");
        write_hash_line(cells, cfg.hash(), store_hash);
        write_sweep_cells_csv(cells, result);
        std::size_t failed = 0;
        for (const auto& c : result.cells) failed += c.mean ? 0 : 1;
        std::cout << result.runs.size() << " evaluations, " << result.cells.size() << " cells, " << failed
                  << " failed\n";
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
}
