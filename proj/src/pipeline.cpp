#include "boweldet/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <omp.h>

#include "boweldet/errors.hpp"
#include "boweldet/hash.hpp"

namespace boweldet {

namespace fs = std::filesystem;

void apply_thread_cap() {
    const char* env = std::getenv("BOWELDET_THREADS");
    if (!env || !*env) return;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) {
        throw InvalidConfig(std::string("BOWELDET_THREADS must be a positive integer, got '") + env + "'");
    }
    omp_set_num_threads(static_cast<int>(std::min<long>(n, omp_get_num_procs())));
}

Spectrogram compute_spectrogram(const PcmSignal& signal, const SpectrogramConfig& cfg) {
    cfg.validate(signal.sample_rate);
    const PcmSignal& filtered = cfg.low_pass_hz > 0.0 ? low_pass(signal, cfg.low_pass_hz) : signal;
    return normalize_segments(mel_spectrogram(filtered, cfg), cfg.segment_norm_s);
}

std::string spectrogram_hash(const SpectrogramConfig& cfg) { return hash_hex(cfg.hash()); }

// -- preprocess -------------------------------------------------------------

namespace {

struct FileResult {
    std::optional<Spectrogram> spec;
    std::vector<SoundEvent> events;
    double duration_s = 0.0;
    std::string skip_reason;
    std::exception_ptr fatal;
};

FileResult process_file(const fs::path& wav, const SpectrogramConfig& cfg) {
    FileResult r;
    fs::path ann = wav;
    ann.replace_extension(".txt");
    if (!fs::exists(ann)) {
        r.skip_reason = "missing annotation " + ann.filename().string();
        return r;
    }
    try {
        r.events = read_annotations(ann);
        const PcmSignal signal = read_wav(wav);
        r.duration_s = signal.duration_s();
        r.spec = compute_spectrogram(signal, cfg);
    } catch (const UserError& e) {
        r.spec.reset();
        r.skip_reason = e.what();
    } catch (...) {
        r.fatal = std::current_exception();
    }
    return r;
}

std::string hash_line(const std::string& run_hash, const std::string& spec_hash) {
    return "# run_hash=" + run_hash + ",spectrogram_hash=" + spec_hash;
}

void say(std::ostream* log, const std::string& line) {
    if (log) *log << line << '\n';
}

}  // namespace

PreprocessReport preprocess(const RunConfig& cfg, std::ostream* log) {
    const fs::path& dir = cfg.dataset.data_dir;
    if (dir.empty() || !fs::is_directory(dir)) {
        throw InvalidConfig("data directory '" + dir.string() + "' does not exist");
    }
    std::vector<fs::path> wavs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".wav") wavs.push_back(entry.path());
    }
    std::sort(wavs.begin(), wavs.end());

    std::vector<FileResult> results(wavs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(wavs.size()); ++i) {
        results[static_cast<std::size_t>(i)] = process_file(wavs[static_cast<std::size_t>(i)], cfg.spectrogram);
    }

    SpectrogramStore store;
    store.config = cfg.spectrogram;
    store.config_hash = spectrogram_hash(cfg.spectrogram);
    store.n_mels = cfg.spectrogram.n_mels;
    store.time_bins_per_s = cfg.spectrogram.time_bins_per_s;
    PreprocessReport report;
    for (std::size_t i = 0; i < wavs.size(); ++i) {
        auto& r = results[i];
        if (r.fatal) std::rethrow_exception(r.fatal);
        if (!r.spec) {
            store.skipped.push_back({wavs[i].string(), r.skip_reason});
            say(log, "skip " + wavs[i].filename().string() + ": " + r.skip_reason);
            continue;
        }
        StoreEntry e;
        e.id = wavs[i].stem().string();
        e.audio_path = fs::absolute(wavs[i]);
        e.row_offset = store.total_rows();
        e.rows = r.spec->rows;
        e.duration_s = r.duration_s;
        e.events = std::move(r.events);
        store.values.insert(store.values.end(), r.spec->values.begin(), r.spec->values.end());
        store.entries.push_back(std::move(e));
    }
    report.processed = store.entries.size();
    report.skipped = store.skipped;

    const auto recs = store.annotated(cfg.dataset.filter);
    report.split = split_dataset(recs, cfg.dataset.ratios, cfg.dataset.split_seed);
    for (const auto& w : report.split.warnings) say(log, "warning: " + w);

    save_store(cfg.work_dir, store);
    std::ofstream(cfg.work_dir / "split.json") << nlohmann::json(report.split).dump(2) << '\n';
    say(log, "preprocessed " + std::to_string(report.processed) + " recordings, skipped " +
                 std::to_string(report.skipped.size()));
    return report;
}

DatasetSplit load_split(const fs::path& work_dir) {
    std::ifstream in(work_dir / "split.json");
    if (!in) throw InvalidConfig("no split.json in " + work_dir.string() + " (run preprocess first)");
    return nlohmann::json::parse(in).get<DatasetSplit>();
}

std::vector<std::string> split_ids(const DatasetSplit& split, const std::string& name) {
    if (name == "train") return split.train;
    if (name == "valid") return split.valid;
    if (name == "test") return split.test;
    if (name == "all") {
        std::vector<std::string> all = split.train;
        all.insert(all.end(), split.valid.begin(), split.valid.end());
        all.insert(all.end(), split.test.begin(), split.test.end());
        return all;
    }
    throw InvalidConfig("unknown split '" + name + "' (train, valid, test, all)");
}

// -- train ------------------------------------------------------------------

TrainTarget parse_train_target(const std::string& name) {
    if (name == "classifier") return TrainTarget::classifier;
    if (name == "regressor") return TrainTarget::regressor;
    if (name == "both") return TrainTarget::both;
    throw InvalidConfig("unknown model '" + name + "' (classifier, regressor, both)");
}

fs::path model_dir(const fs::path& work_dir, std::uint64_t seed) {
    return work_dir / "models" / ("seed_" + std::to_string(seed));
}

TrainReport train_models(const RunConfig& cfg, TrainTarget target, std::ostream* log) {
    const SpectrogramStore store = load_store(cfg.work_dir);
    const DatasetSplit split = load_split(cfg.work_dir);
    const auto train_views = store.views(split.train, cfg.dataset.filter);
    const auto valid_views = store.views(split.valid, cfg.dataset.filter);

    TrainReport report;
    report.model_dir = model_dir(cfg.work_dir, cfg.train.seed);
    fs::create_directories(report.model_dir);
    const std::string run_hash = cfg.hash();

    auto run = [&](const std::string& name, bool classifier) {
        const ModelConfig& model = classifier ? cfg.classifier : cfg.regressor;
        auto on_epoch = [&](const EpochRecord& r) {
            if (!log) return;
            *log << name << " epoch " << r.epoch << " train_loss " << r.train_loss << " valid_loss " << r.valid_loss
                 << " valid_metric " << r.valid_metric << '\n';
            log->flush();
        };
        TrainResult result = classifier ? train_classifier(train_views, valid_views, model, cfg.train, on_epoch)
                                        : train_regressor(train_views, valid_views, model, cfg.train, on_epoch);
        nlohmann::json meta{{"run_hash", run_hash},
                            {"train_hash", cfg.training_hash()},
                            {"model", model},
                            {"train", cfg.train},
                            {"best_epoch", result.best_epoch}};
        save_model(report.model_dir / (name + ".bwm"), result.network, store.config_hash, meta);
        std::ofstream hist(report.model_dir / (name + "_history.csv"));
        hist << hash_line(run_hash, store.config_hash) << '\n';
        write_history_csv(hist, result.history);
        const std::size_t params = result.network.param_count();
        say(log, name + ": " + std::to_string(params) + " parameters, best epoch " +
                     std::to_string(result.best_epoch));
        return std::pair{params, result.best_epoch};
    };

    if (target != TrainTarget::regressor) {
        std::tie(report.classifier_params, report.classifier_best_epoch) = run("classifier", true);
    }
    if (target != TrainTarget::classifier) {
        std::tie(report.regressor_params, report.regressor_best_epoch) = run("regressor", false);
    }
    return report;
}

Detector load_detector(const fs::path& dir, const std::string& spectrogram_hash, std::ostream* log) {
    ModelFile c = load_model(dir / "classifier.bwm", spectrogram_hash);
    ModelFile r = load_model(dir / "regressor.bwm", spectrogram_hash);
    for (const auto* f : {&c, &r}) {
        for (const auto& w : f->warnings) say(log, "warning: " + w);
    }
    if (c.spectrogram_hash != r.spectrogram_hash) {
        throw IncompatibleModel("classifier and regressor were trained on different spectrogram configs");
    }
    return Detector{std::move(c.network), std::move(r.network), c.spectrogram_hash};
}

// -- predict ----------------------------------------------------------------

namespace {

void parse_hash_line(const std::string& line, IntervalTable& table) {
    std::stringstream ss(line.substr(1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(item.substr(0, eq));
        const std::string value = trim(item.substr(eq + 1));
        if (key == "run_hash") table.run_hash = value;
        if (key == "spectrogram_hash") table.spectrogram_hash = value;
    }
}

}  // namespace

IntervalTable read_intervals_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    IntervalTable table;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            parse_hash_line(line, table);
            continue;
        }
        if (!header_seen && line.rfind("recording_id", 0) == 0) {
            header_seen = true;
            continue;
        }
        std::stringstream ss(line);
        std::string id, a, b;
        if (!std::getline(ss, id, ',') || !std::getline(ss, a, ',') || !std::getline(ss, b, ',')) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected id,start_s,end_s");
        }
        Interval iv;
        try {
            iv = {std::stod(a), std::stod(b)};
        } catch (const std::exception&) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number");
        }
        if (!(iv.start_s >= 0.0) || !(iv.end_s > iv.start_s)) {
            throw InvalidInterval(path.string() + ":" + std::to_string(line_no) + ": invalid interval");
        }
        table.by_id[id].push_back(iv);
    }
    return table;
}

PredictionRun predict_recordings(const Detector& detector, std::span<const RecordingView> recordings,
                                 const PredictConfig& cfg, const std::string& run_hash,
                                 const std::string& spec_hash) {
    cfg.validate();
    if (detector.spectrogram_hash != spec_hash) {
        throw IncompatibleModel("models were trained on spectrogram config " + detector.spectrogram_hash +
                                " but the data uses " + spec_hash);
    }
    PredictionRun run{run_hash, spec_hash, std::vector<RecordingPrediction>(recordings.size())};
    std::vector<std::exception_ptr> errors(recordings.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(recordings.size()); ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            const RecordingView& rec = recordings[k];
            auto& out = run.recordings[k];
            out.id = rec.id;
            out.detections = detect(detector, rec, spec_hash, cfg);
            out.intervals = aggregate(out.detections, cfg, rec.rows, rec.time_bins_per_s);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return run;
}

void apply_meta(PredictionRun& run, MetaMode mode, const IntervalTable& external) {
    for (auto& rec : run.recordings) {
        const auto it = external.by_id.find(rec.id);
        const IntervalSet ext = it == external.by_id.end() ? IntervalSet{} : IntervalSet(it->second);
        rec.intervals = meta_combine(mode, rec.intervals, ext);
    }
}

void write_detections_csv(std::ostream& out, const PredictionRun& run) {
    out << hash_line(run.run_hash, run.spectrogram_hash) << '\n';
    out << "recording_id,start_s,end_s,confidence\n";
    out << std::fixed << std::setprecision(6);
    for (const auto& rec : run.recordings) {
        for (const auto& d : rec.detections) {
            out << rec.id << ',' << d.interval.start_s << ',' << d.interval.end_s << ',' << d.confidence << '\n';
        }
    }
    out.unsetf(std::ios::floatfield);
}

void write_intervals_csv(std::ostream& out, const PredictionRun& run) {
    out << hash_line(run.run_hash, run.spectrogram_hash) << '\n';
    out << "recording_id,start_s,end_s\n";
    out << std::setprecision(17);
    for (const auto& rec : run.recordings) {
        for (const auto& iv : rec.intervals) {
            out << rec.id << ',' << iv.start_s << ',' << iv.end_s << '\n';
        }
    }
}

IntervalTable to_table(const PredictionRun& run) {
    IntervalTable t{run.run_hash, run.spectrogram_hash, {}};
    for (const auto& rec : run.recordings) {
        t.by_id[rec.id] = rec.intervals.intervals();
    }
    return t;
}

// -- evaluate ---------------------------------------------------------------

MetricsRow evaluate_tables(const SpectrogramStore& store, const std::vector<std::string>& ids,
                           const EventFilter& filter, const std::vector<IntervalTable>& tables, bool force) {
    std::set<std::string> hashes;
    std::set<std::string> run_hashes;
    for (const auto& t : tables) {
        if (!t.spectrogram_hash.empty()) hashes.insert(t.spectrogram_hash);
        if (!t.run_hash.empty()) run_hashes.insert(t.run_hash);
    }
    if (!force) {
        if (run_hashes.size() > 1) {
            std::string msg = "predictions come from different runs:";
            for (const auto& h : run_hashes) msg += " " + h;
            throw EvaluationError(msg + " (pass --force to evaluate anyway)");
        }
        for (const auto& h : hashes) {
            if (h != store.config_hash) {
                throw EvaluationError("predictions were made with spectrogram config " + h +
                                      " but the ground truth store uses " + store.config_hash +
                                      " (pass --force to evaluate anyway)");
            }
        }
    }
    const std::set<std::string> known(ids.begin(), ids.end());
    std::vector<std::string> unknown;
    std::map<std::string, std::vector<Interval>> merged;
    for (const auto& t : tables) {
        for (const auto& [id, ivs] : t.by_id) {
            if (!known.count(id)) {
                unknown.push_back(id);
                continue;
            }
            auto& dst = merged[id];
            dst.insert(dst.end(), ivs.begin(), ivs.end());
        }
    }
    if (!unknown.empty()) {
        std::sort(unknown.begin(), unknown.end());
        unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
        std::string msg = "predictions for recordings not in the ground truth:";
        for (const auto& id : unknown) msg += " " + id;
        throw EvaluationError(msg);
    }
    EvaluationTotals totals;
    for (const auto& view : store.views(ids, filter)) {
        const auto it = merged.find(view.id);
        const IntervalSet pred = it == merged.end() ? IntervalSet{} : IntervalSet(it->second);
        totals.add(pred, view.events, view.rows, view.time_bins_per_s);
    }
    return summarize(totals);
}

void write_hash_line(std::ostream& out, const std::string& run_hash, const std::string& spec_hash) {
    out << hash_line(run_hash, spec_hash) << '\n';
}

void write_metrics_header(std::ostream& out) {
    out << "model,avg_iou,accuracy,precision,recall,specificity,f1_score\n";
}

namespace {

void metric_fields(std::ostream& out, const MetricsRow& row) {
    out << std::fixed << std::setprecision(6) << row.avg_iou << ',' << row.bins.accuracy << ',' << row.bins.precision
        << ',' << row.bins.recall << ',' << row.bins.specificity << ',' << row.bins.f1;
    out.unsetf(std::ios::floatfield);
}

std::string csv_safe(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

}  // namespace

void write_metrics_row(std::ostream& out, const std::string& label, const MetricsRow& row) {
    out << label << ',';
    metric_fields(out, row);
    out << '\n';
}

// -- sweep ------------------------------------------------------------------

namespace {

Detector detector_for_seed(const RunConfig& base, std::uint64_t seed, const SpectrogramStore& store,
                           std::ostream* log) {
    RunConfig cfg = base;
    cfg.train.seed = seed;
    const fs::path dir = model_dir(cfg.work_dir, seed);
    bool reuse = fs::exists(dir / "classifier.bwm") && fs::exists(dir / "regressor.bwm");
    if (reuse) {
        try {
            Detector d = load_detector(dir, store.config_hash, log);
            const ModelFile c = load_model(dir / "classifier.bwm");
            if (c.meta.value("train_hash", std::string()) != cfg.training_hash() ||
                d.spectrogram_hash != store.config_hash) {
                reuse = false;
            } else {
                say(log, "seed " + std::to_string(seed) + ": reusing models in " + dir.string());
                return d;
            }
        } catch (const CorruptModel&) {
            reuse = false;
        }
    }
    say(log, "seed " + std::to_string(seed) + ": training");
    train_models(cfg, TrainTarget::both, log);
    return load_detector(dir, store.config_hash, log);
}

MetricsRow mean_rows(const std::vector<MetricsRow>& rows) {
    MetricsRow m;
    for (const auto& r : rows) {
        m.avg_iou += r.avg_iou;
        m.bins.accuracy += r.bins.accuracy;
        m.bins.precision += r.bins.precision;
        m.bins.recall += r.bins.recall;
        m.bins.specificity += r.bins.specificity;
        m.bins.f1 += r.bins.f1;
    }
    const double n = static_cast<double>(rows.size());
    m.avg_iou /= n;
    m.bins.accuracy /= n;
    m.bins.precision /= n;
    m.bins.recall /= n;
    m.bins.specificity /= n;
    m.bins.f1 /= n;
    return m;
}

}  // namespace

SweepResult run_sweep(const RunConfig& cfg, std::ostream* log) {
    const SpectrogramStore store = load_store(cfg.work_dir);
    const DatasetSplit split = load_split(cfg.work_dir);
    const auto test_views = store.views(split.test, cfg.dataset.filter);
    const SweepGrid& grid = cfg.sweep;
    double regress_above = 1.0;
    for (double t : grid.thresholds) regress_above = std::min(regress_above, t);

    SweepResult result;
    // runs indexed [cell][seed]
    const std::size_t n_cells = grid.cells();
    std::vector<std::vector<SweepRun>> runs(n_cells);
    auto cell_index = [&](std::size_t ti, std::size_t oi, std::size_t vi) {
        return (ti * grid.overlaps.size() + oi) * grid.vote_fractions.size() + vi;
    };

    for (std::uint64_t seed : grid.seeds) {
        std::optional<Detector> detector;
        std::string seed_error;
        try {
            detector = detector_for_seed(cfg, seed, store, log);
        } catch (const Error& e) {
            seed_error = e.what();
        }
        for (std::size_t oi = 0; oi < grid.overlaps.size(); ++oi) {
            PredictConfig pc = cfg.predict;
            pc.overlap = grid.overlaps[oi];
            std::vector<WindowScores> scores;
            std::string overlap_error = seed_error;
            if (overlap_error.empty()) {
                try {
                    scores.resize(test_views.size());
                    for (std::size_t r = 0; r < test_views.size(); ++r) {
                        scores[r] = score_windows(*detector, test_views[r], pc, regress_above);
                    }
                } catch (const Error& e) {
                    overlap_error = e.what();
                }
            }
            const std::size_t n_sub = grid.thresholds.size() * grid.vote_fractions.size();
            std::vector<SweepRun> sub(n_sub);
#pragma omp parallel for schedule(dynamic)
            for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n_sub); ++k) {
                const std::size_t ti = static_cast<std::size_t>(k) / grid.vote_fractions.size();
                const std::size_t vi = static_cast<std::size_t>(k) % grid.vote_fractions.size();
                SweepRun run{grid.thresholds[ti], pc.overlap, grid.vote_fractions[vi], seed, std::nullopt,
                             overlap_error};
                if (run.error.empty()) {
                    try {
                        PredictConfig cell = pc;
                        cell.threshold = run.threshold;
                        cell.vote_fraction = run.vote_fraction;
                        cell.validate();
                        EvaluationTotals totals;
                        for (std::size_t r = 0; r < test_views.size(); ++r) {
                            const auto dets = detections_from_scores(scores[r], cell.threshold);
                            const auto iv =
                                aggregate(dets, cell, test_views[r].rows, test_views[r].time_bins_per_s);
                            totals.add(iv, test_views[r].events, test_views[r].rows, test_views[r].time_bins_per_s);
                        }
                        run.metrics = summarize(totals);
                    } catch (const std::exception& e) {
                        run.error = e.what();
                    }
                }
                sub[static_cast<std::size_t>(k)] = std::move(run);
            }
            for (std::size_t k = 0; k < n_sub; ++k) {
                const std::size_t ti = k / grid.vote_fractions.size();
                const std::size_t vi = k % grid.vote_fractions.size();
                runs[cell_index(ti, oi, vi)].push_back(std::move(sub[k]));
            }
        }
        say(log, "seed " + std::to_string(seed) + ": evaluated " + std::to_string(n_cells) + " cells");
    }

    for (std::size_t ti = 0; ti < grid.thresholds.size(); ++ti) {
        for (std::size_t oi = 0; oi < grid.overlaps.size(); ++oi) {
            for (std::size_t vi = 0; vi < grid.vote_fractions.size(); ++vi) {
                const auto& cell_runs = runs[cell_index(ti, oi, vi)];
                SweepCell cell{grid.thresholds[ti], grid.overlaps[oi], grid.vote_fractions[vi], 0, std::nullopt, {}};
                std::vector<MetricsRow> ok;
                for (const auto& r : cell_runs) {
                    if (r.metrics) {
                        ok.push_back(*r.metrics);
                    } else if (cell.error.empty()) {
                        cell.error = r.error;
                    }
                    result.runs.push_back(r);
                }
                cell.seeds_ok = ok.size();
                if (!ok.empty()) cell.mean = mean_rows(ok);
                result.cells.push_back(std::move(cell));
            }
        }
    }
    return result;
}

void write_sweep_runs_csv(std::ostream& out, const SweepResult& result) {
    out << "threshold,overlap,vote_fraction,seed,avg_iou,accuracy,precision,recall,specificity,f1_score,error\n";
    for (const auto& r : result.runs) {
        out << r.threshold << ',' << r.overlap << ',' << r.vote_fraction << ',' << r.seed << ',';
        if (r.metrics) {
            metric_fields(out, *r.metrics);
            out << ",\n";
        } else {
            out << "ERROR,ERROR,ERROR,ERROR,ERROR,ERROR," << csv_safe(r.error) << '\n';
        }
    }
}

void write_sweep_cells_csv(std::ostream& out, const SweepResult& result) {
    out << "threshold,overlap,vote_fraction,seeds,avg_iou,accuracy,precision,recall,specificity,f1_score,error\n";
    for (const auto& c : result.cells) {
        out << c.threshold << ',' << c.overlap << ',' << c.vote_fraction << ',' << c.seeds_ok << ',';
        if (c.mean) {
            metric_fields(out, *c.mean);
            out << ',' << csv_safe(c.error) << '\n';
        } else {
            out << "ERROR,ERROR,ERROR,ERROR,ERROR,ERROR," << csv_safe(c.error) << '\n';
        }
    }
}

// -- stats ------------------------------------------------------------------

nlohmann::json dataset_stats(const SpectrogramStore& store, const DatasetSplit& split, const EventFilter& filter) {
    std::map<std::string, std::size_t> by_kind;
    std::size_t events = 0;
    std::size_t kept = 0;
    double total_s = 0.0;
    double kept_duration = 0.0;
    double min_d = 0.0;
    double max_d = 0.0;
    for (const auto& e : store.entries) {
        total_s += e.duration_s;
        for (const auto& ev : e.events) {
            ++events;
            ++by_kind[std::string(to_string(ev.kind))];
        }
        for (const auto& ev : filter_events(e.events, filter)) {
            min_d = kept == 0 ? ev.duration() : std::min(min_d, ev.duration());
            max_d = std::max(max_d, ev.duration());
            kept_duration += ev.duration();
            ++kept;
        }
    }
    return {{"recordings", store.entries.size()},
            {"skipped", store.skipped.size()},
            {"total_duration_s", total_s},
            {"events", events},
            {"events_by_kind", by_kind},
            {"filtered_events", kept},
            {"filtered_duration_s",
             {{"min", min_d}, {"max", max_d}, {"mean", kept ? kept_duration / static_cast<double>(kept) : 0.0}}},
            {"split", {{"train", split.train.size()}, {"valid", split.valid.size()}, {"test", split.test.size()}}},
            {"spectrogram_hash", store.config_hash}};
}

}  // namespace boweldet
