#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "boweldet/audio.hpp"
#include "boweldet/config.hpp"
#include "boweldet/inference.hpp"
#include "boweldet/metrics.hpp"
#include "boweldet/store.hpp"

namespace boweldet {

/// Caps OpenMP threads at BOWELDET_THREADS when that variable is set.
void apply_thread_cap();

/// Low-pass, log-mel, per-segment min-max normalization.
Spectrogram compute_spectrogram(const PcmSignal& signal, const SpectrogramConfig& cfg);

std::string spectrogram_hash(const SpectrogramConfig& cfg);

// -- preprocess -------------------------------------------------------------

struct PreprocessReport {
    std::size_t processed = 0;
    std::vector<SkipEntry> skipped;
    DatasetSplit split;
};

/// Converts every <id>.wav in data_dir with a matching <id>.txt annotation
/// into the spectrogram store under work_dir, and writes split.json.
/// Unreadable or unannotated files are skipped and reported.
PreprocessReport preprocess(const RunConfig& cfg, std::ostream* log = nullptr);

DatasetSplit load_split(const std::filesystem::path& work_dir);
std::vector<std::string> split_ids(const DatasetSplit& split, const std::string& name);

// -- train ------------------------------------------------------------------

enum class TrainTarget { classifier, regressor, both };

TrainTarget parse_train_target(const std::string& name);

struct TrainReport {
    std::filesystem::path model_dir;
    std::size_t classifier_params = 0;
    std::size_t regressor_params = 0;
    int classifier_best_epoch = -1;
    int regressor_best_epoch = -1;
};

std::filesystem::path model_dir(const std::filesystem::path& work_dir, std::uint64_t seed);

/// Trains with cfg.train.seed and writes checkpoints plus history CSVs to
/// model_dir(work_dir, seed).
TrainReport train_models(const RunConfig& cfg, TrainTarget target, std::ostream* log = nullptr);

Detector load_detector(const std::filesystem::path& dir, const std::string& spectrogram_hash,
                       std::ostream* log = nullptr);

// -- predict ----------------------------------------------------------------

/// Per-recording interval lists read from or written to CSV.
struct IntervalTable {
    std::string run_hash;
    std::string spectrogram_hash;
    std::map<std::string, std::vector<Interval>> by_id;
};

IntervalTable read_intervals_csv(const std::filesystem::path& path);

struct RecordingPrediction {
    std::string id;
    std::vector<Detection> detections;
    IntervalSet intervals;
};

struct PredictionRun {
    std::string run_hash;
    std::string spectrogram_hash;
    std::vector<RecordingPrediction> recordings;
};

PredictionRun predict_recordings(const Detector& detector, std::span<const RecordingView> recordings,
                                 const PredictConfig& cfg, const std::string& run_hash,
                                 const std::string& spectrogram_hash);

/// Replaces each recording's intervals by meta_combine(model, external).
void apply_meta(PredictionRun& run, MetaMode mode, const IntervalTable& external);

void write_detections_csv(std::ostream& out, const PredictionRun& run);
void write_intervals_csv(std::ostream& out, const PredictionRun& run);
IntervalTable to_table(const PredictionRun& run);

// -- evaluate ---------------------------------------------------------------

/// Scores predicted intervals against the filtered ground truth of `ids`.
/// Recordings absent from the predictions count as predicting nothing.
/// Prediction ids outside `ids` raise EvaluationError; tables whose
/// spectrogram hash differs from the store's are refused unless `force`.
MetricsRow evaluate_tables(const SpectrogramStore& store, const std::vector<std::string>& ids,
                           const EventFilter& filter, const std::vector<IntervalTable>& tables, bool force);

/// "# run_hash=...,spectrogram_hash=..." line that heads every CSV output.
void write_hash_line(std::ostream& out, const std::string& run_hash, const std::string& spectrogram_hash);
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const std::string& label, const MetricsRow& row);

// -- sweep ------------------------------------------------------------------

struct SweepRun {
    double threshold = 0.0;
    int overlap = 0;
    double vote_fraction = 0.0;
    std::uint64_t seed = 0;
    std::optional<MetricsRow> metrics;
    std::string error;
};

struct SweepCell {
    double threshold = 0.0;
    int overlap = 0;
    double vote_fraction = 0.0;
    std::size_t seeds_ok = 0;
    /// Mean over the seeds that succeeded.
    std::optional<MetricsRow> mean;
    std::string error;
};

struct SweepResult {
    std::vector<SweepRun> runs;
    std::vector<SweepCell> cells;
};

/// Trains (or reuses) one detector per seed, scores the test split once per
/// overlap and evaluates every grid cell. Cell order: threshold, overlap,
/// vote fraction. A failing cell is recorded and the sweep continues.
SweepResult run_sweep(const RunConfig& cfg, std::ostream* log = nullptr);

void write_sweep_runs_csv(std::ostream& out, const SweepResult& result);
void write_sweep_cells_csv(std::ostream& out, const SweepResult& result);

// -- stats ------------------------------------------------------------------

nlohmann::json dataset_stats(const SpectrogramStore& store, const DatasetSplit& split, const EventFilter& filter);

}  // namespace boweldet
