#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "boweldet/dataset.hpp"
#include "boweldet/layers.hpp"
#include "boweldet/losses.hpp"
#include "boweldet/models.hpp"

namespace boweldet {

enum class RegressionLossKind { iou, mse };

struct TrainConfig {
    int epochs = 250;
    int steps_per_epoch = 100;
    int batch_size = 256;
    double lr = 1e-4;
    double dropout_p = 0.2;
    double weight_decay = 1e-4;
    double w_pos = 3.0;
    double gauss_std_max = 0.15;
    std::uint64_t seed = 42;
    ClassRatio class_ratio{1, 3};
    double alpha = 1.0;
    double beta = 1.0;
    RegressionLossKind regression_loss = RegressionLossKind::iou;
    /// Fixed validation windows drawn once per run.
    int valid_windows = 512;

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    /// Accuracy at p > 0.5 for the classifier, mean interval IoU for the regressor.
    double valid_metric = 0.0;
};

struct TrainResult {
    Network network;
    std::vector<EpochRecord> history;
    /// Epoch whose weights were returned; -1 when no epoch ran.
    int best_epoch = -1;
};

enum class Task { classify, regress };

using WindowStream = std::function<WindowSample()>;
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mean squared error over (offset, scale) pairs, for the MSE-loss variant.
LossResult mse_loss(std::span<const float> pred, std::span<const float> target);

/// Packs windows into a [N, 1, rows, mels] tensor.
Tensor batch_tensor(std::span<const WindowSample> samples);

/// Batch loss and per-output gradient for `task` under `cfg`.
LossResult task_loss(Task task, const Tensor& output, std::span<const WindowSample> samples, const TrainConfig& cfg);

/// Generic loop: epochs x steps_per_epoch Adam updates on batches drawn from
/// `stream` (Gaussian augmentation applied here), validation after every
/// epoch, and the lowest-validation-loss weights returned.
TrainResult train_network(Network network, Task task, const WindowStream& stream,
                          std::span<const WindowSample> validation, const TrainConfig& cfg,
                          const EpochCallback& on_epoch = {});

/// Classifier on class-balanced windows (cfg.class_ratio) with weighted BCE.
TrainResult train_classifier(std::span<const RecordingView> train, std::span<const RecordingView> valid,
                             ModelConfig model, const TrainConfig& cfg, const EpochCallback& on_epoch = {});
/// Regressor on positive windows only.
TrainResult train_regressor(std::span<const RecordingView> train, std::span<const RecordingView> valid,
                            ModelConfig model, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// CSV "epoch,train_loss,valid_loss,valid_metric".
void write_history_csv(std::ostream& out, std::span<const EpochRecord> history);

}  // namespace boweldet
