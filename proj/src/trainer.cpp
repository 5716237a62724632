#include "boweldet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "boweldet/errors.hpp"
#include "boweldet/losses.hpp"
#include "boweldet/optimizer.hpp"

namespace boweldet {

void TrainConfig::validate() const {
    if (epochs < 0 || steps_per_epoch <= 0 || batch_size <= 0 || valid_windows < 0) {
        throw InvalidConfig("epochs must be >= 0; steps_per_epoch and batch_size must be positive");
    }
    if (!(lr > 0.0)) {
        throw InvalidHyperparameter("learning rate must be positive");
    }
    if (!(dropout_p >= 0.0 && dropout_p < 1.0) || !(weight_decay >= 0.0) || !(w_pos > 0.0) ||
        !(gauss_std_max >= 0.0) || !(alpha >= 0.0) || !(beta >= 0.0)) {
        throw InvalidHyperparameter("dropout in [0,1), non-negative decay/noise/alpha/beta, positive w_pos required");
    }
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
    j = nlohmann::json{{"epochs", cfg.epochs},
                       {"steps_per_epoch", cfg.steps_per_epoch},
                       {"batch_size", cfg.batch_size},
                       {"lr", cfg.lr},
                       {"dropout_p", cfg.dropout_p},
                       {"weight_decay", cfg.weight_decay},
                       {"w_pos", cfg.w_pos},
                       {"gauss_std_max", cfg.gauss_std_max},
                       {"seed", cfg.seed},
                       {"class_ratio", {cfg.class_ratio.positive, cfg.class_ratio.negative}},
                       {"alpha", cfg.alpha},
                       {"beta", cfg.beta},
                       {"regression_loss", cfg.regression_loss == RegressionLossKind::iou ? "iou" : "mse"},
                       {"valid_windows", cfg.valid_windows}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
    TrainConfig d;
    cfg.epochs = j.value("epochs", d.epochs);
    cfg.steps_per_epoch = j.value("steps_per_epoch", d.steps_per_epoch);
    cfg.batch_size = j.value("batch_size", d.batch_size);
    cfg.lr = j.value("lr", d.lr);
    cfg.dropout_p = j.value("dropout_p", d.dropout_p);
    cfg.weight_decay = j.value("weight_decay", d.weight_decay);
    cfg.w_pos = j.value("w_pos", d.w_pos);
    cfg.gauss_std_max = j.value("gauss_std_max", d.gauss_std_max);
    cfg.seed = j.value("seed", d.seed);
    if (j.contains("class_ratio")) {
        cfg.class_ratio = {j["class_ratio"].at(0).get<int>(), j["class_ratio"].at(1).get<int>()};
    }
    cfg.alpha = j.value("alpha", d.alpha);
    cfg.beta = j.value("beta", d.beta);
    const std::string loss = j.value("regression_loss", std::string("iou"));
    if (loss != "iou" && loss != "mse") {
        throw InvalidConfig("regression_loss must be 'iou' or 'mse'");
    }
    cfg.regression_loss = loss == "iou" ? RegressionLossKind::iou : RegressionLossKind::mse;
    cfg.valid_windows = j.value("valid_windows", d.valid_windows);
}

LossResult mse_loss(std::span<const float> pred, std::span<const float> target) {
    if (pred.size() != target.size() || pred.size() % 2 != 0) {
        throw ShapeError("mse_loss expects matching (offset, scale) pairs");
    }
    LossResult r;
    r.grad.resize(pred.size());
    const std::size_t n = pred.size() / 2;
    if (n == 0) return r;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - target[i];
        r.loss += d * d;
        r.grad[i] = static_cast<float>(2.0 * d * inv_n);
    }
    r.loss *= inv_n;
    return r;
}

Tensor batch_tensor(std::span<const WindowSample> samples) {
    if (samples.empty()) {
        throw ShapeError("empty batch");
    }
    const auto rows = static_cast<std::size_t>(samples.front().rows);
    const auto mels = static_cast<std::size_t>(samples.front().n_mels);
    Tensor x({samples.size(), 1, rows, mels});
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].spec_slice.size() != rows * mels) {
            throw ShapeError("batch windows differ in shape");
        }
        std::copy(samples[i].spec_slice.begin(), samples[i].spec_slice.end(), x.item(i).begin());
    }
    return x;
}

LossResult task_loss(Task task, const Tensor& output, std::span<const WindowSample> samples, const TrainConfig& cfg) {
    if (task == Task::classify) {
        std::vector<float> labels(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) labels[i] = samples[i].positive ? 1.0f : 0.0f;
        return weighted_bce(output.values, labels, cfg.w_pos);
    }
    std::vector<float> targets(2 * samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        targets[2 * i] = samples[i].target_offset;
        targets[2 * i + 1] = samples[i].target_scale;
    }
    if (cfg.regression_loss == RegressionLossKind::mse) {
        return mse_loss(output.values, targets);
    }
    return regression_loss(output.values, targets, cfg.alpha, cfg.beta);
}

namespace {

struct Evaluation {
    double loss = 0.0;
    double metric = 0.0;
};

Evaluation evaluate(const Network& net, Task task, std::span<const WindowSample> samples, const TrainConfig& cfg) {
    Evaluation ev;
    if (samples.empty()) return ev;
    const std::size_t chunk = static_cast<std::size_t>(std::max(cfg.batch_size, 1));
    double loss_sum = 0.0;
    double metric_sum = 0.0;
    for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
        const auto part = samples.subspan(begin, std::min(chunk, samples.size() - begin));
        const Tensor out = net.predict(batch_tensor(part));
        loss_sum += task_loss(task, out, part, cfg).loss * static_cast<double>(part.size());
        for (std::size_t i = 0; i < part.size(); ++i) {
            if (task == Task::classify) {
                metric_sum += ((out.values[i] > 0.5f) == part[i].positive) ? 1.0 : 0.0;
            } else {
                metric_sum += interval_iou({out.values[2 * i], out.values[2 * i + 1]},
                                           {part[i].target_offset, part[i].target_scale});
            }
        }
    }
    ev.loss = loss_sum / static_cast<double>(samples.size());
    ev.metric = metric_sum / static_cast<double>(samples.size());
    return ev;
}

}  // namespace

TrainResult train_network(Network network, Task task, const WindowStream& stream,
                          std::span<const WindowSample> validation, const TrainConfig& cfg,
                          const EpochCallback& on_epoch) {
    cfg.validate();
    TrainResult result{network, {}, -1};
    if (cfg.epochs == 0) {
        return result;
    }

    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.lr;
    adam_cfg.weight_decay = cfg.weight_decay;
    Adam adam(network.parameters(), adam_cfg);
    Rng augment_rng(cfg.seed + 2);
    Rng dropout_rng(cfg.seed + 3);
    double best_loss = std::numeric_limits<double>::infinity();

    std::vector<WindowSample> batch(static_cast<std::size_t>(cfg.batch_size));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double train_sum = 0.0;
        for (int step = 0; step < cfg.steps_per_epoch; ++step) {
            for (auto& s : batch) {
                s = augment_gaussian(stream(), cfg.gauss_std_max, augment_rng);
            }
            network.zero_grad();
            const Tensor out = network.forward(batch_tensor(batch), Mode::train, dropout_rng);
            LossResult loss = task_loss(task, out, batch, cfg);
            if (!std::isfinite(loss.loss)) {
                throw TrainingDiverged("loss became non-finite in epoch " + std::to_string(epoch));
            }
            network.backward(Tensor(out.shape, std::move(loss.grad)));
            adam.step();
            train_sum += loss.loss;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = train_sum / cfg.steps_per_epoch;
        if (validation.empty()) {
            rec.valid_loss = rec.train_loss;
        } else {
            const Evaluation ev = evaluate(network, task, validation, cfg);
            rec.valid_loss = ev.loss;
            rec.valid_metric = ev.metric;
        }
        if (!std::isfinite(rec.valid_loss)) {
            throw TrainingDiverged("validation loss became non-finite in epoch " + std::to_string(epoch));
        }
        result.history.push_back(rec);
        if (rec.valid_loss < best_loss) {
            best_loss = rec.valid_loss;
            result.network = network;
            result.best_epoch = epoch;
        }
        if (on_epoch) on_epoch(rec);
    }
    return result;
}

namespace {

std::vector<WindowSample> validation_windows(std::span<const RecordingView> valid, int rows, ClassRatio ratio,
                                             const TrainConfig& cfg) {
    std::vector<WindowSample> out;
    if (valid.empty() || cfg.valid_windows == 0) return out;
    WindowSampler sampler(valid, rows, ratio, cfg.seed + 4);
    out.reserve(static_cast<std::size_t>(cfg.valid_windows));
    for (int i = 0; i < cfg.valid_windows; ++i) out.push_back(sampler.next());
    return out;
}

TrainResult train_task(Task task, std::span<const RecordingView> train, std::span<const RecordingView> valid,
                       ModelConfig model, const TrainConfig& cfg, ClassRatio ratio, const EpochCallback& on_epoch) {
    cfg.validate();
    model.dropout_p = cfg.dropout_p;
    model.head = task == Task::classify ? HeadKind::classifier : HeadKind::regressor;
    Network net = build_model(model, cfg.seed);
    if (cfg.epochs == 0) {
        return {net, {}, -1};
    }
    const int rows = static_cast<int>(model.input_rows);
    if (!train.empty() && static_cast<std::size_t>(train.front().n_mels) != model.input_mels) {
        throw InvalidConfig("model expects " + std::to_string(model.input_mels) + " mel bins, data has " +
                            std::to_string(train.front().n_mels));
    }
    WindowSampler sampler(train, rows, ratio, cfg.seed + 1);
    const auto validation = validation_windows(valid, rows, ratio, cfg);
    return train_network(std::move(net), task, [&sampler] { return sampler.next(); }, validation, cfg, on_epoch);
}

}  // namespace

TrainResult train_classifier(std::span<const RecordingView> train, std::span<const RecordingView> valid,
                             ModelConfig model, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    return train_task(Task::classify, train, valid, std::move(model), cfg, cfg.class_ratio, on_epoch);
}

TrainResult train_regressor(std::span<const RecordingView> train, std::span<const RecordingView> valid,
                            ModelConfig model, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    return train_task(Task::regress, train, valid, std::move(model), cfg, ClassRatio{1, 0}, on_epoch);
}

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history) {
    out << "epoch,train_loss,valid_loss,valid_metric\n";
    out.precision(9);
    for (const auto& r : history) {
        out << r.epoch << ',' << r.train_loss << ',' << r.valid_loss << ',' << r.valid_metric << '\n';
    }
}

}  // namespace boweldet
