#pragma once

#include <span>
#include <vector>

namespace boweldet {

/// Batch-mean loss (accumulated in double) and d(loss)/d(prediction) per element.
struct LossResult {
    double loss = 0.0;
    std::vector<float> grad;
};

inline constexpr double kProbClamp = 1e-7;

/// -[w_pos * y * log p + (1 - y) * log(1 - p)] averaged over the batch, with
/// p clamped to [1e-7, 1 - 1e-7]. `labels` holds 0/1.
LossResult weighted_bce(std::span<const float> probs, std::span<const float> labels, double w_pos);

/// 1-D interval given by centre and length.
struct CenteredInterval {
    double center = 0.0;
    double length = 0.0;
};

/// Intersection over union of two intervals; 0 when disjoint.
double interval_iou(CenteredInterval a, CenteredInterval b);

/// Interleaved (offset, scale) pairs in window units. Loss per pair is
///   (1 - IoU) + alpha*|offset_p - offset_t| + beta*|scale_p - scale_t|
/// and the result is the batch mean. Absolute-value kinks use subgradient 0.
LossResult regression_loss(std::span<const float> pred, std::span<const float> target, double alpha, double beta);

}  // namespace boweldet
