#include "boweldet/losses.hpp"

#include <algorithm>
#include <cmath>

#include "boweldet/errors.hpp"

namespace boweldet {

LossResult weighted_bce(std::span<const float> probs, std::span<const float> labels, double w_pos) {
    if (probs.size() != labels.size()) {
        throw ShapeError("weighted_bce: predictions and labels differ in length");
    }
    LossResult r;
    r.grad.resize(probs.size());
    if (probs.empty()) {
        return r;
    }
    const double inv_n = 1.0 / static_cast<double>(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(static_cast<double>(probs[i]), kProbClamp, 1.0 - kProbClamp);
        const double y = labels[i];
        r.loss -= w_pos * y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        r.grad[i] = static_cast<float>((-w_pos * y / p + (1.0 - y) / (1.0 - p)) * inv_n);
    }
    r.loss *= inv_n;
    return r;
}

double interval_iou(CenteredInterval a, CenteredInterval b) {
    const double a0 = a.center - 0.5 * a.length;
    const double a1 = a.center + 0.5 * a.length;
    const double b0 = b.center - 0.5 * b.length;
    const double b1 = b.center + 0.5 * b.length;
    const double inter = std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
    const double uni = a.length + b.length - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

LossResult regression_loss(std::span<const float> pred, std::span<const float> target, double alpha, double beta) {
    if (pred.size() != target.size() || pred.size() % 2 != 0) {
        throw ShapeError("regression_loss expects matching (offset, scale) pairs");
    }
    LossResult r;
    r.grad.assign(pred.size(), 0.0f);
    const std::size_t n = pred.size() / 2;
    if (n == 0) {
        return r;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double op = pred[2 * i];
        const double sp = pred[2 * i + 1];
        const double ot = target[2 * i];
        const double st = target[2 * i + 1];

        const double a0 = op - 0.5 * sp;
        const double a1 = op + 0.5 * sp;
        const double b0 = ot - 0.5 * st;
        const double b1 = ot + 0.5 * st;
        const double inter = std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
        const double uni = sp + st - inter;
        const double iou = uni > 0.0 ? inter / uni : 0.0;

        r.loss += (1.0 - iou) + alpha * std::abs(op - ot) + beta * std::abs(sp - st);

        double d_off = alpha * sign(op - ot);
        double d_scale = beta * sign(sp - st);
        if (inter > 0.0 && uni > 0.0) {
            // IoU = I / (sp + st - I)
            const double d_iou_d_inter = (uni + inter) / (uni * uni);
            const double d_iou_d_sp = -inter / (uni * uni);
            const double d_inter_d_a1 = a1 < b1 ? 1.0 : 0.0;
            const double d_inter_d_a0 = a0 > b0 ? -1.0 : 0.0;
            const double d_inter_d_off = d_inter_d_a1 + d_inter_d_a0;
            const double d_inter_d_sp = 0.5 * d_inter_d_a1 - 0.5 * d_inter_d_a0;
            d_off -= d_iou_d_inter * d_inter_d_off;
            d_scale -= d_iou_d_inter * d_inter_d_sp + d_iou_d_sp;
        }
        r.grad[2 * i] = static_cast<float>(d_off * inv_n);
        r.grad[2 * i + 1] = static_cast<float>(d_scale * inv_n);
    }
    r.loss *= inv_n;
    return r;
}

}  // namespace boweldet
