#include "boweldet/optimizer.hpp"

#include <cmath>
#include <string>

#include "boweldet/errors.hpp"

namespace boweldet {

namespace {

void validate(const AdamConfig& cfg) {
    if (!(cfg.lr > 0.0)) {
        throw InvalidHyperparameter("learning rate must be positive, got " + std::to_string(cfg.lr));
    }
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
        throw InvalidHyperparameter("Adam betas must lie in [0, 1)");
    }
    if (!(cfg.eps > 0.0) || !(cfg.weight_decay >= 0.0)) {
        throw InvalidHyperparameter("eps must be positive and weight_decay non-negative");
    }
}

}  // namespace

void adam_step(std::span<float> weights, std::span<const float> grads, AdamState& state, std::int64_t step,
               const AdamConfig& cfg) {
    validate(cfg);
    if (grads.size() != weights.size()) {
        throw ShapeError("adam_step: gradient and weight sizes differ");
    }
    if (state.m.size() != weights.size() || state.v.size() != weights.size()) {
        state.m.assign(weights.size(), 0.0f);
        state.v.assign(weights.size(), 0.0f);
    }
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    const float b1 = static_cast<float>(cfg.beta1);
    const float b2 = static_cast<float>(cfg.beta2);
    const float lr_t = static_cast<float>(cfg.lr / c1);
    const float inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(c2));
    const float eps = static_cast<float>(cfg.eps);
    const float wd = static_cast<float>(cfg.weight_decay);

#pragma omp parallel for simd schedule(static)
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const float g = grads[i] + wd * weights[i];
        state.m[i] = b1 * state.m[i] + (1.0f - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0f - b2) * g * g;
        weights[i] -= lr_t * state.m[i] / (std::sqrt(state.v[i]) * inv_sqrt_c2 + eps);
    }
}

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    validate(cfg_);
    state_.resize(params_.size());
}

void Adam::step() {
    ++t_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        adam_step(params_[i]->value.values, params_[i]->grad, state_[i], t_, cfg_);
    }
}

}  // namespace boweldet
