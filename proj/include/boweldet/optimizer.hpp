#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "boweldet/tensor.hpp"

namespace boweldet {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// L2 coefficient; weight_decay * w is added to the gradient.
    double weight_decay = 1e-4;
};

struct AdamState {
    std::vector<float> m;
    std::vector<float> v;
};

/// One bias-corrected Adam update of `weights` in place. `step` is the
/// 1-based update count used for bias correction.
void adam_step(std::span<float> weights, std::span<const float> grads, AdamState& state, std::int64_t step,
               const AdamConfig& cfg);

/// Adam over a fixed list of parameters, one state slot per parameter.
class Adam {
public:
    Adam(std::vector<Parameter*> params, AdamConfig cfg);

    void step();
    std::int64_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Parameter*> params_;
    std::vector<AdamState> state_;
    AdamConfig cfg_;
    std::int64_t t_ = 0;
};

}  // namespace boweldet
