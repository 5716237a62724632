#include <limits>

#include "boweldet/kernels.hpp"

namespace boweldet::kernels::serial {

void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output) {
    const std::size_t oh = g.out_h();
    const std::size_t ow = g.out_w();
    for (std::size_t n = 0; n < g.batch; ++n) {
        for (std::size_t f = 0; f < g.filters; ++f) {
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    double acc = bias[f];
                    for (std::size_t c = 0; c < g.in_channels; ++c) {
                        for (std::size_t i = 0; i < g.kernel_h; ++i) {
                            for (std::size_t j = 0; j < g.kernel_w; ++j) {
                                const float x = input[((n * g.in_channels + c) * g.in_h + oy * g.stride + i) * g.in_w +
                                                      ox * g.stride + j];
                                const float w = weight[((f * g.in_channels + c) * g.kernel_h + i) * g.kernel_w + j];
                                acc += static_cast<double>(x) * w;
                            }
                        }
                    }
                    output[((n * g.filters + f) * oh + oy) * ow + ox] = static_cast<float>(acc);
                }
            }
        }
    }
}

void conv2d_backward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                     std::span<const float> grad_output, std::span<float> grad_weight,
                     std::span<float> grad_bias, std::span<float> grad_input) {
    const std::size_t oh = g.out_h();
    const std::size_t ow = g.out_w();
    for (std::size_t n = 0; n < g.batch; ++n) {
        for (std::size_t f = 0; f < g.filters; ++f) {
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    const float dy = grad_output[((n * g.filters + f) * oh + oy) * ow + ox];
                    grad_bias[f] += dy;
                    for (std::size_t c = 0; c < g.in_channels; ++c) {
                        for (std::size_t i = 0; i < g.kernel_h; ++i) {
                            for (std::size_t j = 0; j < g.kernel_w; ++j) {
                                const std::size_t xi =
                                    ((n * g.in_channels + c) * g.in_h + oy * g.stride + i) * g.in_w + ox * g.stride + j;
                                const std::size_t wi = ((f * g.in_channels + c) * g.kernel_h + i) * g.kernel_w + j;
                                grad_weight[wi] += dy * input[xi];
                                if (!grad_input.empty()) {
                                    grad_input[xi] += dy * weight[wi];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

void dense_forward(std::size_t batch, std::size_t in, std::size_t out, std::span<const float> input,
                   std::span<const float> weight, std::span<const float> bias, std::span<float> output) {
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t o = 0; o < out; ++o) {
            double acc = bias[o];
            for (std::size_t i = 0; i < in; ++i) {
                acc += static_cast<double>(weight[o * in + i]) * input[n * in + i];
            }
            output[n * out + o] = static_cast<float>(acc);
        }
    }
}

void dense_backward(std::size_t batch, std::size_t in, std::size_t out, std::span<const float> input,
                    std::span<const float> weight, std::span<const float> grad_output,
                    std::span<float> grad_weight, std::span<float> grad_bias, std::span<float> grad_input) {
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t o = 0; o < out; ++o) {
            const float dy = grad_output[n * out + o];
            grad_bias[o] += dy;
            for (std::size_t i = 0; i < in; ++i) {
                grad_weight[o * in + i] += dy * input[n * in + i];
                if (!grad_input.empty()) {
                    grad_input[n * in + i] += dy * weight[o * in + i];
                }
            }
        }
    }
}

void maxpool2d_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output) {
    const std::size_t oh = g.out_h();
    const std::size_t ow = g.out_w();
    for (std::size_t pl = 0; pl < g.planes; ++pl) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                float best = -std::numeric_limits<float>::infinity();
                for (std::size_t i = 0; i < g.pool_h; ++i) {
                    for (std::size_t j = 0; j < g.pool_w; ++j) {
                        const float v = input[(pl * g.in_h + oy * g.pool_h + i) * g.in_w + ox * g.pool_w + j];
                        if (v > best) best = v;
                    }
                }
                output[(pl * oh + oy) * ow + ox] = best;
            }
        }
    }
}

void maxpool2d_backward(const PoolGeometry& g, std::span<const float> input, std::span<const float> grad_output,
                        std::span<float> grad_input) {
    const std::size_t oh = g.out_h();
    const std::size_t ow = g.out_w();
    for (std::size_t pl = 0; pl < g.planes; ++pl) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                // First maximum in scan order receives the gradient.
                float best = -std::numeric_limits<float>::infinity();
                std::size_t best_idx = (pl * g.in_h + oy * g.pool_h) * g.in_w + ox * g.pool_w;
                for (std::size_t i = 0; i < g.pool_h; ++i) {
                    for (std::size_t j = 0; j < g.pool_w; ++j) {
                        const std::size_t xi = (pl * g.in_h + oy * g.pool_h + i) * g.in_w + ox * g.pool_w + j;
                        if (input[xi] > best) {
                            best = input[xi];
                            best_idx = xi;
                        }
                    }
                }
                grad_input[best_idx] += grad_output[(pl * oh + oy) * ow + ox];
            }
        }
    }
}

}  // namespace boweldet::kernels::serial
