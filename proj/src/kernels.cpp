#include "boweldet/kernels.hpp"

#include <algorithm>
#include <limits>

#include <Eigen/Core>

namespace boweldet::kernels {

namespace {

using ColMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
using Map = Eigen::Map<ColMajor>;
using ConstMap = Eigen::Map<const ColMajor>;
using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

}  // namespace

void im2col(const ConvGeometry& g, std::span<const float> input, std::span<float> cols) {
    const std::size_t oh = g.out_h();
    const std::size_t ow = g.out_w();
    const std::size_t positions = oh * ow;
    const std::size_t np = g.batch * positions;
    const std::size_t plane = g.in_h * g.in_w;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(g.batch); ++n) {
        const float* in_n = input.data() + static_cast<std::size_t>(n) * g.in_channels * plane;
        for (std::size_t c = 0; c < g.in_channels; ++c) {
            for (std::size_t i = 0; i < g.kernel_h; ++i) {
                for (std::size_t j = 0; j < g.kernel_w; ++j) {
                    const std::size_t k = (c * g.kernel_h + i) * g.kernel_w + j;
                    float* dst = cols.data() + k * np + static_cast<std::size_t>(n) * positions;
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        const float* src = in_n + c * plane + (oy * g.stride + i) * g.in_w + j;
                        float* row = dst + oy * ow;
                        if (g.stride == 1) {
                            std::copy(src, src + ow, row);
                        } else {
                            for (std::size_t ox = 0; ox < ow; ++ox) {
                                row[ox] = src[ox * g.stride];
                            }
                        }
                    }
                }
            }
        }
    }
}

void col2im(const ConvGeometry& g, std::span<const float> cols, std::span<float> grad_input) {
    const std::size_t oh = g.out_h();
    const std::size_t ow = g.out_w();
    const std::size_t positions = oh * ow;
    const std::size_t np = g.batch * positions;
    const std::size_t plane = g.in_h * g.in_w;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(g.batch); ++n) {
        float* gin_n = grad_input.data() + static_cast<std::size_t>(n) * g.in_channels * plane;
        for (std::size_t c = 0; c < g.in_channels; ++c) {
            for (std::size_t i = 0; i < g.kernel_h; ++i) {
                for (std::size_t j = 0; j < g.kernel_w; ++j) {
                    const std::size_t k = (c * g.kernel_h + i) * g.kernel_w + j;
                    const float* src = cols.data() + k * np + static_cast<std::size_t>(n) * positions;
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        float* dst = gin_n + c * plane + (oy * g.stride + i) * g.in_w + j;
                        const float* row = src + oy * ow;
                        for (std::size_t ox = 0; ox < ow; ++ox) {
                            dst[ox * g.stride] += row[ox];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output, std::vector<float>& cols) {
    const std::size_t positions = g.positions();
    const std::size_t np = g.batch * positions;
    const std::size_t k = g.patch();
    cols.resize(k * np);
    im2col(g, input, cols);

    // [batch*positions x filters] = cols^T-view * weight^T-view, then permute to [batch][filter][position].
    ColMajor y(idx(np), idx(g.filters));
    y.noalias() = ConstMap(cols.data(), idx(np), idx(k)) * ConstMap(weight.data(), idx(k), idx(g.filters));

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(g.batch); ++n) {
        for (std::size_t f = 0; f < g.filters; ++f) {
            const float* src = y.data() + f * np + static_cast<std::size_t>(n) * positions;
            float* dst = output.data() + (static_cast<std::size_t>(n) * g.filters + f) * positions;
            const float b = bias[f];
            for (std::size_t p = 0; p < positions; ++p) {
                dst[p] = src[p] + b;
            }
        }
    }
}

void conv2d_backward(const ConvGeometry& g, std::span<const float> cols, std::span<const float> weight,
                     std::span<const float> grad_output, std::span<float> grad_weight,
                     std::span<float> grad_bias, std::span<float> grad_input) {
    const std::size_t positions = g.positions();
    const std::size_t np = g.batch * positions;
    const std::size_t k = g.patch();

    ColMajor dy(idx(np), idx(g.filters));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(g.batch); ++n) {
        for (std::size_t f = 0; f < g.filters; ++f) {
            const float* src = grad_output.data() + (static_cast<std::size_t>(n) * g.filters + f) * positions;
            std::copy(src, src + positions, dy.data() + f * np + static_cast<std::size_t>(n) * positions);
        }
    }

    const ConstMap c(cols.data(), idx(np), idx(k));
    Map(grad_weight.data(), idx(k), idx(g.filters)).noalias() += c.transpose() * dy;
    // fixed-order sums, independent of buffer alignment
    for (std::size_t f = 0; f < g.filters; ++f) {
        const float* col = dy.data() + f * np;
        float acc = 0.0f;
        for (std::size_t i = 0; i < np; ++i) acc += col[i];
        grad_bias[f] += acc;
    }
    if (!grad_input.empty()) {
        ColMajor dcols(idx(np), idx(k));
        dcols.noalias() = dy * ConstMap(weight.data(), idx(k), idx(g.filters)).transpose();
        col2im(g, {dcols.data(), static_cast<std::size_t>(dcols.size())}, grad_input);
    }
}

void dense_forward(std::size_t batch, std::size_t in, std::size_t out, std::span<const float> input,
                   std::span<const float> weight, std::span<const float> bias, std::span<float> output) {
    Map y(output.data(), idx(out), idx(batch));
    y.noalias() = ConstMap(weight.data(), idx(in), idx(out)).transpose() * ConstMap(input.data(), idx(in), idx(batch));
    y.colwise() += Eigen::Map<const Eigen::VectorXf>(bias.data(), idx(out));
}

void dense_backward(std::size_t batch, std::size_t in, std::size_t out, std::span<const float> input,
                    std::span<const float> weight, std::span<const float> grad_output,
                    std::span<float> grad_weight, std::span<float> grad_bias, std::span<float> grad_input) {
    const ConstMap dy(grad_output.data(), idx(out), idx(batch));
    const ConstMap x(input.data(), idx(in), idx(batch));
    Map(grad_weight.data(), idx(in), idx(out)).noalias() += x * dy.transpose();
    for (std::size_t o = 0; o < out; ++o) {
        float acc = 0.0f;
        for (std::size_t n = 0; n < batch; ++n) acc += grad_output[n * out + o];
        grad_bias[o] += acc;
    }
    if (!grad_input.empty()) {
        Map(grad_input.data(), idx(in), idx(batch)).noalias() += ConstMap(weight.data(), idx(in), idx(out)) * dy;
    }
}

void maxpool2d_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output,
                       std::span<std::uint32_t> argmax) {
    const std::size_t oh = g.out_h();
    const std::size_t ow = g.out_w();
    const std::size_t plane = g.in_h * g.in_w;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t pl = 0; pl < static_cast<std::ptrdiff_t>(g.planes); ++pl) {
        const std::size_t base = static_cast<std::size_t>(pl) * plane;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                float best = -std::numeric_limits<float>::infinity();
                std::size_t best_idx = base + oy * g.pool_h * g.in_w + ox * g.pool_w;
                for (std::size_t i = 0; i < g.pool_h; ++i) {
                    const std::size_t row = base + (oy * g.pool_h + i) * g.in_w + ox * g.pool_w;
                    for (std::size_t j = 0; j < g.pool_w; ++j) {
                        if (input[row + j] > best) {
                            best = input[row + j];
                            best_idx = row + j;
                        }
                    }
                }
                const std::size_t o = (static_cast<std::size_t>(pl) * oh + oy) * ow + ox;
                output[o] = best;
                argmax[o] = static_cast<std::uint32_t>(best_idx);
            }
        }
    }
}

void maxpool2d_backward(const PoolGeometry& g, std::span<const std::uint32_t> argmax,
                        std::span<const float> grad_output, std::span<float> grad_input) {
    // Windows do not overlap, so each input receives at most one contribution.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t o = 0; o < static_cast<std::ptrdiff_t>(grad_output.size()); ++o) {
        grad_input[argmax[static_cast<std::size_t>(o)]] += grad_output[static_cast<std::size_t>(o)];
    }
    (void)g;
}

}  // namespace boweldet::kernels
