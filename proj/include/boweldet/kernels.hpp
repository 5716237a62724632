#pragma once

// Compute kernels behind the network layers. The default namespace holds the
// OpenMP/GEMM implementations used for training and inference; `serial`
// holds straightforward loop nests kept as the reference for tests and
// benchmarks. Both share one contract: row-major buffers, batch first,
// gradient outputs are accumulated into (never overwritten).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace boweldet::kernels {

struct ConvGeometry {
    std::size_t batch = 0;
    std::size_t in_channels = 0;
    std::size_t in_h = 0;
    std::size_t in_w = 0;
    std::size_t filters = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t stride = 1;

    std::size_t out_h() const { return (in_h - kernel_h) / stride + 1; }
    std::size_t out_w() const { return (in_w - kernel_w) / stride + 1; }
    std::size_t patch() const { return in_channels * kernel_h * kernel_w; }
    std::size_t positions() const { return out_h() * out_w(); }
};

struct PoolGeometry {
    std::size_t planes = 0;  // batch * channels
    std::size_t in_h = 0;
    std::size_t in_w = 0;
    std::size_t pool_h = 2;
    std::size_t pool_w = 2;

    std::size_t out_h() const { return in_h / pool_h; }
    std::size_t out_w() const { return in_w / pool_w; }
};

/// Unfolds input patches into `cols`, laid out [patch][batch * positions].
void im2col(const ConvGeometry& g, std::span<const float> input, std::span<float> cols);
void col2im(const ConvGeometry& g, std::span<const float> cols, std::span<float> grad_input);

/// Valid cross-correlation plus bias. `cols` receives the unfolded input and
/// is reused by conv2d_backward.
void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output, std::vector<float>& cols);
/// `grad_input` may be empty when the input gradient is not needed.
void conv2d_backward(const ConvGeometry& g, std::span<const float> cols, std::span<const float> weight,
                     std::span<const float> grad_output, std::span<float> grad_weight,
                     std::span<float> grad_bias, std::span<float> grad_input);

void dense_forward(std::size_t batch, std::size_t in, std::size_t out, std::span<const float> input,
                   std::span<const float> weight, std::span<const float> bias, std::span<float> output);
void dense_backward(std::size_t batch, std::size_t in, std::size_t out, std::span<const float> input,
                    std::span<const float> weight, std::span<const float> grad_output,
                    std::span<float> grad_weight, std::span<float> grad_bias, std::span<float> grad_input);

/// Non-overlapping max pooling; trailing rows/cols that do not fill a window
/// are dropped. `argmax` records the flat input index of each output.
void maxpool2d_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output,
                       std::span<std::uint32_t> argmax);
void maxpool2d_backward(const PoolGeometry& g, std::span<const std::uint32_t> argmax,
                        std::span<const float> grad_output, std::span<float> grad_input);

namespace serial {

void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output);
void conv2d_backward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                     std::span<const float> grad_output, std::span<float> grad_weight,
                     std::span<float> grad_bias, std::span<float> grad_input);
void dense_forward(std::size_t batch, std::size_t in, std::size_t out, std::span<const float> input,
                   std::span<const float> weight, std::span<const float> bias, std::span<float> output);
void dense_backward(std::size_t batch, std::size_t in, std::size_t out, std::span<const float> input,
                    std::span<const float> weight, std::span<const float> grad_output,
                    std::span<float> grad_weight, std::span<float> grad_bias, std::span<float> grad_input);
void maxpool2d_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output);
void maxpool2d_backward(const PoolGeometry& g, std::span<const float> input, std::span<const float> grad_output,
                        std::span<float> grad_input);

}  // namespace serial

}  // namespace boweldet::kernels
