#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "boweldet/rng.hpp"
#include "boweldet/tensor.hpp"

namespace boweldet {

enum class LayerKind { conv2d, dense, relu, sigmoid, dropout, maxpool2d, flatten, interval_head };

std::string_view to_string(LayerKind kind);

/// Declarative description of one layer. Only the fields relevant to `kind`
/// are read.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    std::size_t filters = 0;
    std::size_t kernel_h = 3;
    std::size_t kernel_w = 3;
    std::size_t stride = 1;
    std::size_t units = 0;
    double drop_p = 0.0;
    std::size_t pool_h = 2;
    std::size_t pool_w = 2;
    /// When false, pooling an input not divisible by the window is an error;
    /// when true the trailing remainder is dropped.
    bool pool_floor = false;

    static LayerSpec conv2d(std::size_t filters, std::size_t kernel_h = 3, std::size_t kernel_w = 3,
                            std::size_t stride = 1);
    static LayerSpec dense(std::size_t units);
    static LayerSpec relu() { return {LayerKind::relu}; }
    static LayerSpec sigmoid() { return {LayerKind::sigmoid}; }
    static LayerSpec dropout(double p);
    static LayerSpec maxpool2d(std::size_t pool_h = 2, std::size_t pool_w = 2, bool floor = false);
    static LayerSpec flatten() { return {LayerKind::flatten}; }
    /// Two-unit head: unit 0 -> 0.5*tanh (offset), unit 1 -> sigmoid (scale).
    static LayerSpec interval_head() { return {LayerKind::interval_head}; }

    bool operator==(const LayerSpec&) const = default;
};

void to_json(nlohmann::json& j, const LayerSpec& spec);
void from_json(const nlohmann::json& j, LayerSpec& spec);

enum class Mode { train, eval };

/// One stage of a Network. `infer` is const and cache-free so a trained
/// network can serve concurrent callers; `forward_train` caches what
/// `backward` needs.
class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor infer(const Tensor& input) const = 0;
    virtual Tensor forward_train(const Tensor& input, Rng& rng) = 0;
    /// Accumulates parameter gradients; returns the gradient w.r.t. the input
    /// unless `need_input_grad` is false (then returns an empty tensor).
    virtual Tensor backward(const Tensor& grad_output, bool need_input_grad) = 0;

    virtual std::vector<Parameter*> parameters() { return {}; }
    virtual std::vector<const Parameter*> parameters() const { return {}; }
};

/// Sequential network over per-sample shape `input_shape` (the batch
/// dimension is added on the fly).
class Network {
public:
    Network(Shape input_shape, std::vector<LayerSpec> specs, std::uint64_t seed);
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;
    ~Network();

    /// In eval mode this is `predict`; in train mode activations are cached
    /// for `backward` and dropout draws from `rng`.
    Tensor forward(const Tensor& input, Mode mode, Rng& rng);
    Tensor predict(const Tensor& input) const;
    /// Propagates d(loss)/d(output) and accumulates into every parameter grad.
    /// Returns d(loss)/d(input) when `need_input_grad`, else an empty tensor.
    Tensor backward(const Tensor& loss_grad, bool need_input_grad = false);
    void zero_grad();

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    std::size_t param_count() const;

    const Shape& input_shape() const { return input_shape_; }
    const Shape& output_shape() const { return shapes_.back(); }
    const std::vector<LayerSpec>& specs() const { return specs_; }
    std::uint64_t seed() const { return seed_; }

private:
    void check_input(const Tensor& input) const;
    void build(Rng& init_rng);

    Shape input_shape_;
    std::vector<LayerSpec> specs_;
    std::uint64_t seed_;
    std::vector<Shape> shapes_;  // per-sample shape after each layer
    std::vector<std::unique_ptr<Layer>> layers_;
    bool cached_ = false;
};

}  // namespace boweldet
