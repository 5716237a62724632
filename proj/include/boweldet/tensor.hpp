#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace boweldet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

/// Dense row-major float32 tensor. The leading dimension is the batch for
/// activations flowing through a Network.
struct Tensor {
    Shape shape;
    std::vector<float> values;

    Tensor() = default;
    explicit Tensor(Shape s, float fill = 0.0f) : shape(std::move(s)), values(shape_size(shape), fill) {}
    Tensor(Shape s, std::vector<float> v);

    std::size_t size() const { return values.size(); }
    std::size_t batch() const { return shape.empty() ? 0 : shape.front(); }
    /// Elements per batch item.
    std::size_t item_size() const { return shape.empty() ? 0 : values.size() / shape.front(); }
    std::span<float> item(std::size_t n) { return {values.data() + n * item_size(), item_size()}; }
    std::span<const float> item(std::size_t n) const { return {values.data() + n * item_size(), item_size()}; }
};

/// Trainable tensor with its gradient accumulator.
struct Parameter {
    std::string name;
    Tensor value;
    std::vector<float> grad;

    void zero_grad() { grad.assign(value.size(), 0.0f); }
};

}  // namespace boweldet
