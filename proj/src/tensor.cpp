#include "boweldet/tensor.hpp"

#include "boweldet/errors.hpp"

namespace boweldet {

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape s, std::vector<float> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape_size(shape)) {
        throw ShapeError("tensor of shape " + shape_string(shape) + " given " + std::to_string(values.size()) +
                         " values");
    }
}

}  // namespace boweldet
