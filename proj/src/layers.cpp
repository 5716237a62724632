#include "boweldet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <nlohmann/json.hpp>

#include "boweldet/errors.hpp"
#include "boweldet/kernels.hpp"

namespace boweldet {

std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::dense: return "dense";
        case LayerKind::relu: return "relu";
        case LayerKind::sigmoid: return "sigmoid";
        case LayerKind::dropout: return "dropout";
        case LayerKind::maxpool2d: return "maxpool2d";
        case LayerKind::flatten: return "flatten";
        case LayerKind::interval_head: return "interval_head";
    }
    return "unknown";
}

namespace {

LayerKind layer_kind_from(std::string_view s) {
    for (auto k : {LayerKind::conv2d, LayerKind::dense, LayerKind::relu, LayerKind::sigmoid, LayerKind::dropout,
                   LayerKind::maxpool2d, LayerKind::flatten, LayerKind::interval_head}) {
        if (to_string(k) == s) return k;
    }
    throw InvalidConfig("unknown layer kind '" + std::string(s) + "'");
}

}  // namespace

LayerSpec LayerSpec::conv2d(std::size_t filters, std::size_t kernel_h, std::size_t kernel_w, std::size_t stride) {
    LayerSpec s{LayerKind::conv2d};
    s.filters = filters;
    s.kernel_h = kernel_h;
    s.kernel_w = kernel_w;
    s.stride = stride;
    return s;
}

LayerSpec LayerSpec::dense(std::size_t units) {
    LayerSpec s{LayerKind::dense};
    s.units = units;
    return s;
}

LayerSpec LayerSpec::dropout(double p) {
    LayerSpec s{LayerKind::dropout};
    s.drop_p = p;
    return s;
}

LayerSpec LayerSpec::maxpool2d(std::size_t pool_h, std::size_t pool_w, bool floor) {
    LayerSpec s{LayerKind::maxpool2d};
    s.pool_h = pool_h;
    s.pool_w = pool_w;
    s.pool_floor = floor;
    return s;
}

void to_json(nlohmann::json& j, const LayerSpec& spec) {
    j = nlohmann::json{{"kind", to_string(spec.kind)}};
    switch (spec.kind) {
        case LayerKind::conv2d:
            j["filters"] = spec.filters;
            j["kernel"] = {spec.kernel_h, spec.kernel_w};
            j["stride"] = spec.stride;
            break;
        case LayerKind::dense: j["units"] = spec.units; break;
        case LayerKind::dropout: j["drop_p"] = spec.drop_p; break;
        case LayerKind::maxpool2d:
            j["pool"] = {spec.pool_h, spec.pool_w};
            j["floor"] = spec.pool_floor;
            break;
        default: break;
    }
}

void from_json(const nlohmann::json& j, LayerSpec& spec) {
    spec = LayerSpec{layer_kind_from(j.at("kind").get<std::string>())};
    if (j.contains("filters")) spec.filters = j["filters"].get<std::size_t>();
    if (j.contains("kernel")) {
        spec.kernel_h = j["kernel"].at(0).get<std::size_t>();
        spec.kernel_w = j["kernel"].at(1).get<std::size_t>();
    }
    if (j.contains("stride")) spec.stride = j["stride"].get<std::size_t>();
    if (j.contains("units")) spec.units = j["units"].get<std::size_t>();
    if (j.contains("drop_p")) spec.drop_p = j["drop_p"].get<double>();
    if (j.contains("pool")) {
        spec.pool_h = j["pool"].at(0).get<std::size_t>();
        spec.pool_w = j["pool"].at(1).get<std::size_t>();
    }
    if (j.contains("floor")) spec.pool_floor = j["floor"].get<bool>();
}

namespace {

void fill_uniform(Parameter& p, double limit, Rng& rng) {
    for (float& v : p.value.values) {
        v = static_cast<float>(rng.uniform(-limit, limit));
    }
}

class Conv2d final : public Layer {
public:
    Conv2d(const LayerSpec& spec, const Shape& in, Rng& rng) {
        geom_.in_channels = in[0];
        geom_.in_h = in[1];
        geom_.in_w = in[2];
        geom_.filters = spec.filters;
        geom_.kernel_h = spec.kernel_h;
        geom_.kernel_w = spec.kernel_w;
        geom_.stride = spec.stride;
        weight_.name = "conv.weight";
        weight_.value = Tensor({spec.filters, in[0], spec.kernel_h, spec.kernel_w});
        bias_.name = "conv.bias";
        bias_.value = Tensor({spec.filters});
        // He-uniform, fan-in = in_channels * kernel area.
        fill_uniform(weight_, std::sqrt(6.0 / static_cast<double>(geom_.patch())), rng);
        weight_.zero_grad();
        bias_.zero_grad();
    }

    Tensor infer(const Tensor& input) const override {
        std::vector<float> cols;
        return run(input, cols);
    }

    Tensor forward_train(const Tensor& input, Rng&) override {
        batch_ = input.batch();
        return run(input, cols_);
    }

    Tensor backward(const Tensor& grad_output, bool need_input_grad) override {
        kernels::ConvGeometry g = geom_;
        g.batch = batch_;
        Tensor grad_in;
        if (need_input_grad) {
            grad_in = Tensor({batch_, g.in_channels, g.in_h, g.in_w});
        }
        kernels::conv2d_backward(g, cols_, weight_.value.values, grad_output.values, weight_.grad, bias_.grad,
                                 grad_in.values);
        return grad_in;
    }

    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
    std::vector<const Parameter*> parameters() const override { return {&weight_, &bias_}; }

private:
    Tensor run(const Tensor& input, std::vector<float>& cols) const {
        kernels::ConvGeometry g = geom_;
        g.batch = input.batch();
        Tensor out({g.batch, g.filters, g.out_h(), g.out_w()});
        kernels::conv2d_forward(g, input.values, weight_.value.values, bias_.value.values, out.values, cols);
        return out;
    }

    kernels::ConvGeometry geom_;
    Parameter weight_;
    Parameter bias_;
    std::vector<float> cols_;
    std::size_t batch_ = 0;
};

class Dense final : public Layer {
public:
    Dense(const LayerSpec& spec, const Shape& in, bool feeds_relu, Rng& rng) : in_(in[0]), out_(spec.units) {
        weight_.name = "dense.weight";
        weight_.value = Tensor({out_, in_});
        bias_.name = "dense.bias";
        bias_.value = Tensor({out_});
        const double limit = feeds_relu ? std::sqrt(6.0 / static_cast<double>(in_))
                                        : std::sqrt(6.0 / static_cast<double>(in_ + out_));
        fill_uniform(weight_, limit, rng);
        weight_.zero_grad();
        bias_.zero_grad();
    }

    Tensor infer(const Tensor& input) const override {
        Tensor out({input.batch(), out_});
        kernels::dense_forward(input.batch(), in_, out_, input.values, weight_.value.values, bias_.value.values,
                               out.values);
        return out;
    }

    Tensor forward_train(const Tensor& input, Rng&) override {
        input_ = input;
        return infer(input);
    }

    Tensor backward(const Tensor& grad_output, bool need_input_grad) override {
        Tensor grad_in;
        if (need_input_grad) {
            grad_in = Tensor(input_.shape);
        }
        kernels::dense_backward(input_.batch(), in_, out_, input_.values, weight_.value.values, grad_output.values,
                                weight_.grad, bias_.grad, grad_in.values);
        return grad_in;
    }

    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
    std::vector<const Parameter*> parameters() const override { return {&weight_, &bias_}; }

private:
    std::size_t in_;
    std::size_t out_;
    Parameter weight_;
    Parameter bias_;
    Tensor input_;
};

class Relu final : public Layer {
public:
    Tensor infer(const Tensor& input) const override {
        Tensor out = input;
        for (float& v : out.values) v = v > 0.0f ? v : 0.0f;
        return out;
    }
    Tensor forward_train(const Tensor& input, Rng&) override {
        output_ = infer(input);
        return output_;
    }
    Tensor backward(const Tensor& grad_output, bool) override {
        Tensor g = grad_output;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!(output_.values[i] > 0.0f)) g.values[i] = 0.0f;
        }
        return g;
    }

private:
    Tensor output_;
};

float sigmoidf(float x) { return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x)))); }

class Sigmoid final : public Layer {
public:
    Tensor infer(const Tensor& input) const override {
        Tensor out = input;
        for (float& v : out.values) v = sigmoidf(v);
        return out;
    }
    Tensor forward_train(const Tensor& input, Rng&) override {
        output_ = infer(input);
        return output_;
    }
    Tensor backward(const Tensor& grad_output, bool) override {
        Tensor g = grad_output;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const float y = output_.values[i];
            g.values[i] *= y * (1.0f - y);
        }
        return g;
    }

private:
    Tensor output_;
};

class IntervalHead final : public Layer {
public:
    Tensor infer(const Tensor& input) const override {
        Tensor out = input;
        for (std::size_t n = 0; n < out.batch(); ++n) {
            out.values[2 * n] = 0.5f * std::tanh(out.values[2 * n]);
            out.values[2 * n + 1] = sigmoidf(out.values[2 * n + 1]);
        }
        return out;
    }
    Tensor forward_train(const Tensor& input, Rng&) override {
        output_ = infer(input);
        return output_;
    }
    Tensor backward(const Tensor& grad_output, bool) override {
        Tensor g = grad_output;
        for (std::size_t n = 0; n < g.batch(); ++n) {
            const float off = output_.values[2 * n];
            const float t = 2.0f * off;  // tanh value
            g.values[2 * n] *= 0.5f * (1.0f - t * t);
            const float s = output_.values[2 * n + 1];
            g.values[2 * n + 1] *= s * (1.0f - s);
        }
        return g;
    }

private:
    Tensor output_;
};

class Dropout final : public Layer {
public:
    explicit Dropout(double p) : p_(p) {}

    Tensor infer(const Tensor& input) const override { return input; }

    Tensor forward_train(const Tensor& input, Rng& rng) override {
        mask_.assign(input.size(), 0.0f);
        const float keep_scale = static_cast<float>(1.0 / (1.0 - p_));
        Tensor out = input;
        for (std::size_t i = 0; i < out.size(); ++i) {
            mask_[i] = rng.uniform() >= p_ ? keep_scale : 0.0f;
            out.values[i] *= mask_[i];
        }
        return out;
    }

    Tensor backward(const Tensor& grad_output, bool) override {
        Tensor g = grad_output;
        for (std::size_t i = 0; i < g.size(); ++i) g.values[i] *= mask_[i];
        return g;
    }

private:
    double p_;
    std::vector<float> mask_;
};

class MaxPool2d final : public Layer {
public:
    MaxPool2d(const LayerSpec& spec, const Shape& in) : channels_(in[0]) {
        geom_.in_h = in[1];
        geom_.in_w = in[2];
        geom_.pool_h = spec.pool_h;
        geom_.pool_w = spec.pool_w;
    }

    Tensor infer(const Tensor& input) const override {
        std::vector<std::uint32_t> argmax;
        return run(input, argmax);
    }

    Tensor forward_train(const Tensor& input, Rng&) override {
        in_shape_ = input.shape;
        return run(input, argmax_);
    }

    Tensor backward(const Tensor& grad_output, bool) override {
        Tensor g(in_shape_);
        kernels::PoolGeometry geom = geom_;
        geom.planes = in_shape_[0] * channels_;
        kernels::maxpool2d_backward(geom, argmax_, grad_output.values, g.values);
        return g;
    }

private:
    Tensor run(const Tensor& input, std::vector<std::uint32_t>& argmax) const {
        kernels::PoolGeometry g = geom_;
        g.planes = input.batch() * channels_;
        Tensor out({input.batch(), channels_, g.out_h(), g.out_w()});
        argmax.resize(out.size());
        kernels::maxpool2d_forward(g, input.values, out.values, argmax);
        return out;
    }

    std::size_t channels_;
    kernels::PoolGeometry geom_;
    Shape in_shape_;
    std::vector<std::uint32_t> argmax_;
};

class Flatten final : public Layer {
public:
    Tensor infer(const Tensor& input) const override {
        return Tensor({input.batch(), input.item_size()}, input.values);
    }
    Tensor forward_train(const Tensor& input, Rng&) override {
        in_shape_ = input.shape;
        return infer(input);
    }
    Tensor backward(const Tensor& grad_output, bool) override { return Tensor(in_shape_, grad_output.values); }

private:
    Shape in_shape_;
};

[[noreturn]] void layer_error(std::size_t index, const LayerSpec& spec, const std::string& what) {
    throw ShapeError("layer " + std::to_string(index) + " (" + std::string(to_string(spec.kind)) + "): " + what);
}

}  // namespace

Network::Network(Shape input_shape, std::vector<LayerSpec> specs, std::uint64_t seed)
    : input_shape_(std::move(input_shape)), specs_(std::move(specs)), seed_(seed) {
    Rng init(seed);
    build(init);
}

Network::Network(const Network& other)
    : input_shape_(other.input_shape_), specs_(other.specs_), seed_(other.seed_) {
    Rng init(seed_);
    build(init);
    auto dst = parameters();
    auto src = other.parameters();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        *dst[i] = *src[i];
    }
}

Network& Network::operator=(const Network& other) {
    if (this != &other) {
        Network copy(other);
        *this = std::move(copy);
    }
    return *this;
}

Network::~Network() = default;

void Network::build(Rng& init_rng) {
    layers_.clear();
    shapes_.clear();
    Shape shape = input_shape_;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const LayerSpec& spec = specs_[i];
        const bool feeds_relu = i + 1 < specs_.size() && specs_[i + 1].kind == LayerKind::relu;
        switch (spec.kind) {
            case LayerKind::conv2d: {
                if (shape.size() != 3) layer_error(i, spec, "expects [channels, h, w], got " + shape_string(shape));
                if (spec.filters == 0 || spec.kernel_h == 0 || spec.kernel_w == 0 || spec.stride == 0)
                    layer_error(i, spec, "filters, kernel and stride must be positive");
                if (shape[1] < spec.kernel_h || shape[2] < spec.kernel_w)
                    layer_error(i, spec, "kernel larger than input " + shape_string(shape));
                layers_.push_back(std::make_unique<Conv2d>(spec, shape, init_rng));
                shape = {spec.filters, (shape[1] - spec.kernel_h) / spec.stride + 1,
                         (shape[2] - spec.kernel_w) / spec.stride + 1};
                break;
            }
            case LayerKind::dense: {
                if (shape.size() != 1) layer_error(i, spec, "expects a flat input, got " + shape_string(shape));
                if (spec.units == 0) layer_error(i, spec, "units must be positive");
                layers_.push_back(std::make_unique<Dense>(spec, shape, feeds_relu, init_rng));
                shape = {spec.units};
                break;
            }
            case LayerKind::relu: layers_.push_back(std::make_unique<Relu>()); break;
            case LayerKind::sigmoid: layers_.push_back(std::make_unique<Sigmoid>()); break;
            case LayerKind::interval_head:
                if (shape != Shape{2}) layer_error(i, spec, "expects 2 units, got " + shape_string(shape));
                layers_.push_back(std::make_unique<IntervalHead>());
                break;
            case LayerKind::dropout:
                if (!(spec.drop_p >= 0.0 && spec.drop_p < 1.0)) layer_error(i, spec, "drop_p must lie in [0, 1)");
                layers_.push_back(std::make_unique<Dropout>(spec.drop_p));
                break;
            case LayerKind::maxpool2d: {
                if (shape.size() != 3) layer_error(i, spec, "expects [channels, h, w], got " + shape_string(shape));
                if (spec.pool_h == 0 || spec.pool_w == 0) layer_error(i, spec, "pool must be positive");
                if (shape[1] < spec.pool_h || shape[2] < spec.pool_w)
                    layer_error(i, spec, "input " + shape_string(shape) + " smaller than pool");
                if (!spec.pool_floor && (shape[1] % spec.pool_h != 0 || shape[2] % spec.pool_w != 0))
                    layer_error(i, spec, "input " + shape_string(shape) + " not divisible by pool");
                layers_.push_back(std::make_unique<MaxPool2d>(spec, shape));
                shape = {shape[0], shape[1] / spec.pool_h, shape[2] / spec.pool_w};
                break;
            }
            case LayerKind::flatten:
                layers_.push_back(std::make_unique<Flatten>());
                shape = {shape_size(shape)};
                break;
        }
        shapes_.push_back(shape);
    }
    if (shapes_.empty()) {
        shapes_.push_back(input_shape_);
    }
}

void Network::check_input(const Tensor& input) const {
    if (input.shape.size() != input_shape_.size() + 1 ||
        !std::equal(input_shape_.begin(), input_shape_.end(), input.shape.begin() + 1)) {
        throw ShapeError("layer 0: expected input [N, " + shape_string(input_shape_).substr(1) + ", got " +
                         shape_string(input.shape));
    }
}

Tensor Network::forward(const Tensor& input, Mode mode, Rng& rng) {
    if (mode == Mode::eval) {
        return predict(input);
    }
    check_input(input);
    Tensor x = input;
    for (auto& layer : layers_) {
        x = layer->forward_train(x, rng);
    }
    cached_ = true;
    return x;
}

Tensor Network::predict(const Tensor& input) const {
    check_input(input);
    Tensor x = input;
    for (const auto& layer : layers_) {
        x = layer->infer(x);
    }
    return x;
}

Tensor Network::backward(const Tensor& loss_grad, bool need_input_grad) {
    if (!cached_) {
        throw StateError("backward called without a preceding train-mode forward");
    }
    Tensor g = loss_grad;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        g = layers_[i]->backward(g, i > 0 || need_input_grad);
    }
    cached_ = false;
    if (!need_input_grad) return {};
    if (layers_.empty()) return loss_grad;
    return g;
}

void Network::zero_grad() {
    for (Parameter* p : parameters()) {
        p->zero_grad();
    }
}

std::vector<Parameter*> Network::parameters() {
    std::vector<Parameter*> out;
    for (auto& layer : layers_) {
        for (Parameter* p : layer->parameters()) out.push_back(p);
    }
    return out;
}

std::vector<const Parameter*> Network::parameters() const {
    std::vector<const Parameter*> out;
    for (const auto& layer : layers_) {
        for (const Parameter* p : std::as_const(*layer).parameters()) out.push_back(p);
    }
    return out;
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const Parameter* p : parameters()) n += p->value.size();
    return n;
}

}  // namespace boweldet
