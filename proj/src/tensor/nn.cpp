#include "nos/tensor/nn.hpp"

#include <cmath>

#include "nos/core/errors.hpp"

namespace nos {

std::vector<Tensor> tensors_of(const ParamList& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const Param& p : params) out.push_back(p.tensor);
    return out;
}

std::size_t count_parameters(const ParamList& params) {
    std::size_t n = 0;
    for (const Param& p : params) n += p.tensor.numel();
    return n;
}

Tensor uniform_param(Shape shape, double bound, Rng& rng) {
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = rng.uniform(-bound, bound);
    return Tensor(std::move(shape), std::move(data), true);
}

Dense::Dense(std::size_t in, std::size_t out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight = uniform_param({in, out}, bound, rng);
    bias = uniform_param({out}, bound, rng);
}

Tensor Dense::forward(const Tensor& x) const { return add_bias(matmul(x, weight), bias); }

void Dense::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

Mlp::Mlp(const std::vector<std::size_t>& widths, Activation hidden_act, Rng& rng, Activation final_act)
    : hidden(hidden_act), final(final_act) {
    if (widths.size() < 2) throw ConfigError("mlp: need at least input and output widths");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) layers.emplace_back(widths[i], widths[i + 1], rng);
}

Tensor Mlp::forward(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = layers[i].forward(h);
        const Activation a = i + 1 < layers.size() ? hidden : final;
        if (a != Activation::identity) h = activation(h, a);
    }
    return h;
}

void Mlp::collect(ParamList& out, const std::string& prefix) const {
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(out, prefix + "." + std::to_string(i));
}

Conv2d::Conv2d(std::size_t cin, std::size_t cout, std::size_t kernel, Conv2dGeometry g, Rng& rng) : geom(g) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cin * kernel * kernel));
    weight = uniform_param({cout, cin, kernel, kernel}, bound, rng);
    bias = uniform_param({cout}, bound, rng);
}

Tensor Conv2d::forward(const Tensor& x) const { return conv2d(x, weight, bias, geom); }

void Conv2d::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

ConvTranspose2d::ConvTranspose2d(std::size_t cin, std::size_t cout, std::size_t kernel, Conv2dGeometry g, Rng& rng)
    : geom(g) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cout * kernel * kernel));
    weight = uniform_param({cin, cout, kernel, kernel}, bound, rng);
    bias = uniform_param({cout}, bound, rng);
}

Tensor ConvTranspose2d::forward(const Tensor& x) const { return conv_transpose2d(x, weight, bias, geom); }

void ConvTranspose2d::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

}  // namespace nos
