#pragma once

#include <string>
#include <vector>

#include "nos/core/rng.hpp"
#include "nos/tensor/ops.hpp"

namespace nos {

/// A named trainable tensor. Names are stable and used as checkpoint keys.
struct Param {
    std::string name;
    Tensor tensor;
};
using ParamList = std::vector<Param>;

std::vector<Tensor> tensors_of(const ParamList& params);
std::size_t count_parameters(const ParamList& params);

/// Tensor of `shape` filled uniformly in [-bound, bound), marked trainable.
Tensor uniform_param(Shape shape, double bound, Rng& rng);

/// y = x W + b with W [in x out]; weights uniform in +-1/sqrt(in).
struct Dense {
    Tensor weight;
    Tensor bias;

    Dense() = default;
    Dense(std::size_t in, std::size_t out, Rng& rng);

    std::size_t in_features() const { return weight.dim(0); }
    std::size_t out_features() const { return weight.dim(1); }

    Tensor forward(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

/// Stack of dense layers with `hidden` applied between layers. The last layer
/// is followed by `final` (identity by default).
struct Mlp {
    std::vector<Dense> layers;
    Activation hidden = Activation::relu;
    Activation final = Activation::identity;

    Mlp() = default;
    /// widths = {in, h1, ..., out}
    Mlp(const std::vector<std::size_t>& widths, Activation hidden, Rng& rng,
        Activation final = Activation::identity);

    Tensor forward(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

/// 2-D convolution layer, weights [cout x cin x k x k], uniform in +-1/sqrt(cin k k).
struct Conv2d {
    Tensor weight;
    Tensor bias;
    Conv2dGeometry geom;

    Conv2d() = default;
    Conv2d(std::size_t cin, std::size_t cout, std::size_t kernel, Conv2dGeometry geom, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

/// Transposed convolution layer, weights [cin x cout x k x k],
/// uniform in +-1/sqrt(cout k k).
struct ConvTranspose2d {
    Tensor weight;
    Tensor bias;
    Conv2dGeometry geom;

    ConvTranspose2d() = default;
    ConvTranspose2d(std::size_t cin, std::size_t cout, std::size_t kernel, Conv2dGeometry geom, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

}  // namespace nos
