#include <Eigen/Core>

#include "nos/core/errors.hpp"
#include "nos/tensor/ops.hpp"

namespace nos {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

ConstMatMap cmat(const double* p, std::size_t r, std::size_t c) {
    return ConstMatMap(p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
MatMap mmat(double* p, std::size_t r, std::size_t c) {
    return MatMap(p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

/// Geometry of one cross-correlation: an "image" of channels x h x w is
/// sampled into columns of an (channels*kh*kw) x (oh*ow) matrix.
struct Patch {
    std::size_t channels, h, w, kh, kw, stride, pad, oh, ow;

    std::size_t rows() const { return channels * kh * kw; }
    std::size_t cols() const { return oh * ow; }
};

void im2col(const double* img, const Patch& p, double* col) {
    const std::size_t cols = p.cols();
    for (std::size_t c = 0; c < p.channels; ++c) {
        for (std::size_t ki = 0; ki < p.kh; ++ki) {
            for (std::size_t kj = 0; kj < p.kw; ++kj) {
                double* row = col + ((c * p.kh + ki) * p.kw + kj) * cols;
                for (std::size_t oy = 0; oy < p.oh; ++oy) {
                    const long iy = static_cast<long>(oy * p.stride + ki) - static_cast<long>(p.pad);
                    for (std::size_t ox = 0; ox < p.ow; ++ox) {
                        const long ix = static_cast<long>(ox * p.stride + kj) - static_cast<long>(p.pad);
                        const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(p.h) &&
                                            ix < static_cast<long>(p.w);
                        row[oy * p.ow + ox] =
                            inside ? img[(c * p.h + static_cast<std::size_t>(iy)) * p.w + static_cast<std::size_t>(ix)]
                                   : 0.0;
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col: scatters-adds columns back into the image.
void col2im(const double* col, const Patch& p, double* img) {
    const std::size_t cols = p.cols();
    for (std::size_t c = 0; c < p.channels; ++c) {
        for (std::size_t ki = 0; ki < p.kh; ++ki) {
            for (std::size_t kj = 0; kj < p.kw; ++kj) {
                const double* row = col + ((c * p.kh + ki) * p.kw + kj) * cols;
                for (std::size_t oy = 0; oy < p.oh; ++oy) {
                    const long iy = static_cast<long>(oy * p.stride + ki) - static_cast<long>(p.pad);
                    if (iy < 0 || iy >= static_cast<long>(p.h)) continue;
                    for (std::size_t ox = 0; ox < p.ow; ++ox) {
                        const long ix = static_cast<long>(ox * p.stride + kj) - static_cast<long>(p.pad);
                        if (ix < 0 || ix >= static_cast<long>(p.w)) continue;
                        img[(c * p.h + static_cast<std::size_t>(iy)) * p.w + static_cast<std::size_t>(ix)] +=
                            row[oy * p.ow + ox];
                    }
                }
            }
        }
    }
}

bool is_pointwise(const Patch& p) { return p.kh == 1 && p.kw == 1 && p.stride == 1 && p.pad == 0; }

void check_bias(const Tensor& bias, std::size_t channels, const char* op) {
    if (!bias.defined()) return;
    if (bias.rank() != 1 || bias.dim(0) != channels) {
        throw DimensionError(std::string(op) + ": bias " + shape_str(bias.shape()) + " does not match " +
                             std::to_string(channels) + " output channels");
    }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dGeometry geom) {
    if (x.rank() != 4 || weight.rank() != 4) {
        throw DimensionError("conv2d: expected rank-4 input and weight, got " + shape_str(x.shape()) + " and " +
                             shape_str(weight.shape()));
    }
    const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    if (weight.dim(1) != cin) {
        throw DimensionError("conv2d: kernel expects " + std::to_string(weight.dim(1)) + " input channels, got " +
                             std::to_string(cin));
    }
    if (geom.stride == 0) throw DimensionError("conv2d: stride must be positive");
    if (h + 2 * geom.padding < kh || w + 2 * geom.padding < kw) {
        throw DimensionError("conv2d: kernel larger than padded input " + shape_str(x.shape()));
    }
    check_bias(bias, cout, "conv2d");
    Patch p{cin, h, w, kh, kw, geom.stride, geom.padding, 0, 0};
    p.oh = (h + 2 * geom.padding - kh) / geom.stride + 1;
    p.ow = (w + 2 * geom.padding - kw) / geom.stride + 1;

    Tensor out = Tensor::zeros({batch, cout, p.oh, p.ow});
    const std::size_t in_stride = cin * h * w, out_stride = cout * p.cols();
    const bool pointwise = is_pointwise(p);
    std::vector<double> col(pointwise ? 0 : p.rows() * p.cols());
    auto W = cmat(weight.data().data(), cout, p.rows());
    for (std::size_t b = 0; b < batch; ++b) {
        const double* img = x.data().data() + b * in_stride;
        const double* cm = img;
        if (!pointwise) {
            im2col(img, p, col.data());
            cm = col.data();
        }
        auto o = mmat(out.data().data() + b * out_stride, cout, p.cols());
        o.noalias() = W * cmat(cm, p.rows(), p.cols());
        if (bias.defined()) o.colwise() += Eigen::Map<const Eigen::VectorXd>(bias.data().data(), static_cast<Eigen::Index>(cout));
    }

    if (detail::should_record({&x, &weight, &bias})) {
        active_tape()->record({x, weight, bias}, out, [x, weight, bias, out, p, batch, cout, pointwise]() mutable {
            const std::size_t in_stride = p.channels * p.h * p.w, out_stride = cout * p.cols();
            std::vector<double> col(p.rows() * p.cols());
            auto W = cmat(weight.data().data(), cout, p.rows());
            for (std::size_t b = 0; b < batch; ++b) {
                auto g = cmat(out.grad().data() + b * out_stride, cout, p.cols());
                if (weight.requires_grad()) {
                    const double* cm = x.data().data() + b * in_stride;
                    if (!pointwise) {
                        im2col(cm, p, col.data());
                        cm = col.data();
                    }
                    mmat(weight.grad_mut().data(), cout, p.rows()).noalias() += g * cmat(cm, p.rows(), p.cols()).transpose();
                }
                if (bias.defined() && bias.requires_grad()) {
                    Eigen::Map<Eigen::VectorXd>(bias.grad_mut().data(), static_cast<Eigen::Index>(cout)) += g.rowwise().sum();
                }
                if (x.requires_grad()) {
                    double* gx = x.grad_mut().data() + b * in_stride;
                    if (pointwise) {
                        mmat(gx, p.rows(), p.cols()).noalias() += W.transpose() * g;
                    } else {
                        mmat(col.data(), p.rows(), p.cols()).noalias() = W.transpose() * g;
                        col2im(col.data(), p, gx);
                    }
                }
            }
        });
    }
    return out;
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dGeometry geom) {
    if (x.rank() != 4 || weight.rank() != 4) {
        throw DimensionError("conv_transpose2d: expected rank-4 input and weight");
    }
    const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t cout = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
    if (weight.dim(0) != cin) {
        throw DimensionError("conv_transpose2d: kernel expects " + std::to_string(weight.dim(0)) +
                             " input channels, got " + std::to_string(cin));
    }
    if (geom.stride == 0) throw DimensionError("conv_transpose2d: stride must be positive");
    if (geom.output_padding_h >= geom.stride && geom.output_padding_h > 0) {
        throw DimensionError("conv_transpose2d: output padding must be smaller than stride");
    }
    if (geom.output_padding_w >= geom.stride && geom.output_padding_w > 0) {
        throw DimensionError("conv_transpose2d: output padding must be smaller than stride");
    }
    const long oh_l = static_cast<long>((h - 1) * geom.stride + kh + geom.output_padding_h) - 2L * static_cast<long>(geom.padding);
    const long ow_l = static_cast<long>((w - 1) * geom.stride + kw + geom.output_padding_w) - 2L * static_cast<long>(geom.padding);
    if (oh_l <= 0 || ow_l <= 0) throw DimensionError("conv_transpose2d: non-positive output size");
    check_bias(bias, cout, "conv_transpose2d");

    // The output image plays the role of the conv2d input; x is its column space.
    Patch p{cout, static_cast<std::size_t>(oh_l), static_cast<std::size_t>(ow_l), kh, kw, geom.stride, geom.padding, h, w};
    Tensor out = Tensor::zeros({batch, cout, p.h, p.w});
    const std::size_t in_stride = cin * h * w, out_stride = cout * p.h * p.w;
    std::vector<double> col(p.rows() * p.cols());
    auto Wt = cmat(weight.data().data(), cin, p.rows());
    for (std::size_t b = 0; b < batch; ++b) {
        mmat(col.data(), p.rows(), p.cols()).noalias() =
            Wt.transpose() * cmat(x.data().data() + b * in_stride, cin, p.cols());
        double* o = out.data().data() + b * out_stride;
        col2im(col.data(), p, o);
        if (bias.defined()) {
            for (std::size_t c = 0; c < cout; ++c) {
                const double bv = bias.data()[c];
                for (std::size_t i = 0; i < p.h * p.w; ++i) o[c * p.h * p.w + i] += bv;
            }
        }
    }

    if (detail::should_record({&x, &weight, &bias})) {
        active_tape()->record({x, weight, bias}, out, [x, weight, bias, out, p, batch, cin, cout]() mutable {
            const std::size_t in_stride = cin * p.cols(), out_stride = cout * p.h * p.w;
            std::vector<double> col(p.rows() * p.cols());
            auto Wt = cmat(weight.data().data(), cin, p.rows());
            for (std::size_t b = 0; b < batch; ++b) {
                const double* g = out.grad().data() + b * out_stride;
                im2col(g, p, col.data());
                auto gc = cmat(col.data(), p.rows(), p.cols());
                if (x.requires_grad()) {
                    mmat(x.grad_mut().data() + b * in_stride, cin, p.cols()).noalias() += Wt * gc;
                }
                if (weight.requires_grad()) {
                    mmat(weight.grad_mut().data(), cin, p.rows()).noalias() +=
                        cmat(x.data().data() + b * in_stride, cin, p.cols()) * gc.transpose();
                }
                if (bias.defined() && bias.requires_grad()) {
                    auto gb = bias.grad_mut();
                    for (std::size_t c = 0; c < cout; ++c) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < p.h * p.w; ++i) acc += g[c * p.h * p.w + i];
                        gb[c] += acc;
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace nos
