#pragma once

#include <vector>

#include "nos/tensor/tensor.hpp"

namespace nos {

enum class Activation { identity, relu, gelu, sin };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

// -- linear algebra ---------------------------------------------------------

/// [m x k] . [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// 2-D transpose.
Tensor transpose(const Tensor& a);

// -- elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// Multiplies every element of `a` by the single value held in `s`.
Tensor mul_scalar(const Tensor& a, const Tensor& s);
Tensor exp(const Tensor& a);
/// Adds `bias` (shape [n]) to every row of `a` (last dimension n).
Tensor add_bias(const Tensor& a, const Tensor& bias);

/// Elementwise nonlinearity. GELU is the tanh approximation
/// 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
Tensor activation(const Tensor& x, Activation kind);

// -- shape ------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape);
/// Concatenates 2-D tensors with equal row counts along columns.
Tensor concat_cols(const std::vector<Tensor>& parts);
/// Rows [begin, end) of a tensor, viewed as [dim0 x rest].
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
/// Gathers rows by index, viewed as [dim0 x rest].
Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& rows);

// -- reductions -------------------------------------------------------------

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// -- convolution ------------------------------------------------------------

struct Conv2dGeometry {
    std::size_t stride = 1;
    std::size_t padding = 0;
    /// Extra rows/cols appended to a transposed convolution's output.
    std::size_t output_padding_h = 0;
    std::size_t output_padding_w = 0;
};

/// Cross-correlation with zero padding.
/// x [b x cin x H x W], weight [cout x cin x kh x kw], bias [cout] or undefined.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dGeometry geom);

/// Adjoint of conv2d with respect to its input.
/// x [b x cin x H x W], weight [cin x cout x kh x kw], bias [cout] or undefined.
/// Output size (H-1)*stride - 2*padding + kh + output_padding_h.
Tensor conv_transpose2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dGeometry geom);

// -- spectral ---------------------------------------------------------------

/// Unnormalized 2-D real FFT over the trailing two axes.
/// [b x c x H x W] -> [b x c x H x (W/2+1) x 2], last axis (re, im).
Tensor rfft2(const Tensor& x);

/// Inverse of rfft2 including the 1/(H*W) factor. `width` is the original W.
/// Imaginary parts of the self-conjugate bins are ignored, matching a
/// Hermitian-symmetric reconstruction.
Tensor irfft2(const Tensor& spectrum, std::size_t width);

/// Truncated per-mode channel mixing of a half spectrum.
///
/// v_hat [b x cin x H x Wf x 2]; weights [2 x cin x cout x m1 x m2 x 2].
/// Block 0 covers rows 0..m1-1, block 1 rows H-m1..H-1; both cover columns
/// 0..m2-1. Modes outside the blocks are zeroed.
Tensor spectral_multiply(const Tensor& v_hat, const Tensor& weights, std::size_t m1, std::size_t m2);

// -- losses -----------------------------------------------------------------

/// Mean of squared differences. With `weights` (same shape, constant), the
/// weighted mean sum(w d^2) / sum(w).
Tensor mse_loss(const Tensor& pred, const Tensor& ref, const Tensor& weights = Tensor());

/// ||pred_i - ref_i|| / ||ref_i|| per sample (leading axis), averaged.
Tensor relative_l2_loss(const Tensor& pred, const Tensor& ref);

}  // namespace nos
