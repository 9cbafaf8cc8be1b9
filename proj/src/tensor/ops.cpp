#include "nos/tensor/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numbers>

#include "nos/core/errors.hpp"

namespace nos {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

ConstMatMap as_matrix(std::span<const double> s, std::size_t rows, std::size_t cols) {
    return ConstMatMap(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MatMap as_matrix(std::span<double> s, std::size_t rows, std::size_t cols) {
    return MatMap(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
    if (a.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                             shape_str(a.shape()));
    }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Activation parse_activation(const std::string& name) {
    if (name == "identity" || name == "linear") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "gelu") return Activation::gelu;
    if (name == "sin") return Activation::sin;
    throw ConfigError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::gelu: return "gelu";
        case Activation::sin: return "sin";
    }
    return "?";
}

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw DimensionError("matmul: inner dimensions disagree " + shape_str(a.shape()) + " . " +
                             shape_str(b.shape()));
    }
    Tensor out = Tensor::zeros({m, n});
    as_matrix(out.data(), m, n).noalias() = as_matrix(a.data(), m, k) * as_matrix(b.data(), k, n);
    if (detail::should_record({&a, &b})) {
        active_tape()->record({a, b}, out, [a, b, out, m, k, n]() mutable {
            auto g = as_matrix(out.grad(), m, n);
            if (a.requires_grad()) as_matrix(a.grad_mut(), m, k).noalias() += g * as_matrix(b.data(), k, n).transpose();
            if (b.requires_grad()) as_matrix(b.grad_mut(), k, n).noalias() += as_matrix(a.data(), m, k).transpose() * g;
        });
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    require_rank(a, 2, "transpose");
    const std::size_t m = a.dim(0), n = a.dim(1);
    Tensor out = Tensor::zeros({n, m});
    as_matrix(out.data(), n, m) = as_matrix(a.data(), m, n).transpose();
    if (detail::should_record({&a})) {
        active_tape()->record({a}, out, [a, out, m, n]() mutable {
            as_matrix(a.grad_mut(), m, n) += as_matrix(out.grad(), n, m).transpose();
        });
    }
    return out;
}

// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    auto o = out.data();
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < n; ++i) o[i] = x[i] + y[i];
    if (detail::should_record({&a, &b})) {
        active_tape()->record({a, b}, out, [a, b, out, n]() mutable {
            auto g = out.grad();
            if (a.requires_grad()) {
                auto ga = a.grad_mut();
                for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto gb = b.grad_mut();
                for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
            }
        });
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    auto o = out.data();
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < n; ++i) o[i] = x[i] - y[i];
    if (detail::should_record({&a, &b})) {
        active_tape()->record({a, b}, out, [a, b, out, n]() mutable {
            auto g = out.grad();
            if (a.requires_grad()) {
                auto ga = a.grad_mut();
                for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto gb = b.grad_mut();
                for (std::size_t i = 0; i < n; ++i) gb[i] -= g[i];
            }
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    auto o = out.data();
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < n; ++i) o[i] = x[i] * y[i];
    if (detail::should_record({&a, &b})) {
        active_tape()->record({a, b}, out, [a, b, out, n]() mutable {
            auto g = out.grad();
            auto x = a.data();
            auto y = b.data();
            if (a.requires_grad()) {
                auto ga = a.grad_mut();
                for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * y[i];
            }
            if (b.requires_grad()) {
                auto gb = b.grad_mut();
                for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * x[i];
            }
        });
    }
    return out;
}

Tensor scale(const Tensor& a, double factor) {
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    auto o = out.data();
    auto x = a.data();
    for (std::size_t i = 0; i < n; ++i) o[i] = factor * x[i];
    if (detail::should_record({&a})) {
        active_tape()->record({a}, out, [a, out, n, factor]() mutable {
            auto g = out.grad();
            auto ga = a.grad_mut();
            for (std::size_t i = 0; i < n; ++i) ga[i] += factor * g[i];
        });
    }
    return out;
}

Tensor mul_scalar(const Tensor& a, const Tensor& s) {
    if (s.numel() != 1) throw DimensionError("mul_scalar: scale must hold one value, got " + shape_str(s.shape()));
    const double c = s.item();
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    auto o = out.data();
    auto x = a.data();
    for (std::size_t i = 0; i < n; ++i) o[i] = c * x[i];
    if (detail::should_record({&a, &s})) {
        active_tape()->record({a, s}, out, [a, s, out, n, c]() mutable {
            auto g = out.grad();
            if (a.requires_grad()) {
                auto ga = a.grad_mut();
                for (std::size_t i = 0; i < n; ++i) ga[i] += c * g[i];
            }
            if (s.requires_grad()) {
                auto x = a.data();
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) acc += g[i] * x[i];
                s.grad_mut()[0] += acc;
            }
        });
    }
    return out;
}

Tensor exp(const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    auto o = out.data();
    auto x = a.data();
    for (std::size_t i = 0; i < n; ++i) o[i] = std::exp(x[i]);
    if (detail::should_record({&a})) {
        active_tape()->record({a}, out, [a, out, n]() mutable {
            auto g = out.grad();
            auto y = out.data();
            auto ga = a.grad_mut();
            for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * y[i];
        });
    }
    return out;
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
    require_rank(bias, 1, "add_bias");
    const std::size_t cols = bias.dim(0);
    if (a.rank() == 0 || a.shape().back() != cols) {
        throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not match " + shape_str(a.shape()));
    }
    const std::size_t rows = a.numel() / cols;
    Tensor out = a.clone();
    as_matrix(out.data(), rows, cols).rowwise() += ConstVecMap(bias.data().data(), static_cast<Eigen::Index>(cols)).transpose();
    if (detail::should_record({&a, &bias})) {
        active_tape()->record({a, bias}, out, [a, bias, out, rows, cols]() mutable {
            auto g = as_matrix(out.grad(), rows, cols);
            if (a.requires_grad()) as_matrix(a.grad_mut(), rows, cols) += g;
            if (bias.requires_grad()) {
                VecMap(bias.grad_mut().data(), static_cast<Eigen::Index>(cols)) += g.colwise().sum().transpose();
            }
        });
    }
    return out;
}

Tensor activation(const Tensor& x, Activation kind) {
    if (kind == Activation::identity) return x;
    Tensor out = Tensor::zeros(x.shape());
    const std::size_t n = x.numel();
    auto o = out.data();
    auto v = x.data();
    switch (kind) {
        case Activation::relu:
            for (std::size_t i = 0; i < n; ++i) o[i] = v[i] > 0.0 ? v[i] : 0.0;
            break;
        case Activation::gelu:
            for (std::size_t i = 0; i < n; ++i) {
                const double z = v[i];
                o[i] = 0.5 * z * (1.0 + std::tanh(kGeluC * (z + kGeluA * z * z * z)));
            }
            break;
        case Activation::sin:
            for (std::size_t i = 0; i < n; ++i) o[i] = std::sin(v[i]);
            break;
        case Activation::identity:
            break;
    }
    if (detail::should_record({&x})) {
        active_tape()->record({x}, out, [x, out, n, kind]() mutable {
            auto g = out.grad();
            auto v = x.data();
            auto gx = x.grad_mut();
            switch (kind) {
                case Activation::relu:
                    for (std::size_t i = 0; i < n; ++i) gx[i] += v[i] > 0.0 ? g[i] : 0.0;
                    break;
                case Activation::gelu:
                    for (std::size_t i = 0; i < n; ++i) {
                        const double z = v[i];
                        const double u = kGeluC * (z + kGeluA * z * z * z);
                        const double th = std::tanh(u);
                        const double du = kGeluC * (1.0 + 3.0 * kGeluA * z * z);
                        gx[i] += g[i] * (0.5 * (1.0 + th) + 0.5 * z * (1.0 - th * th) * du);
                    }
                    break;
                case Activation::sin:
                    for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * std::cos(v[i]);
                    break;
                case Activation::identity:
                    break;
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    }
    std::vector<double> values(a.data().begin(), a.data().end());
    Tensor out(std::move(shape), std::move(values));
    if (detail::should_record({&a})) {
        active_tape()->record({a}, out, [a, out]() mutable {
            auto g = out.grad();
            auto ga = a.grad_mut();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
    }
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    const std::size_t rows = parts.front().dim(0);
    std::size_t cols = 0;
    for (const Tensor& p : parts) {
        require_rank(p, 2, "concat_cols");
        if (p.dim(0) != rows) throw DimensionError("concat_cols: row counts differ");
        cols += p.dim(1);
    }
    Tensor out = Tensor::zeros({rows, cols});
    auto om = as_matrix(out.data(), rows, cols);
    std::size_t offset = 0;
    bool record = false;
    for (const Tensor& p : parts) {
        om.middleCols(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(p.dim(1))) =
            as_matrix(p.data(), rows, p.dim(1));
        offset += p.dim(1);
        record = record || detail::should_record({&p});
    }
    if (record) {
        active_tape()->record(parts, out, [parts, out, rows, cols]() mutable {
            auto g = as_matrix(out.grad(), rows, cols);
            std::size_t off = 0;
            for (Tensor p : parts) {
                const std::size_t c = p.dim(1);
                if (p.requires_grad()) {
                    as_matrix(p.grad_mut(), rows, c) +=
                        g.middleCols(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(c));
                }
                off += c;
            }
        });
    }
    return out;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
    const std::size_t rows = a.dim(0);
    if (begin >= end || end > rows) {
        throw DimensionError("slice_rows: invalid range [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") for " + shape_str(a.shape()));
    }
    const std::size_t stride = a.numel() / rows;
    Shape shape = a.shape();
    shape[0] = end - begin;
    std::vector<double> values(a.data().begin() + static_cast<std::ptrdiff_t>(begin * stride),
                               a.data().begin() + static_cast<std::ptrdiff_t>(end * stride));
    Tensor out(std::move(shape), std::move(values));
    if (detail::should_record({&a})) {
        active_tape()->record({a}, out, [a, out, begin, stride]() mutable {
            auto g = out.grad();
            auto ga = a.grad_mut();
            for (std::size_t i = 0; i < g.size(); ++i) ga[begin * stride + i] += g[i];
        });
    }
    return out;
}

Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw DimensionError("gather_rows: no rows requested");
    const std::size_t n = a.dim(0);
    const std::size_t stride = a.numel() / n;
    Shape shape = a.shape();
    shape[0] = rows.size();
    std::vector<double> values(rows.size() * stride);
    auto src = a.data();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= n) throw DimensionError("gather_rows: row index out of range");
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(rows[r] * stride), stride,
                    values.begin() + static_cast<std::ptrdiff_t>(r * stride));
    }
    Tensor out(std::move(shape), std::move(values));
    if (detail::should_record({&a})) {
        active_tape()->record({a}, out, [a, out, rows, stride]() mutable {
            auto g = out.grad();
            auto ga = a.grad_mut();
            for (std::size_t r = 0; r < rows.size(); ++r) {
                for (std::size_t j = 0; j < stride; ++j) ga[rows[r] * stride + j] += g[r * stride + j];
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    Tensor out = Tensor::scalar(s);
    if (detail::should_record({&a})) {
        active_tape()->record({a}, out, [a, out]() mutable {
            const double g = out.grad()[0];
            for (double& v : a.grad_mut()) v += g;
        });
    }
    return out;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

// ---------------------------------------------------------------------------

Tensor mse_loss(const Tensor& pred, const Tensor& ref, const Tensor& weights) {
    require_same_shape(pred, ref, "mse_loss");
    const std::size_t n = pred.numel();
    auto p = pred.data();
    auto r = ref.data();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = p[i] - r[i];
    double denom = static_cast<double>(n);
    std::vector<double> w;
    if (weights.defined()) {
        require_same_shape(pred, weights, "mse_loss weights");
        w.assign(weights.data().begin(), weights.data().end());
        denom = 0.0;
        for (double v : w) denom += v;
        if (denom <= 0.0) throw DomainError("mse_loss: weights sum to zero");
    } else {
        w.assign(n, 1.0);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += w[i] * diff[i] * diff[i];
    Tensor out = Tensor::scalar(acc / denom);
    if (detail::should_record({&pred, &ref})) {
        active_tape()->record({pred, ref}, out,
                              [pred, ref, out, diff = std::move(diff), w = std::move(w), denom]() mutable {
                                  const double g = out.grad()[0] * 2.0 / denom;
                                  if (pred.requires_grad()) {
                                      auto gp = pred.grad_mut();
                                      for (std::size_t i = 0; i < diff.size(); ++i) gp[i] += g * w[i] * diff[i];
                                  }
                                  if (ref.requires_grad()) {
                                      auto gr = ref.grad_mut();
                                      for (std::size_t i = 0; i < diff.size(); ++i) gr[i] -= g * w[i] * diff[i];
                                  }
                              });
    }
    return out;
}

Tensor relative_l2_loss(const Tensor& pred, const Tensor& ref) {
    require_same_shape(pred, ref, "relative_l2_loss");
    const std::size_t batch = pred.dim(0);
    const std::size_t per = pred.numel() / batch;
    auto p = pred.data();
    auto r = ref.data();
    std::vector<double> num(batch), den(batch);
    double total = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        double nn = 0.0, dd = 0.0;
        for (std::size_t i = 0; i < per; ++i) {
            const double d = p[b * per + i] - r[b * per + i];
            nn += d * d;
            dd += r[b * per + i] * r[b * per + i];
        }
        if (dd <= 0.0) throw DomainError("relative_l2_loss: reference sample " + std::to_string(b) + " has zero norm");
        num[b] = std::sqrt(nn);
        den[b] = std::sqrt(dd);
        total += num[b] / den[b];
    }
    Tensor out = Tensor::scalar(total / static_cast<double>(batch));
    if (detail::should_record({&pred, &ref})) {
        active_tape()->record({pred, ref}, out, [pred, ref, out, num, den, batch, per]() mutable {
            const double g = out.grad()[0] / static_cast<double>(batch);
            auto p = pred.data();
            auto r = ref.data();
            for (std::size_t b = 0; b < batch; ++b) {
                // d/dp ||p-r||/||r|| = (p-r) / (||p-r|| ||r||); undefined at p == r, take 0.
                const double coef_p = num[b] > 0.0 ? g / (num[b] * den[b]) : 0.0;
                const double ratio = num[b] / den[b];
                for (std::size_t i = 0; i < per; ++i) {
                    const std::size_t k = b * per + i;
                    const double d = p[k] - r[k];
                    if (pred.requires_grad()) pred.grad_mut()[k] += coef_p * d;
                    if (ref.requires_grad()) {
                        ref.grad_mut()[k] += -coef_p * d - g * ratio * r[k] / (den[b] * den[b]);
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace nos
