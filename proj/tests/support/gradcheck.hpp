#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "nos/core/rng.hpp"
#include "nos/tensor/ops.hpp"

namespace nos::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> d(shape_numel(shape));
    for (double& v : d) v = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(d));
}

/// Norm-wise relative error between the tape gradient and a central finite
/// difference of `f`, maximized over all inputs.
inline double gradcheck(const std::function<Tensor(const std::vector<Tensor>&)>& f, std::vector<Tensor> inputs,
                        double h = 1e-5) {
    for (Tensor& t : inputs) {
        t.set_requires_grad(true);
        t.clear_grad();
    }
    Tape tape;
    Tensor loss;
    {
        TapeScope scope(tape);
        loss = f(inputs);
    }
    tape.backward(loss);

    double worst = 0.0;
    NoGradScope no_grad;
    for (Tensor& t : inputs) {
        std::vector<double> analytic(t.numel(), 0.0);
        if (t.has_grad()) analytic.assign(t.grad().begin(), t.grad().end());
        double diff2 = 0.0, ref2 = 0.0;
        for (std::size_t i = 0; i < t.numel(); ++i) {
            const double orig = t.data()[i];
            t.data()[i] = orig + h;
            const double fp = f(inputs).item();
            t.data()[i] = orig - h;
            const double fm = f(inputs).item();
            t.data()[i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
            ref2 += numeric * numeric;
        }
        worst = std::max(worst, std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-8));
    }
    return worst;
}

/// Scalarizes `out` with a fixed random weighting so every output element
/// contributes a distinct sensitivity.
inline Tensor weighted_sum(const Tensor& out, std::uint64_t seed = 99) {
    Rng rng(seed);
    return sum(mul(out, random_tensor(out.shape(), rng)));
}

}  // namespace nos::testing
