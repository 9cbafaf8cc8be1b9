#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <algorithm>
#include <cstring>
#include <numbers>

#include "gradcheck.hpp"
#include "nos/core/errors.hpp"
#include "nos/tensor/nn.hpp"
#include "nos/tensor/optim.hpp"
#include "nos/tensor/train.hpp"

using namespace nos;
using nos::testing::gradcheck;
using nos::testing::random_tensor;
using nos::testing::weighted_sum;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
    EXPECT_THROW(Tensor({0, 3}, {}), DimensionError);
    Tensor t({2, 3}, std::vector<double>(6, 1.0));
    EXPECT_EQ(t.numel(), 6u);
    EXPECT_FALSE(t.has_grad());
    EXPECT_THROW(t.grad(), StateError);
    EXPECT_EQ(t.grad_mut().size(), 6u);
}

TEST(Tensor, CloneIsDeep) {
    Tensor a({2}, {1.0, 2.0});
    Tensor b = a.clone();
    b.data()[0] = 7.0;
    EXPECT_EQ(a[0], 1.0);
    EXPECT_FALSE(a.same_storage(b));
}

TEST(Matmul, IdentityAndHandCases) {
    Tensor eye({2, 2}, {1, 0, 0, 1});
    Tensor m({2, 2}, {1, 2, 3, 4});
    EXPECT_EQ(values(matmul(eye, m)), values(m));
    EXPECT_DOUBLE_EQ(matmul(Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4})).item(), 11.0);
    EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
}

TEST(Matmul, GradientOfSumMatchesFiniteDifferences) {
    Rng rng(1);
    auto f = [](const std::vector<Tensor>& in) { return sum(matmul(in[0], in[1])); };
    EXPECT_LT(gradcheck(f, {random_tensor({3, 3}, rng), random_tensor({3, 3}, rng)}), 1e-6);
}

TEST(Activation, HandValues) {
    EXPECT_EQ(values(activation(Tensor({3}, {-1, 0, 2}), Activation::relu)), (std::vector<double>{0, 0, 2}));
    EXPECT_EQ(activation(Tensor({1}, {0.0}), Activation::sin).item(), 0.0);
    const double x = 0.5;
    const double expect = 0.5 * x * (1 + std::tanh(std::sqrt(2 / std::numbers::pi) * (x + 0.044715 * x * x * x)));
    EXPECT_NEAR(activation(Tensor({1}, {x}), Activation::gelu).item(), expect, 1e-15);
    EXPECT_THROW(parse_activation("tanh"), ConfigError);
}

TEST(Activation, GeluGradientAtHalf) {
    auto f = [](const std::vector<Tensor>& in) { return sum(activation(in[0], Activation::gelu)); };
    EXPECT_LT(gradcheck(f, {Tensor({1}, {0.5})}), 1e-6);
}

TEST(Activation, GradientsOnRandomInputs) {
    Rng rng(2);
    for (Activation a : {Activation::relu, Activation::gelu, Activation::sin}) {
        auto f = [a](const std::vector<Tensor>& in) { return weighted_sum(activation(in[0], a)); };
        // Keep relu inputs away from the kink.
        Tensor x = random_tensor({4, 5}, rng);
        for (double& v : x.data()) if (std::abs(v) < 0.05) v += 0.1;
        EXPECT_LT(gradcheck(f, {x}), 1e-6) << to_string(a);
    }
}

TEST(Elementwise, Gradients) {
    Rng rng(3);
    auto a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
    EXPECT_LT(gradcheck([](const auto& in) { return weighted_sum(add(in[0], in[1])); }, {a, b}), 1e-6);
    EXPECT_LT(gradcheck([](const auto& in) { return weighted_sum(sub(in[0], in[1])); }, {a, b}), 1e-6);
    EXPECT_LT(gradcheck([](const auto& in) { return weighted_sum(mul(in[0], in[1])); }, {a, b}), 1e-6);
    EXPECT_LT(gradcheck([](const auto& in) { return weighted_sum(exp(in[0])); }, {a}), 1e-6);
    EXPECT_LT(gradcheck([](const auto& in) { return weighted_sum(mul_scalar(in[0], in[1])); },
                        {a, random_tensor({1}, rng)}),
              1e-6);
    EXPECT_LT(gradcheck([](const auto& in) { return weighted_sum(add_bias(in[0], in[1])); },
                        {a, random_tensor({4}, rng)}),
              1e-6);
    EXPECT_LT(gradcheck([](const auto& in) { return weighted_sum(transpose(in[0])); }, {a}), 1e-6);
}

TEST(ShapeOps, Gradients) {
    Rng rng(4);
    auto a = random_tensor({4, 3}, rng), b = random_tensor({4, 2}, rng);
    EXPECT_LT(gradcheck([](const auto& in) { return weighted_sum(concat_cols({in[0], in[1]})); }, {a, b}), 1e-6);
    EXPECT_LT(gradcheck([](const auto& in) { return weighted_sum(slice_rows(in[0], 1, 3)); }, {a}), 1e-6);
    EXPECT_LT(gradcheck([](const auto& in) { return weighted_sum(gather_rows(in[0], {3, 0, 3})); }, {a}), 1e-6);
    EXPECT_LT(gradcheck([](const auto& in) { return weighted_sum(reshape(in[0], {2, 6})); }, {a}), 1e-6);
    EXPECT_THROW(reshape(a, {5, 2}), DimensionError);
}

TEST(Conv2d, ScalarKernelDoublesInput) {
    Rng rng(5);
    Tensor x = random_tensor({1, 1, 3, 3}, rng);
    Tensor y = conv2d(x, Tensor({1, 1, 1, 1}, {2.0}), Tensor(), {});
    for (std::size_t i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(y[i], 2 * x[i]);
}

TEST(Conv2d, AllOnesHandCount) {
    Tensor y = conv2d(Tensor::full({1, 1, 3, 3}, 1.0), Tensor::full({1, 1, 2, 2}, 1.0), Tensor(), {});
    EXPECT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
    for (double v : y.data()) EXPECT_EQ(v, 4.0);
}

TEST(Conv2d, InvalidGeometry) {
    EXPECT_THROW(conv2d(Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({1, 1, 2, 2}), Tensor(), {}), DimensionError);
    EXPECT_THROW(conv2d(Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1, 1, 3, 3}), Tensor(), {}), DimensionError);
    EXPECT_THROW(conv_transpose2d(Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1, 1, 3, 3}), Tensor(),
                                  {.stride = 2, .padding = 1, .output_padding_h = 2}),
                 DimensionError);
}

TEST(Conv2d, KernelGradientOnRandom4x4) {
    Rng rng(6);
    Tensor x = random_tensor({1, 1, 4, 4}, rng);
    auto f = [x](const std::vector<Tensor>& in) { return weighted_sum(conv2d(x, in[0], Tensor(), {})); };
    EXPECT_LT(gradcheck(f, {random_tensor({1, 1, 3, 3}, rng)}), 1e-5);
}

TEST(Conv2d, FullGradientsStridedPadded) {
    Rng rng(7);
    Conv2dGeometry g{.stride = 2, .padding = 1};
    auto f = [g](const std::vector<Tensor>& in) { return weighted_sum(conv2d(in[0], in[1], in[2], g)); };
    EXPECT_LT(gradcheck(f, {random_tensor({2, 2, 5, 6}, rng), random_tensor({3, 2, 3, 3}, rng),
                            random_tensor({3}, rng)}),
              1e-6);
}

TEST(ConvTranspose2d, OutputSizeAndGradients) {
    Rng rng(8);
    Conv2dGeometry g{.stride = 2, .padding = 1, .output_padding_h = 1, .output_padding_w = 0};
    Tensor y = conv_transpose2d(random_tensor({1, 2, 3, 4}, rng), random_tensor({2, 3, 3, 3}, rng), Tensor(), g);
    EXPECT_EQ(y.shape(), (Shape{1, 3, 6, 7}));
    auto f = [g](const std::vector<Tensor>& in) { return weighted_sum(conv_transpose2d(in[0], in[1], in[2], g)); };
    EXPECT_LT(gradcheck(f, {random_tensor({2, 2, 3, 4}, rng), random_tensor({2, 3, 3, 3}, rng),
                            random_tensor({3}, rng)}),
              1e-6);
}

TEST(ConvTranspose2d, IsAdjointOfConv) {
    // <conv(x), y> == <x, conv_t(y)> for matching geometry and shared weights.
    Rng rng(9);
    Conv2dGeometry g{.stride = 2, .padding = 1};
    Tensor w = random_tensor({3, 2, 3, 3}, rng);
    Tensor x = random_tensor({1, 2, 7, 7}, rng);
    Tensor cx = conv2d(x, w, Tensor(), g);
    Tensor y = random_tensor(cx.shape(), rng);
    Tensor ty = conv_transpose2d(y, w, Tensor(), g);
    ASSERT_EQ(ty.shape(), x.shape());
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < cx.numel(); ++i) lhs += cx[i] * y[i];
    for (std::size_t i = 0; i < x.numel(); ++i) rhs += x[i] * ty[i];
    EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(Fft, ConstantFieldIsDcOnly) {
    Tensor s = rfft2(Tensor::full({1, 1, 4, 4}, 5.0));
    EXPECT_EQ(s.shape(), (Shape{1, 1, 4, 3, 2}));
    EXPECT_NEAR(s[0], 80.0, 1e-12);
    for (std::size_t i = 1; i < s.numel(); ++i) EXPECT_NEAR(s[i], 0.0, 1e-12);
}

TEST(Fft, MatchesDirectDft) {
    Rng rng(10);
    const std::size_t h = 5, w = 6;
    Tensor x = random_tensor({1, 1, h, w}, rng);
    Tensor s = rfft2(x);
    for (std::size_t k = 0; k < h; ++k) {
        for (std::size_t l = 0; l < w / 2 + 1; ++l) {
            std::complex<double> acc;
            for (std::size_t m = 0; m < h; ++m)
                for (std::size_t n = 0; n < w; ++n) {
                    const double th = -2 * std::numbers::pi * (double(k * m) / h + double(l * n) / w);
                    acc += x[m * w + n] * std::complex<double>(std::cos(th), std::sin(th));
                }
            EXPECT_NEAR(s[(k * (w / 2 + 1) + l) * 2], acc.real(), 1e-12);
            EXPECT_NEAR(s[(k * (w / 2 + 1) + l) * 2 + 1], acc.imag(), 1e-12);
        }
    }
}

TEST(Fft, RoundTripOnSeveralSizes) {
    Rng rng(11);
    for (auto [h, w] : std::vector<std::pair<std::size_t, std::size_t>>{{8, 8}, {2, 2}, {5, 7}, {6, 9}, {48, 129}}) {
        Tensor x = random_tensor({2, 3, h, w}, rng);
        Tensor r = irfft2(rfft2(x), w);
        ASSERT_EQ(r.shape(), x.shape());
        for (std::size_t i = 0; i < x.numel(); ++i) ASSERT_NEAR(r[i], x[i], 1e-12);
    }
    EXPECT_THROW(rfft2(Tensor::zeros({1, 1, 1, 4})), DimensionError);
    EXPECT_THROW(irfft2(Tensor::zeros({1, 1, 4, 3, 2}), 7), DimensionError);
}

TEST(Fft, GradientOfSpectralEnergy) {
    Rng rng(12);
    auto f = [](const std::vector<Tensor>& in) {
        Tensor s = rfft2(in[0]);
        return sum(mul(s, s));
    };
    for (auto [h, w] : std::vector<std::pair<std::size_t, std::size_t>>{{4, 4}, {3, 5}, {6, 7}}) {
        EXPECT_LT(gradcheck(f, {random_tensor({1, 2, h, w}, rng)}), 1e-5);
    }
}

TEST(Fft, InverseGradient) {
    Rng rng(13);
    for (auto [h, w] : std::vector<std::pair<std::size_t, std::size_t>>{{4, 4}, {3, 5}, {4, 6}}) {
        auto f = [w](const std::vector<Tensor>& in) { return weighted_sum(irfft2(in[0], w)); };
        EXPECT_LT(gradcheck(f, {random_tensor({1, 2, h, w / 2 + 1, 2}, rng)}), 1e-6);
    }
}

TEST(Fft, InverseOfArbitrarySpectrumMatchesDirectSum) {
    // Non-Hermitian input: only Re of the weighted synthesis survives.
    Rng rng(14);
    for (auto [h, w] : std::vector<std::pair<std::size_t, std::size_t>>{{4, 6}, {3, 5}, {6, 9}}) {
        const std::size_t wf = w / 2 + 1;
        Tensor s = random_tensor({1, 1, h, wf, 2}, rng);
        Tensor x = irfft2(s, w);
        for (std::size_t m = 0; m < h; ++m) {
            for (std::size_t n = 0; n < w; ++n) {
                double acc = 0.0;
                for (std::size_t k = 0; k < h; ++k) {
                    for (std::size_t l = 0; l < wf; ++l) {
                        const double c = (l == 0 || (w % 2 == 0 && l == wf - 1)) ? 1.0 : 2.0;
                        const double th = 2 * std::numbers::pi * (double(k * m) / h + double(l * n) / w);
                        const std::complex<double> z(s[(k * wf + l) * 2], s[(k * wf + l) * 2 + 1]);
                        acc += c * (z * std::complex<double>(std::cos(th), std::sin(th))).real();
                    }
                }
                EXPECT_NEAR(x[m * w + n], acc / double(h * w), 1e-12);
            }
        }
    }
}

namespace {

Tensor identity_modes(std::size_t c, std::size_t m1, std::size_t m2, double gain) {
    Tensor r = Tensor::zeros({2, c, c, m1, m2, 2});
    for (std::size_t blk = 0; blk < 2; ++blk)
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t k = 0; k < m1; ++k)
                for (std::size_t l = 0; l < m2; ++l) r.data()[((((blk * c + i) * c + i) * m1 + k) * m2 + l) * 2] = gain;
    return r;
}

Tensor pure_mode(std::size_t h, std::size_t wf, std::size_t k, std::size_t l) {
    Tensor s = Tensor::zeros({1, 1, h, wf, 2});
    s.data()[(k * wf + l) * 2] = 1.0;
    s.data()[(k * wf + l) * 2 + 1] = 0.5;
    return s;
}

}  // namespace

TEST(SpectralMultiply, IdentityFullModes) {
    Rng rng(14);
    Tensor v = rfft2(random_tensor({2, 3, 8, 8}, rng));
    Tensor out = spectral_multiply(v, identity_modes(3, 4, 5, 1.0), 4, 5);
    for (std::size_t i = 0; i < v.numel(); ++i) EXPECT_NEAR(out[i], v[i], 1e-10);
}

TEST(SpectralMultiply, DoublesRetainedModeAndTruncatesOthers) {
    const std::size_t h = 12, wf = 7, m1 = 4, m2 = 4;
    Tensor out = spectral_multiply(pure_mode(h, wf, 3, 2), identity_modes(1, m1, m2, 2.0), m1, m2);
    Tensor in = pure_mode(h, wf, 3, 2);
    for (std::size_t i = 0; i < in.numel(); ++i) EXPECT_DOUBLE_EQ(out[i], 2 * in[i]);
    Tensor cut = spectral_multiply(pure_mode(h, wf, m1 + 1, 0), identity_modes(1, m1, m2, 1.0), m1, m2);
    for (double v : cut.data()) EXPECT_EQ(v, 0.0);
}

TEST(SpectralMultiply, ModeLimits) {
    Tensor v = Tensor::zeros({1, 1, 8, 5, 2});
    EXPECT_THROW(spectral_multiply(v, Tensor::zeros({2, 1, 1, 5, 2, 2}), 5, 2), ConfigError);
    EXPECT_THROW(spectral_multiply(v, Tensor::zeros({2, 1, 1, 2, 6, 2}), 2, 6), ConfigError);
    EXPECT_THROW(spectral_multiply(v, Tensor::zeros({2, 1, 1, 2, 2, 2}), 3, 2), DimensionError);
}

TEST(SpectralMultiply, Gradients) {
    Rng rng(15);
    auto f = [](const std::vector<Tensor>& in) { return weighted_sum(spectral_multiply(in[0], in[1], 2, 3)); };
    EXPECT_LT(gradcheck(f, {random_tensor({2, 2, 6, 4, 2}, rng), random_tensor({2, 2, 3, 2, 3, 2}, rng)}), 1e-6);
}

TEST(Loss, HandValues) {
    Rng rng(16);
    Tensor ref = random_tensor({3, 4}, rng);
    EXPECT_EQ(mse_loss(ref, ref).item(), 0.0);
    EXPECT_EQ(relative_l2_loss(ref, ref).item(), 0.0);
    EXPECT_NEAR(relative_l2_loss(scale(ref, 2.0), ref).item(), 1.0, 1e-14);
    EXPECT_DOUBLE_EQ(mse_loss(Tensor({2}, {1, 3}), Tensor({2}, {0, 0})).item(), 5.0);
    EXPECT_THROW(relative_l2_loss(ref, Tensor::zeros({3, 4})), DomainError);
    EXPECT_THROW(mse_loss(ref, Tensor::zeros({4, 3})), DimensionError);
}

TEST(Loss, WeightedMseIgnoresZeroWeight) {
    Tensor w({3}, {1, 0, 1});
    EXPECT_DOUBLE_EQ(mse_loss(Tensor({3}, {1, 100, 3}), Tensor({3}, {0, 0, 0}), w).item(), 5.0);
}

TEST(Loss, Gradients) {
    Rng rng(17);
    Tensor ref = random_tensor({3, 5}, rng);
    auto fm = [ref](const std::vector<Tensor>& in) { return mse_loss(in[0], ref); };
    auto fr = [ref](const std::vector<Tensor>& in) { return relative_l2_loss(in[0], ref); };
    EXPECT_LT(gradcheck(fm, {random_tensor({3, 5}, rng)}), 1e-6);
    EXPECT_LT(gradcheck(fr, {random_tensor({3, 5}, rng)}), 1e-6);
}

TEST(Tape, SecondBackwardIsRejected) {
    Tensor a({2}, {1, 2}, true);
    Tape tape;
    Tensor loss;
    {
        TapeScope s(tape);
        loss = sum(mul(a, a));
    }
    tape.backward(loss);
    EXPECT_EQ(values(Tensor({2}, {a.grad()[0], a.grad()[1]})), (std::vector<double>{2, 4}));
    EXPECT_THROW(tape.backward(loss), StateError);
}

TEST(Tape, NothingRecordedWithoutGradInputs) {
    Tape tape;
    TapeScope s(tape);
    (void)add(Tensor({1}, {1.0}), Tensor({1}, {2.0}));
    EXPECT_EQ(tape.size(), 0u);
    Tensor p({1}, {1.0}, true);
    {
        NoGradScope ng;
        (void)add(p, p);
    }
    EXPECT_EQ(tape.size(), 0u);
}

TEST(Tape, ReplayIsBitIdentical) {
    auto run = [] {
        Rng rng(42);
        Mlp net({4, 8, 3}, Activation::gelu, rng);
        Tensor x = random_tensor({5, 4}, rng);
        ParamList params;
        net.collect(params, "net");
        Optimizer opt(tensors_of(params), {.kind = OptimizerKind::adamw, .lr = 1e-2, .weight_decay = 1e-4});
        double last = 0;
        for (int it = 0; it < 5; ++it) {
            opt.zero_grad();
            Tape tape;
            Tensor loss;
            {
                TapeScope s(tape);
                loss = mse_loss(net.forward(x), Tensor::zeros({5, 3}));
            }
            tape.backward(loss);
            opt.step();
            last = loss.item();
        }
        return last;
    };
    const double a = run(), b = run();
    EXPECT_EQ(std::memcmp(&a, &b, sizeof(double)), 0);
}

TEST(Optimizer, ZeroGradientBehaviour) {
    Tensor p({2}, {1.0, -2.0}, true);
    p.grad_mut();
    Optimizer adam({p}, {.kind = OptimizerKind::adam, .lr = 0.1});
    adam.step();
    EXPECT_EQ(values(p), (std::vector<double>{1.0, -2.0}));

    Tensor q({2}, {1.0, -2.0}, true);
    q.grad_mut();
    Optimizer adamw({q}, {.kind = OptimizerKind::adamw, .lr = 0.1, .weight_decay = 0.01});
    adamw.step();
    EXPECT_DOUBLE_EQ(q[0], 1.0 * (1 - 0.1 * 0.01));
    EXPECT_DOUBLE_EQ(q[1], -2.0 * (1 - 0.1 * 0.01));
}

TEST(Optimizer, FirstStepMovesByLearningRate) {
    // Bias-corrected first step: m_hat = g, v_hat = g^2, so dp = -lr g / (|g| + eps).
    Tensor p({1}, {3.0}, true);
    p.grad_mut()[0] = 1.0;
    Optimizer opt({p}, {.lr = 1e-3});
    opt.step();
    EXPECT_NEAR(p[0], 3.0 - 1e-3 / (1.0 + 1e-8), 1e-15);
    EXPECT_EQ(opt.state().step, 1u);
}

TEST(Optimizer, ExponentialDecaySchedule) {
    LrSchedule s{.rate = 0.5, .interval = 100};
    EXPECT_EQ(s.lr_at(1e-3, 99), 1e-3);
    EXPECT_EQ(s.lr_at(1e-3, 100), 5e-4);
    EXPECT_EQ(s.lr_at(1e-3, 250), 2.5e-4);
    Tensor p({1}, {0.0}, true);
    Optimizer opt({p}, {.lr = 1e-3, .schedule = s});
    opt.set_epoch(100);
    EXPECT_EQ(opt.state().lr, 5e-4);
}

TEST(Optimizer, MissingGradientIsStateError) {
    Tensor p({1}, {0.0}, true);
    Optimizer opt({p}, {});
    EXPECT_THROW(opt.step(), StateError);
    EXPECT_THROW(parse_optimizer("sgd"), ConfigError);
}

TEST(Optimizer, MomentBuffersMatchParameters) {
    Tensor a = Tensor::zeros({3, 4}, true), b = Tensor::zeros({7}, true);
    Optimizer opt({a, b}, {});
    ASSERT_EQ(opt.state().m.size(), 2u);
    EXPECT_EQ(opt.state().m[0].size(), 12u);
    EXPECT_EQ(opt.state().v[1].size(), 7u);
}

TEST(Layers, DenseInitBound) {
    Rng rng(3);
    Dense d(16, 4, rng);
    for (double v : d.weight.data()) EXPECT_LE(std::abs(v), 0.25);
    EXPECT_EQ(d.out_features(), 4u);
}

TEST(Layers, DenseGradients) {
    Rng rng(18);
    Dense d(4, 3, rng);
    auto f = [](const std::vector<Tensor>& in) {
        return weighted_sum(add_bias(matmul(in[0], in[1]), in[2]));
    };
    EXPECT_LT(gradcheck(f, {random_tensor({5, 4}, rng), d.weight, d.bias}), 1e-6);
}

TEST(RunTraining, FitsLineAndTracksBestValidation) {
    Rng rng(40);
    Dense d(1, 1, rng);
    ParamList params;
    d.collect(params, "d");
    std::vector<double> xs, ys;
    for (int i = 0; i < 32; ++i) {
        xs.push_back(i / 32.0);
        ys.push_back(3.0 * i / 32.0 - 1.0);
    }
    const Tensor X({32, 1}, xs), Y({32, 1}, ys);
    LoopConfig cfg;
    cfg.epochs = 400;
    cfg.batch = 8;
    cfg.optimizer = {OptimizerKind::adam, 5e-2};
    cfg.val_every = 7;
    auto loss = [&](const std::vector<std::size_t>& idx) {
        return mse_loss(d.forward(gather_rows(X, idx)), gather_rows(Y, idx));
    };
    auto val = [&] {
        NoGradScope ng;
        return mse_loss(d.forward(X), Y).item();
    };
    auto h = run_training(params, 32, cfg, loss, val);
    EXPECT_NEAR(d.weight[0], 3.0, 1e-3);
    EXPECT_NEAR(d.bias[0], -1.0, 1e-3);
    EXPECT_EQ(h.epoch.size(), 58u);  // 0, 7, ..., 399
    EXPECT_EQ(h.epoch.back(), 399u);
    for (std::size_t i = 1; i < h.best_val.size(); ++i) EXPECT_LE(h.best_val[i], h.best_val[i - 1]);
    EXPECT_DOUBLE_EQ(h.best_val.back(), *std::min_element(h.val.begin(), h.val.end()));
}

TEST(RunTraining, RestoresBestValidationParameters) {
    Tensor w({1}, {0.0}, true);
    ParamList params{{"w", w}};
    LoopConfig cfg;
    cfg.epochs = 50;
    cfg.batch = 1;
    cfg.optimizer = {OptimizerKind::adam, 0.1};
    // Training drives w toward 5; validation prefers w = 1.
    auto loss = [&](const std::vector<std::size_t>&) {
        Tensor d = sub(w, Tensor::scalar(5.0));
        return mul(d, d);
    };
    auto val = [&] { return std::abs(w[0] - 1.0); };
    auto h = run_training(params, 1, cfg, loss, val);
    ASSERT_GT(h.best_epoch, 0u);
    EXPECT_LT(std::abs(w[0] - 1.0), 0.1);
    cfg.restore_best = false;
    w.data()[0] = 0.0;
    run_training(params, 1, cfg, loss, val);
    EXPECT_GT(w[0], 3.0);
}

TEST(RunTraining, DivergenceAndNanAbort) {
    Tensor w({1}, {1.0}, true);
    ParamList params{{"w", w}};
    LoopConfig cfg;
    cfg.epochs = 3;
    auto big = [&](const std::vector<std::size_t>&) { return scale(w, 1e7); };
    EXPECT_THROW(run_training(params, 1, cfg, big), DivergenceError);
    auto nan = [&](const std::vector<std::size_t>&) { return scale(w, std::nan("")); };
    EXPECT_THROW(run_training(params, 1, cfg, nan), DivergenceError);
}

TEST(RunTraining, ParamsRoundTripThroughContainer) {
    Rng rng(41);
    Mlp a({3, 4, 2}, Activation::gelu, rng), b({3, 4, 2}, Activation::gelu, rng);
    ParamList pa, pb;
    a.collect(pa, "m");
    b.collect(pb, "m");
    Container c;
    save_params(c, pa);
    load_params(decode(encode(c)), pb);
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const auto x = pa[i].tensor.data(), y = pb[i].tensor.data();
        EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
    }
    Mlp wrong({3, 5, 2}, Activation::gelu, rng);
    ParamList pw;
    wrong.collect(pw, "m");
    EXPECT_THROW(load_params(c, pw), InputError);
    ParamList renamed;
    a.collect(renamed, "other");
    EXPECT_THROW(load_params(c, renamed), InputError);
}
