#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>

#include "nos/core/errors.hpp"
#include "nos/tensor/ops.hpp"

namespace nos {

namespace {

// FFTW planning is not thread safe; plans are created once per geometry under
// a lock and executed with the new-array interface afterwards.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan r2c(std::size_t h, std::size_t w) {
        std::lock_guard lock(mu_);
        auto key = std::make_tuple(h, w, 0);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * h * w));
        auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * h * (w / 2 + 1)));
        fftw_plan plan = fftw_plan_dft_r2c_2d(static_cast<int>(h), static_cast<int>(w), in, out, FFTW_ESTIMATE);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(key, plan);
        return plan;
    }

    /// Half-spectrum to real inverse, unnormalized.
    fftw_plan c2r(std::size_t h, std::size_t w) {
        std::lock_guard lock(mu_);
        auto key = std::make_tuple(h, w, 1);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto* in = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * h * (w / 2 + 1)));
        auto* out = static_cast<double*>(fftw_malloc(sizeof(double) * h * w));
        fftw_plan plan = fftw_plan_dft_c2r_2d(static_cast<int>(h), static_cast<int>(w), in, out, FFTW_ESTIMATE);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }
    std::mutex mu_;
    std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

struct FftwBuffer {
    explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {}
    ~FftwBuffer() { fftw_free(ptr); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    void* ptr;
};

/// Forward half-spectrum transform of each H x W plane.
void forward_planes(const double* in, std::size_t planes, std::size_t h, std::size_t w, double* out) {
    const std::size_t wf = w / 2 + 1;
    fftw_plan plan = PlanCache::instance().r2c(h, w);
    FftwBuffer src(sizeof(double) * h * w);
    FftwBuffer dst(sizeof(fftw_complex) * h * wf);
    auto* s = static_cast<double*>(src.ptr);
    auto* d = static_cast<fftw_complex*>(dst.ptr);
    for (std::size_t pl = 0; pl < planes; ++pl) {
        std::copy_n(in + pl * h * w, h * w, s);
        fftw_execute_dft_r2c(plan, s, d);
        double* o = out + pl * h * wf * 2;
        for (std::size_t i = 0; i < h * wf; ++i) {
            o[2 * i] = d[i][0];
            o[2 * i + 1] = d[i][1];
        }
    }
}

std::vector<double> column_multiplicity(std::size_t w);

/// Re( sum_{k, l < wf} weight_l * S[k,l] * exp(+i theta) ) for each plane, where
/// theta = 2 pi (k m / H + l n / W). Unnormalized. The c2r transform applies
/// the Hermitian multiplicity itself, so columns are prescaled by weight / c_l.
void half_spectrum_synthesis(const double* spec, std::size_t planes, std::size_t h, std::size_t w,
                             const std::vector<double>& weight, double* out) {
    const std::size_t wf = w / 2 + 1;
    fftw_plan plan = PlanCache::instance().c2r(h, w);
    const std::vector<double> mult = column_multiplicity(w);
    std::vector<double> f(wf);
    for (std::size_t l = 0; l < wf; ++l) f[l] = weight[l] / mult[l];
    FftwBuffer src(sizeof(fftw_complex) * h * wf);
    FftwBuffer dst(sizeof(double) * h * w);
    auto* s = static_cast<fftw_complex*>(src.ptr);
    auto* d = static_cast<double*>(dst.ptr);
    for (std::size_t pl = 0; pl < planes; ++pl) {
        const double* in = spec + pl * h * wf * 2;
        for (std::size_t k = 0; k < h; ++k) {
            for (std::size_t l = 0; l < wf; ++l) {
                s[k * wf + l][0] = f[l] * in[(k * wf + l) * 2];
                s[k * wf + l][1] = f[l] * in[(k * wf + l) * 2 + 1];
            }
        }
        fftw_execute_dft_c2r(plan, s, d);
        std::copy_n(d, h * w, out + pl * h * w);
    }
}

/// Multiplicity of each retained column in a Hermitian reconstruction.
std::vector<double> column_multiplicity(std::size_t w) {
    const std::size_t wf = w / 2 + 1;
    std::vector<double> m(wf, 2.0);
    m[0] = 1.0;
    if (w % 2 == 0) m[wf - 1] = 1.0;
    return m;
}

}  // namespace

Tensor rfft2(const Tensor& x) {
    if (x.rank() != 4) throw DimensionError("rfft2: expected [b x c x H x W], got " + shape_str(x.shape()));
    const std::size_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h < 2 || w < 2) throw DimensionError("rfft2: H and W must be at least 2");
    const std::size_t wf = w / 2 + 1;
    Tensor out = Tensor::zeros({b, c, h, wf, 2});
    forward_planes(x.data().data(), b * c, h, w, out.data().data());
    if (detail::should_record({&x})) {
        active_tape()->record({x}, out, [x, out, b, c, h, w]() mutable {
            // Adjoint of the half-spectrum DFT: synthesis with unit weights.
            std::vector<double> ones(w / 2 + 1, 1.0);
            std::vector<double> tmp(b * c * h * w);
            half_spectrum_synthesis(out.grad().data(), b * c, h, w, ones, tmp.data());
            auto gx = x.grad_mut();
            for (std::size_t i = 0; i < tmp.size(); ++i) gx[i] += tmp[i];
        });
    }
    return out;
}

Tensor irfft2(const Tensor& spectrum, std::size_t width) {
    if (spectrum.rank() != 5 || spectrum.dim(4) != 2) {
        throw DimensionError("irfft2: expected [b x c x H x Wf x 2], got " + shape_str(spectrum.shape()));
    }
    const std::size_t b = spectrum.dim(0), c = spectrum.dim(1), h = spectrum.dim(2), wf = spectrum.dim(3);
    if (width < 2 || width / 2 + 1 != wf) {
        throw DimensionError("irfft2: width " + std::to_string(width) + " inconsistent with " + std::to_string(wf) +
                             " retained columns");
    }
    const std::size_t w = width;
    const double norm = 1.0 / static_cast<double>(h * w);
    std::vector<double> weight = column_multiplicity(w);
    for (double& v : weight) v *= norm;
    Tensor out = Tensor::zeros({b, c, h, w});
    half_spectrum_synthesis(spectrum.data().data(), b * c, h, w, weight, out.data().data());
    if (detail::should_record({&spectrum})) {
        active_tape()->record({spectrum}, out, [spectrum, out, weight, b, c, h, w]() mutable {
            const std::size_t wf = w / 2 + 1;
            std::vector<double> tmp(b * c * h * wf * 2);
            forward_planes(out.grad().data(), b * c, h, w, tmp.data());
            auto gs = spectrum.grad_mut();
            // d x / d Re S = weight * cos, d x / d Im S = -weight * sin: the
            // forward DFT of the incoming gradient scaled by the column weight.
            for (std::size_t pl = 0; pl < b * c * h; ++pl) {
                for (std::size_t l = 0; l < wf; ++l) {
                    const std::size_t i = (pl * wf + l) * 2;
                    gs[i] += weight[l] * tmp[i];
                    gs[i + 1] += weight[l] * tmp[i + 1];
                }
            }
        });
    }
    return out;
}

Tensor spectral_multiply(const Tensor& v_hat, const Tensor& weights, std::size_t m1, std::size_t m2) {
    if (v_hat.rank() != 5 || v_hat.dim(4) != 2) {
        throw DimensionError("spectral_multiply: expected spectrum [b x c x H x Wf x 2], got " + shape_str(v_hat.shape()));
    }
    const std::size_t b = v_hat.dim(0), cin = v_hat.dim(1), h = v_hat.dim(2), wf = v_hat.dim(3);
    if (m1 == 0 || m2 == 0 || 2 * m1 > h || m2 > wf) {
        throw ConfigError("spectral_multiply: modes (" + std::to_string(m1) + ", " + std::to_string(m2) +
                          ") exceed spectrum of " + std::to_string(h) + " rows x " + std::to_string(wf) + " columns");
    }
    if (weights.rank() != 6 || weights.dim(0) != 2 || weights.dim(1) != cin || weights.dim(3) != m1 ||
        weights.dim(4) != m2 || weights.dim(5) != 2) {
        throw DimensionError("spectral_multiply: weights " + shape_str(weights.shape()) + " do not match spectrum " +
                             shape_str(v_hat.shape()) + " with modes (" + std::to_string(m1) + ", " +
                             std::to_string(m2) + ")");
    }
    const std::size_t cout = weights.dim(2);
    Tensor out = Tensor::zeros({b, cout, h, wf, 2});

    // Index helpers. Complex values are stored as (re, im) pairs.
    auto vidx = [=](std::size_t bb, std::size_t c, std::size_t k, std::size_t l) {
        return (((bb * cin + c) * h + k) * wf + l) * 2;
    };
    auto oidx = [=](std::size_t bb, std::size_t c, std::size_t k, std::size_t l) {
        return (((bb * cout + c) * h + k) * wf + l) * 2;
    };
    auto ridx = [=](std::size_t blk, std::size_t i, std::size_t o, std::size_t k, std::size_t l) {
        return ((((blk * cin + i) * cout + o) * m1 + k) * m2 + l) * 2;
    };
    auto row_of = [=](std::size_t blk, std::size_t k) { return blk == 0 ? k : h - m1 + k; };

    {
        auto v = v_hat.data();
        auto r = weights.data();
        auto o = out.data();
        for (std::size_t bb = 0; bb < b; ++bb)
            for (std::size_t blk = 0; blk < 2; ++blk)
                for (std::size_t i = 0; i < cin; ++i)
                    for (std::size_t oc = 0; oc < cout; ++oc)
                        for (std::size_t k = 0; k < m1; ++k) {
                            const std::size_t row = row_of(blk, k);
                            for (std::size_t l = 0; l < m2; ++l) {
                                const std::size_t vi = vidx(bb, i, row, l), ri = ridx(blk, i, oc, k, l),
                                                  oi = oidx(bb, oc, row, l);
                                const double vr = v[vi], vim = v[vi + 1], rr = r[ri], rim = r[ri + 1];
                                o[oi] += vr * rr - vim * rim;
                                o[oi + 1] += vr * rim + vim * rr;
                            }
                        }
    }

    if (detail::should_record({&v_hat, &weights})) {
        active_tape()->record({v_hat, weights}, out,
                              [v_hat, weights, out, b, cin, cout, m1, m2, vidx, oidx, ridx, row_of]() mutable {
                                  auto g = out.grad();
                                  auto v = v_hat.data();
                                  auto r = weights.data();
                                  const bool gv_on = v_hat.requires_grad(), gr_on = weights.requires_grad();
                                  std::span<double> gv = gv_on ? v_hat.grad_mut() : std::span<double>();
                                  std::span<double> gr = gr_on ? weights.grad_mut() : std::span<double>();
                                  for (std::size_t bb = 0; bb < b; ++bb)
                                      for (std::size_t blk = 0; blk < 2; ++blk)
                                          for (std::size_t i = 0; i < cin; ++i)
                                              for (std::size_t oc = 0; oc < cout; ++oc)
                                                  for (std::size_t k = 0; k < m1; ++k) {
                                                      const std::size_t row = row_of(blk, k);
                                                      for (std::size_t l = 0; l < m2; ++l) {
                                                          const std::size_t vi = vidx(bb, i, row, l),
                                                                            ri = ridx(blk, i, oc, k, l),
                                                                            oi = oidx(bb, oc, row, l);
                                                          const double gre = g[oi], gim = g[oi + 1];
                                                          // G * conj(R) and G * conj(v)
                                                          if (gv_on) {
                                                              gv[vi] += gre * r[ri] + gim * r[ri + 1];
                                                              gv[vi + 1] += gim * r[ri] - gre * r[ri + 1];
                                                          }
                                                          if (gr_on) {
                                                              gr[ri] += gre * v[vi] + gim * v[vi + 1];
                                                              gr[ri + 1] += gim * v[vi] - gre * v[vi + 1];
                                                          }
                                                      }
                                                  }
                              });
    }
    return out;
}

}  // namespace nos
