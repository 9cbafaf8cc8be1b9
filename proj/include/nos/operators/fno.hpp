#pragma once

#include <span>
#include <vector>

#include "nos/core/container.hpp"
#include "nos/flowdata/series.hpp"
#include "nos/operators/deeponet.hpp"
#include "nos/rom/autoencoder.hpp"
#include "nos/tensor/train.hpp"

namespace nos {

struct FnoConfig {
    std::size_t H = 0, W = 0;
    std::size_t m1 = 24, m2 = 24;  ///< retained modes per corner block (rows) and columns
    std::size_t width = 32;
    std::size_t depth = 4;
    Activation activation = Activation::gelu;
    std::size_t out_channels = 49;

    void validate() const;
};

/// Lift 1 -> width, `depth` Fourier layers sigma(W v + K(v)), project width -> out.
class FnoNet {
public:
    FnoNet(FnoConfig cfg, Rng& rng);

    /// [b x 1 x H x W] -> [b x out x H x W].
    Tensor forward(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
    const FnoConfig& config() const { return cfg_; }

    Conv2d lift, project;
    std::vector<Conv2d> local;
    std::vector<Tensor> spectral;  ///< [2 x w x w x m1 x m2 x 2] per layer

private:
    FnoConfig cfg_;
};

struct MscaleFnoConfig {
    FnoConfig sub;  ///< per sub-network
    std::vector<double> scales{1, 40, 80, 100, 140, 200};

    void validate() const;
};

/// sum_n gamma_n FNO_n(c_n u0) with trainable c (stored as log c) and gamma.
class MscaleFno {
public:
    MscaleFno(MscaleFnoConfig cfg, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
    const MscaleFnoConfig& config() const { return cfg_; }

    std::vector<FnoNet> nets;
    Tensor log_scale;  ///< [N]
    Tensor gamma;      ///< [N], initialised to 1/N

private:
    MscaleFnoConfig cfg_;
};

/// FNO or MscaleFNO mapping a u0 grid frame to the T-1 difference frames.
/// Inputs are standardized with training statistics and outputs rescaled;
/// masked cells are zero in both.
class GridOperator {
public:
    GridOperator(FnoConfig cfg, Rng& rng);
    GridOperator(MscaleFnoConfig cfg, Rng& rng);

    std::string kind() const { return mscale_ ? "mscale-fno" : "fno"; }

    /// `cases` are difference series on the operator's grid. The solid mask is
    /// taken from the training cases.
    TrainHistory train(const std::vector<StructuredSeries>& train_set, const std::vector<StructuredSeries>& val_set,
                       const OperatorTrainConfig& cfg);
    /// Mean per-case relative L2 of the predicted difference frames.
    double loss_on(const std::vector<StructuredSeries>& set) const;

    /// Full-field series of T frames: u0 followed by predicted du + u0.
    std::vector<double> predict(std::span<const double> u0) const;

    Container to_container() const;
    static GridOperator from_container(const Container& c);

    std::vector<std::uint8_t> mask;
    Standardizer in_norm;
    double out_scale = 1.0;

    const FnoConfig& grid_config() const { return mscale_ ? mscale_->config().sub : fno_->config(); }
    FnoNet* fno() { return fno_.get(); }
    MscaleFno* mscale() { return mscale_.get(); }

private:
    Tensor forward(const Tensor& x) const;
    Tensor inputs(const std::vector<StructuredSeries>& set, const std::vector<std::size_t>& idx) const;
    Tensor targets(const std::vector<StructuredSeries>& set, const std::vector<std::size_t>& idx) const;
    Tensor output_mask(std::size_t b) const;
    ParamList parameters() const;

    std::shared_ptr<FnoNet> fno_;
    std::shared_ptr<MscaleFno> mscale_;
};

}  // namespace nos
