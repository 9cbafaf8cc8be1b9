#pragma once

#include <span>
#include <vector>

#include "nos/core/container.hpp"
#include "nos/rom/autoencoder.hpp"
#include "nos/tensor/train.hpp"

namespace nos {

struct DeepOnetConfig {
    std::size_t latent_dim = 256;
    std::size_t p = 16;                ///< basis functions per scale
    std::size_t branch_layers = 6;
    std::size_t branch_width = 128;
    std::size_t trunk_layers = 3;
    std::size_t trunk_width = 128;
    std::vector<double> scales{1.0};
    Activation branch_activation = Activation::relu;
    Activation trunk_activation = Activation::sin;

    void validate() const;
    std::size_t branch_out() const { return latent_dim * p * scales.size(); }
};

/// Vector-output DeepONet with one trunk sub-net per scale factor:
/// s_j(t) = sum_n sum_i b_{j,i,n}(u0) * tau_{i,n}(c_n t). No output bias.
class DeepOnet {
public:
    DeepOnet(DeepOnetConfig cfg, Rng& rng);

    /// codes [b x latent], times [nt x 1] -> [b x latent x nt].
    Tensor forward(const Tensor& codes, const Tensor& times) const;
    /// Trunk basis for all scales side by side: [nt x p * |scales|].
    Tensor trunk(const Tensor& times) const;

    ParamList parameters() const;
    const DeepOnetConfig& config() const { return cfg_; }
    Mlp& branch_net() { return branch_; }
    std::vector<Mlp>& trunk_nets() { return trunks_; }

private:
    DeepOnetConfig cfg_;
    Mlp branch_;
    std::vector<Mlp> trunks_;
};

struct OperatorTrainConfig {
    std::size_t epochs = 1000;
    std::size_t batch = 8;
    OptimizerConfig optimizer{OptimizerKind::adam, 1e-3, 0.0, 0.9, 0.999, 1e-8, {0.999, 1}};
    std::uint64_t seed = 0;
    std::size_t val_every = 10;
};

/// One case in latent form: the u0 code and the codes of du at steps 1..T-1.
struct LatentCase {
    std::vector<double> u0_code;
    std::vector<double> targets;  ///< [(T-1) x latent], row per step
};

/// DeepONet acting on autoencoder codes. The trunk sees t = step / T.
class LatentDeepOnet {
public:
    LatentDeepOnet(DeepOnetConfig cfg, std::size_t n_timesteps, Rng& rng);

    /// Encodes u0 and every du frame of each difference series.
    static std::vector<LatentCase> encode_cases(const Autoencoder& ae, std::span<const std::vector<double>> u0,
                                                std::span<const std::vector<double>> diffs);

    TrainHistory train(const std::vector<LatentCase>& train_set, const std::vector<LatentCase>& val_set,
                       const OperatorTrainConfig& cfg);

    /// Latent codes for steps 1..T-1 from one u0 code: [(T-1) x latent].
    std::vector<double> predict_codes(std::span<const double> u0_code) const;
    /// Full-field series of T frames: u0 followed by decoded du + u0.
    std::vector<double> predict(const Autoencoder& ae, std::span<const double> u0) const;

    /// Latent mse over a set of cases.
    double loss_on(const std::vector<LatentCase>& set) const;

    Container to_container() const;
    static LatentDeepOnet from_container(const Container& c);

    DeepOnet& net() { return net_; }
    const DeepOnet& net() const { return net_; }
    std::size_t n_timesteps() const { return n_timesteps_; }

private:
    Tensor normalized_codes(const std::vector<LatentCase>& set, const std::vector<std::size_t>& idx) const;
    Tensor targets(const std::vector<LatentCase>& set, const std::vector<std::size_t>& idx) const;
    Tensor times() const;

    DeepOnet net_;
    std::size_t n_timesteps_;
    std::vector<double> code_mean_;
    double code_std_ = 1.0;
};

}  // namespace nos
