#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nos/core/container.hpp"
#include "nos/flowdata/series.hpp"
#include "nos/tensor/train.hpp"

namespace nos {

/// Scalar affine normalization fitted on training snapshots.
struct Standardizer {
    double mean = 0.0;
    double std = 1.0;

    static Standardizer fit(std::span<const double> values, const std::vector<std::uint8_t>& mask = {},
                            std::size_t frame = 0);
    double apply(double v) const { return (v - mean) / std; }
    double invert(double v) const { return v * std + mean; }
};

/// Row-major stack of equally sized snapshots.
struct SnapshotSet {
    std::size_t dim = 0;
    std::vector<double> data;

    std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
    void append(std::span<const double> v);
};

/// u0 followed by every difference frame of a difference series.
void append_snapshots(SnapshotSet& set, const UnstructuredSeries& diff);
void append_snapshots(SnapshotSet& set, const StructuredSeries& diff);

struct AeTrainConfig {
    std::size_t epochs = 300;
    std::size_t batch = 64;
    OptimizerConfig optimizer{OptimizerKind::adamw, 1e-3, 1e-4};
    std::uint64_t seed = 0;
    std::size_t val_every = 5;
};

/// Encoder/decoder pair acting on flattened snapshots. Codes and fields are in
/// physical units at the public interface; standardization is internal.
class Autoencoder {
public:
    virtual ~Autoencoder() = default;

    virtual std::string kind() const = 0;
    virtual std::size_t input_dim() const = 0;
    virtual std::size_t latent_dim() const = 0;

    /// Standardized [b x input_dim] -> [b x latent_dim], and back.
    virtual Tensor encode_tensor(const Tensor& x) const = 0;
    virtual Tensor decode_tensor(const Tensor& z) const = 0;
    virtual ParamList parameters() const = 0;

    /// Cells excluded from the loss and zeroed on decode (empty = none).
    std::vector<std::uint8_t> mask;
    Standardizer norm;

    /// `count` snapshots in, `count` codes out.
    std::vector<double> encode(std::span<const double> snapshots) const;
    std::vector<double> decode(std::span<const double> codes) const;

    /// Fits the standardizer, then trains on mse with best-validation restore.
    TrainHistory train(const SnapshotSet& train_set, const SnapshotSet& val_set, const AeTrainConfig& cfg);

    /// Mask-weighted mse of the standardized reconstruction.
    double loss_on(const SnapshotSet& set) const;

    /// ||decode(encode(X)) - X||_F / ||X||_F over unmasked cells of all rows.
    double reconstruction_error(const SnapshotSet& set) const;

    Container to_container() const;

protected:
    virtual void write_config(Container& c) const = 0;
    Tensor loss_weights(std::size_t rows) const;
};

struct MlpAeConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden{512};
    std::size_t latent_dim = 256;
    Activation activation = Activation::relu;

    void validate() const;
};

/// Dense encoder input -> hidden... -> latent with a mirrored decoder.
class MlpAutoencoder : public Autoencoder {
public:
    MlpAutoencoder(MlpAeConfig cfg, Rng& rng);

    std::string kind() const override { return "mlp-ae"; }
    std::size_t input_dim() const override { return cfg_.input_dim; }
    std::size_t latent_dim() const override { return cfg_.latent_dim; }
    Tensor encode_tensor(const Tensor& x) const override;
    Tensor decode_tensor(const Tensor& z) const override;
    ParamList parameters() const override;
    const MlpAeConfig& config() const { return cfg_; }

protected:
    void write_config(Container& c) const override;

private:
    MlpAeConfig cfg_;
    Mlp encoder_, decoder_;
};

struct ConvAeConfig {
    std::size_t H = 0, W = 0;
    std::vector<std::size_t> channels{16, 32, 64, 128};
    std::size_t kernel = 3;
    std::size_t latent_dim = 256;
    Activation activation = Activation::relu;

    void validate() const;
};

/// Stride-2 convolutions down to a dense latent head; the decoder mirrors it
/// with transposed convolutions whose output padding restores H and W.
class ConvAutoencoder : public Autoencoder {
public:
    ConvAutoencoder(ConvAeConfig cfg, Rng& rng);

    std::string kind() const override { return "cae"; }
    std::size_t input_dim() const override { return cfg_.H * cfg_.W; }
    std::size_t latent_dim() const override { return cfg_.latent_dim; }
    Tensor encode_tensor(const Tensor& x) const override;
    Tensor decode_tensor(const Tensor& z) const override;
    ParamList parameters() const override;
    const ConvAeConfig& config() const { return cfg_; }
    /// Spatial size after each encoder block, starting with the input.
    const std::vector<std::pair<std::size_t, std::size_t>>& sizes() const { return sizes_; }

protected:
    void write_config(Container& c) const override;

private:
    ConvAeConfig cfg_;
    std::vector<std::pair<std::size_t, std::size_t>> sizes_;
    std::vector<Conv2d> down_;
    Dense to_latent_, from_latent_;
    std::vector<ConvTranspose2d> up_;
};

std::unique_ptr<Autoencoder> load_autoencoder(const Container& c);

struct ReconstructionRow {
    std::size_t step;
    double relative_l2;
};

/// Full-field reconstruction per timestep: step 0 is decode(encode(u0)),
/// later steps decode(encode(du_t)) + u0. One row per timestep.
std::vector<ReconstructionRow> reconstruction_report(const Autoencoder& ae, std::span<const double> full_frames,
                                                     std::size_t frame_size);
void write_reconstruction_csv(const std::string& path, const std::string& case_id,
                              const std::vector<ReconstructionRow>& rows);

}  // namespace nos
