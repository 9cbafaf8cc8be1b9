#include "nos/rom/autoencoder.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "nos/core/errors.hpp"

namespace nos {

namespace {

std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoul(item));
    }
    return out;
}

constexpr std::size_t kEvalChunk = 128;

}  // namespace

Standardizer Standardizer::fit(std::span<const double> values, const std::vector<std::uint8_t>& mask, std::size_t frame) {
    double s = 0.0, s2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!mask.empty() && mask[i % frame]) continue;
        s += values[i];
        ++n;
    }
    if (n == 0) throw InputError("standardizer: no values");
    const double mean = s / static_cast<double>(n);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!mask.empty() && mask[i % frame]) continue;
        s2 += (values[i] - mean) * (values[i] - mean);
    }
    const double sd = std::sqrt(s2 / static_cast<double>(n));
    return {mean, sd > 0.0 ? sd : 1.0};
}

void SnapshotSet::append(std::span<const double> v) {
    if (dim == 0) dim = v.size();
    if (v.size() != dim) throw DimensionError("snapshot of size " + std::to_string(v.size()) + ", expected " + std::to_string(dim));
    data.insert(data.end(), v.begin(), v.end());
}

void append_snapshots(SnapshotSet& set, const UnstructuredSeries& diff) {
    if (!diff.is_difference) throw InputError("snapshots: expected a difference series");
    set.append(diff.initial);
    for (std::size_t t = 0; t < diff.n_frames(); ++t) set.append(diff.frame(t));
}

void append_snapshots(SnapshotSet& set, const StructuredSeries& diff) {
    if (!diff.is_difference) throw InputError("snapshots: expected a difference series");
    set.append(diff.initial);
    for (std::size_t t = 0; t < diff.n_frames(); ++t) set.append(diff.frame(t));
}

// ---------------------------------------------------------------------------

std::vector<double> Autoencoder::encode(std::span<const double> snapshots) const {
    const std::size_t dim = input_dim();
    if (snapshots.size() % dim != 0) throw DimensionError("encode: input is not a whole number of snapshots");
    const std::size_t count = snapshots.size() / dim;
    std::vector<double> out;
    out.reserve(count * latent_dim());
    NoGradScope ng;
    for (std::size_t b = 0; b < count; b += kEvalChunk) {
        const std::size_t n = std::min(kEvalChunk, count - b);
        std::vector<double> x(n * dim);
        for (std::size_t i = 0; i < n * dim; ++i) {
            x[i] = (!mask.empty() && mask[i % dim]) ? 0.0 : norm.apply(snapshots[b * dim + i]);
        }
        Tensor z = encode_tensor(Tensor({n, dim}, std::move(x)));
        out.insert(out.end(), z.data().begin(), z.data().end());
    }
    return out;
}

std::vector<double> Autoencoder::decode(std::span<const double> codes) const {
    const std::size_t lat = latent_dim(), dim = input_dim();
    if (codes.size() % lat != 0) throw DimensionError("decode: input is not a whole number of codes");
    const std::size_t count = codes.size() / lat;
    std::vector<double> out;
    out.reserve(count * dim);
    NoGradScope ng;
    for (std::size_t b = 0; b < count; b += kEvalChunk) {
        const std::size_t n = std::min(kEvalChunk, count - b);
        Tensor z({n, lat}, std::vector<double>(codes.begin() + static_cast<std::ptrdiff_t>(b * lat),
                                               codes.begin() + static_cast<std::ptrdiff_t>((b + n) * lat)));
        Tensor x = decode_tensor(z);
        auto d = x.data();
        for (std::size_t i = 0; i < d.size(); ++i) {
            out.push_back((!mask.empty() && mask[i % dim]) ? 0.0 : norm.invert(d[i]));
        }
    }
    return out;
}

Tensor Autoencoder::loss_weights(std::size_t rows) const {
    if (mask.empty()) return Tensor();
    std::vector<double> w(rows * mask.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mask[i % mask.size()] ? 0.0 : 1.0;
    return Tensor({rows, mask.size()}, std::move(w));
}

namespace {

Tensor standardized(const Autoencoder& ae, const SnapshotSet& set) {
    std::vector<double> x(set.data.size());
    const std::size_t dim = set.dim;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = (!ae.mask.empty() && ae.mask[i % dim]) ? 0.0 : ae.norm.apply(set.data[i]);
    }
    return Tensor({set.size(), dim}, std::move(x));
}

}  // namespace

double Autoencoder::loss_on(const SnapshotSet& set) const {
    if (set.dim != input_dim()) throw DimensionError(kind() + ": snapshot size does not match the model");
    NoGradScope ng;
    const Tensor x = standardized(*this, set);
    double total = 0.0;
    for (std::size_t b = 0; b < set.size(); b += kEvalChunk) {
        const std::size_t n = std::min(kEvalChunk, set.size() - b);
        Tensor xb = slice_rows(x, b, b + n);
        total += mse_loss(decode_tensor(encode_tensor(xb)), xb, loss_weights(n)).item() * static_cast<double>(n);
    }
    return total / static_cast<double>(set.size());
}

TrainHistory Autoencoder::train(const SnapshotSet& train_set, const SnapshotSet& val_set, const AeTrainConfig& cfg) {
    if (train_set.dim != input_dim()) throw DimensionError(kind() + ": snapshot size does not match the model");
    norm = Standardizer::fit(train_set.data, mask, input_dim());
    const Tensor x = standardized(*this, train_set);
    const ParamList params = parameters();
    LoopConfig loop{cfg.epochs, cfg.batch, cfg.optimizer, cfg.seed, 1e6, cfg.val_every};
    auto batch_loss = [&](const std::vector<std::size_t>& idx) {
        Tensor xb = gather_rows(x, idx);
        return mse_loss(decode_tensor(encode_tensor(xb)), xb, loss_weights(idx.size()));
    };
    ValLoss val;
    if (val_set.size() > 0) val = [&] { return loss_on(val_set); };
    return run_training(params, train_set.size(), loop, batch_loss, val);
}

double Autoencoder::reconstruction_error(const SnapshotSet& set) const {
    const std::vector<double> rec = decode(encode(set.data));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        if (!mask.empty() && mask[i % set.dim]) continue;
        const double d = rec[i] - set.data[i];
        num += d * d;
        den += set.data[i] * set.data[i];
    }
    if (den == 0.0) throw DomainError("reconstruction error: reference has zero norm");
    return std::sqrt(num / den);
}

Container Autoencoder::to_container() const {
    Container c;
    c.kind = kind();
    c.set("norm_mean", norm.mean);
    c.set("norm_std", norm.std);
    write_config(c);
    if (!mask.empty()) c.add_block("mask", {mask.size()}, std::vector<double>(mask.begin(), mask.end()));
    save_params(c, parameters());
    return c;
}

// ---------------------------------------------------------------------------

void MlpAeConfig::validate() const {
    if (input_dim == 0 || latent_dim == 0) throw ConfigError("mlp-ae: input and latent sizes must be positive");
    std::size_t prev = input_dim;
    for (std::size_t w : hidden) {
        if (w >= prev) throw ConfigError("mlp-ae: encoder widths must decrease toward the latent size");
        prev = w;
    }
    if (latent_dim > prev) throw ConfigError("mlp-ae: latent size exceeds the last hidden width");
}

MlpAutoencoder::MlpAutoencoder(MlpAeConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::vector<std::size_t> widths{cfg_.input_dim};
    widths.insert(widths.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    widths.push_back(cfg_.latent_dim);
    encoder_ = Mlp(widths, cfg_.activation, rng);
    std::vector<std::size_t> back(widths.rbegin(), widths.rend());
    decoder_ = Mlp(back, cfg_.activation, rng);
}

Tensor MlpAutoencoder::encode_tensor(const Tensor& x) const { return encoder_.forward(x); }
Tensor MlpAutoencoder::decode_tensor(const Tensor& z) const { return decoder_.forward(z); }

ParamList MlpAutoencoder::parameters() const {
    ParamList p;
    encoder_.collect(p, "encoder");
    decoder_.collect(p, "decoder");
    return p;
}

void MlpAutoencoder::write_config(Container& c) const {
    c.set("input_dim", static_cast<std::uint64_t>(cfg_.input_dim));
    c.set("hidden", join(cfg_.hidden));
    c.set("latent_dim", static_cast<std::uint64_t>(cfg_.latent_dim));
    c.set("activation", to_string(cfg_.activation));
}

// ---------------------------------------------------------------------------

void ConvAeConfig::validate() const {
    if (H < 2 || W < 2) throw ConfigError("cae: grid must be at least 2 x 2");
    if (channels.empty()) throw ConfigError("cae: need at least one conv block");
    if (kernel != 3) throw ConfigError("cae: only kernel 3 is supported");
    if (latent_dim == 0) throw ConfigError("cae: latent size must be positive");
    std::size_t h = H, w = W;
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (h < 2 || w < 2) throw ConfigError("cae: too many stride-2 blocks for a " + std::to_string(H) + "x" + std::to_string(W) + " grid");
        h = (h + 1) / 2;
        w = (w + 1) / 2;
    }
}

ConvAutoencoder::ConvAutoencoder(ConvAeConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const Conv2dGeometry down{2, 1};
    sizes_.push_back({cfg_.H, cfg_.W});
    std::size_t cin = 1;
    for (std::size_t c : cfg_.channels) {
        down_.emplace_back(cin, c, cfg_.kernel, down, rng);
        const auto [h, w] = sizes_.back();
        sizes_.push_back({(h + 1) / 2, (w + 1) / 2});
        cin = c;
    }
    const auto [h, w] = sizes_.back();
    const std::size_t flat = cin * h * w;
    to_latent_ = Dense(flat, cfg_.latent_dim, rng);
    from_latent_ = Dense(cfg_.latent_dim, flat, rng);
    for (std::size_t i = cfg_.channels.size(); i-- > 0;) {
        const std::size_t cout = i == 0 ? 1 : cfg_.channels[i - 1];
        const auto [ih, iw] = sizes_[i + 1];
        const auto [oh, ow] = sizes_[i];
        // (in-1)*2 - 2 + 3 = 2 in - 1; the padding makes up even targets.
        Conv2dGeometry g{2, 1, oh - (2 * ih - 1), ow - (2 * iw - 1)};
        up_.emplace_back(cfg_.channels[i], cout, cfg_.kernel, g, rng);
    }
}

Tensor ConvAutoencoder::encode_tensor(const Tensor& x) const {
    const std::size_t b = x.dim(0);
    Tensor h = reshape(x, {b, 1, cfg_.H, cfg_.W});
    for (const Conv2d& c : down_) h = activation(c.forward(h), cfg_.activation);
    return to_latent_.forward(reshape(h, {b, h.numel() / b}));
}

Tensor ConvAutoencoder::decode_tensor(const Tensor& z) const {
    const std::size_t b = z.dim(0);
    const auto [h, w] = sizes_.back();
    Tensor x = activation(from_latent_.forward(z), cfg_.activation);
    x = reshape(x, {b, cfg_.channels.back(), h, w});
    for (std::size_t i = 0; i < up_.size(); ++i) {
        x = up_[i].forward(x);
        if (i + 1 < up_.size()) x = activation(x, cfg_.activation);
    }
    return reshape(x, {b, cfg_.H * cfg_.W});
}

ParamList ConvAutoencoder::parameters() const {
    ParamList p;
    for (std::size_t i = 0; i < down_.size(); ++i) down_[i].collect(p, "down." + std::to_string(i));
    to_latent_.collect(p, "to_latent");
    from_latent_.collect(p, "from_latent");
    for (std::size_t i = 0; i < up_.size(); ++i) up_[i].collect(p, "up." + std::to_string(i));
    return p;
}

void ConvAutoencoder::write_config(Container& c) const {
    c.set("H", static_cast<std::uint64_t>(cfg_.H));
    c.set("W", static_cast<std::uint64_t>(cfg_.W));
    c.set("channels", join(cfg_.channels));
    c.set("kernel", static_cast<std::uint64_t>(cfg_.kernel));
    c.set("latent_dim", static_cast<std::uint64_t>(cfg_.latent_dim));
    c.set("activation", to_string(cfg_.activation));
}

// ---------------------------------------------------------------------------

std::unique_ptr<Autoencoder> load_autoencoder(const Container& c) {
    Rng rng(0);
    std::unique_ptr<Autoencoder> ae;
    if (c.kind == "mlp-ae") {
        MlpAeConfig cfg;
        cfg.input_dim = c.get_u64("input_dim");
        cfg.hidden = split_sizes(c.get("hidden"));
        cfg.latent_dim = c.get_u64("latent_dim");
        cfg.activation = parse_activation(c.get("activation"));
        ae = std::make_unique<MlpAutoencoder>(cfg, rng);
    } else if (c.kind == "cae") {
        ConvAeConfig cfg;
        cfg.H = c.get_u64("H");
        cfg.W = c.get_u64("W");
        cfg.channels = split_sizes(c.get("channels"));
        cfg.kernel = c.get_u64("kernel");
        cfg.latent_dim = c.get_u64("latent_dim");
        cfg.activation = parse_activation(c.get("activation"));
        ae = std::make_unique<ConvAutoencoder>(cfg, rng);
    } else {
        throw InputError("checkpoint kind '" + c.kind + "' is not an autoencoder");
    }
    ae->norm = {c.get_double("norm_mean"), c.get_double("norm_std")};
    if (c.has_block("mask")) {
        const Block& m = c.block("mask");
        ae->mask.assign(m.data.begin(), m.data.end());
    }
    load_params(c, ae->parameters());
    return ae;
}

std::vector<ReconstructionRow> reconstruction_report(const Autoencoder& ae, std::span<const double> full_frames,
                                                     std::size_t frame_size) {
    if (frame_size != ae.input_dim() || full_frames.size() % frame_size != 0 || full_frames.empty()) {
        throw DimensionError("reconstruction report: frames do not match the model");
    }
    const std::size_t T = full_frames.size() / frame_size;
    std::vector<double> snaps(full_frames.begin(), full_frames.end());
    for (std::size_t t = 1; t < T; ++t)
        for (std::size_t c = 0; c < frame_size; ++c) snaps[t * frame_size + c] -= full_frames[c];
    const std::vector<double> rec = ae.decode(ae.encode(snaps));
    std::vector<ReconstructionRow> rows;
    for (std::size_t t = 0; t < T; ++t) {
        double num = 0.0, den = 0.0;
        for (std::size_t c = 0; c < frame_size; ++c) {
            if (!ae.mask.empty() && ae.mask[c]) continue;
            const double r = full_frames[t * frame_size + c];
            const double p = rec[t * frame_size + c] + (t > 0 ? full_frames[c] : 0.0);
            num += (p - r) * (p - r);
            den += r * r;
        }
        if (den == 0.0) throw DomainError("reconstruction report: frame " + std::to_string(t) + " has zero norm");
        rows.push_back({t, std::sqrt(num / den)});
    }
    return rows;
}

void write_reconstruction_csv(const std::string& path, const std::string& case_id,
                              const std::vector<ReconstructionRow>& rows) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out << "case,step,relative_l2\n";
    for (const auto& r : rows) out << case_id << ',' << r.step << ',' << format_double(r.relative_l2) << '\n';
}

}  // namespace nos
