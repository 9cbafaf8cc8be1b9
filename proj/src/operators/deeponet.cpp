#include "nos/operators/deeponet.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "nos/core/errors.hpp"

namespace nos {

void DeepOnetConfig::validate() const {
    if (latent_dim == 0 || p == 0) throw ConfigError("deeponet: latent size and p must be positive");
    if (branch_layers == 0 || trunk_layers == 0) throw ConfigError("deeponet: need at least one layer per net");
    if (branch_width == 0 || trunk_width == 0) throw ConfigError("deeponet: widths must be positive");
    if (scales.empty()) throw ConfigError("deeponet: need at least one scale");
    std::set<double> seen;
    for (double c : scales) {
        if (!(c > 0.0)) throw ConfigError("deeponet: scale factors must be positive");
        if (!seen.insert(c).second) throw ConfigError("deeponet: scale factors must be unique");
    }
}

namespace {

std::vector<std::size_t> widths(std::size_t in, std::size_t hidden, std::size_t out, std::size_t layers) {
    std::vector<std::size_t> w{in};
    for (std::size_t i = 0; i + 1 < layers; ++i) w.push_back(hidden);
    w.push_back(out);
    return w;
}

}  // namespace

DeepOnet::DeepOnet(DeepOnetConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng branch_rng = rng.substream("branch");
    branch_ = Mlp(widths(cfg_.latent_dim, cfg_.branch_width, cfg_.branch_out(), cfg_.branch_layers),
                  cfg_.branch_activation, branch_rng);
    for (std::size_t n = 0; n < cfg_.scales.size(); ++n) {
        Rng trunk_rng = rng.substream("trunk." + std::to_string(n));
        trunks_.emplace_back(widths(1, cfg_.trunk_width, cfg_.p, cfg_.trunk_layers), cfg_.trunk_activation, trunk_rng);
    }
}

Tensor DeepOnet::trunk(const Tensor& times) const {
    std::vector<Tensor> parts;
    for (std::size_t n = 0; n < trunks_.size(); ++n) parts.push_back(trunks_[n].forward(scale(times, cfg_.scales[n])));
    return parts.size() == 1 ? parts.front() : concat_cols(parts);
}

Tensor DeepOnet::forward(const Tensor& codes, const Tensor& times) const {
    if (codes.rank() != 2 || codes.dim(1) != cfg_.latent_dim) {
        throw DimensionError("deeponet: codes " + shape_str(codes.shape()) + " do not match latent size " +
                             std::to_string(cfg_.latent_dim));
    }
    if (times.rank() != 2 || times.dim(1) != 1) throw DimensionError("deeponet: times must be [nt x 1]");
    const std::size_t b = codes.dim(0), nt = times.dim(0);
    const std::size_t basis = cfg_.p * cfg_.scales.size();
    Tensor coeff = reshape(branch_.forward(codes), {b * cfg_.latent_dim, basis});
    Tensor out = matmul(coeff, transpose(trunk(times)));
    return reshape(out, {b, cfg_.latent_dim, nt});
}

ParamList DeepOnet::parameters() const {
    ParamList p;
    branch_.collect(p, "branch");
    for (std::size_t n = 0; n < trunks_.size(); ++n) trunks_[n].collect(p, "trunk." + std::to_string(n));
    return p;
}

// ---------------------------------------------------------------------------

LatentDeepOnet::LatentDeepOnet(DeepOnetConfig cfg, std::size_t n_timesteps, Rng& rng)
    : net_(std::move(cfg), rng), n_timesteps_(n_timesteps) {
    if (n_timesteps < 2) throw ConfigError("l-deeponet: need at least two timesteps");
    code_mean_.assign(net_.config().latent_dim, 0.0);
}

std::vector<LatentCase> LatentDeepOnet::encode_cases(const Autoencoder& ae, std::span<const std::vector<double>> u0,
                                                     std::span<const std::vector<double>> diffs) {
    if (u0.size() != diffs.size()) throw DimensionError("l-deeponet: u0 and difference counts differ");
    std::vector<LatentCase> out;
    for (std::size_t c = 0; c < u0.size(); ++c) out.push_back({ae.encode(u0[c]), ae.encode(diffs[c])});
    return out;
}

Tensor LatentDeepOnet::times() const {
    std::vector<double> t;
    for (std::size_t k = 1; k < n_timesteps_; ++k) t.push_back(static_cast<double>(k) / static_cast<double>(n_timesteps_));
    const std::size_t nt = t.size();
    return Tensor({nt, 1}, std::move(t));
}

Tensor LatentDeepOnet::normalized_codes(const std::vector<LatentCase>& set, const std::vector<std::size_t>& idx) const {
    const std::size_t L = net_.config().latent_dim;
    std::vector<double> x;
    x.reserve(idx.size() * L);
    for (std::size_t i : idx) {
        if (set[i].u0_code.size() != L) throw DimensionError("l-deeponet: code length does not match latent size");
        for (std::size_t j = 0; j < L; ++j) x.push_back((set[i].u0_code[j] - code_mean_[j]) / code_std_);
    }
    return Tensor({idx.size(), L}, std::move(x));
}

Tensor LatentDeepOnet::targets(const std::vector<LatentCase>& set, const std::vector<std::size_t>& idx) const {
    const std::size_t L = net_.config().latent_dim, nt = n_timesteps_ - 1;
    std::vector<double> y(idx.size() * L * nt);
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const auto& tg = set[idx[b]].targets;
        if (tg.size() != nt * L) throw DimensionError("l-deeponet: target count does not match the timesteps");
        for (std::size_t k = 0; k < nt; ++k)
            for (std::size_t j = 0; j < L; ++j) y[(b * L + j) * nt + k] = tg[k * L + j];
    }
    return Tensor({idx.size(), L, nt}, std::move(y));
}

double LatentDeepOnet::loss_on(const std::vector<LatentCase>& set) const {
    NoGradScope ng;
    std::vector<std::size_t> idx(set.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return mse_loss(net_.forward(normalized_codes(set, idx), times()), targets(set, idx)).item();
}

TrainHistory LatentDeepOnet::train(const std::vector<LatentCase>& train_set, const std::vector<LatentCase>& val_set,
                                   const OperatorTrainConfig& cfg) {
    if (train_set.empty()) throw InputError("l-deeponet: no training cases");
    const std::size_t L = net_.config().latent_dim;
    code_mean_.assign(L, 0.0);
    for (const auto& c : train_set) {
        if (c.u0_code.size() != L) throw ConfigError("l-deeponet: autoencoder latent size differs from the operator's");
        for (std::size_t j = 0; j < L; ++j) code_mean_[j] += c.u0_code[j] / static_cast<double>(train_set.size());
    }
    double ss = 0.0;
    for (const auto& c : train_set)
        for (std::size_t j = 0; j < L; ++j) ss += (c.u0_code[j] - code_mean_[j]) * (c.u0_code[j] - code_mean_[j]);
    code_std_ = std::sqrt(ss / static_cast<double>(train_set.size() * L));
    if (!(code_std_ > 0.0)) code_std_ = 1.0;

    const Tensor t = times();
    auto batch_loss = [&](const std::vector<std::size_t>& idx) {
        return mse_loss(net_.forward(normalized_codes(train_set, idx), t), targets(train_set, idx));
    };
    ValLoss val;
    if (!val_set.empty()) val = [&] { return loss_on(val_set); };
    LoopConfig loop{cfg.epochs, cfg.batch, cfg.optimizer, cfg.seed, 1e6, cfg.val_every, false};
    return run_training(net_.parameters(), train_set.size(), loop, batch_loss, val);
}

std::vector<double> LatentDeepOnet::predict_codes(std::span<const double> u0_code) const {
    NoGradScope ng;
    std::vector<LatentCase> one{{std::vector<double>(u0_code.begin(), u0_code.end()), {}}};
    Tensor out = net_.forward(normalized_codes(one, {0}), times());
    const std::size_t L = net_.config().latent_dim, nt = n_timesteps_ - 1;
    std::vector<double> codes(nt * L);
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t j = 0; j < L; ++j) codes[k * L + j] = out.data()[j * nt + k];
    return codes;
}

std::vector<double> LatentDeepOnet::predict(const Autoencoder& ae, std::span<const double> u0) const {
    const std::vector<double> du = ae.decode(predict_codes(ae.encode(u0)));
    const std::size_t n = u0.size();
    std::vector<double> out(u0.begin(), u0.end());
    out.reserve(n * n_timesteps_);
    for (std::size_t i = 0; i < du.size(); ++i) out.push_back(du[i] + u0[i % n]);
    return out;
}

Container LatentDeepOnet::to_container() const {
    const DeepOnetConfig& c = net_.config();
    Container k;
    k.kind = "l-deeponet";
    k.set("latent_dim", static_cast<std::uint64_t>(c.latent_dim));
    k.set("p", static_cast<std::uint64_t>(c.p));
    k.set("branch_layers", static_cast<std::uint64_t>(c.branch_layers));
    k.set("branch_width", static_cast<std::uint64_t>(c.branch_width));
    k.set("trunk_layers", static_cast<std::uint64_t>(c.trunk_layers));
    k.set("trunk_width", static_cast<std::uint64_t>(c.trunk_width));
    std::string sc;
    for (std::size_t i = 0; i < c.scales.size(); ++i) sc += (i ? "," : "") + format_double(c.scales[i]);
    k.set("scales", sc);
    k.set("branch_activation", to_string(c.branch_activation));
    k.set("trunk_activation", to_string(c.trunk_activation));
    k.set("n_timesteps", static_cast<std::uint64_t>(n_timesteps_));
    k.set("code_std", code_std_);
    k.add_block("code_mean", {code_mean_.size()}, code_mean_);
    save_params(k, net_.parameters());
    return k;
}

LatentDeepOnet LatentDeepOnet::from_container(const Container& k) {
    if (k.kind != "l-deeponet") throw InputError("checkpoint kind '" + k.kind + "' is not an L-DeepONet");
    DeepOnetConfig c;
    c.latent_dim = k.get_u64("latent_dim");
    c.p = k.get_u64("p");
    c.branch_layers = k.get_u64("branch_layers");
    c.branch_width = k.get_u64("branch_width");
    c.trunk_layers = k.get_u64("trunk_layers");
    c.trunk_width = k.get_u64("trunk_width");
    c.scales.clear();
    std::stringstream ss(k.get("scales"));
    std::string item;
    while (std::getline(ss, item, ',')) c.scales.push_back(parse_double(item));
    c.branch_activation = parse_activation(k.get("branch_activation"));
    c.trunk_activation = parse_activation(k.get("trunk_activation"));
    Rng rng(0);
    LatentDeepOnet op(c, k.get_u64("n_timesteps"), rng);
    op.code_std_ = k.get_double("code_std");
    op.code_mean_ = k.block("code_mean").data;
    load_params(k, op.net_.parameters());
    return op;
}

}  // namespace nos
