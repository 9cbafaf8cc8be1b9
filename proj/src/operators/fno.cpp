#include "nos/operators/fno.hpp"

#include <cmath>
#include <sstream>

#include "nos/core/errors.hpp"

namespace nos {

void FnoConfig::validate() const {
    if (H < 2 || W < 2) throw ConfigError("fno: grid must be at least 2 x 2");
    if (m1 == 0 || m2 == 0) throw ConfigError("fno: mode counts must be positive");
    if (2 * m1 > H) {
        throw ConfigError("fno: m1 = " + std::to_string(m1) + " exceeds H/2 for H = " + std::to_string(H));
    }
    if (m2 > W / 2 + 1) {
        throw ConfigError("fno: m2 = " + std::to_string(m2) + " exceeds W/2+1 for W = " + std::to_string(W));
    }
    if (width == 0 || depth == 0 || out_channels == 0) throw ConfigError("fno: width, depth and outputs must be positive");
}

FnoNet::FnoNet(FnoConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t w = cfg_.width;
    lift = Conv2d(1, w, 1, {}, rng);
    const double bound = 1.0 / static_cast<double>(w * w);
    for (std::size_t l = 0; l < cfg_.depth; ++l) {
        spectral.push_back(uniform_param({2, w, w, cfg_.m1, cfg_.m2, 2}, bound, rng));
        local.emplace_back(w, w, 1, Conv2dGeometry{}, rng);
    }
    project = Conv2d(w, cfg_.out_channels, 1, {}, rng);
}

Tensor FnoNet::forward(const Tensor& x) const {
    if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != cfg_.H || x.dim(3) != cfg_.W) {
        throw DimensionError("fno: input " + shape_str(x.shape()) + " does not match grid " + std::to_string(cfg_.H) +
                             "x" + std::to_string(cfg_.W));
    }
    Tensor v = lift.forward(x);
    for (std::size_t l = 0; l < cfg_.depth; ++l) {
        Tensor k = irfft2(spectral_multiply(rfft2(v), spectral[l], cfg_.m1, cfg_.m2), cfg_.W);
        v = activation(add(local[l].forward(v), k), cfg_.activation);
    }
    return project.forward(v);
}

void FnoNet::collect(ParamList& out, const std::string& prefix) const {
    lift.collect(out, prefix + "lift");
    for (std::size_t l = 0; l < cfg_.depth; ++l) {
        out.push_back({prefix + "spectral." + std::to_string(l), spectral[l]});
        local[l].collect(out, prefix + "local." + std::to_string(l));
    }
    project.collect(out, prefix + "project");
}

// ---------------------------------------------------------------------------

void MscaleFnoConfig::validate() const {
    sub.validate();
    if (scales.empty()) throw ConfigError("mscale-fno: need at least one sub-network");
    for (double c : scales)
        if (!(c > 0.0)) throw ConfigError("mscale-fno: scale factors must be positive");
}

MscaleFno::MscaleFno(MscaleFnoConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t N = cfg_.scales.size();
    for (std::size_t n = 0; n < N; ++n) {
        Rng sub = rng.substream("subnet." + std::to_string(n));
        nets.emplace_back(cfg_.sub, sub);
    }
    std::vector<double> lc;
    for (double c : cfg_.scales) lc.push_back(std::log(c));
    log_scale = Tensor({N}, lc, true);
    gamma = Tensor::full({N}, 1.0 / static_cast<double>(N), true);
}

Tensor MscaleFno::forward(const Tensor& x) const {
    const std::size_t N = nets.size();
    Tensor lc = reshape(log_scale, {N, 1}), g = reshape(gamma, {N, 1});
    Tensor out;
    for (std::size_t n = 0; n < N; ++n) {
        Tensor c = exp(slice_rows(lc, n, n + 1));
        Tensor y = mul_scalar(nets[n].forward(mul_scalar(x, c)), slice_rows(g, n, n + 1));
        out = n == 0 ? y : add(out, y);
    }
    return out;
}

void MscaleFno::collect(ParamList& out, const std::string& prefix) const {
    for (std::size_t n = 0; n < nets.size(); ++n) nets[n].collect(out, prefix + "net." + std::to_string(n) + ".");
    out.push_back({prefix + "log_scale", log_scale});
    out.push_back({prefix + "gamma", gamma});
}

// ---------------------------------------------------------------------------

GridOperator::GridOperator(FnoConfig cfg, Rng& rng) : fno_(std::make_shared<FnoNet>(std::move(cfg), rng)) {}
GridOperator::GridOperator(MscaleFnoConfig cfg, Rng& rng) : mscale_(std::make_shared<MscaleFno>(std::move(cfg), rng)) {}

Tensor GridOperator::forward(const Tensor& x) const { return mscale_ ? mscale_->forward(x) : fno_->forward(x); }

ParamList GridOperator::parameters() const {
    ParamList p;
    if (mscale_) mscale_->collect(p, "");
    else fno_->collect(p, "");
    return p;
}

namespace {

void check_case(const StructuredSeries& s, const FnoConfig& g) {
    if (!s.is_difference) throw InputError("grid operator: expected a difference series");
    if (s.H != g.H || s.W != g.W) throw DimensionError("grid operator: case grid does not match the model");
    if (s.n_frames() != g.out_channels) {
        throw DimensionError("grid operator: case has " + std::to_string(s.n_frames()) + " difference frames, model " +
                             std::to_string(g.out_channels));
    }
}

}  // namespace

Tensor GridOperator::inputs(const std::vector<StructuredSeries>& set, const std::vector<std::size_t>& idx) const {
    const FnoConfig& g = grid_config();
    const std::size_t n = g.H * g.W;
    std::vector<double> x;
    x.reserve(idx.size() * n);
    for (std::size_t i : idx) {
        check_case(set[i], g);
        for (std::size_t c = 0; c < n; ++c) x.push_back(!mask.empty() && mask[c] ? 0.0 : in_norm.apply(set[i].initial[c]));
    }
    return Tensor({idx.size(), 1, g.H, g.W}, std::move(x));
}

Tensor GridOperator::targets(const std::vector<StructuredSeries>& set, const std::vector<std::size_t>& idx) const {
    const FnoConfig& g = grid_config();
    std::vector<double> y;
    for (std::size_t i : idx) {
        check_case(set[i], g);
        for (double v : set[i].values) y.push_back(v / out_scale);
    }
    return Tensor({idx.size(), g.out_channels, g.H, g.W}, std::move(y));
}

Tensor GridOperator::output_mask(std::size_t b) const {
    if (mask.empty()) return Tensor();
    const FnoConfig& g = grid_config();
    const std::size_t n = g.H * g.W;
    std::vector<double> m(b * g.out_channels * n);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = mask[i % n] ? 0.0 : 1.0;
    return Tensor({b, g.out_channels, g.H, g.W}, std::move(m));
}

double GridOperator::loss_on(const std::vector<StructuredSeries>& set) const {
    NoGradScope ng;
    double total = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        Tensor pred = forward(inputs(set, {i}));
        if (!mask.empty()) pred = mul(pred, output_mask(1));
        total += relative_l2_loss(pred, targets(set, {i})).item();
    }
    return total / static_cast<double>(set.size());
}

TrainHistory GridOperator::train(const std::vector<StructuredSeries>& train_set,
                                 const std::vector<StructuredSeries>& val_set, const OperatorTrainConfig& cfg) {
    if (train_set.empty()) throw InputError("grid operator: no training cases");
    const FnoConfig& g = grid_config();
    SnapshotSet u0s, dus;
    for (const auto& s : train_set) {
        check_case(s, g);
        if (s.solid_mask != train_set.front().solid_mask) throw InputError("grid operator: training cases disagree on the solid mask");
        u0s.append(s.initial);
        dus.append(s.values);
    }
    mask = train_set.front().solid_mask;
    in_norm = Standardizer::fit(u0s.data, mask, g.H * g.W);
    const Standardizer d = Standardizer::fit(dus.data, mask, g.H * g.W);
    out_scale = std::sqrt(d.std * d.std + d.mean * d.mean);
    if (!(out_scale > 0.0)) out_scale = 1.0;

    auto batch_loss = [&](const std::vector<std::size_t>& idx) {
        Tensor pred = forward(inputs(train_set, idx));
        if (!mask.empty()) pred = mul(pred, output_mask(idx.size()));
        return relative_l2_loss(pred, targets(train_set, idx));
    };
    ValLoss val;
    if (!val_set.empty()) val = [&] { return loss_on(val_set); };
    LoopConfig loop{cfg.epochs, cfg.batch, cfg.optimizer, cfg.seed, 1e6, cfg.val_every, false};
    return run_training(parameters(), train_set.size(), loop, batch_loss, val);
}

std::vector<double> GridOperator::predict(std::span<const double> u0) const {
    const FnoConfig& g = grid_config();
    const std::size_t n = g.H * g.W;
    if (u0.size() != n) throw DimensionError("grid operator: u0 does not match the grid");
    NoGradScope ng;
    std::vector<double> x(n);
    for (std::size_t c = 0; c < n; ++c) x[c] = !mask.empty() && mask[c] ? 0.0 : in_norm.apply(u0[c]);
    Tensor y = forward(Tensor({1, 1, g.H, g.W}, std::move(x)));
    std::vector<double> out(u0.begin(), u0.end());
    out.reserve(n * (g.out_channels + 1));
    auto d = y.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const std::size_t c = i % n;
        out.push_back(!mask.empty() && mask[c] ? 0.0 : d[i] * out_scale + u0[c]);
    }
    return out;
}

Container GridOperator::to_container() const {
    const FnoConfig& g = grid_config();
    Container k;
    k.kind = kind();
    k.set("H", static_cast<std::uint64_t>(g.H));
    k.set("W", static_cast<std::uint64_t>(g.W));
    k.set("m1", static_cast<std::uint64_t>(g.m1));
    k.set("m2", static_cast<std::uint64_t>(g.m2));
    k.set("width", static_cast<std::uint64_t>(g.width));
    k.set("depth", static_cast<std::uint64_t>(g.depth));
    k.set("activation", to_string(g.activation));
    k.set("out_channels", static_cast<std::uint64_t>(g.out_channels));
    if (mscale_) {
        std::string sc;
        for (std::size_t i = 0; i < mscale_->config().scales.size(); ++i)
            sc += (i ? "," : "") + format_double(mscale_->config().scales[i]);
        k.set("scales", sc);
    }
    k.set("in_mean", in_norm.mean);
    k.set("in_std", in_norm.std);
    k.set("out_scale", out_scale);
    if (!mask.empty()) k.add_block("mask", {mask.size()}, std::vector<double>(mask.begin(), mask.end()));
    save_params(k, parameters());
    return k;
}

GridOperator GridOperator::from_container(const Container& k) {
    FnoConfig g;
    g.H = k.get_u64("H");
    g.W = k.get_u64("W");
    g.m1 = k.get_u64("m1");
    g.m2 = k.get_u64("m2");
    g.width = k.get_u64("width");
    g.depth = k.get_u64("depth");
    g.activation = parse_activation(k.get("activation"));
    g.out_channels = k.get_u64("out_channels");
    Rng rng(0);
    auto make = [&]() {
        if (k.kind == "fno") return GridOperator(g, rng);
        if (k.kind != "mscale-fno") throw InputError("checkpoint kind '" + k.kind + "' is not a grid operator");
        MscaleFnoConfig m;
        m.sub = g;
        m.scales.clear();
        std::stringstream ss(k.get("scales"));
        std::string item;
        while (std::getline(ss, item, ',')) m.scales.push_back(parse_double(item));
        return GridOperator(m, rng);
    };
    GridOperator op = make();
    op.in_norm = {k.get_double("in_mean"), k.get_double("in_std")};
    op.out_scale = k.get_double("out_scale");
    if (k.has_block("mask")) op.mask.assign(k.block("mask").data.begin(), k.block("mask").data.end());
    load_params(k, op.parameters());
    return op;
}

}  // namespace nos
