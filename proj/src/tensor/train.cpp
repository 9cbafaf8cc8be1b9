#include "nos/tensor/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "nos/core/errors.hpp"
#include "nos/core/rng.hpp"

namespace nos {

namespace {

void check_finite(double loss, std::size_t epoch, double limit, const char* what) {
    if (std::isnan(loss) || !(loss <= limit)) {
        throw DivergenceError(std::string(what) + " loss " + format_double(loss) + " at epoch " +
                              std::to_string(epoch) + " (limit " + format_double(limit) + ")");
    }
}

std::vector<std::vector<double>> snapshot(const ParamList& params) {
    std::vector<std::vector<double>> out;
    for (const Param& p : params) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
    return out;
}

void restore(const ParamList& params, const std::vector<std::vector<double>>& values) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor t = params[i].tensor;
        std::copy(values[i].begin(), values[i].end(), t.data().begin());
    }
}

}  // namespace

TrainHistory run_training(const ParamList& params, std::size_t n_samples, const LoopConfig& cfg,
                          const BatchLoss& batch_loss, const ValLoss& val_loss) {
    if (n_samples == 0) throw InputError("training: empty dataset");
    if (cfg.batch == 0) throw ConfigError("training: batch must be positive");
    if (cfg.epochs == 0) throw ConfigError("training: epochs must be positive");
    Optimizer opt(tensors_of(params), cfg.optimizer);
    Rng rng = Rng(cfg.seed).substream("minibatch");
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), 0);

    TrainHistory h;
    std::vector<std::vector<double>> best;
    double best_val = INFINITY;
    const std::size_t every = std::max<std::size_t>(cfg.val_every, 1);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        opt.set_epoch(epoch);
        rng.shuffle(order);
        double total = 0.0;
        for (std::size_t b = 0; b < n_samples; b += cfg.batch) {
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(b),
                                               order.begin() + static_cast<std::ptrdiff_t>(std::min(n_samples, b + cfg.batch)));
            opt.zero_grad();
            Tape tape;
            Tensor loss;
            {
                TapeScope scope(tape);
                loss = batch_loss(idx);
            }
            check_finite(loss.item(), epoch, cfg.divergence_limit, "training");
            tape.backward(loss);
            opt.step();
            total += loss.item() * static_cast<double>(idx.size());
        }
        const bool evaluate = val_loss && (epoch % every == 0 || epoch + 1 == cfg.epochs);
        if (val_loss && !evaluate) continue;
        double v = NAN;
        if (evaluate) {
            NoGradScope ng;
            v = val_loss();
            check_finite(v, epoch, cfg.divergence_limit, "validation");
            if (v < best_val) {
                if (cfg.restore_best) best = snapshot(params);
                best_val = v;
                h.best_epoch = epoch;
            }
        }
        h.epoch.push_back(epoch);
        h.train.push_back(total / static_cast<double>(n_samples));
        h.val.push_back(v);
        h.best_val.push_back(best_val);
    }
    if (!best.empty()) restore(params, best);
    return h;
}

void write_history_csv(const std::string& path, const TrainHistory& h) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t i = 0; i < h.train.size(); ++i) {
        out << h.epoch[i] << ',' << format_double(h.train[i]) << ',';
        if (!std::isnan(h.val[i])) out << format_double(h.val[i]);
        out << '\n';
    }
}

void save_params(Container& c, const ParamList& params) {
    for (const Param& p : params) {
        const Shape& s = p.tensor.shape();
        c.add_block(p.name, std::vector<std::uint64_t>(s.begin(), s.end()),
                    std::vector<double>(p.tensor.data().begin(), p.tensor.data().end()));
    }
}

void load_params(const Container& c, const ParamList& params) {
    for (const Param& p : params) {
        if (!c.has_block(p.name)) throw InputError("checkpoint lacks parameter '" + p.name + "'");
        const Block& b = c.block(p.name);
        const Shape& s = p.tensor.shape();
        if (b.shape.size() != s.size() || !std::equal(s.begin(), s.end(), b.shape.begin())) {
            throw InputError("checkpoint parameter '" + p.name + "' has the wrong shape");
        }
        Tensor t = p.tensor;
        std::copy(b.data.begin(), b.data.end(), t.data().begin());
    }
}

}  // namespace nos
