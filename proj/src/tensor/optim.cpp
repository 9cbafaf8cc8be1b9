#include "nos/tensor/optim.hpp"

#include <cmath>

#include "nos/core/errors.hpp"

namespace nos {

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "adamw") return OptimizerKind::adamw;
    throw ConfigError("unknown optimizer '" + name + "' (expected adam or adamw)");
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "adamw"; }

double LrSchedule::lr_at(double lr0, std::size_t epoch) const {
    if (interval == 0) return lr0;
    return lr0 * std::pow(rate, static_cast<double>(epoch / interval));
}

Optimizer::Optimizer(std::vector<Tensor> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
    if (config_.lr <= 0.0) throw ConfigError("optimizer: learning rate must be positive");
    if (config_.weight_decay < 0.0) throw ConfigError("optimizer: weight decay must be non-negative");
    if (config_.schedule.interval > 0 && !(config_.schedule.rate > 0.0)) {
        throw ConfigError("optimizer: decay rate must be positive");
    }
    state_.lr = config_.lr;
    state_.weight_decay = config_.weight_decay;
    state_.schedule = config_.schedule;
    for (const Tensor& p : params_) {
        state_.m.emplace_back(p.numel(), 0.0);
        state_.v.emplace_back(p.numel(), 0.0);
    }
}

void Optimizer::set_epoch(std::size_t epoch) { state_.lr = config_.schedule.lr_at(config_.lr, epoch); }

void Optimizer::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

void Optimizer::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!params_[i].has_grad()) {
            throw StateError("optimizer step: parameter " + std::to_string(i) + " of shape " +
                             shape_str(params_[i].shape()) + " has no gradient");
        }
    }
    ++state_.step;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state_.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state_.step));
    const double lr = state_.lr, wd = state_.weight_decay;
    const bool decoupled = config_.kind == OptimizerKind::adamw;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto p = params_[i].data();
        auto g = params_[i].grad();
        auto& m = state_.m[i];
        auto& v = state_.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            double gj = g[j];
            if (decoupled) {
                p[j] *= 1.0 - lr * wd;
            } else if (wd > 0.0) {
                gj += wd * p[j];
            }
            m[j] = b1 * m[j] + (1.0 - b1) * gj;
            v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
            p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.eps);
        }
    }
}

}  // namespace nos
