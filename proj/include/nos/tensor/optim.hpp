#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nos/tensor/tensor.hpp"

namespace nos {

enum class OptimizerKind { adam, adamw };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind k);

/// lr(epoch) = lr0 * rate^floor(epoch / interval). interval == 0 disables decay.
struct LrSchedule {
    double rate = 1.0;
    std::size_t interval = 0;

    double lr_at(double lr0, std::size_t epoch) const;
};

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    LrSchedule schedule;
};

struct OptimizerState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;
    double lr = 0.0;
    double weight_decay = 0.0;
    LrSchedule schedule;
};

/// Adam / AdamW over a fixed parameter list.
///
/// Adam folds weight decay into the gradient (L2); AdamW decays the
/// parameters directly before the moment update.
class Optimizer {
public:
    Optimizer(std::vector<Tensor> params, OptimizerConfig config);

    /// Applies one update. Every parameter must hold a gradient.
    void step();
    /// Updates the learning rate from the schedule for a new epoch.
    void set_epoch(std::size_t epoch);
    void zero_grad();

    const OptimizerState& state() const noexcept { return state_; }
    const OptimizerConfig& config() const noexcept { return config_; }

private:
    std::vector<Tensor> params_;
    OptimizerConfig config_;
    OptimizerState state_;
};

}  // namespace nos
