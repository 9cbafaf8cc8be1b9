#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nos/core/container.hpp"
#include "nos/tensor/nn.hpp"
#include "nos/tensor/optim.hpp"

namespace nos {

struct LoopConfig {
    std::size_t epochs = 100;
    std::size_t batch = 8;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    double divergence_limit = 1e6;
    /// Evaluate the validation loss every `val_every` epochs (and on the last).
    std::size_t val_every = 1;
    /// Return the best-validation parameters instead of the final ones.
    bool restore_best = true;
};

/// Per-epoch losses. `best_val` is the running minimum, so it never increases.
struct TrainHistory {
    std::vector<std::size_t> epoch;
    std::vector<double> train;
    std::vector<double> val;
    std::vector<double> best_val;
    std::size_t best_epoch = 0;
};

/// Loss over a minibatch of sample indices, recorded on the active tape.
using BatchLoss = std::function<Tensor(const std::vector<std::size_t>&)>;
/// Validation loss evaluated without recording; may be empty.
using ValLoss = std::function<double()>;

/// Shuffled minibatch training. With a validation loss and `restore_best`,
/// parameters are restored to the best-validation epoch on return. Throws
/// DivergenceError when a loss is NaN or exceeds the divergence limit.
TrainHistory run_training(const ParamList& params, std::size_t n_samples, const LoopConfig& cfg,
                          const BatchLoss& batch_loss, const ValLoss& val_loss = {});

/// "epoch,train_loss,val_loss" rows.
void write_history_csv(const std::string& path, const TrainHistory& h);

/// Stores every parameter as a block named after it.
void save_params(Container& c, const ParamList& params);
/// Copies blocks into existing parameters; names and shapes must match.
void load_params(const Container& c, const ParamList& params);

}  // namespace nos
