#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nos/flowdata/generator.hpp"
#include "nos/flowdata/series.hpp"
#include "nos/interp/idw.hpp"
#include "nos/metrics/metrics.hpp"

namespace nos {

/// Everything a pipeline run depends on. Parsed from `key = value` lines;
/// any key may be prefixed with `velocity.` or `pressure.` to override it
/// for that field only (see for_field).
struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "run";

    // dataset
    std::string ladder = "desk";  ///< desk | paper | comma list of velocities
    std::vector<double> val;      ///< empty: the ladder's default
    std::vector<double> test;     ///< empty: {0.4, 0.7}
    std::size_t n_timesteps = 50;
    double snapshot_interval = 0.06;
    std::size_t nodes = 2500;
    double node_jitter = 0.3;
    GeneratorConstants generator;

    // interpolation
    InterpSpec interp{6, 1.0, 2.5, 3};
    std::string grid_base = "desk";  ///< desk | paper

    // autoencoders
    std::vector<std::size_t> ae_hidden{512};
    std::size_t latent_dim = 256;
    std::size_t ae_epochs = 200;
    std::size_t ae_batch = 64;
    double ae_lr = 1e-3;
    double ae_weight_decay = 1e-4;
    std::vector<std::size_t> cae_channels{16, 32, 64, 128};
    std::size_t cae_epochs = 100;
    double cae_lr = 1e-3;

    // DeepONet family
    std::size_t ldon_p = 16;
    std::size_t ldon_branch_layers = 6;
    std::size_t ldon_branch_width = 128;
    std::size_t ldon_trunk_layers = 3;
    std::size_t ldon_trunk_width = 128;
    std::vector<double> ms_ldon_scales{1, 10, 20, 30, 40, 50, 100, 200, 300, 500};
    std::vector<double> ms_ldon_cae_scales{1, 10, 20, 30, 40, 50, 100, 200, 300};
    std::size_t ldon_epochs = 1000;
    std::size_t ldon_batch = 8;
    double ldon_lr = 1e-3;
    double ldon_decay = 0.999;

    // FNO family
    std::size_t fno_modes = 12;
    std::size_t fno_width = 32;
    std::size_t fno_depth = 4;
    std::vector<std::size_t> fno_sweep_modes{12, 24};
    std::size_t fno_epochs = 100;
    std::size_t fno_batch = 6;
    double fno_lr = 1e-3;
    double fno_weight_decay = 1e-4;
    std::size_t mscale_modes = 12;
    std::size_t mscale_width = 16;
    std::vector<double> mscale_scales{1, 40, 80, 100, 140, 200};
    std::size_t mscale_epochs = 100;

    // evaluation
    std::size_t window_first = 20;
    std::size_t window_last = 49;
    std::size_t dtw_band = 8;
    std::vector<std::size_t> dump_steps{1, 25, 49};

    // end-to-end plan
    /// Velocity also gets the fno.sweep_modes variants.
    std::vector<std::string> velocity_models{"ldon", "ms-ldon", "ms-ldon-cae", "fno", "mscale-fno"};
    std::vector<std::string> pressure_models{"ms-ldon", "ms-ldon-cae", "fno", "mscale-fno"};

    /// Field-specific overrides, applied by for_field.
    std::map<std::string, std::string> velocity_overrides, pressure_overrides;

    /// Copy with the overrides for `kind` applied.
    RunConfig for_field(FieldKind kind) const;

    std::vector<double> velocities() const;
    std::vector<double> val_velocities() const;
    std::vector<double> test_velocities() const;
    GridBase base() const;
    CaseMeta prototype(FieldKind kind) const;

    /// Range and consistency checks; throws ConfigError.
    void validate() const;
};

/// Throws ConfigError on unknown keys, malformed values or bad lines, with
/// the line number.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Every key with its resolved value, one `key = value` per line, overrides last.
std::string resolved_config_text(const RunConfig& cfg);

}  // namespace nos
