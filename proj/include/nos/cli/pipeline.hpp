#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "nos/cli/config.hpp"
#include "nos/metrics/metrics.hpp"

namespace nos {

enum class ModelFamily { mlp_ae, cae, deeponet, grid };

/// Parsed model id: mlp-ae, cae, ldon, ms-ldon, ldon-cae, ms-ldon-cae, fno,
/// mscale-fno, or fno-m<k> for an FNO with k modes.
struct ModelSpec {
    std::string id;
    ModelFamily family = ModelFamily::grid;
    bool multiscale = false;
    bool on_grid = false;    ///< structured data (CAE, FNO family) vs scattered nodes
    std::size_t modes = 0;   ///< grid family only; 0 = config default

    /// Autoencoder a DeepONet variant is built on, empty otherwise.
    std::string autoencoder() const;
};

ModelSpec parse_model(const std::string& id);

/// Output tree of one run:
///   config.resolved
///   data/manifest.csv, data/<case>_<field>.nosg        scattered-node series
///   grid/fidelity.csv, grid/<case>_<field>.nosg        interpolated series
///   models/<model>_<field>.nosg, _history.csv, _summary.csv
///   pred/<model>_<field>_<case>.nosg, _step<k>.csv
///   eval/<model>_<field>/<metric>.csv, probes/
///   report/<metric>_<field>.csv
class Pipeline {
public:
    using Log = std::function<void(const std::string&)>;

    explicit Pipeline(RunConfig cfg, Log log = {});

    void gen_data();
    void interp();
    void train(const std::string& model, FieldKind kind);
    /// `cases` are case ids; empty means the test split.
    void predict(const std::string& model, FieldKind kind, const std::vector<std::string>& cases = {});
    std::vector<MetricRow> evaluate(const std::string& model, FieldKind kind);
    void report() const;
    /// gen-data, interp, every planned model for both fields, report.
    void run();

    const RunConfig& config() const { return cfg_; }
    std::filesystem::path root() const { return cfg_.output_dir; }
    std::filesystem::path data_path(const std::string& case_id, FieldKind kind) const;
    std::filesystem::path grid_path(const std::string& case_id, FieldKind kind) const;
    std::filesystem::path model_path(const std::string& model, FieldKind kind) const;
    std::filesystem::path pred_path(const std::string& model, FieldKind kind, const std::string& case_id) const;
    std::filesystem::path eval_dir(const std::string& model, FieldKind kind) const;

private:
    void note(const std::string& msg) const;
    void write_resolved() const;

    RunConfig cfg_;
    Log log_;
};

/// Compares one prediction file with one reference file (both scattered or
/// both structured) and writes the metric CSVs into `out_dir`.
std::vector<MetricRow> evaluate_files(const std::string& pred_path, const std::string& ref_path,
                                      const RunConfig& cfg, const std::string& model,
                                      const std::filesystem::path& out_dir);

/// Tables per metric and field from the eval/ tree of a run directory:
/// one row per model, one column per case.
void write_report(const std::filesystem::path& run_dir);

/// 2 config, 3 data, 4 divergence, 1 anything else.
int exit_code_for(const std::exception& e);

}  // namespace nos
