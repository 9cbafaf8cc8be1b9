// nos: batch driver for data generation, interpolation, training,
// prediction, evaluation and reporting.

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>

#include "nos/cli/pipeline.hpp"
#include "nos/core/container.hpp"
#include "nos/core/errors.hpp"

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::string output_dir;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config_path, "key = value configuration file (defaults when omitted)");
    cmd->add_option("-s,--set", c.sets, "override one key, e.g. --set ae.epochs=50 (repeatable)");
    cmd->add_option("-o,--output-dir", c.output_dir, "run directory (overrides output_dir)");
    cmd->add_flag("-q,--quiet", c.quiet, "no progress lines on stderr");
}

nos::RunConfig resolve(const Common& c) {
    nos::RunConfig cfg = c.config_path.empty() ? nos::RunConfig{} : nos::load_run_config(c.config_path);
    for (const auto& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw nos::ConfigError("--set expects key=value, got '" + kv + "'");
        nos::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
    cfg.validate();
    return cfg;
}

nos::Pipeline make_pipeline(const Common& c) {
    const auto t0 = std::chrono::steady_clock::now();
    nos::Pipeline::Log log;
    if (!c.quiet) {
        log = [t0](const std::string& msg) {
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::cerr << "[" << static_cast<long>(s) << "s] " << msg << "\n";
        };
    }
    return nos::Pipeline(resolve(c), log);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural-operator surrogates for unsteady channel flow"};
    app.require_subcommand(1);
    Common common;

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic case ladder on scattered nodes");
    add_common(gen, common);

    auto* interp = app.add_subcommand("interp", "interpolate every case onto the structured grid");
    add_common(interp, common);
    std::optional<std::size_t> k;
    std::optional<double> p, mask_factor;
    std::optional<unsigned> scale;
    interp->add_option("--k", k, "neighbours per grid point");
    interp->add_option("--p", p, "inverse-distance exponent");
    interp->add_option("--scale", scale, "grid refinement 1..4");
    interp->add_option("--mask-factor", mask_factor, "mask distance in grid spacings");

    std::string model, field = "velocity";
    std::vector<std::string> cases;
    auto* train = app.add_subcommand("train", "train one model for one field");
    add_common(train, common);
    train->add_option("-m,--model", model, "mlp-ae | cae | ldon | ms-ldon | ldon-cae | ms-ldon-cae | fno | mscale-fno | fno-m<k>")
        ->required();
    train->add_option("-f,--field", field, "velocity | pressure");

    auto* predict = app.add_subcommand("predict", "roll a trained operator out from each case's first frame");
    add_common(predict, common);
    predict->add_option("-m,--model", model)->required();
    predict->add_option("-f,--field", field, "velocity | pressure");
    predict->add_option("--case", cases, "case id such as u0.4000 (default: the test cases)");

    std::string pred_file, ref_file, eval_out;
    auto* evaluate = app.add_subcommand("evaluate", "metric CSVs for a model's predictions, or for one file pair");
    add_common(evaluate, common);
    evaluate->add_option("-m,--model", model);
    evaluate->add_option("-f,--field", field, "velocity | pressure");
    evaluate->add_option("--pred", pred_file, "prediction series file");
    evaluate->add_option("--ref", ref_file, "reference series file");
    evaluate->add_option("--out", eval_out, "output directory for --pred/--ref");

    std::string run_dir;
    auto* report = app.add_subcommand("report", "comparison tables from a run directory");
    report->add_option("run_dir", run_dir, "run directory")->required();

    auto* run = app.add_subcommand("run", "every step end to end");
    add_common(run, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "nos: error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (report->parsed()) {
            nos::write_report(run_dir);
            return 0;
        }
        if (interp->parsed()) {
            if (k) common.sets.push_back("interp.k=" + std::to_string(*k));
            if (p) common.sets.push_back("interp.p=" + nos::format_double(*p));
            if (scale) common.sets.push_back("interp.scale=" + std::to_string(*scale));
            if (mask_factor) common.sets.push_back("interp.mask_factor=" + nos::format_double(*mask_factor));
        }
        if (evaluate->parsed() && !pred_file.empty()) {
            if (ref_file.empty() || eval_out.empty()) throw nos::ConfigError("--pred needs --ref and --out");
            const nos::RunConfig cfg = resolve(common);
            nos::evaluate_files(pred_file, ref_file, cfg, model.empty() ? "pred" : model, eval_out);
            return 0;
        }
        nos::Pipeline pipe = make_pipeline(common);
        const nos::FieldKind kind = nos::parse_field_kind(field);
        if (gen->parsed()) pipe.gen_data();
        else if (interp->parsed()) pipe.interp();
        else if (train->parsed()) pipe.train(model, kind);
        else if (predict->parsed()) pipe.predict(model, kind, cases);
        else if (evaluate->parsed()) {
            if (model.empty()) throw nos::ConfigError("evaluate needs --model, or --pred/--ref/--out");
            pipe.evaluate(model, kind);
        } else if (run->parsed()) pipe.run();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "nos: error: " << e.what() << "\n";
        return nos::exit_code_for(e);
    }
}
