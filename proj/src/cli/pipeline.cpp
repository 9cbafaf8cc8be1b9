#include "nos/cli/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nos/core/container.hpp"
#include "nos/core/errors.hpp"
#include "nos/core/rng.hpp"
#include "nos/flowdata/generator.hpp"
#include "nos/flowdata/io.hpp"
#include "nos/flowdata/split.hpp"
#include "nos/interp/idw.hpp"
#include "nos/metrics/pressure.hpp"
#include "nos/operators/deeponet.hpp"
#include "nos/operators/fno.hpp"
#include "nos/rom/autoencoder.hpp"

namespace fs = std::filesystem;

namespace nos {

std::string ModelSpec::autoencoder() const {
    if (family != ModelFamily::deeponet) return {};
    return on_grid ? "cae" : "mlp-ae";
}

ModelSpec parse_model(const std::string& id) {
    ModelSpec m;
    m.id = id;
    if (id == "mlp-ae") {
        m.family = ModelFamily::mlp_ae;
    } else if (id == "cae") {
        m.family = ModelFamily::cae;
        m.on_grid = true;
    } else if (id == "ldon" || id == "ms-ldon" || id == "ldon-cae" || id == "ms-ldon-cae") {
        m.family = ModelFamily::deeponet;
        m.multiscale = id.rfind("ms-", 0) == 0;
        m.on_grid = id.size() > 4 && id.substr(id.size() - 4) == "-cae";
    } else if (id == "fno" || id == "mscale-fno") {
        m.family = ModelFamily::grid;
        m.multiscale = id == "mscale-fno";
        m.on_grid = true;
    } else if (id.rfind("fno-m", 0) == 0 && id.size() > 5 &&
               id.find_first_not_of("0123456789", 5) == std::string::npos) {
        m.family = ModelFamily::grid;
        m.on_grid = true;
        m.modes = std::stoul(id.substr(5));
        if (m.modes == 0) throw ConfigError("model '" + id + "': mode count must be positive");
    } else {
        throw ConfigError("unknown model '" + id +
                          "' (expected mlp-ae, cae, ldon, ms-ldon, ldon-cae, ms-ldon-cae, fno, mscale-fno, fno-m<k>)");
    }
    return m;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const DivergenceError*>(&e)) return 4;
    if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const DomainError*>(&e))
        return 3;
    return 1;
}

namespace {

std::string field_name(FieldKind k) { return to_string(k); }

void require_file(const fs::path& p, const std::string& hint) {
    if (!fs::is_regular_file(p)) throw InputError("missing " + p.string() + " (" + hint + ")");
}

void make_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

DatasetSplit split_for(const RunConfig& cfg, FieldKind kind) {
    return make_split(cfg.velocities(), cfg.val_velocities(), cfg.test_velocities(), cfg.prototype(kind));
}

std::string role_of(const DatasetSplit& s, const CaseMeta& m) {
    for (const auto& c : s.val)
        if (c == m) return "val";
    for (const auto& c : s.test)
        if (c == m) return "test";
    return "train";
}

Rng model_rng(const RunConfig& cfg, const std::string& what, const std::string& model, FieldKind kind) {
    return Rng(cfg.seed).substream(what + "/" + model + "/" + field_name(kind));
}

void write_text(const fs::path& p, const std::string& text) {
    make_parent(p);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + p.string());
    out << text;
}

std::vector<MetricRow> probe_rows(const std::string& metric, const std::string& case_id, const std::string& model,
                                  const ProbeSet& probes, const ProbeTable& t) {
    std::vector<MetricRow> rows;
    for (std::size_t i = 0; i < probes.size(); ++i) rows.push_back({metric, case_id, model, probes[i].label, t.per_probe[i]});
    rows.push_back({metric, case_id, model, "mean", t.mean});
    return rows;
}

std::vector<MetricRow> step_rows(const std::string& metric, const std::string& case_id, const std::string& model,
                                 const std::vector<double>& per_step, double mean) {
    std::vector<MetricRow> rows;
    for (std::size_t i = 0; i < per_step.size(); ++i) rows.push_back({metric, case_id, model, std::to_string(i), per_step[i]});
    rows.push_back({metric, case_id, model, "mean", mean});
    return rows;
}

struct Comparison {
    CaseMeta meta;
    SeriesError rel;
    std::vector<std::vector<double>> pred_probes, ref_probes;
    PressureDrop dp_error;
    bool has_dp = false;
};

template <class Series>
Comparison compare(const Series& pred, const Series& ref) {
    if (pred.is_difference || ref.is_difference) throw InputError("evaluate: series must be full, not difference");
    if (pred.n_frames() != ref.n_frames()) throw DimensionError("evaluate: frame counts differ");
    if (pred.meta.field_kind != ref.meta.field_kind) throw InputError("evaluate: field kinds differ");
    Comparison c;
    c.meta = ref.meta;
    c.rel = relative_l2_series(pred, ref);
    const ProbeSet probes = default_probes();
    c.pred_probes = probe_history(pred, probes);
    c.ref_probes = probe_history(ref, probes);
    if (ref.meta.field_kind == FieldKind::pressure) {
        c.dp_error = pressure_drop_error(pressure_drop(pred), pressure_drop(ref));
        c.has_dp = true;
    }
    return c;
}

std::vector<MetricRow> write_comparison(const Comparison& c, const RunConfig& cfg, const std::string& model,
                                        const fs::path& out_dir, std::map<std::string, std::vector<MetricRow>>& acc) {
    const std::string id = c.meta.case_id();
    const ProbeSet probes = default_probes();
    std::vector<MetricRow> all;
    auto add = [&](const std::string& metric, std::vector<MetricRow> rows) {
        auto& dst = acc[metric];
        dst.insert(dst.end(), rows.begin(), rows.end());
        all.insert(all.end(), rows.begin(), rows.end());
    };
    add("relative_l2", step_rows("relative_l2", id, model, c.rel.per_step, c.rel.mean));
    if (cfg.window_last >= c.ref_probes.front().size()) throw ConfigError("evaluate: window past the last frame");
    const auto pw = window(c.pred_probes, cfg.window_first, cfg.window_last);
    const auto rw = window(c.ref_probes, cfg.window_first, cfg.window_last);
    add("dtw", probe_rows("dtw", id, model, probes, dtw_report(pw, rw, cfg.dtw_band)));
    add("capture", probe_rows("capture", id, model, probes, capture_report(pw, rw)));
    if (c.has_dp) add("pressure_drop", step_rows("pressure_drop", id, model, c.dp_error.per_step, c.dp_error.mean));

    std::vector<double> times(c.ref_probes.front().size());
    for (std::size_t t = 0; t < times.size(); ++t) times[t] = static_cast<double>(t) * c.meta.snapshot_interval;
    fs::create_directories(out_dir / "probes");
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const std::string stem = id + "_" + probes[i].label;
        write_probe_csv((out_dir / "probes" / (stem + "_pred.csv")).string(), times, c.pred_probes[i]);
        write_probe_csv((out_dir / "probes" / (stem + "_ref.csv")).string(), times, c.ref_probes[i]);
    }
    return all;
}

void flush_metrics(const fs::path& out_dir, const std::map<std::string, std::vector<MetricRow>>& acc) {
    fs::create_directories(out_dir);
    for (const auto& [metric, rows] : acc) write_metric_csv((out_dir / (metric + ".csv")).string(), rows);
}

std::string dump_csv(std::span<const double> pred, std::span<const double> ref, const std::vector<double>& xy) {
    std::string s = "x,y,pred,ref\n";
    for (std::size_t i = 0; i < pred.size(); ++i) {
        s += format_double(xy[2 * i]) + ',' + format_double(xy[2 * i + 1]) + ',' + format_double(pred[i]) + ',' +
             format_double(ref[i]) + '\n';
    }
    return s;
}

std::vector<double> grid_xy(const StructuredSeries& s) {
    std::vector<double> xy;
    xy.reserve(2 * s.frame_size());
    for (std::size_t i = 0; i < s.H; ++i)
        for (std::size_t j = 0; j < s.W; ++j) {
            xy.push_back(s.x_of(j));
            xy.push_back(s.y_of(i));
        }
    return xy;
}

FnoConfig fno_config(const RunConfig& cfg, const ModelSpec& m, const StructuredSeries& shape) {
    FnoConfig fc;
    fc.H = shape.H;
    fc.W = shape.W;
    fc.out_channels = cfg.n_timesteps - 1;
    fc.depth = cfg.fno_depth;
    if (m.multiscale) {
        fc.m1 = fc.m2 = cfg.mscale_modes;
        fc.width = cfg.mscale_width;
        fc.activation = Activation::sin;
    } else {
        fc.m1 = fc.m2 = m.modes ? m.modes : cfg.fno_modes;
        fc.width = cfg.fno_width;
    }
    return fc;
}

}  // namespace

Pipeline::Pipeline(RunConfig cfg, Log log) : cfg_(std::move(cfg)), log_(std::move(log)) { cfg_.validate(); }

void Pipeline::note(const std::string& msg) const {
    if (log_) log_(msg);
}

void Pipeline::write_resolved() const { write_text(root() / "config.resolved", resolved_config_text(cfg_)); }

fs::path Pipeline::data_path(const std::string& case_id, FieldKind kind) const {
    return root() / "data" / (case_id + "_" + field_name(kind) + ".nosg");
}
fs::path Pipeline::grid_path(const std::string& case_id, FieldKind kind) const {
    return root() / "grid" / (case_id + "_" + field_name(kind) + ".nosg");
}
fs::path Pipeline::model_path(const std::string& model, FieldKind kind) const {
    return root() / "models" / (model + "_" + field_name(kind) + ".nosg");
}
fs::path Pipeline::pred_path(const std::string& model, FieldKind kind, const std::string& case_id) const {
    return root() / "pred" / (model + "_" + field_name(kind) + "_" + case_id + ".nosg");
}
fs::path Pipeline::eval_dir(const std::string& model, FieldKind kind) const {
    return root() / "eval" / (model + "_" + field_name(kind));
}

void Pipeline::gen_data() {
    const Geometry geo = Geometry::tube_bundle();
    const FieldGenerator gen(geo, cfg_.generator);
    const DatasetSplit vs = split_for(cfg_, FieldKind::velocity), ps = split_for(cfg_, FieldKind::pressure);
    for (const auto& m : vs.all()) gen.check_sampling(m);
    for (const auto& m : ps.all()) gen.check_sampling(m);
    Rng rng = Rng(cfg_.seed).substream("nodes");
    const auto nodes = make_nodes(geo, NodeLayout{cfg_.nodes, cfg_.node_jitter}, rng);

    write_resolved();
    fs::create_directories(root() / "data");
    std::string manifest = "case,velocity,role,field,file\n";
    for (const DatasetSplit* s : {&vs, &ps}) {
        for (const auto& m : s->all()) {
            const fs::path p = data_path(m.case_id(), m.field_kind);
            save_series(p.string(), gen.unstructured(m, nodes));
            manifest += m.case_id() + ',' + format_double(m.inlet_velocity) + ',' + role_of(*s, m) + ',' +
                        field_name(m.field_kind) + ',' + p.filename().string() + '\n';
        }
    }
    write_text(root() / "data" / "manifest.csv", manifest);
    note("gen-data: " + std::to_string(vs.all().size()) + " cases, " + std::to_string(nodes.size() / 2) + " nodes");
}

void Pipeline::interp() {
    std::vector<CaseMeta> cases;
    for (FieldKind k : {FieldKind::velocity, FieldKind::pressure})
        for (const auto& m : split_for(cfg_, k).all()) {
            require_file(data_path(m.case_id(), k), "run gen-data first");
            cases.push_back(m);
        }
    const Geometry geo = Geometry::tube_bundle();
    const GridSpec grid = scale_grid(geo.x_min, geo.x_max, geo.y_min, geo.y_max, cfg_.base(), cfg_.interp.scale);

    write_resolved();
    fs::create_directories(root() / "grid");
    std::vector<MetricRow> rows;
    for (const auto& m : cases) {
        const auto src = load_unstructured(data_path(m.case_id(), m.field_kind).string());
        const auto dst = idw_interpolate(src, grid, cfg_.interp);
        save_series(grid_path(m.case_id(), m.field_kind).string(), dst);
        if (m.field_kind == FieldKind::pressure)
            rows.push_back({"interp_fidelity", m.case_id(), "idw", "pressure_drop_pct", fidelity_report(src, dst)});
    }
    write_metric_csv((root() / "grid" / "fidelity.csv").string(), rows);
    note("interp: " + std::to_string(grid.H) + "x" + std::to_string(grid.W) + " grid");
}

void Pipeline::train(const std::string& model, FieldKind kind) {
    const ModelSpec spec = parse_model(model);
    const RunConfig cfg = cfg_.for_field(kind);
    const DatasetSplit split = split_for(cfg, kind);
    auto series_path = [&](const CaseMeta& m) { return spec.on_grid ? grid_path(m.case_id(), kind) : data_path(m.case_id(), kind); };
    for (const auto& m : split.all()) require_file(series_path(m), spec.on_grid ? "run interp first" : "run gen-data first");
    const std::string ae_id = spec.autoencoder();
    if (!ae_id.empty()) require_file(model_path(ae_id, kind), "train " + ae_id + " first");

    Rng init = model_rng(cfg, "init", model, kind);
    const std::uint64_t shuffle_seed = model_rng(cfg, "shuffle", model, kind).next_u64();
    TrainHistory history;
    Container checkpoint;
    std::vector<MetricRow> summary;
    std::vector<std::pair<std::string, std::vector<ReconstructionRow>>> recon;

    if (spec.family == ModelFamily::mlp_ae || spec.family == ModelFamily::cae) {
        SnapshotSet tr, va;
        std::vector<std::uint8_t> mask;
        for (const auto& m : split.train) {
            if (spec.on_grid) {
                const auto s = load_structured(series_path(m).string());
                mask = s.solid_mask;
                append_snapshots(tr, to_difference(s));
            } else {
                append_snapshots(tr, to_difference(load_unstructured(series_path(m).string())));
            }
        }
        for (const auto& m : split.val) {
            if (spec.on_grid) append_snapshots(va, to_difference(load_structured(series_path(m).string())));
            else append_snapshots(va, to_difference(load_unstructured(series_path(m).string())));
        }
        std::unique_ptr<Autoencoder> ae;
        AeTrainConfig tc;
        tc.batch = cfg.ae_batch;
        tc.seed = shuffle_seed;
        if (spec.on_grid) {
            const auto probe = load_structured(series_path(split.train.front()).string());
            ConvAeConfig cc;
            cc.H = probe.H;
            cc.W = probe.W;
            cc.channels = cfg.cae_channels;
            cc.latent_dim = cfg.latent_dim;
            ae = std::make_unique<ConvAutoencoder>(cc, init);
            ae->mask = mask;
            tc.epochs = cfg.cae_epochs;
            tc.optimizer = {OptimizerKind::adamw, cfg.cae_lr, cfg.ae_weight_decay};
        } else {
            ae = std::make_unique<MlpAutoencoder>(MlpAeConfig{tr.dim, cfg.ae_hidden, cfg.latent_dim}, init);
            tc.epochs = cfg.ae_epochs;
            tc.optimizer = {OptimizerKind::adamw, cfg.ae_lr, cfg.ae_weight_decay};
        }
        note("train " + model + "/" + field_name(kind) + ": " + std::to_string(tr.size()) + " snapshots of " +
             std::to_string(tr.dim));
        history = ae->train(tr, va, tc);
        summary.push_back({"val_reconstruction", "val", model, "relative_l2", ae->reconstruction_error(va)});
        summary.push_back({"train_reconstruction", "train", model, "relative_l2", ae->reconstruction_error(tr)});
        for (const auto& m : split.test) {
            std::vector<double> frames;
            std::size_t frame = 0;
            if (spec.on_grid) {
                const auto s = load_structured(series_path(m).string());
                frames = s.values;
                frame = s.frame_size();
            } else {
                const auto s = load_unstructured(series_path(m).string());
                frames = s.values;
                frame = s.frame_size();
            }
            recon.emplace_back(m.case_id(), reconstruction_report(*ae, frames, frame));
        }
        checkpoint = ae->to_container();
    } else if (spec.family == ModelFamily::deeponet) {
        const auto ae = load_autoencoder(read_container(model_path(ae_id, kind).string()));
        auto cases_of = [&](const std::vector<CaseMeta>& ms) {
            std::vector<std::vector<double>> u0, d;
            for (const auto& m : ms) {
                if (spec.on_grid) {
                    const auto s = to_difference(load_structured(series_path(m).string()));
                    u0.push_back(s.initial);
                    d.push_back(s.values);
                } else {
                    const auto s = to_difference(load_unstructured(series_path(m).string()));
                    u0.push_back(s.initial);
                    d.push_back(s.values);
                }
            }
            return LatentDeepOnet::encode_cases(*ae, u0, d);
        };
        const auto tr = cases_of(split.train), va = cases_of(split.val);
        DeepOnetConfig dc;
        dc.latent_dim = ae->latent_dim();
        dc.p = cfg.ldon_p;
        dc.branch_layers = cfg.ldon_branch_layers;
        dc.branch_width = cfg.ldon_branch_width;
        dc.trunk_layers = cfg.ldon_trunk_layers;
        dc.trunk_width = cfg.ldon_trunk_width;
        dc.scales = !spec.multiscale ? std::vector<double>{1.0} : spec.on_grid ? cfg.ms_ldon_cae_scales : cfg.ms_ldon_scales;
        LatentDeepOnet op(dc, cfg.n_timesteps, init);
        OperatorTrainConfig oc;
        oc.epochs = cfg.ldon_epochs;
        oc.batch = cfg.ldon_batch;
        oc.optimizer.lr = cfg.ldon_lr;
        oc.optimizer.schedule = {cfg.ldon_decay, 1};
        oc.seed = shuffle_seed;
        note("train " + model + "/" + field_name(kind) + ": " + std::to_string(tr.size()) + " cases");
        history = op.train(tr, va, oc);
        summary.push_back({"val_loss", "val", model, "latent_mse", op.loss_on(va)});
        checkpoint = op.to_container();
    } else {
        std::vector<StructuredSeries> tr, va;
        for (const auto& m : split.train) tr.push_back(to_difference(load_structured(series_path(m).string())));
        for (const auto& m : split.val) va.push_back(to_difference(load_structured(series_path(m).string())));
        const FnoConfig fc = fno_config(cfg, spec, tr.front());
        std::unique_ptr<GridOperator> op;
        if (spec.multiscale) op = std::make_unique<GridOperator>(MscaleFnoConfig{fc, cfg.mscale_scales}, init);
        else op = std::make_unique<GridOperator>(fc, init);
        OperatorTrainConfig oc;
        oc.epochs = spec.multiscale ? cfg.mscale_epochs : cfg.fno_epochs;
        oc.batch = cfg.fno_batch;
        oc.optimizer = {OptimizerKind::adamw, cfg.fno_lr, cfg.fno_weight_decay};
        oc.seed = shuffle_seed;
        note("train " + model + "/" + field_name(kind) + ": " + std::to_string(tr.size()) + " cases on " +
             std::to_string(fc.H) + "x" + std::to_string(fc.W));
        history = op->train(tr, va, oc);
        summary.push_back({"val_loss", "val", model, "relative_l2", op->loss_on(va)});
        checkpoint = op->to_container();
    }

    write_resolved();
    const fs::path ck = model_path(model, kind);
    make_parent(ck);
    write_container(ck.string(), checkpoint);
    const std::string stem = (root() / "models" / (model + "_" + field_name(kind))).string();
    write_history_csv(stem + "_history.csv", history);
    write_metric_csv(stem + "_summary.csv", summary);
    for (const auto& [case_id, rows] : recon) write_reconstruction_csv(stem + "_recon_" + case_id + ".csv", case_id, rows);
    note("train " + model + "/" + field_name(kind) + ": " + summary.front().metric + " " +
         format_double(summary.front().value));
}

void Pipeline::predict(const std::string& model, FieldKind kind, const std::vector<std::string>& cases) {
    const ModelSpec spec = parse_model(model);
    if (spec.family == ModelFamily::mlp_ae || spec.family == ModelFamily::cae)
        throw ConfigError("predict: '" + model + "' is an autoencoder, not an operator");
    const DatasetSplit split = split_for(cfg_, kind);
    std::vector<CaseMeta> targets;
    if (cases.empty()) {
        targets = split.test;
    } else {
        const auto all = split.all();
        for (const auto& id : cases) {
            auto it = std::find_if(all.begin(), all.end(), [&](const CaseMeta& m) { return m.case_id() == id; });
            if (it == all.end()) throw ConfigError("predict: case '" + id + "' is not in the ladder");
            targets.push_back(*it);
        }
    }
    auto ref_path = [&](const CaseMeta& m) { return spec.on_grid ? grid_path(m.case_id(), kind) : data_path(m.case_id(), kind); };
    require_file(model_path(model, kind), "train " + model + " first");
    const std::string ae_id = spec.autoencoder();
    if (!ae_id.empty()) require_file(model_path(ae_id, kind), "train " + ae_id + " first");
    for (const auto& m : targets) require_file(ref_path(m), "reference series");

    const Container ck = read_container(model_path(model, kind).string());
    std::unique_ptr<Autoencoder> ae;
    std::unique_ptr<LatentDeepOnet> ldon;
    std::unique_ptr<GridOperator> gop;
    if (spec.family == ModelFamily::deeponet) {
        ae = load_autoencoder(read_container(model_path(ae_id, kind).string()));
        ldon = std::make_unique<LatentDeepOnet>(LatentDeepOnet::from_container(ck));
    } else {
        gop = std::make_unique<GridOperator>(GridOperator::from_container(ck));
    }
    auto run = [&](std::span<const double> u0) { return ldon ? ldon->predict(*ae, u0) : gop->predict(u0); };

    write_resolved();
    fs::create_directories(root() / "pred");
    for (const auto& m : targets) {
        const fs::path out = pred_path(model, kind, m.case_id());
        const std::string stem = out.string().substr(0, out.string().size() - 5);
        if (spec.on_grid) {
            const auto ref = load_structured(ref_path(m).string());
            StructuredSeries pred = ref;
            pred.values = run(ref.frame(0));
            save_series(out.string(), pred);
            const auto xy = grid_xy(ref);
            for (std::size_t s : cfg_.dump_steps)
                write_text(stem + "_step" + std::to_string(s) + ".csv", dump_csv(pred.frame(s), ref.frame(s), xy));
        } else {
            const auto ref = load_unstructured(ref_path(m).string());
            UnstructuredSeries pred = ref;
            pred.values = run(ref.frame(0));
            save_series(out.string(), pred);
            for (std::size_t s : cfg_.dump_steps)
                write_text(stem + "_step" + std::to_string(s) + ".csv", dump_csv(pred.frame(s), ref.frame(s), ref.node_xy));
        }
    }
    note("predict " + model + "/" + field_name(kind) + ": " + std::to_string(targets.size()) + " cases");
}

std::vector<MetricRow> Pipeline::evaluate(const std::string& model, FieldKind kind) {
    const ModelSpec spec = parse_model(model);
    const DatasetSplit split = split_for(cfg_, kind);
    std::vector<std::pair<fs::path, fs::path>> pairs;
    for (const auto& m : split.test) {
        const fs::path pred = pred_path(model, kind, m.case_id());
        const fs::path ref = spec.on_grid ? grid_path(m.case_id(), kind) : data_path(m.case_id(), kind);
        require_file(pred, "run predict first");
        require_file(ref, "reference series");
        pairs.emplace_back(pred, ref);
    }
    std::vector<Comparison> comps;
    for (const auto& [pred, ref] : pairs) {
        if (spec.on_grid) comps.push_back(compare(load_structured(pred.string()), load_structured(ref.string())));
        else comps.push_back(compare(load_unstructured(pred.string()), load_unstructured(ref.string())));
    }
    write_resolved();
    const fs::path out = eval_dir(model, kind);
    std::map<std::string, std::vector<MetricRow>> acc;
    std::vector<MetricRow> all;
    for (const auto& c : comps) {
        auto rows = write_comparison(c, cfg_, model, out, acc);
        all.insert(all.end(), rows.begin(), rows.end());
    }
    flush_metrics(out, acc);
    note("evaluate " + model + "/" + field_name(kind) + ": " + std::to_string(comps.size()) + " cases");
    return all;
}

std::vector<MetricRow> evaluate_files(const std::string& pred_path, const std::string& ref_path, const RunConfig& cfg,
                                      const std::string& model, const fs::path& out_dir) {
    require_file(pred_path, "prediction");
    require_file(ref_path, "reference");
    const Container pc = read_container(pred_path), rc = read_container(ref_path);
    if (pc.kind != rc.kind) throw InputError("evaluate: prediction is " + pc.kind + " but reference is " + rc.kind);
    Comparison c;
    if (rc.kind == "structured") {
        c = compare(structured_from(pc), structured_from(rc));
    } else {
        c = compare(unstructured_from(pc), unstructured_from(rc));
    }
    std::map<std::string, std::vector<MetricRow>> acc;
    auto rows = write_comparison(c, cfg, model, out_dir, acc);
    flush_metrics(out_dir, acc);
    return rows;
}

void Pipeline::report() const { write_report(root()); }

void write_report(const fs::path& run_dir) {
    const fs::path eval = run_dir / "eval";
    if (!fs::is_directory(eval)) throw InputError("missing " + eval.string() + " (run evaluate first)");

    // Model order follows the run plan when the resolved config is present.
    std::vector<std::string> order;
    if (fs::is_regular_file(run_dir / "config.resolved")) {
        std::ifstream in(run_dir / "config.resolved");
        std::stringstream ss;
        ss << in.rdbuf();
        const RunConfig cfg = parse_run_config(ss.str());
        for (const auto* list : {&cfg.velocity_models, &cfg.pressure_models})
            for (const auto& m : *list)
                if (std::find(order.begin(), order.end(), m) == order.end()) order.push_back(m);
    }
    auto rank = [&](const std::string& m) {
        const auto it = std::find(order.begin(), order.end(), m);
        return static_cast<std::size_t>(it - order.begin());
    };

    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(eval))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());

    // table key (metric_field) -> model -> case -> value
    std::map<std::string, std::map<std::string, std::map<std::string, double>>> tables;
    for (const auto& d : dirs) {
        const std::string name = d.filename().string();
        const auto us = name.rfind('_');
        if (us == std::string::npos) continue;
        const std::string model = name.substr(0, us), field = name.substr(us + 1);
        for (const char* metric : {"relative_l2", "dtw", "capture", "pressure_drop"}) {
            const fs::path f = d / (std::string(metric) + ".csv");
            if (!fs::is_regular_file(f)) continue;
            for (const auto& r : read_metric_csv(f.string()))
                if (r.key == "mean") tables[std::string(metric) + "_" + field][model][r.case_id] = r.value;
        }
    }
    if (tables.empty()) throw InputError("report: no metric CSVs under " + eval.string());

    fs::create_directories(run_dir / "report");
    for (const auto& [name, by_model] : tables) {
        std::set<std::string> case_set;
        for (const auto& [m, row] : by_model)
            for (const auto& [c, v] : row) case_set.insert(c);
        std::vector<std::string> models;
        for (const auto& [m, row] : by_model) models.push_back(m);
        std::stable_sort(models.begin(), models.end(), [&](const auto& a, const auto& b) { return rank(a) < rank(b); });
        std::string s = "model";
        for (const auto& c : case_set) s += "," + c;
        s += "\n";
        for (const auto& m : models) {
            s += m;
            for (const auto& c : case_set) {
                const auto it = by_model.at(m).find(c);
                s += "," + (it == by_model.at(m).end() ? std::string() : format_double(it->second));
            }
            s += "\n";
        }
        write_text(run_dir / "report" / (name + ".csv"), s);
    }

    std::string rec = "model,field,val_relative_l2\n";
    bool any = false;
    if (fs::is_directory(run_dir / "models")) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(run_dir / "models")) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const std::string n = f.filename().string();
            const std::string suffix = "_summary.csv";
            if (n.size() <= suffix.size() || n.substr(n.size() - suffix.size()) != suffix) continue;
            const std::string stem = n.substr(0, n.size() - suffix.size());
            const auto us = stem.rfind('_');
            for (const auto& r : read_metric_csv(f.string()))
                if (r.metric == "val_reconstruction") {
                    rec += stem.substr(0, us) + "," + stem.substr(us + 1) + "," + format_double(r.value) + "\n";
                    any = true;
                }
        }
    }
    if (any) write_text(run_dir / "report" / "ae_reconstruction.csv", rec);
}

void Pipeline::run() {
    std::vector<std::pair<FieldKind, std::vector<std::string>>> plan = {
        {FieldKind::velocity, cfg_.velocity_models}, {FieldKind::pressure, cfg_.pressure_models}};
    // Mode sweep on velocity; the default mode count is plain "fno".
    for (std::size_t k : cfg_.fno_sweep_modes) {
        const std::string id = k == cfg_.fno_modes ? "fno" : "fno-m" + std::to_string(k);
        auto& v = plan.front().second;
        if (std::find(v.begin(), v.end(), id) == v.end()) v.push_back(id);
    }
    for (const auto& [kind, models] : plan)
        for (const auto& m : models) {
            const ModelSpec s = parse_model(m);
            if (s.family == ModelFamily::mlp_ae || s.family == ModelFamily::cae)
                throw ConfigError("run: '" + m + "' is an autoencoder; it is trained on demand");
        }
    gen_data();
    interp();
    for (const auto& [kind, models] : plan) {
        std::vector<std::string> aes;
        for (const auto& m : models) {
            const std::string ae = parse_model(m).autoencoder();
            if (!ae.empty() && std::find(aes.begin(), aes.end(), ae) == aes.end()) aes.push_back(ae);
        }
        for (const auto& ae : aes) train(ae, kind);
        for (const auto& m : models) {
            train(m, kind);
            predict(m, kind);
            evaluate(m, kind);
        }
    }
    report();
}

}  // namespace nos
