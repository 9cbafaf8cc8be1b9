#include "nos/cli/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "nos/core/container.hpp"
#include "nos/core/errors.hpp"
#include "nos/flowdata/split.hpp"

namespace nos {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError("config: '" + key + "' is out of range");
    }
}

std::string fmt(double v) { return format_double(v); }

template <class T>
std::string join(const std::vector<T>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        if constexpr (std::is_same_v<T, double>) s += fmt(xs[i]);
        else if constexpr (std::is_same_v<T, std::string>) s += xs[i];
        else s += std::to_string(xs[i]);
    }
    return s;
}

struct Key {
    std::string name;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class M>
Key num(std::string name, M RunConfig::*m) {
    return {name,
            [m](RunConfig& c, const std::string& k, const std::string& v) {
                if constexpr (std::is_floating_point_v<M>) c.*m = to_double(k, v);
                else c.*m = static_cast<M>(to_u64(k, v));
            },
            [m](const RunConfig& c) {
                if constexpr (std::is_floating_point_v<M>) return fmt(c.*m);
                else return std::to_string(c.*m);
            }};
}

Key text(std::string name, std::string RunConfig::*m) {
    return {name, [m](RunConfig& c, const std::string&, const std::string& v) { c.*m = v; },
            [m](const RunConfig& c) { return c.*m; }};
}

template <class T>
Key list(std::string name, std::vector<T> RunConfig::*m) {
    return {name,
            [m](RunConfig& c, const std::string& k, const std::string& v) {
                std::vector<T> out;
                for (const auto& item : split_list(v)) {
                    if constexpr (std::is_same_v<T, double>) out.push_back(to_double(k, item));
                    else if constexpr (std::is_same_v<T, std::string>) out.push_back(item);
                    else out.push_back(static_cast<T>(to_u64(k, item)));
                }
                c.*m = std::move(out);
            },
            [m](const RunConfig& c) { return join(c.*m); }};
}

template <class S, class M>
Key nested(std::string name, S RunConfig::*outer, M S::*inner) {
    return {name,
            [outer, inner](RunConfig& c, const std::string& k, const std::string& v) {
                if constexpr (std::is_floating_point_v<M>) c.*outer.*inner = to_double(k, v);
                else c.*outer.*inner = static_cast<M>(to_u64(k, v));
            },
            [outer, inner](const RunConfig& c) {
                if constexpr (std::is_floating_point_v<M>) return fmt(c.*outer.*inner);
                else return std::to_string(c.*outer.*inner);
            }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> k = {
        num("seed", &RunConfig::seed),
        text("output_dir", &RunConfig::output_dir),
        text("data.ladder", &RunConfig::ladder),
        list("data.val", &RunConfig::val),
        list("data.test", &RunConfig::test),
        num("data.timesteps", &RunConfig::n_timesteps),
        num("data.snapshot_interval", &RunConfig::snapshot_interval),
        num("data.nodes", &RunConfig::nodes),
        num("data.node_jitter", &RunConfig::node_jitter),
        nested("gen.amplitude", &RunConfig::generator, &GeneratorConstants::amplitude),
        nested("gen.wake_width", &RunConfig::generator, &GeneratorConstants::wake_width),
        nested("gen.wavelength", &RunConfig::generator, &GeneratorConstants::wavelength),
        nested("gen.pressure_coeff", &RunConfig::generator, &GeneratorConstants::pressure_coeff),
        nested("gen.pressure_wave", &RunConfig::generator, &GeneratorConstants::pressure_wave),
        nested("gen.freq_coeff", &RunConfig::generator, &GeneratorConstants::freq_coeff),
        nested("gen.wake_origin", &RunConfig::generator, &GeneratorConstants::wake_origin),
        nested("gen.centerline", &RunConfig::generator, &GeneratorConstants::centerline),
        nested("gen.deficit", &RunConfig::generator, &GeneratorConstants::deficit),
        nested("gen.opening_width", &RunConfig::generator, &GeneratorConstants::opening_width),
        nested("interp.k", &RunConfig::interp, &InterpSpec::k),
        nested("interp.p", &RunConfig::interp, &InterpSpec::p),
        nested("interp.mask_factor", &RunConfig::interp, &InterpSpec::mask_factor),
        nested("interp.scale", &RunConfig::interp, &InterpSpec::scale),
        text("interp.grid_base", &RunConfig::grid_base),
        list("ae.hidden", &RunConfig::ae_hidden),
        num("ae.latent", &RunConfig::latent_dim),
        num("ae.epochs", &RunConfig::ae_epochs),
        num("ae.batch", &RunConfig::ae_batch),
        num("ae.lr", &RunConfig::ae_lr),
        num("ae.weight_decay", &RunConfig::ae_weight_decay),
        list("cae.channels", &RunConfig::cae_channels),
        num("cae.epochs", &RunConfig::cae_epochs),
        num("cae.lr", &RunConfig::cae_lr),
        num("ldon.p", &RunConfig::ldon_p),
        num("ldon.branch_layers", &RunConfig::ldon_branch_layers),
        num("ldon.branch_width", &RunConfig::ldon_branch_width),
        num("ldon.trunk_layers", &RunConfig::ldon_trunk_layers),
        num("ldon.trunk_width", &RunConfig::ldon_trunk_width),
        list("ldon.ms_scales", &RunConfig::ms_ldon_scales),
        list("ldon.ms_cae_scales", &RunConfig::ms_ldon_cae_scales),
        num("ldon.epochs", &RunConfig::ldon_epochs),
        num("ldon.batch", &RunConfig::ldon_batch),
        num("ldon.lr", &RunConfig::ldon_lr),
        num("ldon.decay", &RunConfig::ldon_decay),
        num("fno.modes", &RunConfig::fno_modes),
        num("fno.width", &RunConfig::fno_width),
        num("fno.depth", &RunConfig::fno_depth),
        list("fno.sweep_modes", &RunConfig::fno_sweep_modes),
        num("fno.epochs", &RunConfig::fno_epochs),
        num("fno.batch", &RunConfig::fno_batch),
        num("fno.lr", &RunConfig::fno_lr),
        num("fno.weight_decay", &RunConfig::fno_weight_decay),
        num("mscale.modes", &RunConfig::mscale_modes),
        num("mscale.width", &RunConfig::mscale_width),
        list("mscale.scales", &RunConfig::mscale_scales),
        num("mscale.epochs", &RunConfig::mscale_epochs),
        num("eval.window_first", &RunConfig::window_first),
        num("eval.window_last", &RunConfig::window_last),
        num("eval.dtw_band", &RunConfig::dtw_band),
        list("eval.dump_steps", &RunConfig::dump_steps),
        list("run.velocity_models", &RunConfig::velocity_models),
        list("run.pressure_models", &RunConfig::pressure_models),
    };
    return k;
}

const Key* find_key(const std::string& name) {
    for (const Key& k : keys())
        if (k.name == name) return &k;
    return nullptr;
}

// Keys that describe the shared dataset cannot differ between fields.
bool field_overridable(const std::string& name) {
    return !(name == "seed" || name == "output_dir" || name.rfind("data.", 0) == 0 || name.rfind("gen.", 0) == 0 ||
             name.rfind("interp.", 0) == 0 || name.rfind("run.", 0) == 0);
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const char* prefix : {"velocity.", "pressure."}) {
        const std::string p(prefix);
        if (key.rfind(p, 0) == 0) {
            const std::string base = key.substr(p.size());
            const Key* k = find_key(base);
            if (!k) throw ConfigError("config: unknown key '" + key + "'");
            if (!field_overridable(base)) throw ConfigError("config: '" + base + "' cannot be set per field");
            RunConfig probe;
            k->set(probe, key, value);  // validates the value now
            (p == "velocity." ? cfg.velocity_overrides : cfg.pressure_overrides)[base] = value;
            return;
        }
    }
    const Key* k = find_key(key);
    if (!k) throw ConfigError("config: unknown key '" + key + "'");
    k->set(cfg, key, value);
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        try {
            set_config_value(cfg, key, value);
        } catch (const ConfigError& e) {
            std::string msg = e.what();
            if (msg.rfind("config: ", 0) == 0) msg.erase(0, 8);
            throw ConfigError("config line " + std::to_string(no) + ": " + msg);
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string resolved_config_text(const RunConfig& cfg) {
    std::string out;
    for (const Key& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
    for (const auto& [k, v] : cfg.velocity_overrides) out += "velocity." + k + " = " + v + "\n";
    for (const auto& [k, v] : cfg.pressure_overrides) out += "pressure." + k + " = " + v + "\n";
    return out;
}

RunConfig RunConfig::for_field(FieldKind kind) const {
    RunConfig c = *this;
    for (const auto& [k, v] : kind == FieldKind::velocity ? velocity_overrides : pressure_overrides) {
        find_key(k)->set(c, k, v);
    }
    c.velocity_overrides.clear();
    c.pressure_overrides.clear();
    return c;
}

std::vector<double> RunConfig::velocities() const {
    if (ladder == "desk") return desk_ladder();
    if (ladder == "paper") return paper_ladder();
    std::vector<double> v;
    for (const auto& item : split_list(ladder)) v.push_back(to_double("data.ladder", item));
    return v;
}

std::vector<double> RunConfig::val_velocities() const {
    if (!val.empty()) return val;
    if (ladder == "paper") return paper_val();
    if (ladder == "desk") return desk_val();
    throw ConfigError("config: an explicit data.ladder needs data.val");
}

std::vector<double> RunConfig::test_velocities() const { return test.empty() ? default_test() : test; }

GridBase RunConfig::base() const {
    if (grid_base == "desk") return GridBase::desk();
    if (grid_base == "paper") return GridBase::paper();
    throw ConfigError("config: interp.grid_base must be desk or paper, got '" + grid_base + "'");
}

CaseMeta RunConfig::prototype(FieldKind kind) const { return {1.0, kind, n_timesteps, snapshot_interval}; }

void RunConfig::validate() const {
    if (output_dir.empty()) throw ConfigError("config: output_dir is empty");
    prototype(FieldKind::velocity).validate();
    if (velocities().size() < 3) throw ConfigError("config: ladder needs at least three velocities");
    val_velocities();
    interp.validate();
    base();
    if (nodes < 16) throw ConfigError("config: data.nodes must be at least 16");
    if (!(node_jitter >= 0.0 && node_jitter < 0.5)) throw ConfigError("config: data.node_jitter must be in [0, 0.5)");
    if (window_first > window_last || window_last >= n_timesteps) {
        throw ConfigError("config: evaluation window [" + std::to_string(window_first) + ", " +
                          std::to_string(window_last) + "] does not fit " + std::to_string(n_timesteps) + " timesteps");
    }
    for (std::size_t s : dump_steps)
        if (s >= n_timesteps) throw ConfigError("config: dump step " + std::to_string(s) + " is past the last timestep");
    for (const auto* v : {&ae_epochs, &cae_epochs, &ldon_epochs, &fno_epochs, &mscale_epochs})
        if (*v == 0) throw ConfigError("config: epoch counts must be positive");
    for (const auto* v : {&ae_batch, &ldon_batch, &fno_batch})
        if (*v == 0) throw ConfigError("config: batch sizes must be positive");
    for (const auto* v : {&ae_lr, &cae_lr, &ldon_lr, &fno_lr})
        if (!(*v > 0.0)) throw ConfigError("config: learning rates must be positive");
    if (!(ldon_decay > 0.0 && ldon_decay <= 1.0)) throw ConfigError("config: ldon.decay must be in (0, 1]");
    for (const auto& overrides : {velocity_overrides, pressure_overrides}) {
        if (overrides.empty()) continue;
        for_field(&overrides == &velocity_overrides ? FieldKind::velocity : FieldKind::pressure);
    }
    for (FieldKind k : {FieldKind::velocity, FieldKind::pressure}) {
        const RunConfig f = for_field(k);
        if (f.window_last >= f.n_timesteps) throw ConfigError("config: evaluation window past the last timestep");
    }
}

}  // namespace nos
