#include "nos/interp/idw.hpp"

#include <algorithm>
#include <cmath>

#include "nos/core/errors.hpp"
#include "nos/flowdata/generator.hpp"
#include "nos/metrics/pressure.hpp"

namespace nos {

void InterpSpec::validate() const {
    if (k < 1) throw ConfigError("interp: k must be at least 1");
    if (!(p > 0.0)) throw ConfigError("interp: p must be positive");
    if (!(mask_factor > 0.0)) throw ConfigError("interp: mask_factor must be positive");
    if (scale < 1 || scale > 4) throw ConfigError("interp: scale must be 1, 2, 3 or 4");
}

GridSpec scale_grid(double x_min, double x_max, double y_min, double y_max, GridBase base, unsigned scale) {
    if (scale < 1 || scale > 4) throw ConfigError("unsupported grid scale " + std::to_string(scale) + "x");
    if (!(x_max > x_min) || !(y_max > y_min)) throw ConfigError("grid: empty extents");
    if (!(base.W1 >= 2) || !(base.H1 >= 2)) throw ConfigError("grid: base size must be at least 2 x 2");
    GridSpec g;
    g.W = static_cast<std::size_t>(std::lround(base.W1 * scale));
    g.H = static_cast<std::size_t>(std::lround(base.H1 * scale));
    g.dx = (x_max - x_min) / static_cast<double>(g.W - 1);
    g.dy = (y_max - y_min) / static_cast<double>(g.H - 1);
    g.x0 = x_min;
    g.y0 = y_min;
    return g;
}

IdwPlan IdwPlan::build(const KdTree2& tree, const GridSpec& grid, const InterpSpec& spec) {
    spec.validate();
    if (tree.size() == 0) throw InputError("interp: empty source");
    if (tree.size() < spec.k) {
        throw InputError("interp: source has " + std::to_string(tree.size()) + " nodes, fewer than k = " +
                         std::to_string(spec.k));
    }
    IdwPlan plan;
    plan.grid = grid;
    plan.k = spec.k;
    const std::size_t cells = grid.H * grid.W;
    plan.index.resize(cells * spec.k);
    plan.weight.assign(cells * spec.k, 0.0);
    plan.nearest.resize(cells);
    for (std::size_t i = 0; i < grid.H; ++i) {
        for (std::size_t j = 0; j < grid.W; ++j) {
            const std::size_t c = i * grid.W + j;
            const double x = grid.x0 + static_cast<double>(j) * grid.dx;
            const double y = grid.y0 + static_cast<double>(i) * grid.dy;
            const std::vector<Neighbor> nb = tree.knn(x, y, spec.k);
            plan.nearest[c] = nb.front().distance;
            std::size_t* idx = &plan.index[c * spec.k];
            double* w = &plan.weight[c * spec.k];
            for (std::size_t n = 0; n < spec.k; ++n) idx[n] = nb[n].index;
            if (nb.front().distance < kCoincidence) {
                w[0] = 1.0;
                continue;
            }
            double total = 0.0;
            for (std::size_t n = 0; n < spec.k; ++n) {
                w[n] = std::pow(nb[n].distance, -spec.p);
                total += w[n];
            }
            for (std::size_t n = 0; n < spec.k; ++n) w[n] /= total;
        }
    }
    return plan;
}

std::vector<double> IdwPlan::apply(const std::vector<double>& node_values) const { return apply(node_values.data()); }

std::vector<double> IdwPlan::apply(const double* node_values) const {
    const std::size_t cells = grid.H * grid.W;
    std::vector<double> out(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        double acc = 0.0;
        for (std::size_t n = 0; n < k; ++n) acc += weight[c * k + n] * node_values[index[c * k + n]];
        out[c] = acc;
    }
    return out;
}

std::vector<std::uint8_t> distance_mask(const std::vector<double>& nearest, const GridSpec& grid, double mask_factor) {
    const double limit = mask_factor * std::max(grid.dx, grid.dy);
    std::vector<std::uint8_t> mask(nearest.size());
    for (std::size_t c = 0; c < nearest.size(); ++c) mask[c] = nearest[c] > limit;
    return mask;
}

void apply_mask(StructuredSeries& s, const std::vector<std::uint8_t>& mask) {
    if (mask.size() != s.frame_size()) throw DimensionError("mask does not match the grid");
    s.solid_mask = mask;
    for (std::size_t t = 0; t < s.n_frames(); ++t) {
        auto f = s.frame(t);
        for (std::size_t c = 0; c < f.size(); ++c)
            if (mask[c]) f[c] = 0.0;
    }
    if (s.is_difference) {
        for (std::size_t c = 0; c < s.initial.size(); ++c)
            if (mask[c]) s.initial[c] = 0.0;
    }
}

StructuredSeries idw_interpolate(const UnstructuredSeries& source, const GridSpec& grid, const InterpSpec& spec) {
    if (source.n_nodes() == 0) throw InputError("interp: empty source");
    if (grid.H < 2 || grid.W < 2 || !(grid.dx > 0) || !(grid.dy > 0)) throw ConfigError("interp: invalid grid");
    const KdTree2 tree(source.node_xy);
    const IdwPlan plan = IdwPlan::build(tree, grid, spec);

    StructuredSeries out;
    out.meta = source.meta;
    out.H = grid.H;
    out.W = grid.W;
    out.dx = grid.dx;
    out.dy = grid.dy;
    out.x0 = grid.x0;
    out.y0 = grid.y0;
    out.is_difference = source.is_difference;
    out.values.reserve(source.n_frames() * grid.H * grid.W);
    for (std::size_t t = 0; t < source.n_frames(); ++t) {
        std::vector<double> f = plan.apply(source.frame(t).data());
        for (double& v : f) v = quantize(v);
        out.values.insert(out.values.end(), f.begin(), f.end());
    }
    if (source.is_difference) {
        out.initial = plan.apply(source.initial);
        for (double& v : out.initial) v = quantize(v);
    }
    apply_mask(out, distance_mask(plan.nearest, grid, spec.mask_factor));
    return out;
}

namespace {

double time_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

double fidelity_report(const UnstructuredSeries& unstructured, const StructuredSeries& structured) {
    if (!(unstructured.meta == structured.meta)) throw InputError("fidelity: series describe different cases");
    if (unstructured.meta.field_kind != FieldKind::pressure) throw InputError("fidelity: needs pressure fields");
    const double ref = time_mean(pressure_drop(unstructured).per_step);
    const double got = time_mean(pressure_drop(structured).per_step);
    if (ref == 0.0) throw DomainError("fidelity: reference pressure drop is zero");
    return 100.0 * std::abs(got - ref) / std::abs(ref);
}

}  // namespace nos
