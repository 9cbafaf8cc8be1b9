#include "nos/flowdata/generator.hpp"

#include <cmath>
#include <numbers>

#include "nos/core/errors.hpp"

namespace nos {

Geometry Geometry::tube_bundle() {
    Geometry g;
    const double r = 0.006;
    g.obstacles = {{-0.0303, -0.027, r}, {-0.0303, 0.0, r}, {-0.0303, 0.027, r}, {-0.012, -0.0135, r},
                   {-0.012, 0.0135, r}};
    return g;
}

bool Geometry::inside_solid(double x, double y) const {
    for (const Obstacle& o : obstacles) {
        if ((x - o.x) * (x - o.x) + (y - o.y) * (y - o.y) < o.radius * o.radius) return true;
    }
    return false;
}

void Geometry::validate() const {
    if (!(x_max > x_min) || !(y_max > y_min)) throw ConfigError("geometry: empty domain");
    for (const Obstacle& o : obstacles) {
        if (!(o.radius > 0.0)) throw ConfigError("geometry: obstacle radius must be positive");
        if (o.x - o.radius < x_min || o.x + o.radius > x_max || o.y - o.radius < y_min || o.y + o.radius > y_max) {
            throw ConfigError("geometry: obstacle at (" + std::to_string(o.x) + ", " + std::to_string(o.y) +
                              ") is not inside the domain");
        }
    }
}

double quantize(double v) { return std::nearbyint(v / kFieldQuantum) * kFieldQuantum; }

FieldGenerator::FieldGenerator(Geometry geometry, GeneratorConstants constants)
    : geometry_(std::move(geometry)), constants_(constants) {
    geometry_.validate();
    if (!(constants_.wake_width > 0.0) || !(constants_.wavelength > 0.0) || !(constants_.opening_width > 0.0)) {
        throw ConfigError("generator: wake width, wavelength and opening width must be positive");
    }
    if (!(constants_.freq_coeff > 0.0)) throw ConfigError("generator: frequency coefficient must be positive");
}

double FieldGenerator::velocity(double x, double y, double t, double U) const {
    const GeneratorConstants& c = constants_;
    const double G = std::exp(-0.5 * std::pow((y - c.centerline) / c.wake_width, 2));
    const double S = 0.5 * (1.0 + std::tanh((x - c.wake_origin) / c.opening_width));
    const double B = 1.0 - c.deficit * G * S;
    const double f = c.freq_coeff * U;
    const double kappa = 2.0 * std::numbers::pi / c.wavelength;
    const double dy = y - c.centerline;
    const double sgn = dy > 0 ? 1.0 : (dy < 0 ? -1.0 : 0.0);
    const double phase = 2.0 * std::numbers::pi * f * t - kappa * (x - c.wake_origin) + std::numbers::pi * sgn;
    return U * (B + c.amplitude * G * S * std::sin(phase));
}

double FieldGenerator::pressure(double x, double y, double t, double U) const {
    const GeneratorConstants& c = constants_;
    const double G = std::exp(-0.5 * std::pow((y - c.centerline) / c.wake_width, 2));
    const double f = c.freq_coeff * U;
    const double kappa = 2.0 * std::numbers::pi / c.wavelength;
    const double mean = c.pressure_coeff * U * U * (1.0 - (x - geometry_.x_min) / geometry_.length());
    return mean + c.pressure_wave * U * U * G * std::sin(2.0 * std::numbers::pi * f * t - kappa * (x - c.wake_origin));
}

double FieldGenerator::value(FieldKind kind, double x, double y, double t, double U) const {
    return kind == FieldKind::velocity ? velocity(x, y, t, U) : pressure(x, y, t, U);
}

void FieldGenerator::check_sampling(const CaseMeta& meta) const {
    meta.validate();
    const double f = constants_.freq_coeff * meta.inlet_velocity;
    const double nyquist = 1.0 / (2.0 * meta.snapshot_interval);
    if (f > nyquist) {
        throw ConfigError("shedding frequency " + std::to_string(f) + " Hz exceeds the snapshot Nyquist limit " +
                          std::to_string(nyquist) + " Hz");
    }
}

UnstructuredSeries FieldGenerator::unstructured(const CaseMeta& meta, const std::vector<double>& node_xy) const {
    check_sampling(meta);
    UnstructuredSeries s;
    s.meta = meta;
    s.node_xy = node_xy;
    const std::size_t n = s.n_nodes();
    if (n == 0) throw InputError("generator: no nodes");
    s.values.resize(meta.n_timesteps * n);
    for (std::size_t k = 0; k < meta.n_timesteps; ++k) {
        const double t = static_cast<double>(k) * meta.snapshot_interval;
        for (std::size_t i = 0; i < n; ++i) {
            s.values[k * n + i] =
                quantize(value(meta.field_kind, node_xy[2 * i], node_xy[2 * i + 1], t, meta.inlet_velocity));
        }
    }
    return s;
}

StructuredSeries FieldGenerator::structured(const CaseMeta& meta, std::size_t H, std::size_t W) const {
    check_sampling(meta);
    if (H < 2 || W < 2) throw ConfigError("generator: grid needs at least 2 x 2 points");
    StructuredSeries s;
    s.meta = meta;
    s.H = H;
    s.W = W;
    s.x0 = geometry_.x_min;
    s.y0 = geometry_.y_min;
    s.dx = geometry_.length() / static_cast<double>(W - 1);
    s.dy = geometry_.height() / static_cast<double>(H - 1);
    s.solid_mask.assign(H * W, 0);
    for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) s.solid_mask[i * W + j] = geometry_.inside_solid(s.x_of(j), s.y_of(i));
    s.values.assign(meta.n_timesteps * H * W, 0.0);
    for (std::size_t k = 0; k < meta.n_timesteps; ++k) {
        const double t = static_cast<double>(k) * meta.snapshot_interval;
        for (std::size_t c = 0; c < H * W; ++c) {
            if (s.solid_mask[c]) continue;
            s.values[k * H * W + c] =
                quantize(value(meta.field_kind, s.x_of(c % W), s.y_of(c / W), t, meta.inlet_velocity));
        }
    }
    return s;
}

std::vector<double> make_nodes(const Geometry& geometry, const NodeLayout& layout, Rng& rng) {
    geometry.validate();
    if (layout.target_nodes < 4) throw ConfigError("node layout: need at least 4 nodes");
    if (layout.jitter < 0.0 || layout.jitter >= 0.5) throw ConfigError("node layout: jitter must lie in [0, 0.5)");
    const double L = geometry.length(), Hh = geometry.height();
    const double h = std::sqrt(L * Hh / static_cast<double>(layout.target_nodes));
    const auto nx = static_cast<std::size_t>(std::max(1.0, std::round(L / h)));
    const auto ny = static_cast<std::size_t>(std::max(1.0, std::round(Hh / h)));
    const double hx = L / static_cast<double>(nx), hy = Hh / static_cast<double>(ny);
    std::vector<double> xy;
    xy.reserve(2 * (nx * ny + 4 * ny * layout.boundary_refinement));
    for (std::size_t i = 0; i < ny; ++i) {
        for (std::size_t j = 0; j < nx; ++j) {
            const double x = geometry.x_min + (static_cast<double>(j) + 0.5 + rng.uniform(-layout.jitter, layout.jitter)) * hx;
            const double y = geometry.y_min + (static_cast<double>(i) + 0.5 + rng.uniform(-layout.jitter, layout.jitter)) * hy;
            if (geometry.inside_solid(x, y)) continue;
            xy.push_back(x);
            xy.push_back(y);
        }
    }
    if (layout.boundary_refinement > 0) {
        const std::size_t nb = ny * layout.boundary_refinement;
        for (double x : {geometry.x_min, geometry.x_max}) {
            for (std::size_t i = 0; i <= nb; ++i) {
                xy.push_back(x);
                xy.push_back(geometry.y_min + Hh * static_cast<double>(i) / static_cast<double>(nb));
            }
        }
    }
    return xy;
}

}  // namespace nos
