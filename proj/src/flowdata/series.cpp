#include "nos/flowdata/series.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "nos/core/errors.hpp"

namespace nos {

FieldKind parse_field_kind(const std::string& name) {
    if (name == "velocity") return FieldKind::velocity;
    if (name == "pressure") return FieldKind::pressure;
    throw ConfigError("unknown field kind '" + name + "' (expected velocity or pressure)");
}

std::string to_string(FieldKind k) { return k == FieldKind::velocity ? "velocity" : "pressure"; }

void CaseMeta::validate() const {
    if (!(inlet_velocity > 0.0)) throw ConfigError("case: inlet velocity must be positive");
    if (n_timesteps < 2) throw ConfigError("case: n_timesteps must be at least 2");
    if (!(snapshot_interval > 0.0)) throw ConfigError("case: snapshot interval must be positive");
}

std::string CaseMeta::case_id() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "u%.4f", inlet_velocity);
    return buf;
}

namespace {

template <typename S>
std::span<const double> frame_of(const S& s, std::size_t t) {
    if (t >= s.n_frames()) throw DimensionError("frame " + std::to_string(t) + " out of range");
    return std::span<const double>(s.values).subspan(t * s.frame_size(), s.frame_size());
}

template <typename S>
void check_frames(const S& s) {
    s.meta.validate();
    if (s.frame_size() == 0) throw InputError("series has no spatial points");
    if (s.values.size() % s.frame_size() != 0) throw InputError("series values are not a whole number of frames");
    const std::size_t expect = s.is_difference ? s.meta.n_timesteps - 1 : s.meta.n_timesteps;
    if (s.n_frames() != expect) {
        throw InputError("series holds " + std::to_string(s.n_frames()) + " frames, expected " +
                         std::to_string(expect));
    }
    if (s.is_difference && s.initial.size() != s.frame_size()) {
        throw InputError("difference series is missing its initial field");
    }
    if (!s.is_difference && !s.initial.empty()) throw InputError("full series must not carry an initial field");
}

template <typename S>
S difference_of(const S& full) {
    if (full.is_difference) throw InputError("series is already a difference series");
    if (full.n_frames() < 2) throw InputError("difference transform needs at least 2 frames");
    S out = full;
    const std::size_t n = full.frame_size();
    out.is_difference = true;
    out.initial.assign(full.values.begin(), full.values.begin() + static_cast<std::ptrdiff_t>(n));
    out.values.assign((full.n_frames() - 1) * n, 0.0);
    for (std::size_t t = 1; t < full.n_frames(); ++t)
        for (std::size_t i = 0; i < n; ++i) out.values[(t - 1) * n + i] = full.values[t * n + i] - full.values[i];
    return out;
}

template <typename S>
S recover_of(const S& diff, std::span<const double> u0) {
    if (!diff.is_difference) throw InputError("recover_full expects a difference series");
    if (u0.size() != diff.frame_size()) {
        throw DimensionError("initial field has " + std::to_string(u0.size()) + " values, frame has " +
                             std::to_string(diff.frame_size()));
    }
    S out = diff;
    out.is_difference = false;
    out.initial.clear();
    out.values.assign(u0.begin(), u0.end());
    const std::vector<double> rest = add_initial(diff.values, u0);
    out.values.insert(out.values.end(), rest.begin(), rest.end());
    return out;
}

}  // namespace

std::vector<double> add_initial(std::span<const double> diff_frames, std::span<const double> u0) {
    if (u0.empty() || diff_frames.size() % u0.size() != 0) {
        throw DimensionError("difference frames do not match the initial field size");
    }
    std::vector<double> out(diff_frames.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = diff_frames[i] + u0[i % u0.size()];
    return out;
}

std::span<const double> UnstructuredSeries::frame(std::size_t t) const { return frame_of(*this, t); }
std::span<double> UnstructuredSeries::frame(std::size_t t) {
    auto f = frame_of(*this, t);
    return {values.data() + (f.data() - values.data()), f.size()};
}

void UnstructuredSeries::validate() const {
    if (node_xy.size() % 2 != 0) throw InputError("node coordinates must come in (x, y) pairs");
    check_frames(*this);
    std::set<std::pair<double, double>> seen;
    for (std::size_t i = 0; i < n_nodes(); ++i) {
        if (!seen.emplace(node_xy[2 * i], node_xy[2 * i + 1]).second) {
            throw InputError("duplicate node coordinate at index " + std::to_string(i));
        }
    }
}

std::span<const double> StructuredSeries::frame(std::size_t t) const { return frame_of(*this, t); }
std::span<double> StructuredSeries::frame(std::size_t t) {
    auto f = frame_of(*this, t);
    return {values.data() + (f.data() - values.data()), f.size()};
}

void StructuredSeries::validate() const {
    if (!(dx > 0.0) || !(dy > 0.0)) throw InputError("grid spacing must be positive");
    if (solid_mask.size() != H * W) throw InputError("solid mask does not match the grid");
    check_frames(*this);
    for (std::size_t t = 0; t < n_frames(); ++t) {
        auto f = frame(t);
        for (std::size_t c = 0; c < H * W; ++c) {
            if (solid_mask[c] && f[c] != 0.0) {
                throw InputError("masked cell " + std::to_string(c) + " is nonzero at frame " + std::to_string(t));
            }
        }
    }
}

UnstructuredSeries to_difference(const UnstructuredSeries& full) { return difference_of(full); }
StructuredSeries to_difference(const StructuredSeries& full) { return difference_of(full); }

UnstructuredSeries recover_full(const UnstructuredSeries& diff, std::span<const double> u0) {
    return recover_of(diff, u0);
}
StructuredSeries recover_full(const StructuredSeries& diff, std::span<const double> u0) {
    return recover_of(diff, u0);
}

}  // namespace nos
