#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nos {

enum class FieldKind { velocity, pressure };

FieldKind parse_field_kind(const std::string& name);
std::string to_string(FieldKind k);

struct CaseMeta {
    double inlet_velocity = 0.0;  ///< m/s
    FieldKind field_kind = FieldKind::velocity;
    std::size_t n_timesteps = 0;
    double snapshot_interval = 0.0;  ///< s

    void validate() const;
    /// Stable label such as "u0.4000"; used in file names and reports.
    std::string case_id() const;

    friend bool operator==(const CaseMeta&, const CaseMeta&) = default;
};

/// Field samples on scattered nodes.
///
/// A full series stores n_timesteps frames. A difference series (see
/// to_difference) stores n_timesteps - 1 frames u(t_k) - u(t_0), k >= 1, and
/// keeps u(t_0) in `initial`.
struct UnstructuredSeries {
    CaseMeta meta;
    std::vector<double> node_xy;  ///< N x 2
    std::vector<double> values;   ///< frames x N
    bool is_difference = false;
    std::vector<double> initial;  ///< N, difference series only

    std::size_t n_nodes() const { return node_xy.size() / 2; }
    std::size_t frame_size() const { return n_nodes(); }
    std::size_t n_frames() const { return frame_size() ? values.size() / frame_size() : 0; }
    std::span<const double> frame(std::size_t t) const;
    std::span<double> frame(std::size_t t);

    /// Throws InputError when the layout or invariants are violated,
    /// including duplicate node coordinates.
    void validate() const;
};

/// Field samples on a uniform H x W grid. Row i sits at y0 + i*dy, column j
/// at x0 + j*dx. Masked (solid) cells hold exactly 0 in every frame.
struct StructuredSeries {
    CaseMeta meta;
    std::size_t H = 0, W = 0;
    double dx = 0.0, dy = 0.0;
    double x0 = 0.0, y0 = 0.0;
    std::vector<std::uint8_t> solid_mask;  ///< H x W, 1 = solid
    std::vector<double> values;            ///< frames x H x W
    bool is_difference = false;
    std::vector<double> initial;  ///< H x W, difference series only

    std::size_t frame_size() const { return H * W; }
    std::size_t n_frames() const { return frame_size() ? values.size() / frame_size() : 0; }
    std::span<const double> frame(std::size_t t) const;
    std::span<double> frame(std::size_t t);
    double x_of(std::size_t j) const { return x0 + static_cast<double>(j) * dx; }
    double y_of(std::size_t i) const { return y0 + static_cast<double>(i) * dy; }

    void validate() const;
};

/// Delta u(t_k) = u(t_k) - u(t_0) for k = 1..T-1; the identically-zero t_0
/// frame is dropped and u(t_0) moves to `initial`.
UnstructuredSeries to_difference(const UnstructuredSeries& full);
StructuredSeries to_difference(const StructuredSeries& full);

/// Adds `u0` back to every difference frame and prepends u0 itself, giving
/// the n_timesteps-frame full series.
UnstructuredSeries recover_full(const UnstructuredSeries& diff, std::span<const double> u0);
StructuredSeries recover_full(const StructuredSeries& diff, std::span<const double> u0);

/// Frame-wise u_hat = delta_u_hat + u0 on raw buffers (frames x n).
std::vector<double> add_initial(std::span<const double> diff_frames, std::span<const double> u0);

}  // namespace nos
