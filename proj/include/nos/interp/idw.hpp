#pragma once

#include <cstddef>
#include <vector>

#include "nos/flowdata/series.hpp"
#include "nos/interp/kdtree.hpp"

namespace nos {

struct InterpSpec {
    std::size_t k = 6;         ///< neighbours per grid point
    double p = 1.0;            ///< distance-decay exponent
    double mask_factor = 2.5;  ///< mask when nearest node is farther than factor * max(dx, dy)
    unsigned scale = 1;        ///< grid refinement 1..4

    void validate() const;
};

/// Grid dimensions for a refinement scale. Spacing is L / (N - 1), so grid
/// nodes sit on the domain boundary.
struct GridSpec {
    std::size_t H = 0, W = 0;
    double dx = 0.0, dy = 0.0;
    double x0 = 0.0, y0 = 0.0;
};

/// Points per axis at 1x; a scale s grid has round(s * W1) x round(s * H1).
/// The desk base is fractional so that its 3x grid is 48 x 128.
struct GridBase {
    double W1, H1;
    static GridBase paper() { return {252, 94}; }
    static GridBase desk() { return {128.0 / 3.0, 16}; }
};

GridSpec scale_grid(double x_min, double x_max, double y_min, double y_max, GridBase base, unsigned scale);

/// Coincidence cutoff (m) below which a node's value is copied directly.
inline constexpr double kCoincidence = 1e-12;

/// Precomputed per-grid-point neighbour weights, reusable across frames.
struct IdwPlan {
    GridSpec grid;
    std::size_t k = 0;
    std::vector<std::size_t> index;   ///< H*W*k
    std::vector<double> weight;       ///< H*W*k, normalized
    std::vector<double> nearest;      ///< H*W nearest-node distance

    static IdwPlan build(const KdTree2& tree, const GridSpec& grid, const InterpSpec& spec);
    /// Interpolates one frame of node values (length N) onto the grid.
    std::vector<double> apply(const std::vector<double>& node_values) const;
    std::vector<double> apply(const double* node_values) const;
};

/// Projects every frame of `source` onto `grid` with inverse-distance
/// weighting, then masks cells per `spec`.
StructuredSeries idw_interpolate(const UnstructuredSeries& source, const GridSpec& grid, const InterpSpec& spec);

/// Solid flags: nearest-node distance above mask_factor * max(dx, dy).
std::vector<std::uint8_t> distance_mask(const std::vector<double>& nearest, const GridSpec& grid, double mask_factor);

/// Zeroes masked cells in every frame and records the mask.
void apply_mask(StructuredSeries& s, const std::vector<std::uint8_t>& mask);

/// Percent difference |dp_struct - dp_unstruct| / |dp_unstruct| of the
/// time-averaged inlet-minus-outlet pressure drop between representations.
double fidelity_report(const UnstructuredSeries& unstructured, const StructuredSeries& structured);

}  // namespace nos
