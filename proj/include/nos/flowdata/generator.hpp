#pragma once

#include <vector>

#include "nos/core/rng.hpp"
#include "nos/flowdata/series.hpp"

namespace nos {

struct Obstacle {
    double x, y, radius;
};

/// Rectangular channel with circular solid obstacles (m).
struct Geometry {
    double x_min = -0.063, x_max = 0.189;
    double y_min = -0.047, y_max = 0.047;
    std::vector<Obstacle> obstacles;

    /// Staggered five-tube bundle, 12 mm tubes, used by the desk-scale runs.
    static Geometry tube_bundle();

    double length() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    bool inside_solid(double x, double y) const;
    void validate() const;
};

/// Constants of the closed-form vortex-street surrogate.
struct GeneratorConstants {
    double amplitude = 0.3;       ///< A
    double wake_width = 0.02;     ///< sigma_w (m)
    double wavelength = 0.05;     ///< lambda_w (m)
    double pressure_coeff = 120;  ///< C_p (Pa s^2 / m^2)
    double pressure_wave = 0.05;  ///< epsilon
    double freq_coeff = 5.0;      ///< c_f, f = c_f U (Hz per m/s)
    double wake_origin = 0.0;     ///< x_0 (m), also the centre of the wake opening S(x)
    double centerline = 0.0;      ///< y_c (m)
    double deficit = 0.4;         ///< depth of the mean-flow wake deficit in B(x, y)
    double opening_width = 0.005; ///< tanh width of S(x) (m)
};

/// Unstructured node layout: a jittered lattice of about `target_nodes`
/// points with solid interiors removed, plus inlet/outlet boundary rows at
/// `boundary_refinement` times the lattice density.
struct NodeLayout {
    std::size_t target_nodes = 2500;
    double jitter = 0.3;  ///< fraction of the lattice spacing
    std::size_t boundary_refinement = 4;
};

/// Values are snapped to multiples of this quantum so that the difference
/// transform and its inverse are exact in floating point.
inline constexpr double kFieldQuantum = 0x1.0p-36;
double quantize(double v);

class FieldGenerator {
public:
    FieldGenerator(Geometry geometry, GeneratorConstants constants);

    /// u(x, y, t) in m/s or p(x, y, t) in Pa for inlet velocity U.
    double velocity(double x, double y, double t, double U) const;
    double pressure(double x, double y, double t, double U) const;
    double value(FieldKind kind, double x, double y, double t, double U) const;

    /// Rejects shedding frequencies above the snapshot Nyquist limit.
    void check_sampling(const CaseMeta& meta) const;

    UnstructuredSeries unstructured(const CaseMeta& meta, const std::vector<double>& node_xy) const;
    /// Structured samples at grid nodes; solid cells are zeroed and masked.
    StructuredSeries structured(const CaseMeta& meta, std::size_t H, std::size_t W) const;

    const Geometry& geometry() const noexcept { return geometry_; }
    const GeneratorConstants& constants() const noexcept { return constants_; }

private:
    Geometry geometry_;
    GeneratorConstants constants_;
};

std::vector<double> make_nodes(const Geometry& geometry, const NodeLayout& layout, Rng& rng);

}  // namespace nos
