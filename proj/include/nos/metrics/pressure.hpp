#pragma once

#include <vector>

#include "nos/flowdata/series.hpp"

namespace nos {

struct PressureDrop {
    std::vector<double> per_step;
    double mean = 0.0;
};

/// Mean over unmasked cells of the first grid column minus the same over
/// the last column, per frame. Requires a full (non-difference) series.
PressureDrop pressure_drop(const StructuredSeries& s);

/// Mean over nodes on the inlet line (x within `tol` of the smallest node x)
/// minus the mean over nodes on the outlet line.
PressureDrop pressure_drop(const UnstructuredSeries& s, double tol = 1e-9);

/// Per-step |pred - ref| / |ref| in percent, and its mean.
PressureDrop pressure_drop_error(const PressureDrop& pred, const PressureDrop& ref);

}  // namespace nos
