#include "nos/metrics/pressure.hpp"

#include <algorithm>
#include <cmath>

#include "nos/core/errors.hpp"

namespace nos {

namespace {

void finish(PressureDrop& d) {
    double s = 0.0;
    for (double v : d.per_step) s += v;
    d.mean = d.per_step.empty() ? 0.0 : s / static_cast<double>(d.per_step.size());
}

}  // namespace

PressureDrop pressure_drop(const StructuredSeries& s) {
    if (s.is_difference) throw InputError("pressure drop needs a full series, not a difference series");
    std::vector<std::size_t> inlet, outlet;
    for (std::size_t i = 0; i < s.H; ++i) {
        if (!s.solid_mask.empty() && !s.solid_mask[i * s.W]) inlet.push_back(i * s.W);
        if (!s.solid_mask.empty() && !s.solid_mask[i * s.W + s.W - 1]) outlet.push_back(i * s.W + s.W - 1);
        if (s.solid_mask.empty()) {
            inlet.push_back(i * s.W);
            outlet.push_back(i * s.W + s.W - 1);
        }
    }
    if (inlet.empty()) throw DomainError("pressure drop: inlet column is fully masked");
    if (outlet.empty()) throw DomainError("pressure drop: outlet column is fully masked");
    PressureDrop d;
    for (std::size_t t = 0; t < s.n_frames(); ++t) {
        auto f = s.frame(t);
        double a = 0.0, b = 0.0;
        for (auto c : inlet) a += f[c];
        for (auto c : outlet) b += f[c];
        d.per_step.push_back(a / static_cast<double>(inlet.size()) - b / static_cast<double>(outlet.size()));
    }
    finish(d);
    return d;
}

PressureDrop pressure_drop(const UnstructuredSeries& s, double tol) {
    if (s.is_difference) throw InputError("pressure drop needs a full series, not a difference series");
    const std::size_t n = s.n_nodes();
    if (n == 0) throw InputError("pressure drop: no nodes");
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
        lo = std::min(lo, s.node_xy[2 * i]);
        hi = std::max(hi, s.node_xy[2 * i]);
    }
    std::vector<std::size_t> inlet, outlet;
    for (std::size_t i = 0; i < n; ++i) {
        if (s.node_xy[2 * i] <= lo + tol) inlet.push_back(i);
        if (s.node_xy[2 * i] >= hi - tol) outlet.push_back(i);
    }
    PressureDrop d;
    for (std::size_t t = 0; t < s.n_frames(); ++t) {
        auto f = s.frame(t);
        double a = 0.0, b = 0.0;
        for (auto c : inlet) a += f[c];
        for (auto c : outlet) b += f[c];
        d.per_step.push_back(a / static_cast<double>(inlet.size()) - b / static_cast<double>(outlet.size()));
    }
    finish(d);
    return d;
}

PressureDrop pressure_drop_error(const PressureDrop& pred, const PressureDrop& ref) {
    if (pred.per_step.size() != ref.per_step.size()) throw DimensionError("pressure drop series differ in length");
    PressureDrop e;
    for (std::size_t t = 0; t < ref.per_step.size(); ++t) {
        if (ref.per_step[t] == 0.0) throw DomainError("pressure drop error: zero reference at step " + std::to_string(t));
        e.per_step.push_back(100.0 * std::abs(pred.per_step[t] - ref.per_step[t]) / std::abs(ref.per_step[t]));
    }
    finish(e);
    return e;
}

}  // namespace nos
