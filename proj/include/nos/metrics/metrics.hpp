#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nos/flowdata/series.hpp"
#include "nos/metrics/pressure.hpp"

namespace nos {

struct SeriesError {
    std::vector<double> per_step;
    double mean = 0.0;
};

/// ||pred_t - ref_t|| / ||ref_t|| per frame over cells where `mask` is 0
/// (mask may be empty). Throws DomainError naming a zero-norm frame.
SeriesError relative_l2_series(std::span<const double> pred, std::span<const double> ref, std::size_t frame_size,
                               const std::vector<std::uint8_t>& mask = {});
SeriesError relative_l2_series(const StructuredSeries& pred, const StructuredSeries& ref);
SeriesError relative_l2_series(const UnstructuredSeries& pred, const UnstructuredSeries& ref);

/// (x - mean) / std with the population standard deviation.
std::vector<double> zscore(const std::vector<double>& x);

/// Dynamic time warping distance with symmetric unit steps, |x_i - y_j|
/// cost and Sakoe-Chiba band |i - j| <= w. Inputs must have equal length.
double dtw_banded(const std::vector<double>& x, const std::vector<double>& y, std::size_t w);

/// |X_k| for k = 0..n/2 by direct summation.
std::vector<double> dft_magnitude(const std::vector<double>& x);

/// Magnitude of pred's DFT at ref's dominant nonzero-frequency bin over the
/// magnitude of ref's DFT there.
double oscillation_capture_ratio(const std::vector<double>& pred, const std::vector<double>& ref);

struct Probe {
    std::string label;
    double x, y;
};
using ProbeSet = std::vector<Probe>;

/// P1-P6 wake probes.
ProbeSet default_probes();
void validate_probes(const ProbeSet& probes, double x_min, double x_max, double y_min, double y_max);

/// One signal per probe, each of length n_frames. Unstructured series sample
/// the nearest node; structured series interpolate bilinearly.
std::vector<std::vector<double>> probe_history(const UnstructuredSeries& s, const ProbeSet& probes);
std::vector<std::vector<double>> probe_history(const StructuredSeries& s, const ProbeSet& probes);

/// Frames [first, last] inclusive of each signal.
std::vector<std::vector<double>> window(const std::vector<std::vector<double>>& signals, std::size_t first,
                                        std::size_t last);

struct ProbeTable {
    std::vector<double> per_probe;
    double mean = 0.0;
};

/// z-scores each windowed probe signal and reports dtw_banded per probe.
ProbeTable dtw_report(const std::vector<std::vector<double>>& pred, const std::vector<std::vector<double>>& ref,
                      std::size_t w);
/// oscillation_capture_ratio per probe.
ProbeTable capture_report(const std::vector<std::vector<double>>& pred, const std::vector<std::vector<double>>& ref);

/// Row of the fixed report schema: metric, case, model, timestep-or-probe, value.
struct MetricRow {
    std::string metric;
    std::string case_id;
    std::string model;
    std::string key;
    double value;
};

void write_metric_csv(const std::string& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metric_csv(const std::string& path);

}  // namespace nos
