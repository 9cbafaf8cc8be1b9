#include "nos/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "nos/core/container.hpp"
#include "nos/core/errors.hpp"

namespace nos {

SeriesError relative_l2_series(std::span<const double> pred, std::span<const double> ref, std::size_t frame_size,
                               const std::vector<std::uint8_t>& mask) {
    if (pred.size() != ref.size()) throw DimensionError("relative L2: prediction and reference differ in size");
    if (frame_size == 0 || ref.size() % frame_size != 0) throw DimensionError("relative L2: bad frame size");
    if (!mask.empty() && mask.size() != frame_size) throw DimensionError("relative L2: mask does not match frame");
    SeriesError e;
    const std::size_t frames = ref.size() / frame_size;
    for (std::size_t t = 0; t < frames; ++t) {
        double num = 0.0, den = 0.0;
        for (std::size_t c = 0; c < frame_size; ++c) {
            if (!mask.empty() && mask[c]) continue;
            const double r = ref[t * frame_size + c], d = pred[t * frame_size + c] - r;
            num += d * d;
            den += r * r;
        }
        if (den == 0.0) throw DomainError("relative L2: reference frame " + std::to_string(t) + " has zero norm");
        e.per_step.push_back(std::sqrt(num / den));
    }
    double s = 0.0;
    for (double v : e.per_step) s += v;
    e.mean = s / static_cast<double>(frames);
    return e;
}

SeriesError relative_l2_series(const StructuredSeries& pred, const StructuredSeries& ref) {
    if (pred.H != ref.H || pred.W != ref.W) throw DimensionError("relative L2: grids differ");
    return relative_l2_series(pred.values, ref.values, ref.frame_size(), ref.solid_mask);
}

SeriesError relative_l2_series(const UnstructuredSeries& pred, const UnstructuredSeries& ref) {
    if (pred.n_nodes() != ref.n_nodes()) throw DimensionError("relative L2: node counts differ");
    return relative_l2_series(pred.values, ref.values, ref.frame_size());
}

std::vector<double> zscore(const std::vector<double>& x) {
    if (x.size() < 2) throw DomainError("zscore: need at least 2 samples");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    if (!(var > 0.0)) throw DomainError("zscore: signal has zero variance");
    const double sd = std::sqrt(var);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sd;
    return out;
}

double dtw_banded(const std::vector<double>& x, const std::vector<double>& y, std::size_t w) {
    if (x.size() != y.size()) throw DimensionError("dtw: signals must have equal length");
    const std::size_t n = x.size();
    if (n == 0) throw DimensionError("dtw: empty signals");
    constexpr double inf = std::numeric_limits<double>::infinity();
    // Two rolling rows over the full column range; cells outside the band stay inf.
    std::vector<double> prev(n, inf), cur(n, inf);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(cur.begin(), cur.end(), inf);
        const std::size_t lo = i > w ? i - w : 0;
        const std::size_t hi = std::min(n - 1, i + w);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double c = std::abs(x[i] - y[j]);
            double best;
            if (i == 0 && j == 0) {
                best = 0.0;
            } else {
                best = inf;
                if (i > 0) best = std::min(best, prev[j]);
                if (j > 0) best = std::min(best, cur[j - 1]);
                if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
            }
            cur[j] = c + best;
        }
        std::swap(prev, cur);
    }
    // Equal lengths keep the diagonal inside any band, so the end is reachable.
    return prev[n - 1];
}

std::vector<double> dft_magnitude(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> mag(n / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) {
        std::complex<double> acc;
        for (std::size_t t = 0; t < n; ++t) {
            acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n));
        }
        mag[k] = std::abs(acc);
    }
    return mag;
}

double oscillation_capture_ratio(const std::vector<double>& pred, const std::vector<double>& ref) {
    if (pred.size() != ref.size()) throw DimensionError("capture ratio: signals must have equal length");
    if (ref.size() < 3) throw DimensionError("capture ratio: need at least 3 samples");
    const std::vector<double> R = dft_magnitude(ref);
    std::size_t best = 1;
    for (std::size_t k = 2; k < R.size(); ++k)
        if (R[k] > R[best]) best = k;
    double scale = 0.0;
    for (double v : ref) scale += std::abs(v);
    if (R[best] <= 1e-12 * std::max(scale, 1e-300)) throw DomainError("capture ratio: reference has no oscillation");
    const std::vector<double> P = dft_magnitude(pred);
    return P[best] / R[best];
}

ProbeSet default_probes() {
    return {{"P1", 0.0, 0.0}, {"P2", 0.0, 0.02}, {"P3", 0.0, -0.02},
            {"P4", 0.05, 0.0}, {"P5", 0.05, 0.02}, {"P6", 0.05, -0.02}};
}

void validate_probes(const ProbeSet& probes, double x_min, double x_max, double y_min, double y_max) {
    std::set<std::string> labels;
    for (const Probe& p : probes) {
        if (!labels.insert(p.label).second) throw ConfigError("probe label '" + p.label + "' is not unique");
        if (p.x < x_min || p.x > x_max || p.y < y_min || p.y > y_max) {
            throw ConfigError("probe " + p.label + " lies outside the domain");
        }
    }
}

std::vector<std::vector<double>> probe_history(const UnstructuredSeries& s, const ProbeSet& probes) {
    std::vector<std::vector<double>> out;
    for (const Probe& p : probes) {
        std::size_t best = 0;
        double bd = INFINITY;
        for (std::size_t i = 0; i < s.n_nodes(); ++i) {
            const double dx = s.node_xy[2 * i] - p.x, dy = s.node_xy[2 * i + 1] - p.y;
            const double d = dx * dx + dy * dy;
            if (d < bd) bd = d, best = i;
        }
        if (s.n_nodes() == 0) throw InputError("probe " + p.label + ": series has no nodes");
        std::vector<double> sig;
        for (std::size_t t = 0; t < s.n_frames(); ++t) sig.push_back(s.frame(t)[best]);
        out.push_back(std::move(sig));
    }
    return out;
}

std::vector<std::vector<double>> probe_history(const StructuredSeries& s, const ProbeSet& probes) {
    std::vector<std::vector<double>> out;
    for (const Probe& p : probes) {
        const double fx = (p.x - s.x0) / s.dx, fy = (p.y - s.y0) / s.dy;
        if (fx < 0 || fy < 0 || fx > static_cast<double>(s.W - 1) || fy > static_cast<double>(s.H - 1)) {
            throw InputError("probe " + p.label + " lies outside the grid");
        }
        const auto j0 = std::min(static_cast<std::size_t>(fx), s.W - 2);
        const auto i0 = std::min(static_cast<std::size_t>(fy), s.H - 2);
        const double tx = fx - static_cast<double>(j0), ty = fy - static_cast<double>(i0);
        const std::size_t corner[4] = {i0 * s.W + j0, i0 * s.W + j0 + 1, (i0 + 1) * s.W + j0, (i0 + 1) * s.W + j0 + 1};
        const double wgt[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
        const double cd[4] = {tx * tx + ty * ty, (1 - tx) * (1 - tx) + ty * ty, tx * tx + (1 - ty) * (1 - ty),
                              (1 - tx) * (1 - tx) + (1 - ty) * (1 - ty)};
        bool all_open = true;
        int nearest = -1;
        for (int c = 0; c < 4; ++c) {
            const bool solid = !s.solid_mask.empty() && s.solid_mask[corner[c]];
            if (solid) {
                all_open = false;
            } else if (nearest < 0 || cd[c] < cd[nearest]) {
                nearest = c;
            }
        }
        if (nearest < 0) throw InputError("probe " + p.label + " lies in a fully masked neighbourhood");
        std::vector<double> sig;
        for (std::size_t t = 0; t < s.n_frames(); ++t) {
            auto f = s.frame(t);
            if (all_open) {
                double v = 0.0;
                for (int c = 0; c < 4; ++c) v += wgt[c] * f[corner[c]];
                sig.push_back(v);
            } else {
                sig.push_back(f[corner[nearest]]);
            }
        }
        out.push_back(std::move(sig));
    }
    return out;
}

std::vector<std::vector<double>> window(const std::vector<std::vector<double>>& signals, std::size_t first,
                                        std::size_t last) {
    std::vector<std::vector<double>> out;
    for (const auto& s : signals) {
        if (first > last || last >= s.size()) throw DimensionError("window exceeds signal length");
        out.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(first), s.begin() + static_cast<std::ptrdiff_t>(last + 1));
    }
    return out;
}

namespace {

ProbeTable table_of(std::vector<double> v) {
    ProbeTable t;
    double s = 0.0;
    for (double x : v) s += x;
    t.mean = v.empty() ? 0.0 : s / static_cast<double>(v.size());
    t.per_probe = std::move(v);
    return t;
}

}  // namespace

ProbeTable dtw_report(const std::vector<std::vector<double>>& pred, const std::vector<std::vector<double>>& ref,
                      std::size_t w) {
    if (pred.size() != ref.size()) throw DimensionError("dtw report: probe counts differ");
    std::vector<double> v;
    for (std::size_t p = 0; p < ref.size(); ++p) v.push_back(dtw_banded(zscore(pred[p]), zscore(ref[p]), w));
    return table_of(std::move(v));
}

ProbeTable capture_report(const std::vector<std::vector<double>>& pred, const std::vector<std::vector<double>>& ref) {
    if (pred.size() != ref.size()) throw DimensionError("capture report: probe counts differ");
    std::vector<double> v;
    for (std::size_t p = 0; p < ref.size(); ++p) v.push_back(oscillation_capture_ratio(pred[p], ref[p]));
    return table_of(std::move(v));
}

void write_metric_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out << "metric,case,model,step_or_probe,value\n";
    for (const MetricRow& r : rows) {
        out << r.metric << ',' << r.case_id << ',' << r.model << ',' << r.key << ',' << format_double(r.value) << '\n';
    }
}

std::vector<MetricRow> read_metric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line != "metric,case,model,step_or_probe,value") throw InputError("'" + path + "' is not a metric CSV");
    std::vector<MetricRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        MetricRow r;
        std::string value;
        std::getline(ss, r.metric, ',');
        std::getline(ss, r.case_id, ',');
        std::getline(ss, r.model, ',');
        std::getline(ss, r.key, ',');
        std::getline(ss, value);
        r.value = parse_double(value);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace nos
