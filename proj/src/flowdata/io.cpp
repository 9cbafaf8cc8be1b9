#include "nos/flowdata/io.hpp"

#include <fstream>

#include "nos/core/errors.hpp"

namespace nos {

namespace {

void put_meta(Container& c, const CaseMeta& m, bool is_difference) {
    c.set("inlet_velocity", m.inlet_velocity);
    c.set("field_kind", to_string(m.field_kind));
    c.set("n_timesteps", static_cast<std::uint64_t>(m.n_timesteps));
    c.set("snapshot_interval", m.snapshot_interval);
    c.set("is_difference", std::string(is_difference ? "1" : "0"));
}

CaseMeta get_meta(const Container& c) {
    CaseMeta m;
    m.inlet_velocity = c.get_double("inlet_velocity");
    m.field_kind = parse_field_kind(c.get("field_kind"));
    m.n_timesteps = c.get_u64("n_timesteps");
    m.snapshot_interval = c.get_double("snapshot_interval");
    return m;
}

void require_kind(const Container& c, const std::string& kind) {
    if (c.kind != kind) throw InputError("expected a '" + kind + "' container, found '" + c.kind + "'");
}

}  // namespace

Container to_container(const UnstructuredSeries& s) {
    s.validate();
    Container c;
    c.kind = "unstructured";
    put_meta(c, s.meta, s.is_difference);
    const std::uint64_t n = s.n_nodes();
    c.add_block("node_xy", {n, 2}, s.node_xy);
    c.add_block("values", {s.n_frames(), n}, s.values);
    if (s.is_difference) c.add_block("initial", {n}, s.initial);
    return c;
}

Container to_container(const StructuredSeries& s) {
    s.validate();
    Container c;
    c.kind = "structured";
    put_meta(c, s.meta, s.is_difference);
    c.set("H", static_cast<std::uint64_t>(s.H));
    c.set("W", static_cast<std::uint64_t>(s.W));
    c.set("dx", s.dx);
    c.set("dy", s.dy);
    c.set("x0", s.x0);
    c.set("y0", s.y0);
    c.add_block("solid_mask", {s.H, s.W}, std::vector<double>(s.solid_mask.begin(), s.solid_mask.end()));
    c.add_block("values", {s.n_frames(), s.H, s.W}, s.values);
    if (s.is_difference) c.add_block("initial", {s.H, s.W}, s.initial);
    return c;
}

UnstructuredSeries unstructured_from(const Container& c) {
    require_kind(c, "unstructured");
    UnstructuredSeries s;
    s.meta = get_meta(c);
    s.is_difference = c.get("is_difference") == "1";
    s.node_xy = c.block("node_xy").data;
    s.values = c.block("values").data;
    if (s.is_difference) s.initial = c.block("initial").data;
    s.validate();
    return s;
}

StructuredSeries structured_from(const Container& c) {
    require_kind(c, "structured");
    StructuredSeries s;
    s.meta = get_meta(c);
    s.is_difference = c.get("is_difference") == "1";
    s.H = c.get_u64("H");
    s.W = c.get_u64("W");
    s.dx = c.get_double("dx");
    s.dy = c.get_double("dy");
    s.x0 = c.get_double("x0");
    s.y0 = c.get_double("y0");
    const Block& mask = c.block("solid_mask");
    s.solid_mask.reserve(mask.data.size());
    for (double v : mask.data) {
        if (v != 0.0 && v != 1.0) throw InputError("solid mask holds a value other than 0 or 1");
        s.solid_mask.push_back(v != 0.0);
    }
    s.values = c.block("values").data;
    if (s.is_difference) s.initial = c.block("initial").data;
    s.validate();
    return s;
}

void save_series(const std::string& path, const UnstructuredSeries& s) { write_container(path, to_container(s)); }
void save_series(const std::string& path, const StructuredSeries& s) { write_container(path, to_container(s)); }
UnstructuredSeries load_unstructured(const std::string& path) { return unstructured_from(read_container(path)); }
StructuredSeries load_structured(const std::string& path) { return structured_from(read_container(path)); }

void write_probe_csv(const std::string& path, const std::vector<double>& times, const std::vector<double>& values) {
    if (times.size() != values.size()) throw DimensionError("probe CSV: times and values differ in length");
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out << "t,value\n";
    for (std::size_t i = 0; i < times.size(); ++i) out << format_double(times[i]) << ',' << format_double(values[i]) << '\n';
}

}  // namespace nos
