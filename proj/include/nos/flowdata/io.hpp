#pragma once

#include <string>
#include <vector>

#include "nos/core/container.hpp"
#include "nos/flowdata/series.hpp"

namespace nos {

Container to_container(const UnstructuredSeries& s);
Container to_container(const StructuredSeries& s);
UnstructuredSeries unstructured_from(const Container& c);
StructuredSeries structured_from(const Container& c);

void save_series(const std::string& path, const UnstructuredSeries& s);
void save_series(const std::string& path, const StructuredSeries& s);
UnstructuredSeries load_unstructured(const std::string& path);
StructuredSeries load_structured(const std::string& path);

/// Two-column CSV "t,value".
void write_probe_csv(const std::string& path, const std::vector<double>& times, const std::vector<double>& values);

}  // namespace nos
