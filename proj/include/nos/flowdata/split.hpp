#pragma once

#include <vector>

#include "nos/flowdata/series.hpp"

namespace nos {

struct DatasetSplit {
    std::vector<CaseMeta> train, val, test;

    /// Throws ConfigError if any velocity appears in two sets.
    void validate() const;
    std::vector<CaseMeta> all() const;
};

/// Partitions `velocities` into validation, test and the remaining training
/// cases. Every value in `val` and `test` must occur in `velocities`.
/// `prototype` supplies field kind, timestep count and interval.
DatasetSplit make_split(const std::vector<double>& velocities, const std::vector<double>& val,
                        const std::vector<double>& test, const CaseMeta& prototype);

/// 0.10-0.60 m/s in 0.01 steps (0.4 is held out) plus the 0.7 extrapolation case.
std::vector<double> paper_ladder();
std::vector<double> paper_val();
/// 0.1 + i/30, i = 0..15, plus 0.7.
std::vector<double> desk_ladder();
std::vector<double> desk_val();
std::vector<double> default_test();

}  // namespace nos
