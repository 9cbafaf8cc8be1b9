#include "nos/flowdata/split.hpp"

#include <cmath>

#include "nos/core/errors.hpp"

namespace nos {

namespace {

constexpr double kVelocityTol = 1e-9;

bool same_velocity(double a, double b) { return std::abs(a - b) < kVelocityTol; }

bool contains(const std::vector<double>& set, double v) {
    for (double s : set)
        if (same_velocity(s, v)) return true;
    return false;
}

}  // namespace

void DatasetSplit::validate() const {
    auto check = [](const std::vector<CaseMeta>& a, const std::vector<CaseMeta>& b, const char* what) {
        for (const CaseMeta& x : a)
            for (const CaseMeta& y : b)
                if (same_velocity(x.inlet_velocity, y.inlet_velocity)) {
                    throw ConfigError(std::string("split: velocity ") + std::to_string(x.inlet_velocity) +
                                      " appears in both " + what);
                }
    };
    check(train, val, "train and val");
    check(train, test, "train and test");
    check(val, test, "val and test");
}

std::vector<CaseMeta> DatasetSplit::all() const {
    std::vector<CaseMeta> out = train;
    out.insert(out.end(), val.begin(), val.end());
    out.insert(out.end(), test.begin(), test.end());
    return out;
}

DatasetSplit make_split(const std::vector<double>& velocities, const std::vector<double>& val,
                        const std::vector<double>& test, const CaseMeta& prototype) {
    for (double v : val)
        if (contains(test, v)) throw ConfigError("split: velocity " + std::to_string(v) + " is both val and test");
    for (double v : val)
        if (!contains(velocities, v)) throw ConfigError("split: validation velocity " + std::to_string(v) + " not in ladder");
    for (double v : test)
        if (!contains(velocities, v)) throw ConfigError("split: test velocity " + std::to_string(v) + " not in ladder");
    for (std::size_t i = 0; i < velocities.size(); ++i)
        for (std::size_t j = i + 1; j < velocities.size(); ++j)
            if (same_velocity(velocities[i], velocities[j])) {
                throw ConfigError("split: velocity " + std::to_string(velocities[i]) + " listed twice");
            }

    DatasetSplit split;
    auto meta_for = [&](double v) {
        CaseMeta m = prototype;
        m.inlet_velocity = v;
        m.validate();
        return m;
    };
    for (double v : velocities) {
        if (contains(val, v)) {
            split.val.push_back(meta_for(v));
        } else if (contains(test, v)) {
            split.test.push_back(meta_for(v));
        } else {
            split.train.push_back(meta_for(v));
        }
    }
    split.validate();
    return split;
}

std::vector<double> paper_ladder() {
    std::vector<double> v;
    for (int i = 10; i <= 60; ++i) v.push_back(i / 100.0);
    v.push_back(0.7);
    return v;
}

std::vector<double> paper_val() { return {0.1, 0.2, 0.3, 0.5, 0.6}; }

std::vector<double> desk_ladder() {
    std::vector<double> v;
    for (int i = 0; i < 16; ++i) v.push_back(0.1 + i / 30.0);
    v.push_back(0.7);
    return v;
}

std::vector<double> desk_val() { return {0.2, 0.3, 0.5}; }

std::vector<double> default_test() { return {0.4, 0.7}; }

}  // namespace nos
