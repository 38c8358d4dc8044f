#pragma once

#include <vector>

#include <json.hpp>

namespace maxembed {

/// Non-decreasing, left-continuous step function on [0, 1]:
/// zeta(s) = values[k] for s in (breakpoints[k], breakpoints[k + 1]], zeta(0) = values[0].
class Boundary {
public:
    Boundary(std::vector<double> breakpoints, std::vector<double> values);
    static Boundary constant(double z);

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t steps() const { return values_.size(); }

    double at(double t) const;
    double right_limit(double t) const;
    double initial() const { return values_.front(); }
    double terminal() const { return values_.back(); }
    bool feasible_for(double m) const { return terminal() < m; }

    /// Same function with equal neighbouring steps merged.
    Boundary compressed() const;
    /// Values at each label, zeta(labels[i]).
    std::vector<double> sample(const std::vector<double>& labels) const;
    /// True when every interior breakpoint and t = 1 appear among the labels.
    bool refined_by(const std::vector<double>& labels, double tol = 1e-12) const;

    nlohmann::json to_json() const;

private:
    std::vector<double> breakpoints_;
    std::vector<double> values_;
};

}  // namespace maxembed
