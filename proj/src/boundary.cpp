#include "maxembed/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maxembed {

Boundary::Boundary(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("boundary needs at least one step");
    if (breakpoints_.size() != values_.size() + 1) {
        throw std::invalid_argument("boundary needs one more breakpoint than steps");
    }
    if (breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0) {
        throw std::invalid_argument("boundary breakpoints must run from 0 to 1");
    }
    for (std::size_t k = 0; k + 1 < breakpoints_.size(); ++k) {
        if (!(breakpoints_[k] < breakpoints_[k + 1])) {
            throw std::invalid_argument("boundary breakpoints must be strictly increasing");
        }
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k])) throw std::invalid_argument("boundary values must be finite");
        if (k > 0 && values_[k] < values_[k - 1]) {
            throw std::invalid_argument("boundary values must be non-decreasing");
        }
    }
}

Boundary Boundary::constant(double z) { return Boundary({0.0, 1.0}, {z}); }

double Boundary::at(double t) const {
    if (t <= 0.0) return values_.front();
    // First breakpoint >= t closes the step containing t.
    auto it = std::lower_bound(breakpoints_.begin() + 1, breakpoints_.end(), t);
    if (it == breakpoints_.end()) return values_.back();
    return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double Boundary::right_limit(double t) const {
    if (t >= 1.0) return values_.back();
    auto it = std::upper_bound(breakpoints_.begin() + 1, breakpoints_.end(), t);
    if (it == breakpoints_.end()) return values_.back();
    return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

Boundary Boundary::compressed() const {
    std::vector<double> bp{0.0};
    std::vector<double> vals;
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!vals.empty() && vals.back() == values_[k]) {
            bp.back() = breakpoints_[k + 1];
        } else {
            vals.push_back(values_[k]);
            bp.push_back(breakpoints_[k + 1]);
        }
    }
    return Boundary(std::move(bp), std::move(vals));
}

std::vector<double> Boundary::sample(const std::vector<double>& labels) const {
    std::vector<double> out;
    out.reserve(labels.size());
    for (double t : labels) out.push_back(at(t));
    return out;
}

bool Boundary::refined_by(const std::vector<double>& labels, double tol) const {
    for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
        const double s = breakpoints_[k];
        const bool found = std::any_of(labels.begin(), labels.end(),
                                       [&](double t) { return std::abs(t - s) <= tol; });
        if (!found) return false;
    }
    return true;
}

nlohmann::json Boundary::to_json() const {
    return {{"breakpoints", breakpoints_}, {"values", values_}};
}

}  // namespace maxembed
