#include <algorithm>
#include <cmath>

#include "maxembed/marginals.hpp"

namespace maxembed {

void ValidationReport::record(const std::string& kind, double t, double x, double magnitude) {
    pass = false;
    for (auto& v : violations) {
        if (v.kind == kind) {
            if (magnitude > v.magnitude) v = Violation{kind, t, x, magnitude};
            return;
        }
    }
    violations.push_back(Violation{kind, t, x, magnitude});
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json out;
    out["pass"] = pass;
    out["violations"] = nlohmann::json::array();
    for (const auto& v : violations) {
        out["violations"].push_back({{"kind", v.kind}, {"t", v.t}, {"x", v.x}, {"magnitude", v.magnitude}});
    }
    return out;
}

double default_tolerance(const MarginalFamily& family) { return family.analytic() ? 1e-8 : 1e-4; }

ValidationReport check_peacock(const MarginalFamily& family, const std::vector<double>& t_grid,
                               const std::vector<double>& x_grid, double tolerance) {
    const double tol = tolerance >= 0.0 ? tolerance : default_tolerance(family);
    ValidationReport report;

    // mu_0 = delta_0, whether or not 0 is on the supplied grid.
    for (double x : x_grid) {
        const double gap = std::abs(family.call_price(0.0, x) - std::max(-x, 0.0));
        if (gap > tol) report.record("delta0", 0.0, x, gap);
    }

    std::vector<double> prev;
    for (double t : t_grid) {
        std::vector<double> row(x_grid.size());
        for (std::size_t i = 0; i < x_grid.size(); ++i) row[i] = family.call_price(t, x_grid[i]);

        for (std::size_t i = 0; i + 1 < x_grid.size(); ++i) {
            const double slope = (row[i + 1] - row[i]) / (x_grid[i + 1] - x_grid[i]);
            if (slope < -1.0 - tol) report.record("slope-range", t, x_grid[i], -1.0 - slope);
            if (slope > tol) report.record("slope-range", t, x_grid[i], slope);
            if (i > 0) {
                const double left = (row[i] - row[i - 1]) / (x_grid[i] - x_grid[i - 1]);
                if (slope - left < -tol) report.record("convexity", t, x_grid[i], left - slope);
            }
        }
        if (!prev.empty()) {
            for (std::size_t i = 0; i < x_grid.size(); ++i) {
                const double drop = prev[i] - row[i];
                if (drop > tol) report.record("convex-order", t, x_grid[i], drop);
            }
        }

        // A centered law prices every call at or above (-x)^+.
        for (std::size_t i = 0; i < x_grid.size(); ++i) {
            const double gap = std::max(-x_grid[i], 0.0) - row[i];
            if (gap > tol) report.record("centering", t, x_grid[i], gap);
        }
        if (t > 0.0 && family.analytic()) {
            // c + x -> 0 on the left, c -> 0 on the right. Tabulated surfaces reach
            // both asymptotes by construction of the extrapolation.
            const double hi = 40.0 * family.unit_scale();
            const double lo = -hi;
            const double left_gap = std::abs(family.call_price(t, lo) + lo);
            const double right_gap = std::abs(family.call_price(t, hi));
            if (left_gap > tol) report.record("centering", t, lo, left_gap);
            if (right_gap > tol) report.record("centering", t, hi, right_gap);
        }
        prev = std::move(row);
    }
    return report;
}

ValidationReport check_imrv(const MarginalFamily& family, const std::vector<double>& t_grid,
                            const std::vector<double>& x_grid, double tolerance) {
    const double tol = tolerance >= 0.0 ? tolerance : default_tolerance(family);
    ValidationReport report;
    std::vector<double> prev;
    for (double t : t_grid) {
        if (!(t > 0.0)) continue;
        std::vector<double> row(x_grid.size());
        for (std::size_t i = 0; i < x_grid.size(); ++i) row[i] = family.barycenter(t, x_grid[i]);
        if (!prev.empty()) {
            for (std::size_t i = 0; i < x_grid.size(); ++i) {
                const double drop = prev[i] - row[i];
                if (drop > tol) report.record("imrv", t, x_grid[i], drop);
            }
        }
        prev = std::move(row);
    }
    return report;
}

}  // namespace maxembed
