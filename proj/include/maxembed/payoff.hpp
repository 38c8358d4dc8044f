#pragma once

#include <vector>

#include <json.hpp>

namespace maxembed {

struct PayoffAtom {
    double level;
    double weight;
};

/// Bounded non-decreasing payoff phi on the running maximum, stored as
/// phi(0) plus the measure d phi: atoms and a piecewise-constant density.
class Payoff {
public:
    Payoff(double base, std::vector<PayoffAtom> atoms, std::vector<double> density_grid = {},
           std::vector<double> density_values = {});

    static Payoff constant(double value) { return Payoff(value, {}); }
    static Payoff digital(double level) { return Payoff(0.0, {{level, 1.0}}); }

    double base() const { return base_; }
    const std::vector<PayoffAtom>& atoms() const { return atoms_; }
    const std::vector<double>& density_grid() const { return density_grid_; }
    const std::vector<double>& density_values() const { return density_values_; }

    bool has_density() const { return !density_values_.empty(); }
    bool trivial_measure() const;
    double total_mass() const;
    /// Integral of the density over [a, b].
    double density_mass(double a, double b) const;
    /// Smallest and largest level charged by d phi.
    double support_min() const;
    double support_max() const;

    double operator()(double x) const;

    nlohmann::json to_json() const;

private:
    double base_;
    std::vector<PayoffAtom> atoms_;
    std::vector<double> density_grid_;
    std::vector<double> density_values_;
};

}  // namespace maxembed
