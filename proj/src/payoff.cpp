#include "maxembed/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace maxembed {

Payoff::Payoff(double base, std::vector<PayoffAtom> atoms, std::vector<double> density_grid,
               std::vector<double> density_values)
    : base_(base),
      atoms_(std::move(atoms)),
      density_grid_(std::move(density_grid)),
      density_values_(std::move(density_values)) {
    if (!std::isfinite(base_)) throw std::invalid_argument("payoff base value must be finite");
    for (const auto& a : atoms_) {
        if (!(a.level > 0.0) || !std::isfinite(a.level)) throw std::invalid_argument("payoff atoms need level > 0");
        if (!(a.weight > 0.0) || !std::isfinite(a.weight)) throw std::invalid_argument("payoff atoms need weight > 0");
    }
    std::sort(atoms_.begin(), atoms_.end(), [](const PayoffAtom& a, const PayoffAtom& b) { return a.level < b.level; });
    if (density_values_.empty()) {
        if (!density_grid_.empty()) throw std::invalid_argument("payoff density grid given without values");
        return;
    }
    if (density_grid_.size() != density_values_.size() + 1) {
        throw std::invalid_argument("payoff density needs one value per grid cell");
    }
    if (density_grid_.front() < 0.0) throw std::invalid_argument("payoff density must live on m >= 0");
    for (std::size_t i = 0; i + 1 < density_grid_.size(); ++i) {
        if (!(density_grid_[i] < density_grid_[i + 1])) {
            throw std::invalid_argument("payoff density grid must be strictly increasing");
        }
        if (!(density_values_[i] >= 0.0) || !std::isfinite(density_values_[i])) {
            throw std::invalid_argument("payoff density must be finite and non-negative");
        }
    }
}

bool Payoff::trivial_measure() const { return atoms_.empty() && total_mass() == 0.0; }

double Payoff::total_mass() const {
    double mass = 0.0;
    for (const auto& a : atoms_) mass += a.weight;
    if (has_density()) mass += density_mass(density_grid_.front(), density_grid_.back());
    return mass;
}

double Payoff::density_mass(double a, double b) const {
    if (!has_density() || b <= a) return 0.0;
    double mass = 0.0;
    for (std::size_t i = 0; i < density_values_.size(); ++i) {
        const double lo = std::max(a, density_grid_[i]);
        const double hi = std::min(b, density_grid_[i + 1]);
        if (hi > lo) mass += density_values_[i] * (hi - lo);
    }
    return mass;
}

double Payoff::support_min() const {
    double lo = std::numeric_limits<double>::infinity();
    if (!atoms_.empty()) lo = atoms_.front().level;
    for (std::size_t i = 0; i < density_values_.size(); ++i) {
        if (density_values_[i] > 0.0) {
            lo = std::min(lo, density_grid_[i]);
            break;
        }
    }
    return lo;
}

double Payoff::support_max() const {
    double hi = -std::numeric_limits<double>::infinity();
    if (!atoms_.empty()) hi = atoms_.back().level;
    for (std::size_t i = density_values_.size(); i-- > 0;) {
        if (density_values_[i] > 0.0) {
            hi = std::max(hi, density_grid_[i + 1]);
            break;
        }
    }
    return hi;
}

double Payoff::operator()(double x) const {
    double value = base_;
    for (const auto& a : atoms_) {
        if (a.level <= x) value += a.weight;
    }
    if (has_density()) value += density_mass(0.0, x);
    return value;
}

nlohmann::json Payoff::to_json() const {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : atoms_) atoms.push_back({{"level", a.level}, {"weight", a.weight}});
    return {{"base", base_}, {"atoms", atoms}, {"density_grid", density_grid_}, {"density_values", density_values_}};
}

}  // namespace maxembed
