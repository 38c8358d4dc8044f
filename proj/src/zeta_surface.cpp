#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "format.hpp"
#include "maxembed/cost_solver.hpp"

namespace maxembed {

ZetaSurface::ZetaSurface(std::vector<double> levels, std::vector<Boundary> boundaries)
    : levels_(std::move(levels)), boundaries_(std::move(boundaries)) {
    if (levels_.size() != boundaries_.size()) throw std::invalid_argument("zeta surface needs one boundary per level");
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (i > 0 && !(levels_[i - 1] < levels_[i])) throw std::invalid_argument("zeta surface levels must increase");
        if (!boundaries_[i].feasible_for(levels_[i])) {
            throw std::invalid_argument("boundary at m = " + detail::format_double(levels_[i]) + " reaches m");
        }
    }
}

ZetaSurface::ZetaSurface(const CostCurve& curve) {
    for (const auto& e : curve.entries()) {
        if (!e.minimizer) continue;
        levels_.push_back(e.m);
        boundaries_.push_back(*e.minimizer);
    }
}

const Boundary& ZetaSurface::at(double m) const {
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (std::abs(levels_[i] - m) <= 1e-12 * std::max(1.0, std::abs(m))) return boundaries_[i];
    }
    throw std::out_of_range("zeta surface has no boundary at m = " + detail::format_double(m));
}

std::vector<double> ZetaSurface::breakpoints() const {
    std::vector<double> out;
    for (const auto& b : boundaries_) out.insert(out.end(), b.breakpoints().begin(), b.breakpoints().end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

nlohmann::json ZetaDiagnostics::to_json() const {
    nlohmann::json flags = nlohmann::json::array();
    for (std::size_t i = 0; i < check_times.size(); ++i) {
        flags.push_back({{"t", check_times[i]}, {"status", continuity_ok[i] ? "pass" : "warn"}});
    }
    return {{"integrability", integrability}, {"integrable", integrable}, {"continuity", flags}, {"warnings", warnings}};
}

ZetaDiagnostics diagnose_zeta_surface(const ZetaSurface& surface, const Payoff& payoff,
                                      std::vector<double> check_times, double jump_factor) {
    ZetaDiagnostics out;
    auto weight = [&](double m) {
        const double gap = m - surface.at(m).terminal();
        return 1.0 / (gap * gap);
    };
    for (const auto& a : payoff.atoms()) out.integrability += a.weight * weight(a.level);
    if (payoff.has_density()) {
        const auto& levels = surface.levels();
        for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
            const double mass = payoff.density_mass(levels[i], levels[i + 1]);
            if (mass > 0.0) out.integrability += mass * 0.5 * (weight(levels[i]) + weight(levels[i + 1]));
        }
    }
    out.integrable = std::isfinite(out.integrability);
    if (!out.integrable) out.warnings.push_back("integrability sum is not finite");

    out.check_times = check_times.empty() ? surface.breakpoints() : std::move(check_times);
    const auto& levels = surface.levels();
    for (double t : out.check_times) {
        bool ok = true;
        for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
            const double a = surface.boundaries()[i].at(t);
            const double b = surface.boundaries()[i + 1].at(t);
            const double dm = levels[i + 1] - levels[i];
            std::string where = "t = " + detail::format_double(t) + ", m in [" + detail::format_double(levels[i]) +
                                ", " + detail::format_double(levels[i + 1]) + "]";
            if (b - a < -1e-12) {
                ok = false;
                out.warnings.push_back(where + ": boundaries cross (zeta decreases in m)");
            } else if (b - a > jump_factor * dm) {
                ok = false;
                out.warnings.push_back(where + ": boundary jumps in m");
            }
        }
        out.continuity_ok.push_back(ok);
    }
    return out;
}

}  // namespace maxembed
