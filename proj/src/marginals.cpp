#include "maxembed/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "normal.hpp"

namespace maxembed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_time(double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::domain_error("time " + std::to_string(t) + " outside [0, 1]");
    }
}

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

// Uniform law on [-1, 1].
namespace uniform {
double call(double u) {
    if (u <= -1.0) return -u;
    if (u >= 1.0) return 0.0;
    return 0.25 * (1.0 - u) * (1.0 - u);
}
double cdf(double u) { return std::clamp(0.5 * (u + 1.0), 0.0, 1.0); }
double barycenter(double u) {
    if (u <= -1.0) return 0.0;
    if (u >= 1.0) return u;
    return 0.5 * (u + 1.0);
}
double dt_integrand(double u) { return std::abs(u) < 1.0 ? 0.125 * (1.0 - u * u) : 0.0; }
}  // namespace uniform

}  // namespace

MarginalFamily MarginalFamily::gaussian(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("gaussian family needs sigma > 0");
    }
    return MarginalFamily(Gaussian{sigma});
}

MarginalFamily MarginalFamily::scaled(BaseLaw law) { return MarginalFamily(Scaled{law}); }

MarginalFamily MarginalFamily::tabulated(CallSurface surface) {
    return MarginalFamily(Tabulated{std::make_shared<const CallSurface>(std::move(surface))});
}

FamilyKind MarginalFamily::kind() const {
    return std::visit(Overloaded{[](const Gaussian&) { return FamilyKind::gaussian; },
                                 [](const Scaled&) { return FamilyKind::scaled; },
                                 [](const Tabulated&) { return FamilyKind::tabulated; }},
                      impl_);
}

const CallSurface* MarginalFamily::surface() const {
    if (auto* tab = std::get_if<Tabulated>(&impl_)) return tab->surface.get();
    return nullptr;
}

std::string MarginalFamily::describe() const {
    return std::visit(
        Overloaded{[](const Gaussian& g) {
                       std::ostringstream os;
                       os << "gaussian(sigma=" << g.sigma << ")";
                       return os.str();
                   },
                   [](const Scaled&) { return std::string("scaled-uniform"); },
                   [](const Tabulated& tab) {
                       std::ostringstream os;
                       os << "tabulated(" << tab.surface->t_grid().size() << "x"
                          << tab.surface->x_grid().size() << ")";
                       return os.str();
                   }},
        impl_);
}

double MarginalFamily::call_price(double t, double x) const { return call_quote(t, x).value; }

CallQuote MarginalFamily::call_quote(double t, double x) const {
    check_time(t);
    return std::visit(
        Overloaded{[&](const Gaussian& g) {
                       if (t == 0.0) return CallQuote{positive_part(-x), false};
                       const double s = g.sigma * std::sqrt(t);
                       const double u = x / s;
                       return CallQuote{std::max(s * normal::pdf(u) - x * normal::tail(u), positive_part(-x)),
                                        false};
                   },
                   [&](const Scaled&) {
                       if (t == 0.0) return CallQuote{positive_part(-x), false};
                       const double a = std::sqrt(t);
                       return CallQuote{a * uniform::call(x / a), false};
                   },
                   [&](const Tabulated& tab) {
                       CallQuote q;
                       q.value = tab.surface->call(t, x, &q.extrapolated);
                       return q;
                   }},
        impl_);
}

double MarginalFamily::dt_call(double t, double x) const {
    check_time(t);
    return std::visit(Overloaded{[&](const Gaussian& g) {
                                     if (t == 0.0) return x == 0.0 ? kInf : 0.0;
                                     const double u = x / (g.sigma * std::sqrt(t));
                                     return g.sigma * normal::pdf(u) / (2.0 * std::sqrt(t));
                                 },
                                 [&](const Scaled&) {
                                     if (t == 0.0) return x == 0.0 ? kInf : 0.0;
                                     const double a = std::sqrt(t);
                                     return uniform::dt_integrand(x / a) / a;
                                 },
                                 [&](const Tabulated& tab) { return tab.surface->dt_call(t, x); }},
                      impl_);
}

double MarginalFamily::cdf(double t, double x) const {
    check_time(t);
    return std::visit(Overloaded{[&](const Gaussian& g) {
                                     if (t == 0.0) return x >= 0.0 ? 1.0 : 0.0;
                                     return normal::cdf(x / (g.sigma * std::sqrt(t)));
                                 },
                                 [&](const Scaled&) {
                                     if (t == 0.0) return x >= 0.0 ? 1.0 : 0.0;
                                     return uniform::cdf(x / std::sqrt(t));
                                 },
                                 [&](const Tabulated& tab) {
                                     return std::clamp(1.0 + tab.surface->right_slope(t, x), 0.0, 1.0);
                                 }},
                      impl_);
}

double MarginalFamily::cdf_left(double t, double x) const {
    check_time(t);
    if (auto* tab = std::get_if<Tabulated>(&impl_)) {
        return std::clamp(1.0 + tab->surface->left_slope(t, x), 0.0, 1.0);
    }
    if (t == 0.0) return x > 0.0 ? 1.0 : 0.0;
    return cdf(t, x);
}

double MarginalFamily::quantile(double t, double p) const {
    check_time(t);
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("quantile level must lie in (0, 1)");
    }
    if (t == 0.0) return 0.0;
    return std::visit(Overloaded{[&](const Gaussian& g) { return g.sigma * std::sqrt(t) * normal::quantile(p); },
                                 [&](const Scaled&) { return std::sqrt(t) * (2.0 * p - 1.0); },
                                 [&](const Tabulated& tab) {
                                     // The interpolated law is atomic on the knots of c(t, .).
                                     std::vector<double> candidates = tab.surface->x_grid();
                                     candidates.push_back(tab.surface->lower_endpoint(t));
                                     candidates.push_back(tab.surface->upper_endpoint(t));
                                     std::sort(candidates.begin(), candidates.end());
                                     for (double x : candidates) {
                                         if (cdf(t, x) >= p) return x;
                                     }
                                     return candidates.back();
                                 }},
                      impl_);
}

double MarginalFamily::barycenter(double t, double x) const {
    check_time(t);
    if (t == 0.0) return x > 0.0 ? x : 0.0;
    return std::visit(Overloaded{[&](const Gaussian& g) {
                                     const double s = g.sigma * std::sqrt(t);
                                     return std::max(s * normal::hazard(x / s), x);
                                 },
                                 [&](const Scaled&) {
                                     const double a = std::sqrt(t);
                                     return a * uniform::barycenter(x / a);
                                 },
                                 [&](const Tabulated& tab) {
                                     const double mass_above = -tab.surface->left_slope(t, x);
                                     if (mass_above <= 0.0) return x;
                                     return x + tab.surface->call(t, x) / mass_above;
                                 }},
                      impl_);
}

double MarginalFamily::barycenter_inverse(double t, double m) const {
    check_time(t);
    if (!(m > 0.0)) {
        throw std::domain_error("barycenter of a centered law is positive; got level " + std::to_string(m));
    }
    if (m >= upper_endpoint(t)) return m;

    const auto gap = [&](double x) { return barycenter(t, x) - m; };
    double hi = m;
    if (gap(hi) <= 0.0) return hi;
    double step = std::max(unit_scale() * std::sqrt(std::max(t, 1e-12)), 1e-8);
    double lo = std::min(m, 0.0) - step;
    while (gap(lo) >= 0.0) {
        hi = lo;
        step *= 2.0;
        lo -= step;
        if (lo < -1e12) return -kInf;
    }
    std::uintmax_t max_iter = 200;
    const auto [a, b] =
        boost::math::tools::toms748_solve(gap, lo, hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
    // Discontinuous barycenters (tabulated laws) have no exact root; take the right end.
    return std::abs(gap(a)) <= std::abs(gap(b)) ? a : b;
}

double MarginalFamily::upper_endpoint(double t) const {
    check_time(t);
    if (t == 0.0) return 0.0;
    return std::visit(Overloaded{[](const Gaussian&) { return kInf; },
                                 [&](const Scaled&) { return std::sqrt(t); },
                                 [&](const Tabulated& tab) { return tab.surface->upper_endpoint(t); }},
                      impl_);
}

double MarginalFamily::lower_endpoint(double t) const {
    check_time(t);
    if (t == 0.0) return 0.0;
    return std::visit(Overloaded{[](const Gaussian&) { return -kInf; },
                                 [&](const Scaled&) { return -std::sqrt(t); },
                                 [&](const Tabulated& tab) { return tab.surface->lower_endpoint(t); }},
                      impl_);
}

double MarginalFamily::unit_scale() const {
    return std::visit(Overloaded{[](const Gaussian& g) { return g.sigma; },
                                 [](const Scaled&) { return 1.0 / std::sqrt(3.0); },
                                 [](const Tabulated& tab) {
                                     // Variance from the call function: E[X^2] = 2 * int c(1, x) - (-x)^+ dx.
                                     const auto& xs = tab.surface->x_grid();
                                     const std::size_t last = tab.surface->t_grid().size() - 1;
                                     double var = 0.0;
                                     for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
                                         const double a = tab.surface->node(last, i) - positive_part(-xs[i]);
                                         const double b = tab.surface->node(last, i + 1) - positive_part(-xs[i + 1]);
                                         var += (a + b) * (xs[i + 1] - xs[i]);
                                     }
                                     return var > 0.0 ? std::sqrt(var) : 1.0;
                                 }},
                      impl_);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    out.back() = hi;
    return out;
}

CallSurface tabulate(const MarginalFamily& family, const std::vector<double>& t_grid,
                     const std::vector<double>& x_grid) {
    std::vector<double> values;
    values.reserve(t_grid.size() * x_grid.size());
    for (double t : t_grid) {
        for (double x : x_grid) values.push_back(family.call_price(t, x));
    }
    return CallSurface(t_grid, x_grid, std::move(values));
}

}  // namespace maxembed
