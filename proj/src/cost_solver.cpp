#include "maxembed/cost_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "format.hpp"
#include "parallel.hpp"

namespace maxembed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// numerator / (m - z) with 0/0 = 0 and c/0 = +inf.
double ratio(double numerator, double m, double z) {
    if (z < m) return numerator / (m - z);
    return numerator == 0.0 ? 0.0 : kInf;
}

double integrate_dt_call(const MarginalFamily& family, double z, double a, double b) {
    using boost::math::quadrature::gauss_kronrod;
    if (const CallSurface* s = family.surface()) {
        // Piecewise constant in t between nodes: integrate piece by piece.
        std::vector<double> cuts{a};
        for (double t : s->t_grid()) {
            if (t > a && t < b) cuts.push_back(t);
        }
        cuts.push_back(b);
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            total += family.dt_call(0.5 * (cuts[i] + cuts[i + 1]), z) * (cuts[i + 1] - cuts[i]);
        }
        return total;
    }
    // u = v^2 removes the 1/sqrt(t) behaviour at t = 0.
    auto f = [&](double v) { return family.dt_call(v * v, z) * 2.0 * v; };
    return gauss_kronrod<double, 61>::integrate(f, std::sqrt(a), std::sqrt(b), 15, 1e-13);
}

struct Pass {
    // best[i][j] = min_{j' >= j} w_i(j'), arg[i][j] the smallest minimizing j'.
    std::vector<std::vector<double>> best;
    std::vector<std::vector<std::size_t>> arg;
};

void suffix_min(const std::vector<double>& w, std::vector<double>& best, std::vector<std::size_t>& arg) {
    const std::size_t n = w.size();
    best.assign(n, 0.0);
    arg.assign(n, 0);
    best[n - 1] = w[n - 1];
    arg[n - 1] = n - 1;
    for (std::size_t j = n - 1; j-- > 0;) {
        if (w[j] <= best[j + 1]) {
            best[j] = w[j];
            arg[j] = j;
        } else {
            best[j] = best[j + 1];
            arg[j] = arg[j + 1];
        }
    }
}

void check_inputs(const std::vector<double>& partition, double m, const std::vector<double>& x_grid) {
    if (x_grid.empty()) throw std::invalid_argument("x-grid is empty");
    if (partition.size() < 2 || partition.front() != 0.0 || partition.back() != 1.0) {
        throw std::invalid_argument("partition must run from 0 to 1");
    }
    for (std::size_t k = 0; k + 1 < partition.size(); ++k) {
        if (!(partition[k] < partition[k + 1])) throw std::invalid_argument("partition must be strictly increasing");
    }
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
        if (!(x_grid[j] < m)) throw std::invalid_argument("x-grid must lie strictly below m");
        if (j > 0 && !(x_grid[j - 1] < x_grid[j])) throw std::invalid_argument("x-grid must be strictly increasing");
    }
}

// Rows of c(t_k, x_j) for every partition node.
std::vector<std::vector<double>> call_rows(const MarginalFamily& family, const std::vector<double>& partition,
                                           const std::vector<double>& x_grid) {
    std::vector<std::vector<double>> rows(partition.size(), std::vector<double>(x_grid.size()));
    for (std::size_t k = 0; k < partition.size(); ++k) {
        for (std::size_t j = 0; j < x_grid.size(); ++j) rows[k][j] = family.call_price(partition[k], x_grid[j]);
    }
    return rows;
}

}  // namespace

double psi(const MarginalFamily& family, const Boundary& zeta, double m, PsiMethod method) {
    const auto& bp = zeta.breakpoints();
    const auto& z = zeta.values();
    double total = ratio(family.call_price(0.0, z.front()), m, z.front());
    for (std::size_t k = 0; k < z.size(); ++k) {
        double numerator;
        if (method == PsiMethod::telescoped) {
            numerator = family.call_price(bp[k + 1], z[k]) - family.call_price(bp[k], z[k]);
        } else {
            numerator = integrate_dt_call(family, z[k], bp[k], bp[k + 1]);
        }
        total += ratio(numerator, m, z[k]);
    }
    return total;
}

std::vector<double> uniform_partition(std::size_t n) {
    if (n == 0) throw std::invalid_argument("partition needs at least one step");
    std::vector<double> out(n + 1);
    for (std::size_t k = 0; k <= n; ++k) out[k] = static_cast<double>(k) / static_cast<double>(n);
    return out;
}

void SolverGrid::validate() const {
    if (n0 == 0 || n_cap < n0) throw std::invalid_argument("solver ladder needs 0 < n0 <= n_cap");
    if (x_points < 2) throw std::invalid_argument("solver x-grid needs at least 2 points");
    if (!(lower_quantile > 0.0 && lower_quantile < 0.5)) throw std::invalid_argument("lower quantile must lie in (0, 0.5)");
    if (!(delta_quantile > 0.0 && delta_quantile < 0.5)) throw std::invalid_argument("delta quantile must lie in (0, 0.5)");
    if (!(delta_factor > 0.0 && delta_factor < 1.0)) throw std::invalid_argument("delta factor must lie in (0, 1)");
    if (!(tolerance > 0.0)) throw std::invalid_argument("ladder tolerance must be positive");
}

std::vector<std::size_t> SolverGrid::ladder() const {
    validate();
    std::vector<std::size_t> out;
    for (std::size_t n = n0; n <= n_cap; n *= 2) out.push_back(n);
    return out;
}

std::vector<double> SolverGrid::x_grid(const MarginalFamily& family, double m) const {
    validate();
    const double q_lo = family.quantile(1.0, lower_quantile);
    const double q_delta = family.quantile(1.0, delta_quantile);
    const double upper = m - delta_factor * std::max(m - q_delta, 0.0);
    if (!(upper < m)) throw std::invalid_argument("level too close to the lower quantile for an x-grid");

    std::vector<double> xs;
    if (const CallSurface* s = family.surface()) {
        for (double x : s->x_grid()) {
            if (x >= q_lo && x < upper) xs.push_back(x);
        }
    } else if (upper > q_lo) {
        const double p_hi = std::min(family.cdf(1.0, upper), 1.0 - 1e-12);
        const std::size_t k = x_points - 1;
        for (std::size_t i = 0; i < k; ++i) {
            const double p = lower_quantile + (p_hi - lower_quantile) * static_cast<double>(i) / static_cast<double>(k - 1);
            xs.push_back(family.quantile(1.0, p));
        }
    }
    xs.push_back(upper);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    xs.erase(std::remove_if(xs.begin(), xs.end(), [&](double x) { return !(x < m) || x > upper; }), xs.end());
    return xs;
}

DiscreteSolution solve_cn(const MarginalFamily& family, const std::vector<double>& partition, double m,
                          const std::vector<double>& x_grid) {
    check_inputs(partition, m, x_grid);
    const std::size_t n = partition.size() - 1;
    const std::size_t nx = x_grid.size();
    const auto rows = call_rows(family, partition, x_grid);

    // Layer i covers (t_i, t_{i+1}]; the first layer also carries c(0, .).
    auto term = [&](std::size_t i, std::size_t j) {
        const double numerator = i == 0 ? rows[1][j] : rows[i + 1][j] - rows[i][j];
        return numerator / (m - x_grid[j]);
    };

    Pass pass;
    pass.best.resize(n);
    pass.arg.resize(n);
    std::vector<double> w(nx);
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = 0; j < nx; ++j) w[j] = i + 1 < n ? term(i, j) + pass.best[i + 1][j] : term(i, j);
        suffix_min(w, pass.best[i], pass.arg[i]);
    }

    std::vector<double> values(n);
    std::size_t j = pass.arg[0][0];
    values[0] = x_grid[j];
    for (std::size_t i = 1; i < n; ++i) {
        j = pass.arg[i][j];
        values[i] = x_grid[j];
    }
    return DiscreteSolution{pass.best[0][0], Boundary(partition, std::move(values))};
}

ValueTable dp_value_function(const MarginalFamily& family, double m, const std::vector<double>& partition,
                             const std::vector<double>& x_grid) {
    check_inputs(partition, m, x_grid);
    const std::size_t n = partition.size() - 1;
    const std::size_t nx = x_grid.size();
    const auto rows = call_rows(family, partition, x_grid);

    ValueTable table{partition, x_grid, std::vector<std::vector<double>>(n + 1, std::vector<double>(nx, 0.0))};
    std::vector<double> w(nx);
    std::vector<std::size_t> arg;
    for (std::size_t k = n; k-- > 0;) {
        for (std::size_t j = 0; j < nx; ++j) {
            w[j] = table.v[k + 1][j] + (rows[k + 1][j] - rows[k][j]) / (m - x_grid[j]);
        }
        suffix_min(w, table.v[k], arg);
    }
    return table;
}

CostResult solve_c(const MarginalFamily& family, double m, const SolverGrid& grid) {
    CostResult out;
    out.m = m;
    if (!(m > 0.0)) {
        // The maximum starts at 0, so it always reaches m.
        out.value = 1.0;
        return out;
    }
    const auto xs = grid.x_grid(family, m);
    const auto ladder = grid.ladder();
    out.converged = false;
    std::optional<DiscreteSolution> last;
    for (std::size_t n : ladder) {
        auto sol = solve_cn(family, uniform_partition(n), m, xs);
        const bool settled = last && std::abs(sol.value - last->value) < grid.tolerance;
        out.ladder.push_back({n, sol.value});
        last = std::move(sol);
        if (settled) {
            out.converged = true;
            break;
        }
    }
    out.value = last->value;
    out.minimizer = last->boundary.compressed();
    return out;
}

double hardy_littlewood_c1(const MarginalFamily& family, double m) {
    if (!(m > 0.0)) return 1.0;
    if (m >= family.upper_endpoint(1.0)) return 0.0;
    const double z = family.barycenter_inverse(1.0, m);
    if (std::isinf(z)) return 1.0;
    return 1.0 - family.cdf_left(1.0, z);
}

CostCurve::CostCurve(std::vector<CostResult> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const CostResult& a, const CostResult& b) { return a.m < b.m; });
}

const CostResult& CostCurve::at(double m) const {
    for (const auto& e : entries_) {
        if (std::abs(e.m - m) <= 1e-12 * std::max(1.0, std::abs(m))) return e;
    }
    throw std::out_of_range("cost curve has no entry at m = " + detail::format_double(m));
}

bool CostCurve::all_converged() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const CostResult& e) { return e.converged; });
}

std::string CostCurve::csv() const {
    std::string out = "m,C,converged\n";
    for (const auto& e : entries_) {
        out += detail::format_double(e.m) + "," + detail::format_double(e.value) + "," + (e.converged ? "1" : "0") + "\n";
    }
    return out;
}

nlohmann::json CostCurve::minimizers_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : entries_) {
        nlohmann::json row{{"m", e.m}};
        if (e.minimizer) {
            row["breakpoints"] = e.minimizer->breakpoints();
            row["values"] = e.minimizer->values();
        } else {
            row["breakpoints"] = nlohmann::json::array();
            row["values"] = nlohmann::json::array();
        }
        out.push_back(row);
    }
    return out;
}

CostCurve solve_curve(const MarginalFamily& family, const std::vector<double>& m_grid, const SolverGrid& grid,
                      unsigned threads) {
    grid.validate();
    std::vector<CostResult> results(m_grid.size());
    detail::parallel_for(m_grid.size(), threads, [&](std::size_t i) { results[i] = solve_c(family, m_grid[i], grid); });
    return CostCurve(std::move(results));
}

namespace {

std::vector<double> sorted_levels(const Payoff& payoff, std::vector<double> m_grid) {
    std::sort(m_grid.begin(), m_grid.end());
    m_grid.erase(std::unique(m_grid.begin(), m_grid.end()), m_grid.end());
    if (payoff.trivial_measure()) return m_grid;
    if (m_grid.empty()) throw std::invalid_argument("m-grid is empty but the payoff has a non-trivial measure");
    const double lo = m_grid.front();
    const double hi = m_grid.back();
    for (const auto& a : payoff.atoms()) {
        if (a.level < lo || a.level > hi) {
            throw std::invalid_argument("payoff atom at " + detail::format_double(a.level) + " lies outside the m-grid");
        }
    }
    if (payoff.has_density() && payoff.total_mass() > 0.0) {
        const double mass_inside = payoff.density_mass(lo, hi);
        const double mass_all = payoff.density_mass(payoff.density_grid().front(), payoff.density_grid().back());
        if (mass_all - mass_inside > 1e-12 * std::max(1.0, mass_all)) {
            throw std::invalid_argument("payoff density extends beyond the m-grid");
        }
    }
    std::vector<double> levels = m_grid;
    for (const auto& a : payoff.atoms()) levels.push_back(a.level);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    return levels;
}

}  // namespace

double bound_from_curve(const CostCurve& curve, const Payoff& payoff, const std::vector<double>& m_grid) {
    double value = payoff.base();
    for (const auto& a : payoff.atoms()) value += a.weight * curve.at(a.level).value;
    if (payoff.has_density()) {
        std::vector<double> grid = m_grid;
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const double mass = payoff.density_mass(grid[i], grid[i + 1]);
            if (mass > 0.0) value += mass * 0.5 * (curve.at(grid[i]).value + curve.at(grid[i + 1]).value);
        }
    }
    return value;
}

BoundResult price_bound(const MarginalFamily& family, const Payoff& payoff, const std::vector<double>& m_grid,
                        const SolverGrid& grid, unsigned threads) {
    const auto levels = sorted_levels(payoff, m_grid);
    BoundResult out;
    out.curve = solve_curve(family, levels, grid, threads);
    out.value = payoff.trivial_measure() ? payoff.base() : bound_from_curve(out.curve, payoff, m_grid);
    return out;
}

ZetaBuild build_zeta_surface(const MarginalFamily& family, const Payoff& payoff, const std::vector<double>& m_grid,
                             const SolverGrid& grid, unsigned threads) {
    const auto levels = sorted_levels(payoff, m_grid);
    CostCurve curve = solve_curve(family, levels, grid, threads);
    ZetaSurface surface(curve);
    ZetaDiagnostics diagnostics = diagnose_zeta_surface(surface, payoff);
    return ZetaBuild{std::move(surface), std::move(curve), std::move(diagnostics)};
}

}  // namespace maxembed
