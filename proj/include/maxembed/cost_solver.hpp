#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxembed/boundary.hpp"
#include "maxembed/marginals.hpp"
#include "maxembed/payoff.hpp"

namespace maxembed {

enum class PsiMethod { telescoped, quadrature };

/// Cost of the boundary zeta at level m:
/// c(0, z_1)/(m - z_1) + int_0^1 dt c(s, zeta_s)/(m - zeta_s) ds.
/// Steps at or above m contribute 0 when their numerator vanishes, +inf otherwise.
double psi(const MarginalFamily& family, const Boundary& zeta, double m,
           PsiMethod method = PsiMethod::telescoped);

std::vector<double> uniform_partition(std::size_t n);

struct SolverGrid {
    std::size_t n0 = 16;
    std::size_t n_cap = 256;
    std::size_t x_points = 400;
    double lower_quantile = 1e-3;
    double delta_quantile = 1e-2;
    double delta_factor = 1e-3;
    double tolerance = 1e-4;

    /// n0, 2 n0, ... up to n_cap.
    std::vector<std::size_t> ladder() const;
    /// Quantile-spaced states under mu_1 on [q(lower), m - delta], strictly below m.
    std::vector<double> x_grid(const MarginalFamily& family, double m) const;
    void validate() const;
};

struct DiscreteSolution {
    double value = 0.0;
    Boundary boundary = Boundary::constant(0.0);
};

/// Exact optimum of the n-step problem over non-decreasing sequences in x_grid.
DiscreteSolution solve_cn(const MarginalFamily& family, const std::vector<double>& partition, double m,
                          const std::vector<double>& x_grid);

/// v[k][i] = value-to-go at layer t_k from state x_grid[i]; v[n] = 0.
struct ValueTable {
    std::vector<double> times;
    std::vector<double> x_grid;
    std::vector<std::vector<double>> v;
};

ValueTable dp_value_function(const MarginalFamily& family, double m, const std::vector<double>& partition,
                             const std::vector<double>& x_grid);

struct LadderEntry {
    std::size_t n = 0;
    double value = 0.0;
};

struct CostResult {
    double m = 0.0;
    double value = 0.0;
    std::optional<Boundary> minimizer;
    std::vector<LadderEntry> ladder;
    bool converged = true;
};

CostResult solve_c(const MarginalFamily& family, double m, const SolverGrid& grid = {});

/// Single-marginal value mu_1([z, inf)) with b_1(z) = m.
double hardy_littlewood_c1(const MarginalFamily& family, double m);

class CostCurve {
public:
    CostCurve() = default;
    explicit CostCurve(std::vector<CostResult> entries);

    const std::vector<CostResult>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    /// Entry at exactly level m; throws when absent.
    const CostResult& at(double m) const;
    bool all_converged() const;

    std::string csv() const;
    nlohmann::json minimizers_json() const;

private:
    std::vector<CostResult> entries_;
};

CostCurve solve_curve(const MarginalFamily& family, const std::vector<double>& m_grid, const SolverGrid& grid = {},
                      unsigned threads = 1);

struct BoundResult {
    double value = 0.0;
    CostCurve curve;
};

/// phi(0) + sum_j w_j C(m_j) + trapezoid of C g over m_grid.
BoundResult price_bound(const MarginalFamily& family, const Payoff& payoff, const std::vector<double>& m_grid,
                        const SolverGrid& grid = {}, unsigned threads = 1);
/// Same, reusing a solved curve (must contain every atom and every m_grid node).
double bound_from_curve(const CostCurve& curve, const Payoff& payoff, const std::vector<double>& m_grid);

struct ZetaDiagnostics {
    double integrability = 0.0;
    bool integrable = true;
    std::vector<double> check_times;
    std::vector<bool> continuity_ok;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

/// m -> zeta^m for a sorted set of levels.
class ZetaSurface {
public:
    ZetaSurface(std::vector<double> levels, std::vector<Boundary> boundaries);
    explicit ZetaSurface(const CostCurve& curve);

    const std::vector<double>& levels() const { return levels_; }
    const std::vector<Boundary>& boundaries() const { return boundaries_; }
    std::size_t size() const { return levels_.size(); }
    const Boundary& at(double m) const;
    /// Union of all breakpoints.
    std::vector<double> breakpoints() const;

private:
    std::vector<double> levels_;
    std::vector<Boundary> boundaries_;
};

/// Integrability of d phi(m)/(m - zeta_1^m)^2 and per-t monotonicity/jump flags in m.
ZetaDiagnostics diagnose_zeta_surface(const ZetaSurface& surface, const Payoff& payoff,
                                      std::vector<double> check_times = {}, double jump_factor = 50.0);

struct ZetaBuild {
    ZetaSurface surface;
    CostCurve curve;
    ZetaDiagnostics diagnostics;
};

ZetaBuild build_zeta_surface(const MarginalFamily& family, const Payoff& payoff, const std::vector<double>& m_grid,
                             const SolverGrid& grid = {}, unsigned threads = 1);

}  // namespace maxembed
