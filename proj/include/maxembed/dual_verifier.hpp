#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxembed/boundary.hpp"
#include "maxembed/cost_solver.hpp"
#include "maxembed/embedding_sim.hpp"
#include "maxembed/marginals.hpp"
#include "maxembed/payoff.hpp"

namespace maxembed {

/// Right side of the discrete pathwise inequality for 1{max >= m}.
/// values/maxes are the path and its running maximum at t_1..t_n; `start`
/// is the path value (and maximum) at t_0 = 0.
double pathwise_rhs(const std::vector<double>& values, const std::vector<double>& maxes,
                    const std::vector<double>& zeta, double m, double start = 0.0);

enum class PathwiseVariant { raw, integrated };

struct Slack {
    bool holds = true;
    double slack = 0.0;
};

/// slack = rhs - 1{max >= m} with zeta given per label of the path.
Slack verify_pathwise(const PathRecord& path, const std::vector<double>& zeta, double m, PathwiseVariant variant,
                      double tolerance = 1e-12);

/// Cost of the static leg: c(1, z_K)/(m - z_K) plus one call spread per jump of zeta.
double static_cost(const MarginalFamily& family, const Boundary& zeta, double m);

/// Static leg paid along a path observed at labels that refine zeta's breakpoints:
/// at each jump s, (x_s - zeta_s)^+/(m - zeta_s) - (x_s - zeta_{s+})^+/(m - zeta_{s+}),
/// plus (x_1 - zeta_1)^+/(m - zeta_1).
double static_payout(const std::vector<double>& labels, const std::vector<double>& values, const Boundary& zeta,
                     double m);

/// Gains of the trading leg on the discrete path: the crossing leg after the first step
/// at or above m and the per-interval leg, summed step by step.
double dynamic_payout(const PathRecord& path, const Boundary& zeta, double m);
double dynamic_payout(const PathRecord& path, const std::vector<double>& zeta, double m);

struct DualStrategy {
    Payoff payoff;
    ZetaSurface surface;
};

/// d phi-weighted static + dynamic payout (without phi(0)).
double mixture_payout(const PathRecord& path, const DualStrategy& strategy);

struct MartingaleCheck {
    double lhs = 0.0;
    double lhs_error = 0.0;
    double rhs = 0.0;
    double rhs_error = 0.0;
    bool holds = true;

    nlohmann::json to_json() const;
};

/// E[phi(M_1^*)] against phi(0) + the expected static payout along sampled marginals.
MartingaleCheck martingale_ineq_check(const MartingaleSamples& samples, const ZetaSurface& surface,
                                      const Payoff& payoff, double sigmas = 3.0);

/// phi(0) + int psi_{c_M}(zeta^m, m) d phi(m).
double remark_bound(const MarginalFamily& c_m, const ZetaSurface& surface, const Payoff& payoff);

struct GapReport {
    double primal = 0.0;
    double primal_ci = 0.0;
    double dual = 0.0;
    double allowance = 0.01;
    double gap = 0.0;
    double relative_gap = 0.0;
    bool weak_duality_violation = false;
    bool within_budget = true;

    nlohmann::json to_json() const;
};

GapReport gap_report(double primal, double primal_ci, double dual, double allowance = 0.01);

struct CaseFailure {
    std::size_t case_id = 0;
    double slack = 0.0;
};

struct VerificationReport {
    std::string check;
    std::size_t n_cases = 0;
    double min_slack = 0.0;
    double mean_slack = 0.0;
    std::vector<CaseFailure> failures;

    bool pass() const { return failures.empty(); }
    void add(std::size_t case_id, double slack, bool ok);
    nlohmann::json to_json() const;
};

/// Randomized paths (with jumps and exact touches of m), sorted zeta and levels;
/// both variants must hold with slack >= -tolerance.
VerificationReport pathwise_suite(std::size_t n_cases, std::uint64_t seed, double tolerance = 1e-12);

/// static + dynamic payout >= phi(max) - phi(0) - allowance on embedded paths.
VerificationReport superhedge_suite(const MarginalFamily& family, const DualStrategy& strategy,
                                    const std::vector<double>& labels, const SimulationConfig& config,
                                    double allowance = 0.02);

}  // namespace maxembed
