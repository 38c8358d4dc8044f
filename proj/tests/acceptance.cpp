#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "maxembed/cli/commands.hpp"
#include "maxembed/cost_solver.hpp"
#include "maxembed/dual_verifier.hpp"
#include "maxembed/embedding_sim.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace maxembed;

namespace {

const MarginalFamily kGauss = MarginalFamily::gaussian(1.0);
const MarginalFamily kUniform = MarginalFamily::scaled(BaseLaw::uniform);
constexpr double kHalfLevel = 0.797885;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void hardy_littlewood_agreement() {
    bool ok = true;
    std::string detail;
    for (double m : {0.5, kHalfLevel, 1.2, 2.0}) {
        const auto start = Clock::now();
        const CostResult r = solve_c(kGauss, m);
        const double secs = seconds_since(start);
        const double want = oracle::hardy_littlewood(m).second;
        const double err = std::abs(r.value - want);
        ok = ok && err <= 2e-3 && secs < 30.0;
        detail += fmt("m=%.6g C=%.6f oracle=%.6f err=%.2e %.2fs; ", m, r.value, want, err, secs);
    }
    report(1, ok, detail);
}

void ladder_monotone() {
    bool ok = true;
    int checked = 0;
    double worst = -std::numeric_limits<double>::infinity();
    SolverGrid grid;
    grid.n0 = 16;
    grid.n_cap = 256;
    for (const MarginalFamily* f : {&kGauss, &kUniform}) {
        const std::vector<double> levels = f == &kGauss ? std::vector<double>{0.5, kHalfLevel, 1.2, 2.0}
                                                        : std::vector<double>{0.3, 0.5, 0.7, 0.9};
        for (double m : levels) {
            const auto xs = grid.x_grid(*f, m);
            double prev = std::numeric_limits<double>::infinity();
            for (std::size_t n : grid.ladder()) {
                const double v = solve_cn(*f, uniform_partition(n), m, xs).value;
                if (std::isfinite(prev)) {
                    worst = std::max(worst, v - prev);
                    ok = ok && v <= prev + 1e-12;
                    ++checked;
                }
                prev = v;
            }
        }
    }
    report(2, ok, fmt("%d doublings over 2 families x 4 levels x 5 rungs, max increase %.3e", checked, worst));
}

std::vector<double> random_partition(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.02, 0.98);
    std::vector<double> cuts{0.0, 1.0};
    while (cuts.size() < n + 1) {
        const double c = u(rng);
        if (std::none_of(cuts.begin(), cuts.end(), [&](double x) { return std::abs(x - c) < 1e-3; })) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

// Every non-decreasing index sequence, each objective summed right to left.
double enumerate(const MarginalFamily& f, const std::vector<double>& part, double m, const std::vector<double>& xs) {
    const std::size_t n = part.size() - 1;
    auto term = [&](std::size_t l, double x) {
        const double num = l == 0 ? f.call_price(part[1], x) : f.call_price(part[l + 1], x) - f.call_price(part[l], x);
        return num / (m - x);
    };
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(n, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t lo) {
        if (pos == n) {
            double acc = 0.0;
            for (std::size_t q = n; q-- > 0;) acc = q + 1 == n ? term(q, xs[idx[q]]) : term(q, xs[idx[q]]) + acc;
            best = std::min(best, acc);
            return;
        }
        for (std::size_t j = lo; j < xs.size(); ++j) {
            idx[pos] = j;
            rec(pos + 1, j);
        }
    };
    rec(0, 0);
    return best;
}

void brute_force_dp() {
    std::mt19937_64 rng(20240601);
    int exact = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const bool gauss = trial % 2 == 0;
        const MarginalFamily& f = gauss ? kGauss : kUniform;
        std::uniform_real_distribution<double> level(gauss ? 0.4 : 0.3, gauss ? 1.6 : 0.9);
        const double m = level(rng);
        const std::size_t n = 1 + trial % 4;
        const std::size_t k = 2 + trial % 7;
        std::uniform_real_distribution<double> state(gauss ? -2.0 : -1.2, m - 1e-3);
        std::vector<double> xs;
        while (xs.size() < k) {
            const double x = state(rng);
            if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
        }
        std::sort(xs.begin(), xs.end());
        const auto part = random_partition(rng, n);
        if (solve_cn(f, part, m, xs).value == enumerate(f, part, m, xs)) ++exact;
    }
    report(3, exact == 20, fmt("%d/20 instances equal to exhaustive enumeration", exact));
}

void pathwise() {
    const auto start = Clock::now();
    const VerificationReport r = pathwise_suite(10000, 20240601, 1e-12);
    const double secs = seconds_since(start);
    report(4, r.pass() && secs < 10.0,
           fmt("%zu cases, min slack %.3e, %zu failures, %.2fs", r.n_cases, r.min_slack, r.failures.size(), secs));
}

SimulationConfig sim_config(std::size_t n_paths, std::uint64_t seed, double shift = 0.0) {
    SimulationConfig c;
    c.n_paths = n_paths;
    c.dt = 1e-4;
    c.seed = seed;
    c.threads = threads();
    c.boundary_shift = shift;
    return c;
}

void duality_and_marginals() {
    const std::vector<double> labels{0.25, 0.5, 1.0};
    const Payoff digital = Payoff::digital(kHalfLevel);
    const double bound = price_bound(kGauss, digital, {kHalfLevel}).value;

    auto start = Clock::now();
    const EmbeddingResult run = simulate_embedding(kGauss, labels, sim_config(100000, 20240601));
    const double secs = seconds_since(start);
    const PrimalEstimate primal = estimate_primal(run, digital);
    const double gap = std::abs(primal.mean - bound);
    const double budget = primal.ci99 + 0.01;

    start = Clock::now();
    const EmbeddingResult shifted = simulate_embedding(kGauss, labels, sim_config(100000, 20240602, 0.2));
    const double shifted_secs = seconds_since(start);
    const PrimalEstimate control = estimate_primal(shifted, digital);
    const double control_gap = std::abs(control.mean - bound);
    const double control_budget = control.ci99 + 0.01;

    report(5, gap <= budget && control_gap > control_budget && !primal.flagged,
           fmt("bound %.5f, primal %.5f (gap %.4f <= budget %.4f, %zu truncated, %.1fs); "
               "shifted boundary primal %.5f (gap %.4f > budget %.4f, %.1fs)",
               bound, primal.mean, gap, budget, run.truncated, secs, control.mean, control_gap, control_budget,
               shifted_secs));

    bool ok = true;
    std::string detail;
    for (double t : labels) {
        const double ks = marginal_ks(run, kGauss, t);
        ok = ok && ks < 0.02;
        detail += fmt("t=%.2f KS=%.4f; ", t, ks);
    }
    report(6, ok, detail + fmt("%zu paths", run.n_paths));
}

void superhedge() {
    const CostResult r = solve_c(kGauss, kHalfLevel);
    const DualStrategy strategy{Payoff::digital(kHalfLevel), ZetaSurface({kHalfLevel}, {*r.minimizer})};
    std::vector<double> labels = r.minimizer->breakpoints();
    labels.erase(labels.begin());
    const auto start = Clock::now();
    const VerificationReport rep = superhedge_suite(kGauss, strategy, labels, sim_config(10000, 20240603), 0.02);
    const double secs = seconds_since(start);
    report(7, rep.pass() && rep.mean_slack < 0.05,
           fmt("%zu paths over %zu labels, min slack %.4f, mean slack %.4f, %zu below allowance, %.1fs", rep.n_cases,
               labels.size(), rep.min_slack, rep.mean_slack, rep.failures.size(), secs));
}

void static_cost_cross_check() {
    std::mt19937_64 rng(20240604);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 1 + trial % 8;
        std::vector<double> cuts{0.0, 1.0};
        while (cuts.size() < k + 1) cuts.push_back(0.01 + 0.98 * u(rng));
        std::sort(cuts.begin(), cuts.end());
        const double m = 0.3 + 2.0 * u(rng);
        std::vector<double> z(k);
        for (auto& v : z) v = m - 2.0 + 1.95 * u(rng);
        std::sort(z.begin(), z.end());
        const Boundary b(cuts, z);
        worst = std::max(worst, std::abs(static_cost(kGauss, b, m) - psi(kGauss, b, m, PsiMethod::quadrature)));
    }

    const std::vector<double> times{0.25, 0.5, 0.75, 1.0};
    const MartingaleSamples s = sample_brownian_martingale(times, 100000, 1.0, 20240605, threads());
    int within = 0;
    double worst_z = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const double m = 0.5 + u(rng);
        std::vector<double> z(4);
        for (auto& v : z) v = m - 2.0 + 1.95 * u(rng);
        std::sort(z.begin(), z.end());
        const Boundary b({0.0, 0.25, 0.5, 0.75, 1.0}, z);
        double sum = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < s.n; ++i) {
            const double p =
                static_payout(times, {s.value(i, 0), s.value(i, 1), s.value(i, 2), s.value(i, 3)}, b, m);
            sum += p;
            sq += p * p;
        }
        const double mean = sum / s.n;
        const double se = std::sqrt((sq / s.n - mean * mean) / (s.n - 1));
        const double zscore = std::abs(mean - static_cost(kGauss, b, m)) / se;
        worst_z = std::max(worst_z, zscore);
        if (zscore <= 3.0) ++within;
    }
    report(8, worst <= 1e-6 && within == 10,
           fmt("max |telescoped - quadrature| %.2e over 100 boundaries; MC payout mean within 3 se on %d/10 "
               "boundaries (max %.2f se)",
               worst, within, worst_z));
}

void martingale_inequality() {
    const CostResult r = solve_c(kGauss, kHalfLevel);
    const ZetaSurface surface({kHalfLevel}, {*r.minimizer});
    std::vector<double> times = r.minimizer->breakpoints();
    times.erase(times.begin());
    const MartingaleSamples s = sample_brownian_martingale(times, 100000, 1.0, 20240606, threads());
    const MartingaleCheck c = martingale_ineq_check(s, surface, Payoff::digital(kHalfLevel));
    const double lhs_want = oracle::reflection(kHalfLevel);
    const double rhs_want = oracle::hardy_littlewood(kHalfLevel).second;
    const bool lhs_ok = std::abs(c.lhs - lhs_want) <= 3.0 * c.lhs_error;
    const bool rhs_ok = std::abs(c.rhs - rhs_want) <= 3.0 * c.rhs_error + 1e-3;
    report(9, c.holds && c.lhs <= c.rhs && lhs_ok && rhs_ok,
           fmt("lhs %.4f +/- %.4f (oracle %.4f), rhs %.4f +/- %.4f (oracle %.4f), rhs - lhs %.4f", c.lhs,
               c.lhs_error, lhs_want, c.rhs, c.rhs_error, rhs_want, c.rhs - c.lhs));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism() {
    const fs::path root = fs::temp_directory_path() / "maxembed_acceptance";
    fs::remove_all(root);
    const std::vector<std::string> sets{"--set", "payoff.atoms=0.797885:1", "solver.m_grid=0.5,0.797885,1.2",
                                        "simulation.n_paths=2000", "simulation.dt=1e-3",
                                        "simulation.samples_csv=1", "verify.pathwise_cases=500",
                                        "verify.superhedge_paths=50", "verify.martingale_samples=2000",
                                        "gap.allowance=0.1"};
    std::vector<std::string> commands{"cost", "bound", "simulate", "verify", "gap"};
    std::vector<int> codes;
    for (const char* name : {"a", "b"}) {
        for (const auto& cmd : commands) {
            std::vector<std::string> args{cmd, "--seed", "11", "--out", (root / name).string()};
            args.insert(args.end(), sets.begin(), sets.end());
            std::ostringstream out, err;
            codes.push_back(cli::run(args, out, err));
        }
    }
    std::size_t files = 0, same = 0;
    for (const auto& entry : fs::directory_iterator(root / "a")) {
        ++files;
        const fs::path other = root / "b" / entry.path().filename();
        if (fs::exists(other) && slurp(entry.path()) == slurp(other)) ++same;
    }
    const bool codes_match = std::equal(codes.begin(), codes.begin() + 5, codes.begin() + 5);
    fs::remove_all(root);
    report(10, files > 0 && same == files && codes_match,
           fmt("%zu/%zu result files byte-identical across two runs of %zu commands", same, files, commands.size()));
}

}  // namespace

int main() {
    hardy_littlewood_agreement();
    ladder_monotone();
    brute_force_dp();
    pathwise();
    duality_and_marginals();
    superhedge();
    static_cost_cross_check();
    martingale_inequality();
    determinism();
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
