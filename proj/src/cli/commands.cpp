#include "maxembed/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "maxembed/dual_verifier.hpp"

namespace maxembed::cli {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

struct Prepared {
    MarginalFamily family;
    Payoff payoff;
};

Prepared prepare(const RunConfig& config) {
    validate(config);
    Prepared p{make_family(config), make_payoff(config)};
    return p;
}

void require_seed(const RunConfig& config) {
    if (!config.seed_set) throw UsageError("a seed is required (simulation.seed or --seed)");
}

void make_out_dir(const RunConfig& config) { fs::create_directories(config.out_dir); }

nlohmann::json curve_rows(const CostCurve& curve) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : curve.entries()) {
        nlohmann::json ladder = nlohmann::json::array();
        for (const auto& l : e.ladder) ladder.push_back({{"n", l.n}, {"C", l.value}});
        rows.push_back({{"m", e.m}, {"C", e.value}, {"converged", e.converged}, {"ladder", ladder}});
    }
    return rows;
}

int report_convergence(const CostCurve& curve, std::ostream& log) {
    if (curve.all_converged()) return exit_ok;
    for (const auto& e : curve.entries()) {
        if (!e.converged) log << "warning: ladder did not settle at m = " << e.m << " (C = " << e.value << ")\n";
    }
    return exit_check;
}

// Simulation labels merged with every breakpoint of the surface.
std::vector<double> refined_labels(std::vector<double> labels, const ZetaSurface& surface) {
    for (double t : surface.breakpoints()) {
        if (t > 0.0) labels.push_back(t);
    }
    labels.push_back(1.0);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end(), [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                 labels.end());
    return labels;
}

}  // namespace

int cmd_cost(const RunConfig& config, std::ostream& log) {
    if (config.m_grid.empty()) throw UsageError("solver.m_grid is empty");
    const Prepared p = prepare(config);
    const CostCurve curve = solve_curve(p.family, config.m_grid, config.solver, config.simulation.threads);
    make_out_dir(config);
    write_file(config.out_dir / "cost_curve.csv", curve.csv());
    write_json(config.out_dir / "minimizers.json", curve.minimizers_json());
    log << "solved " << curve.entries().size() << " levels\n";
    return report_convergence(curve, log);
}

int cmd_bound(const RunConfig& config, std::ostream& log) {
    const Prepared p = prepare(config);
    if (config.m_grid.empty() && !p.payoff.trivial_measure()) throw UsageError("solver.m_grid is empty");
    BoundResult bound;
    try {
        bound = price_bound(p.family, p.payoff, config.m_grid, config.solver, config.simulation.threads);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
    make_out_dir(config);
    write_file(config.out_dir / "cost_curve.csv", bound.curve.csv());
    write_json(config.out_dir / "minimizers.json", bound.curve.minimizers_json());
    write_json(config.out_dir / "bound.json",
               {{"bound", bound.value}, {"payoff", p.payoff.to_json()}, {"curve", curve_rows(bound.curve)}});
    log << "bound = " << bound.value << "\n";
    return report_convergence(bound.curve, log);
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
    require_seed(config);
    const Prepared p = prepare(config);
    EmbeddingResult result;
    try {
        result = simulate_embedding(p.family, config.labels, config.simulation);
    } catch (const ImrvRefusal& e) {
        throw ValidationError(e.what(), e.report().to_json().dump(2));
    }
    const PrimalEstimate primal = estimate_primal(result, p.payoff);
    nlohmann::json j = result.summary(&p.family);
    j["primal"] = primal.to_json();
    j["truncation_flagged"] = result.flagged();
    nlohmann::json exceed = nlohmann::json::array();
    for (const auto& a : p.payoff.atoms()) {
        const Proportion q = max_exceedance_prob(result, a.level);
        exceed.push_back({{"m", a.level}, {"p", q.p}, {"stderr", q.std_error}});
    }
    j["exceedance"] = exceed;
    make_out_dir(config);
    write_json(config.out_dir / "simulation.json", j);
    if (config.samples_csv) write_file(config.out_dir / "samples.csv", result.samples_csv());
    log << "primal = " << primal.mean << " +/- " << primal.ci99 << "\n";
    if (result.flagged()) log << "warning: " << result.truncated << " paths hit the step cap\n";
    return exit_ok;
}

int cmd_verify(const RunConfig& config, std::ostream& log) {
    const VerifySettings& v = config.verify;
    const bool any = v.pathwise || v.superhedge || v.martingale;
    if (any) require_seed(config);
    const Prepared p = prepare(config);
    const std::uint64_t seed = config.simulation.seed;

    nlohmann::json suites = nlohmann::json::array();
    bool pass = true;

    if (v.pathwise) {
        VerificationReport r = pathwise_suite(v.pathwise_cases, seed);
        pass = pass && r.pass();
        suites.push_back(r.to_json());
    }

    if (v.superhedge || v.martingale) {
        std::vector<double> levels;
        for (const auto& a : p.payoff.atoms()) levels.push_back(a.level);
        if (p.payoff.has_density()) levels.insert(levels.end(), config.m_grid.begin(), config.m_grid.end());
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

        std::optional<ZetaSurface> surface;
        if (!v.inject_values.empty()) {
            const Boundary injected(v.inject_breakpoints, v.inject_values);
            for (double m : levels) {
                if (!injected.feasible_for(m)) throw ValidationError("injected boundary reaches a payoff level");
            }
            surface.emplace(levels, std::vector<Boundary>(levels.size(), injected));
        } else {
            try {
                surface.emplace(build_zeta_surface(p.family, p.payoff, levels, config.solver, config.simulation.threads)
                                    .surface);
            } catch (const std::invalid_argument& e) {
                throw ValidationError(e.what());
            }
        }
        const DualStrategy strategy{p.payoff, *surface};

        if (v.superhedge) {
            SimulationConfig sim = config.simulation;
            sim.n_paths = v.superhedge_paths;
            VerificationReport r;
            try {
                r = superhedge_suite(p.family, strategy, refined_labels(config.labels, *surface), sim,
                                     v.superhedge_allowance);
            } catch (const ImrvRefusal& e) {
                throw ValidationError(e.what(), e.report().to_json().dump(2));
            }
            const bool mean_ok = r.n_cases == 0 || r.mean_slack <= v.superhedge_mean_limit;
            nlohmann::json j = r.to_json();
            j["mean_limit"] = v.superhedge_mean_limit;
            j["mean_ok"] = mean_ok;
            pass = pass && r.pass() && mean_ok;
            suites.push_back(j);
        }

        if (v.martingale) {
            std::vector<double> times = surface->breakpoints();
            times.erase(std::remove(times.begin(), times.end(), 0.0), times.end());
            if (times.empty()) times.push_back(1.0);
            const MartingaleSamples samples =
                sample_brownian_martingale(times, v.martingale_samples, v.martingale_sigma, seed ^ 0x5bd1e995u,
                                           config.simulation.threads);
            const MartingaleCheck c = martingale_ineq_check(samples, *surface, p.payoff);
            nlohmann::json j{{"check", "martingale"}, {"n_cases", samples.n}, {"min_slack", c.rhs - c.lhs}};
            j["failures"] = c.holds ? nlohmann::json::array()
                                    : nlohmann::json::array({{{"case_id", 0}, {"slack", c.rhs - c.lhs}}});
            j["detail"] = c.to_json();
            pass = pass && c.holds;
            suites.push_back(j);
        }
    }

    make_out_dir(config);
    write_json(config.out_dir / "verify.json", {{"pass", pass}, {"suites", suites}});
    log << (pass ? "all verification suites passed\n" : "verification failed\n");
    return pass ? exit_ok : exit_check;
}

int cmd_gap(const RunConfig& config, std::ostream& log) {
    require_seed(config);
    const Prepared p = prepare(config);
    if (config.m_grid.empty() && !p.payoff.trivial_measure()) throw UsageError("solver.m_grid is empty");
    BoundResult bound;
    EmbeddingResult result;
    try {
        bound = price_bound(p.family, p.payoff, config.m_grid, config.solver, config.simulation.threads);
        result = simulate_embedding(p.family, config.labels, config.simulation);
    } catch (const ImrvRefusal& e) {
        throw ValidationError(e.what(), e.report().to_json().dump(2));
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
    const PrimalEstimate primal = estimate_primal(result, p.payoff);
    const GapReport gap = gap_report(primal.mean, primal.ci99, bound.value, config.gap_allowance);
    nlohmann::json j = gap.to_json();
    j["primal_estimate"] = primal.to_json();
    j["simulation"] = result.summary();
    make_out_dir(config);
    write_json(config.out_dir / "gap.json", j);
    log << "dual = " << bound.value << ", primal = " << primal.mean << " +/- " << primal.ci99 << ", gap = " << gap.gap
        << "\n";
    return gap.weak_duality_violation ? exit_check : exit_ok;
}

int cmd_check_family(const RunConfig& config, std::ostream& log) {
    validate(config);
    MarginalFamily family = MarginalFamily::gaussian(1.0);
    nlohmann::json j;
    try {
        family = make_family(config);
    } catch (const ValidationError& e) {
        if (e.report().empty()) throw;
        make_out_dir(config);
        j = {{"family", config.family.kind}, {"peacock", nlohmann::json::parse(e.report())}, {"imrv", nullptr}};
        write_json(config.out_dir / "family_report.json", j);
        throw;
    }
    std::vector<double> ts, xs;
    if (const CallSurface* s = family.surface()) {
        ts = s->t_grid();
        xs = s->x_grid();
    } else {
        ts = linspace(0.0, 1.0, 21);
        xs = linspace(family.quantile(1.0, 1e-3), family.quantile(1.0, 1.0 - 1e-3), 201);
    }
    const ValidationReport peacock = check_peacock(family, ts, xs);
    const ValidationReport imrv = check_imrv(family, ts, xs);
    j = {{"family", family.describe()}, {"peacock", peacock.to_json()}, {"imrv", imrv.to_json()}};
    make_out_dir(config);
    write_json(config.out_dir / "family_report.json", j);
    log << "peacock: " << (peacock.pass ? "pass" : "fail") << ", imrv: " << (imrv.pass ? "pass" : "fail") << "\n";
    if (!peacock.pass) return exit_validation;
    return imrv.pass ? exit_ok : exit_check;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust bounds on the running maximum under a peacock of marginals", "maxembed"};
    std::optional<std::string> config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    bool force = false;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "Run configuration file");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--force", force, "Simulate even when the IMRV check fails");
    app.add_option("--set", sets, "Override a setting, section.key=value")->take_all();

    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const RunConfig&, std::ostream&);
    };
    const Sub subs[] = {{"cost", "Solve C(m) over the m-grid", cmd_cost},
                        {"bound", "Price bound for the configured payoff", cmd_bound},
                        {"simulate", "Iterated Azema-Yor Monte Carlo", cmd_simulate},
                        {"verify", "Dual super-hedge and inequality checks", cmd_verify},
                        {"gap", "Dual bound against the primal estimate", cmd_gap},
                        {"check-family", "Peacock and IMRV checks of the family", cmd_check_family}};
    for (const auto& s : subs) app.add_subcommand(s.name, s.help)->fallthrough();
    app.require_subcommand(1);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        RunConfig config = load_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt, sets);
        if (out_dir) config.out_dir = *out_dir;
        if (seed) {
            config.simulation.seed = *seed;
            config.seed_set = true;
        }
        config.simulation.threads = threads;
        config.simulation.force = config.simulation.force || force;
        for (const auto& s : subs) {
            if (app.got_subcommand(s.name)) return s.fn(config, err);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        if (!e.report().empty()) err << e.report() << "\n";
        return exit_validation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_check;
    }
    return exit_usage;
}

}  // namespace maxembed::cli
