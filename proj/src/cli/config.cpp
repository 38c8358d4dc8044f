#include "maxembed/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace maxembed::cli {

namespace {

namespace pt = boost::property_tree;

double to_double(const std::string& key, const std::string& text) {
    const std::string s = boost::trim_copy(text);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw UsageError(key + ": '" + text + "' is not a number");
    }
    return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
    const std::string s = boost::trim_copy(text);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw UsageError(key + ": '" + text + "' is not a non-negative integer");
    }
    return v;
}

bool to_bool(const std::string& key, const std::string& text) {
    const std::string s = boost::to_lower_copy(boost::trim_copy(text));
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw UsageError(key + ": '" + text + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    boost::split(parts, text, boost::is_any_of(", \t"), boost::token_compress_on);
    parts.erase(std::remove_if(parts.begin(), parts.end(), [](const std::string& p) { return p.empty(); }),
                parts.end());
    return parts;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& p : split_list(text)) out.push_back(to_double(key, p));
    return out;
}

// "level:weight" pairs.
std::vector<PayoffAtom> to_atoms(const std::string& key, const std::string& text) {
    std::vector<PayoffAtom> out;
    for (const auto& p : split_list(text)) {
        const auto colon = p.find(':');
        if (colon == std::string::npos) throw UsageError(key + ": atom '" + p + "' must be level:weight");
        out.push_back({to_double(key, p.substr(0, colon)), to_double(key, p.substr(colon + 1))});
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto num = [&t](const std::string& key, auto member) {
            t[key] = [key, member](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                member(c) = to_double(key, v);
            };
        };
        auto count = [&t](const std::string& key, auto member) {
            t[key] = [key, member](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_unsigned(key, v));
            };
        };
        auto flag = [&t](const std::string& key, auto member) {
            t[key] = [key, member](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                member(c) = to_bool(key, v);
            };
        };
        auto list = [&t](const std::string& key, auto member) {
            t[key] = [key, member](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                member(c) = to_list(key, v);
            };
        };

        t["family.kind"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.family.kind = boost::to_lower_copy(boost::trim_copy(v));
        };
        num("family.sigma", [](RunConfig& c) -> double& { return c.family.sigma; });
        t["family.surface"] = [](RunConfig& c, const std::string& v, const std::filesystem::path& base) {
            const std::filesystem::path p = boost::trim_copy(v);
            c.family.surface = p.is_absolute() ? p : base / p;
        };

        num("payoff.base", [](RunConfig& c) -> double& { return c.payoff_base; });
        t["payoff.atoms"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.atoms = to_atoms("payoff.atoms", v);
        };
        list("payoff.density_grid", [](RunConfig& c) -> std::vector<double>& { return c.density_grid; });
        list("payoff.density_values", [](RunConfig& c) -> std::vector<double>& { return c.density_values; });

        list("solver.m_grid", [](RunConfig& c) -> std::vector<double>& { return c.m_grid; });
        count("solver.n0", [](RunConfig& c) -> std::size_t& { return c.solver.n0; });
        count("solver.n_cap", [](RunConfig& c) -> std::size_t& { return c.solver.n_cap; });
        count("solver.x_points", [](RunConfig& c) -> std::size_t& { return c.solver.x_points; });
        num("solver.lower_quantile", [](RunConfig& c) -> double& { return c.solver.lower_quantile; });
        num("solver.delta_quantile", [](RunConfig& c) -> double& { return c.solver.delta_quantile; });
        num("solver.delta_factor", [](RunConfig& c) -> double& { return c.solver.delta_factor; });
        num("solver.tolerance", [](RunConfig& c) -> double& { return c.solver.tolerance; });

        list("simulation.labels", [](RunConfig& c) -> std::vector<double>& { return c.labels; });
        count("simulation.n_paths", [](RunConfig& c) -> std::size_t& { return c.simulation.n_paths; });
        num("simulation.dt", [](RunConfig& c) -> double& { return c.simulation.dt; });
        count("simulation.cap", [](RunConfig& c) -> std::size_t& { return c.simulation.cap; });
        t["simulation.seed"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.simulation.seed = to_unsigned("simulation.seed", v);
            c.seed_set = true;
        };
        num("simulation.boundary_shift", [](RunConfig& c) -> double& { return c.simulation.boundary_shift; });
        flag("simulation.bridge", [](RunConfig& c) -> bool& { return c.simulation.bridge; });
        flag("simulation.samples_csv", [](RunConfig& c) -> bool& { return c.samples_csv; });

        flag("verify.pathwise", [](RunConfig& c) -> bool& { return c.verify.pathwise; });
        count("verify.pathwise_cases", [](RunConfig& c) -> std::size_t& { return c.verify.pathwise_cases; });
        flag("verify.superhedge", [](RunConfig& c) -> bool& { return c.verify.superhedge; });
        count("verify.superhedge_paths", [](RunConfig& c) -> std::size_t& { return c.verify.superhedge_paths; });
        num("verify.superhedge_allowance", [](RunConfig& c) -> double& { return c.verify.superhedge_allowance; });
        num("verify.superhedge_mean_limit", [](RunConfig& c) -> double& { return c.verify.superhedge_mean_limit; });
        flag("verify.martingale", [](RunConfig& c) -> bool& { return c.verify.martingale; });
        count("verify.martingale_samples", [](RunConfig& c) -> std::size_t& { return c.verify.martingale_samples; });
        num("verify.martingale_sigma", [](RunConfig& c) -> double& { return c.verify.martingale_sigma; });
        list("verify.inject_breakpoints", [](RunConfig& c) -> std::vector<double>& { return c.verify.inject_breakpoints; });
        list("verify.inject_values", [](RunConfig& c) -> std::vector<double>& { return c.verify.inject_values; });

        num("gap.allowance", [](RunConfig& c) -> double& { return c.gap_allowance; });

        t["output.dir"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.out_dir = boost::trim_copy(v);
        };
        return t;
    }();
    return table;
}

void apply(RunConfig& config, const std::string& key, const std::string& value, const std::filesystem::path& base) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw UsageError("unknown setting '" + key + "'");
    it->second(config, value, base);
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides,
                       const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    RunConfig config;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw UsageError("setting '" + section + "' lies outside a section");
        for (const auto& [key, value] : body) apply(config, section + "." + key, value.data(), base_dir);
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw UsageError("override '" + o + "' must be section.key=value");
        apply(config, boost::trim_copy(o.substr(0, eq)), o.substr(eq + 1), std::filesystem::current_path());
    }
    return config;
}

RunConfig load_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides) {
    if (!path) {
        std::istringstream empty;
        return parse_config(empty, overrides);
    }
    std::ifstream in(*path);
    if (!in) throw UsageError("cannot read config file " + path->string());
    return parse_config(in, overrides, path->parent_path().empty() ? "." : path->parent_path());
}

void validate(const RunConfig& c) {
    auto fail = [](const std::string& what) { throw ValidationError(what); };
    if (c.family.kind == "gaussian") {
        if (!(c.family.sigma > 0.0) || !std::isfinite(c.family.sigma)) fail("family.sigma must be positive");
    } else if (c.family.kind == "tabulated") {
        if (c.family.surface.empty()) fail("family.surface is required for a tabulated family");
        if (!std::filesystem::exists(c.family.surface)) fail("surface file " + c.family.surface.string() + " not found");
    } else if (c.family.kind != "uniform") {
        fail("family.kind must be gaussian, uniform or tabulated");
    }
    try {
        c.solver.validate();
        c.simulation.validate();
        make_payoff(c);
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    for (std::size_t k = 0; k < c.labels.size(); ++k) {
        if (!(c.labels[k] >= 0.0 && c.labels[k] <= 1.0)) fail("simulation.labels must lie in [0, 1]");
        if (k > 0 && !(c.labels[k] > c.labels[k - 1])) fail("simulation.labels must be strictly increasing");
    }
    if (c.labels.empty()) fail("simulation.labels is empty");
    for (double m : c.m_grid) {
        if (!std::isfinite(m)) fail("solver.m_grid entries must be finite");
    }
    if (!(c.gap_allowance >= 0.0)) fail("gap.allowance must be non-negative");
    if (!(c.verify.superhedge_allowance >= 0.0)) fail("verify.superhedge_allowance must be non-negative");
    if (!(c.verify.martingale_sigma > 0.0)) fail("verify.martingale_sigma must be positive");
    if (!c.verify.inject_values.empty() || !c.verify.inject_breakpoints.empty()) {
        try {
            Boundary(c.verify.inject_breakpoints, c.verify.inject_values);
        } catch (const std::invalid_argument& e) {
            fail(std::string("injected boundary: ") + e.what());
        }
    }
}

MarginalFamily make_family(const RunConfig& config) {
    if (config.family.kind == "gaussian") return MarginalFamily::gaussian(config.family.sigma);
    if (config.family.kind == "uniform") return MarginalFamily::scaled(BaseLaw::uniform);
    LoadedSurface loaded = [&] {
        try {
            return load_call_surface(config.family.surface);
        } catch (const ParseError& e) {
            throw ValidationError(config.family.surface.string() + ": " + e.what());
        }
    }();
    if (!loaded.report.pass) {
        throw ValidationError("call surface fails the peacock checks", loaded.report.to_json().dump(2));
    }
    return MarginalFamily::tabulated(std::move(loaded.surface));
}

Payoff make_payoff(const RunConfig& config) {
    return Payoff(config.payoff_base, config.atoms, config.density_grid, config.density_values);
}

}  // namespace maxembed::cli
