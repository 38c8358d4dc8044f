#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "maxembed/cost_solver.hpp"
#include "maxembed/embedding_sim.hpp"
#include "maxembed/marginals.hpp"
#include "maxembed/payoff.hpp"

namespace maxembed::cli {

enum ExitCode : int { exit_ok = 0, exit_check = 1, exit_usage = 2, exit_validation = 3 };

/// Malformed input: unknown keys, unparsable values, missing mandatory settings.
class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Well-formed input that fails a domain check. Carries an optional JSON report.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what, std::string report = {})
        : std::runtime_error(what), report_(std::move(report)) {}
    const std::string& report() const { return report_; }

private:
    std::string report_;
};

struct FamilySpec {
    std::string kind = "gaussian";
    double sigma = 1.0;
    std::filesystem::path surface;
};

struct VerifySettings {
    bool pathwise = true;
    std::size_t pathwise_cases = 10000;
    bool superhedge = true;
    std::size_t superhedge_paths = 10000;
    double superhedge_allowance = 0.02;
    double superhedge_mean_limit = 0.05;
    bool martingale = true;
    std::size_t martingale_samples = 100000;
    double martingale_sigma = 1.0;
    std::vector<double> inject_breakpoints;
    std::vector<double> inject_values;
};

struct RunConfig {
    FamilySpec family;

    double payoff_base = 0.0;
    std::vector<PayoffAtom> atoms;
    std::vector<double> density_grid;
    std::vector<double> density_values;

    std::vector<double> m_grid;
    SolverGrid solver;

    std::vector<double> labels{1.0};
    SimulationConfig simulation;
    bool seed_set = false;
    bool samples_csv = false;

    VerifySettings verify;
    double gap_allowance = 0.01;

    std::filesystem::path out_dir = "out";
};

/// Reads `[section]` / `key = value` text. Overrides are `section.key=value`.
/// Relative surface paths resolve against base_dir.
RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {},
                       const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::vector<std::string>& overrides = {});

/// Range checks that need no heavy computation.
void validate(const RunConfig& config);

/// Builds the family; tabulated surfaces that fail the peacock checks raise ValidationError.
MarginalFamily make_family(const RunConfig& config);
Payoff make_payoff(const RunConfig& config);

}  // namespace maxembed::cli
