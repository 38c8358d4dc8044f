#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxembed/brownian.hpp"
#include "maxembed/marginals.hpp"
#include "maxembed/payoff.hpp"

namespace maxembed {

/// A discrete path together with its stopping indices tau[t_k].
struct PathRecord {
    double dt = 1.0;
    std::vector<double> labels;
    std::vector<double> values;
    std::vector<double> running_max;
    std::vector<std::size_t> stops;
    bool truncated = false;

    /// Fills running_max and checks the stops.
    static PathRecord from_values(std::vector<double> values, std::vector<double> labels,
                                  std::vector<std::size_t> stops, double dt = 1.0);

    std::size_t labels_count() const { return labels.size(); }
    double value_at(std::size_t k) const { return values[stops[k]]; }
    double max_at(std::size_t k) const { return running_max[stops[k]]; }
    /// Index k of the label interval (tau[k-1], tau[k]] holding step s, i.e.
    /// the smallest k with stops[k] > s. Returns labels_count() past the last stop.
    std::size_t label_of_step(std::size_t s) const;
    /// Stop indices bracketing step s: tau[k-1] (0 for k = 0) and tau[k].
    std::size_t i_minus(std::size_t s) const;
    std::size_t i_plus(std::size_t s) const;
};

/// Azema-Yor boundary xi_t = b_t^{-1} of one marginal, tabulated in log m.
class AyBoundary {
public:
    AyBoundary(const MarginalFamily& family, double t, double shift = 0.0, std::size_t table_points = 8193);

    double t() const { return t_; }
    /// Stop when the path falls to this level; +inf at t = 0, -inf below the barycenter range.
    double operator()(double running_max) const;
    double exact(double running_max) const;

private:
    MarginalFamily family_;
    double t_;
    double shift_;
    double log_lo_ = 0.0;
    double log_step_ = 0.0;
    std::vector<double> table_;
};

class IteratedAzemaYor {
public:
    IteratedAzemaYor(const MarginalFamily& family, std::vector<double> labels, double shift = 0.0);

    const std::vector<double>& labels() const { return labels_; }
    const std::vector<AyBoundary>& boundaries() const { return boundaries_; }

    /// Runs the stopping rule on a fresh stream and keeps the whole walk.
    PathRecord run(PathStream& stream, std::size_t cap, bool bridge = false) const;

private:
    std::vector<double> labels_;
    std::vector<AyBoundary> boundaries_;
};

struct SimulationConfig {
    std::size_t n_paths = 100000;
    double dt = 1e-4;
    std::size_t cap = 10000000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    double boundary_shift = 0.0;
    bool bridge = false;
    bool force = false;

    void validate() const;
};

class ImrvRefusal : public std::runtime_error {
public:
    ImrvRefusal(ValidationReport report)
        : std::runtime_error("family fails the IMRV check; the Azema-Yor boundaries do not apply (use --force)"),
          report_(std::move(report)) {}
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

/// Throws ImrvRefusal unless the family passes check_imrv on the label grid (or force is set).
void require_imrv(const MarginalFamily& family, const std::vector<double>& labels, bool force);

struct LabelEstimate {
    double label = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
};

struct EmbeddingResult {
    std::vector<double> labels;
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    double dt = 0.0;
    std::size_t truncated = 0;
    // Row-major n_paths x labels.
    std::vector<double> values;
    std::vector<double> maxes;
    std::vector<std::size_t> steps;

    double value(std::size_t path, std::size_t k) const { return values[path * labels.size() + k]; }
    double max(std::size_t path, std::size_t k) const { return maxes[path * labels.size() + k]; }
    double terminal_max(std::size_t path) const { return max(path, labels.size() - 1); }
    std::size_t label_index(double t) const;
    std::vector<double> samples_at(std::size_t k) const;

    double truncation_fraction() const;
    bool flagged() const { return truncation_fraction() > 1e-3; }
    std::vector<LabelEstimate> label_means() const;

    /// {n_paths, dt, seed, truncated, estimates, ks}; ks only when a family is given.
    nlohmann::json summary(const MarginalFamily* family = nullptr) const;
    /// path_id,label,value,max,tau_steps
    std::string samples_csv() const;
};

EmbeddingResult simulate_embedding(const MarginalFamily& family, const std::vector<double>& labels,
                                   const SimulationConfig& config);

/// Calls visit(path_index, record) with full paths; visits of different paths may run concurrently.
void for_each_embedded_path(const MarginalFamily& family, const std::vector<double>& labels,
                            const SimulationConfig& config,
                            const std::function<void(std::size_t, const PathRecord&)>& visit);

struct PrimalEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double ci99 = 0.0;
    bool flagged = false;
    std::vector<LabelEstimate> label_means;

    nlohmann::json to_json() const;
};

/// Mean of phi at the terminal maximum with a 99% normal interval.
PrimalEstimate estimate_primal(const EmbeddingResult& result, const Payoff& payoff);

/// Sup distance between the empirical law at label t and mu_t.
double marginal_ks(const EmbeddingResult& result, const MarginalFamily& family, double t);
double ks_statistic(std::vector<double> samples, const MarginalFamily& family, double t);

struct Proportion {
    double p = 0.0;
    double std_error = 0.0;
    double ci99 = 0.0;
};

Proportion max_exceedance_prob(const EmbeddingResult& result, double m);

/// Brownian motion sigma * W sampled at `times`, with exact running maxima via bridge sampling.
struct MartingaleSamples {
    std::vector<double> times;
    std::size_t n = 0;
    std::vector<double> values;
    std::vector<double> maxes;

    double value(std::size_t i, std::size_t k) const { return values[i * times.size() + k]; }
    double max(std::size_t i, std::size_t k) const { return maxes[i * times.size() + k]; }
};

MartingaleSamples sample_brownian_martingale(const std::vector<double>& times, std::size_t n, double sigma,
                                             std::uint64_t seed, unsigned threads = 1);

}  // namespace maxembed
