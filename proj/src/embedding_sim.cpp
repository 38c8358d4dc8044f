#include "maxembed/embedding_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "format.hpp"
#include "normal.hpp"
#include "parallel.hpp"

namespace maxembed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kZ99 = normal::quantile(0.995);

void check_labels(const std::vector<double>& labels) {
    if (labels.empty()) throw std::invalid_argument("label grid is empty");
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (!(labels[k] >= 0.0 && labels[k] <= 1.0)) throw std::invalid_argument("labels must lie in [0, 1]");
        if (k > 0 && labels[k] < labels[k - 1]) throw std::invalid_argument("labels must be sorted");
    }
}

struct MeanSd {
    double mean = 0.0;
    double std_error = 0.0;
};

MeanSd mean_and_error(const std::vector<double>& xs) {
    MeanSd out;
    if (xs.empty()) return out;
    const double n = static_cast<double>(xs.size());
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return out;
}

// Stopped state of one path, without the walk itself.
struct Stopped {
    std::vector<double> values;
    std::vector<double> maxes;
    std::vector<std::size_t> steps;
    bool truncated = false;
};

// Shared loop of the iterated stopping rule. `record(w, wmax)` sees every step.
template <class Record>
Stopped embed(const std::vector<AyBoundary>& boundaries, PathStream& stream, std::size_t cap, bool bridge,
              Record&& record) {
    const std::size_t n = boundaries.size();
    Stopped out;
    out.values.resize(n);
    out.maxes.resize(n);
    out.steps.resize(n);
    double w = 0.0;
    double wmax = 0.0;
    std::size_t step = 0;
    const double dt = stream.dt();
    for (std::size_t k = 0; k < n; ++k) {
        const AyBoundary& xi = boundaries[k];
        double level = xi(wmax);
        while (!(w <= level)) {
            if (step >= cap) {
                out.truncated = true;
                break;
            }
            const double prev = w;
            w += stream.increment();
            ++step;
            if (w > wmax) {
                wmax = w;
                level = xi(wmax);
            }
            if (bridge && w > level && prev > level) {
                // Chance that the bridge between the two grid points touched the level.
                const double p = std::exp(-2.0 * (prev - level) * (w - level) / dt);
                if (stream.uniform() < p) w = level;
            }
            record(w, wmax);
        }
        out.values[k] = w;
        out.maxes[k] = wmax;
        out.steps[k] = step;
    }
    return out;
}

}  // namespace

PathRecord PathRecord::from_values(std::vector<double> values, std::vector<double> labels,
                                   std::vector<std::size_t> stops, double dt) {
    if (values.empty()) throw std::invalid_argument("path needs at least its starting value");
    if (labels.size() != stops.size()) throw std::invalid_argument("path needs one stop per label");
    for (std::size_t k = 0; k < stops.size(); ++k) {
        if (stops[k] >= values.size()) throw std::invalid_argument("stop index beyond the path");
        if (k > 0 && stops[k] < stops[k - 1]) throw std::invalid_argument("stops must be non-decreasing");
    }
    PathRecord rec;
    rec.dt = dt;
    rec.labels = std::move(labels);
    rec.values = std::move(values);
    rec.stops = std::move(stops);
    rec.running_max.resize(rec.values.size());
    double m = -kInf;
    for (std::size_t i = 0; i < rec.values.size(); ++i) {
        m = std::max(m, rec.values[i]);
        rec.running_max[i] = m;
    }
    return rec;
}

std::size_t PathRecord::label_of_step(std::size_t s) const {
    return static_cast<std::size_t>(std::upper_bound(stops.begin(), stops.end(), s) - stops.begin());
}

std::size_t PathRecord::i_minus(std::size_t s) const {
    const std::size_t k = label_of_step(s);
    return k == 0 ? 0 : stops[k - 1];
}

std::size_t PathRecord::i_plus(std::size_t s) const {
    const std::size_t k = label_of_step(s);
    return k < stops.size() ? stops[k] : stops.back();
}

AyBoundary::AyBoundary(const MarginalFamily& family, double t, double shift, std::size_t table_points)
    : family_(family), t_(t), shift_(shift) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("boundary label must lie in [0, 1]");
    if (t == 0.0 || table_points < 2) return;
    const double scale = family.unit_scale() * std::sqrt(t);
    log_lo_ = std::log(1e-6 * scale);
    const double log_hi = std::log(10.0 * scale);
    log_step_ = (log_hi - log_lo_) / static_cast<double>(table_points - 1);
    table_.resize(table_points);
    for (std::size_t i = 0; i < table_points; ++i) {
        table_[i] = family.barycenter_inverse(t, std::exp(log_lo_ + log_step_ * static_cast<double>(i)));
    }
}

double AyBoundary::exact(double running_max) const {
    if (t_ == 0.0) return kInf;
    if (!(running_max > 0.0)) return -kInf;
    return family_.barycenter_inverse(t_, running_max) + shift_;
}

double AyBoundary::operator()(double running_max) const {
    if (t_ == 0.0) return kInf;
    if (!(running_max > 0.0)) return -kInf;
    if (table_.empty()) return exact(running_max);
    const double pos = (std::log(running_max) - log_lo_) / log_step_;
    if (!(pos >= 0.0) || pos >= static_cast<double>(table_.size() - 1)) return exact(running_max);
    const auto i = static_cast<std::size_t>(pos);
    const double a = table_[i];
    const double b = table_[i + 1];
    if (!std::isfinite(a) || !std::isfinite(b)) return exact(running_max);
    const double frac = pos - static_cast<double>(i);
    return a + (b - a) * frac + shift_;
}

IteratedAzemaYor::IteratedAzemaYor(const MarginalFamily& family, std::vector<double> labels, double shift)
    : labels_(std::move(labels)) {
    check_labels(labels_);
    boundaries_.reserve(labels_.size());
    for (double t : labels_) boundaries_.emplace_back(family, t, shift);
}

PathRecord IteratedAzemaYor::run(PathStream& stream, std::size_t cap, bool bridge) const {
    std::vector<double> values{0.0};
    Stopped s = embed(boundaries_, stream, cap, bridge, [&](double w, double) { values.push_back(w); });
    PathRecord rec = PathRecord::from_values(std::move(values), labels_, std::move(s.steps), stream.dt());
    rec.truncated = s.truncated;
    return rec;
}

void SimulationConfig::validate() const {
    if (n_paths == 0) throw std::invalid_argument("n_paths must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
    if (cap == 0) throw std::invalid_argument("step cap must be positive");
    if (!std::isfinite(boundary_shift)) throw std::invalid_argument("boundary shift must be finite");
}

void require_imrv(const MarginalFamily& family, const std::vector<double>& labels, bool force) {
    if (force) return;
    std::vector<double> ts;
    for (double t : labels) {
        if (t > 0.0) ts.push_back(t);
    }
    if (ts.size() < 2) return;
    const auto xs = linspace(family.quantile(1.0, 1e-3), family.quantile(1.0, 1.0 - 1e-3), 201);
    ValidationReport report = check_imrv(family, ts, xs);
    if (!report.pass) throw ImrvRefusal(std::move(report));
}

std::size_t EmbeddingResult::label_index(double t) const {
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (std::abs(labels[k] - t) <= 1e-12) return k;
    }
    throw std::out_of_range("label " + detail::format_double(t) + " is not on the simulated grid");
}

std::vector<double> EmbeddingResult::samples_at(std::size_t k) const {
    std::vector<double> out(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) out[p] = value(p, k);
    return out;
}

double EmbeddingResult::truncation_fraction() const {
    return n_paths == 0 ? 0.0 : static_cast<double>(truncated) / static_cast<double>(n_paths);
}

std::vector<LabelEstimate> EmbeddingResult::label_means() const {
    std::vector<LabelEstimate> out;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        const MeanSd ms = mean_and_error(samples_at(k));
        out.push_back({labels[k], ms.mean, ms.std_error});
    }
    return out;
}

nlohmann::json EmbeddingResult::summary(const MarginalFamily* family) const {
    nlohmann::json out{{"n_paths", n_paths}, {"dt", dt}, {"seed", seed}, {"truncated", truncated}};
    out["estimates"] = nlohmann::json::array();
    for (const auto& e : label_means()) {
        out["estimates"].push_back({{"label", e.label}, {"mean", e.mean}, {"stderr", e.std_error}});
    }
    out["ks"] = nlohmann::json::array();
    if (family) {
        for (double t : labels) out["ks"].push_back({{"t", t}, {"stat", marginal_ks(*this, *family, t)}});
    }
    return out;
}

std::string EmbeddingResult::samples_csv() const {
    std::string out = "path_id,label,value,max,tau_steps\n";
    for (std::size_t p = 0; p < n_paths; ++p) {
        for (std::size_t k = 0; k < labels.size(); ++k) {
            const std::size_t i = p * labels.size() + k;
            out += std::to_string(p) + "," + detail::format_double(labels[k]) + "," + detail::format_double(values[i]) +
                   "," + detail::format_double(maxes[i]) + "," + std::to_string(steps[i]) + "\n";
        }
    }
    return out;
}

EmbeddingResult simulate_embedding(const MarginalFamily& family, const std::vector<double>& labels,
                                   const SimulationConfig& config) {
    config.validate();
    check_labels(labels);
    require_imrv(family, labels, config.force);
    const IteratedAzemaYor rule(family, labels, config.boundary_shift);
    const std::size_t n = labels.size();

    EmbeddingResult out;
    out.labels = labels;
    out.seed = config.seed;
    out.n_paths = config.n_paths;
    out.dt = config.dt;
    out.values.resize(config.n_paths * n);
    out.maxes.resize(config.n_paths * n);
    out.steps.resize(config.n_paths * n);
    std::vector<char> truncated(config.n_paths, 0);

    detail::parallel_for(config.n_paths, config.threads, [&](std::size_t p) {
        PathStream stream(config.seed, p, config.dt);
        Stopped s = embed(rule.boundaries(), stream, config.cap, config.bridge, [](double, double) {});
        std::copy(s.values.begin(), s.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(p * n));
        std::copy(s.maxes.begin(), s.maxes.end(), out.maxes.begin() + static_cast<std::ptrdiff_t>(p * n));
        std::copy(s.steps.begin(), s.steps.end(), out.steps.begin() + static_cast<std::ptrdiff_t>(p * n));
        truncated[p] = s.truncated ? 1 : 0;
    });
    out.truncated = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
    return out;
}

void for_each_embedded_path(const MarginalFamily& family, const std::vector<double>& labels,
                            const SimulationConfig& config,
                            const std::function<void(std::size_t, const PathRecord&)>& visit) {
    config.validate();
    check_labels(labels);
    require_imrv(family, labels, config.force);
    const IteratedAzemaYor rule(family, labels, config.boundary_shift);
    detail::parallel_for(config.n_paths, config.threads, [&](std::size_t p) {
        PathStream stream(config.seed, p, config.dt);
        visit(p, rule.run(stream, config.cap, config.bridge));
    });
}

nlohmann::json PrimalEstimate::to_json() const {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& e : label_means) labels.push_back({{"label", e.label}, {"mean", e.mean}, {"stderr", e.std_error}});
    return {{"mean", mean}, {"stderr", std_error}, {"ci99", ci99}, {"flagged", flagged}, {"label_means", labels}};
}

PrimalEstimate estimate_primal(const EmbeddingResult& result, const Payoff& payoff) {
    if (result.n_paths == 0) throw std::invalid_argument("no simulated paths");
    // Average the increments phi(x) - phi(0) so a constant payoff comes out exact.
    std::vector<double> gains(result.n_paths);
    for (std::size_t p = 0; p < result.n_paths; ++p) gains[p] = payoff(result.terminal_max(p)) - payoff.base();
    const MeanSd ms = mean_and_error(gains);
    PrimalEstimate out;
    out.mean = payoff.base() + ms.mean;
    out.std_error = ms.std_error;
    out.ci99 = kZ99 * ms.std_error;
    out.flagged = result.flagged();
    out.label_means = result.label_means();
    return out;
}

double ks_statistic(std::vector<double> samples, const MarginalFamily& family, double t) {
    if (samples.empty()) throw std::invalid_argument("no samples for the KS statistic");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < samples.size()) {
        std::size_t j = i;
        while (j < samples.size() && samples[j] == samples[i]) ++j;
        const double x = samples[i];
        const double below = static_cast<double>(i) / n;
        const double upto = static_cast<double>(j) / n;
        d = std::max(d, std::abs(upto - family.cdf(t, x)));
        d = std::max(d, std::abs(below - family.cdf_left(t, x)));
        i = j;
    }
    return d;
}

double marginal_ks(const EmbeddingResult& result, const MarginalFamily& family, double t) {
    return ks_statistic(result.samples_at(result.label_index(t)), family, t);
}

Proportion max_exceedance_prob(const EmbeddingResult& result, double m) {
    if (result.n_paths == 0) throw std::invalid_argument("no simulated paths");
    std::size_t hits = 0;
    for (std::size_t p = 0; p < result.n_paths; ++p) {
        if (result.terminal_max(p) >= m) ++hits;
    }
    Proportion out;
    const double n = static_cast<double>(result.n_paths);
    out.p = static_cast<double>(hits) / n;
    out.std_error = std::sqrt(out.p * (1.0 - out.p) / n);
    out.ci99 = kZ99 * out.std_error;
    return out;
}

MartingaleSamples sample_brownian_martingale(const std::vector<double>& times, std::size_t n, double sigma,
                                             std::uint64_t seed, unsigned threads) {
    check_labels(times);
    if (n == 0) throw std::invalid_argument("martingale sample size must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    MartingaleSamples out;
    out.times = times;
    out.n = n;
    const std::size_t nt = times.size();
    out.values.resize(n * nt);
    out.maxes.resize(n * nt);
    detail::parallel_for(n, threads, [&](std::size_t i) {
        PathStream stream(seed, i, 1.0);
        double b = 0.0;
        double m = 0.0;
        double prev = 0.0;
        for (std::size_t k = 0; k < nt; ++k) {
            const double dt = times[k] - prev;
            if (dt > 0.0) {
                const double next = b + sigma * std::sqrt(dt) * stream.increment();
                // Maximum of the Brownian bridge from b to next over dt.
                const double u = stream.uniform();
                const double d = next - b;
                const double top = 0.5 * (b + next + std::sqrt(d * d - 2.0 * sigma * sigma * dt * std::log(u)));
                m = std::max(m, top);
                b = next;
            }
            out.values[i * nt + k] = b;
            out.maxes[i * nt + k] = m;
            prev = times[k];
        }
    });
    return out;
}

}  // namespace maxembed
