#include "maxembed/dual_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

namespace maxembed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxReportedFailures = 100;

double ratio(double numerator, double m, double z) {
    if (z < m) return numerator / (m - z);
    return numerator == 0.0 ? 0.0 : kInf;
}

double plus_ratio(double x, double z, double m) { return ratio(std::max(x - z, 0.0), m, z); }

void check_zeta(const std::vector<double>& zeta, double m) {
    if (zeta.empty()) throw std::invalid_argument("zeta is empty");
    for (std::size_t i = 1; i < zeta.size(); ++i) {
        if (zeta[i] < zeta[i - 1]) throw std::invalid_argument("zeta must be sorted");
    }
    if (!(zeta.back() < m)) throw std::invalid_argument("zeta must stay strictly below m");
}

// Numerators are collected as integer combinations of path values, zeta and m,
// one combination per distinct zeta. Identities such as (x - z) + (m - x) = m - z
// then cancel exactly before the division by m - z.
class Numerators {
public:
    Numerators(const std::vector<double>& path, const std::vector<double>& zeta, double m)
        : path_(path), zeta_(zeta), m_(m) {}

    // sign * (x_p - zeta_k)^+
    void positive_part(std::size_t k, std::size_t p, long sign) {
        if (!(path_[p] > zeta_[k])) return;
        auto& f = group(k);
        add(f, kPath, p, sign);
        add(f, kZeta, rep(k), -sign);
    }
    // c * (m - x_p)
    void level_minus(std::size_t k, std::size_t p, long c) {
        auto& f = group(k);
        add(f, kLevel, 0, c);
        add(f, kPath, p, -c);
    }
    // c * (x_b - x_a)
    void increment(std::size_t k, std::size_t a, std::size_t b, long c) {
        auto& f = group(k);
        add(f, kPath, b, c);
        add(f, kPath, a, -c);
    }

    double total() const {
        double sum = 0.0;
        for (const auto& [k, form] : groups_) {
            long double numerator = 0.0L;
            for (const auto& [key, c] : form) {
                if (c == 0) continue;
                numerator += static_cast<long double>(c) * value(key);
            }
            sum += static_cast<double>(numerator) / (m_ - zeta_[k]);
        }
        return sum;
    }

private:
    enum Kind { kPath = 0, kZeta = 1, kLevel = 2 };
    using Key = std::pair<int, std::size_t>;
    using Form = std::map<Key, long>;

    std::size_t rep(std::size_t k) const {
        while (k > 0 && zeta_[k - 1] == zeta_[k]) --k;
        return k;
    }
    Form& group(std::size_t k) { return groups_[rep(k)]; }
    static void add(Form& f, int kind, std::size_t idx, long c) { f[{kind, idx}] += c; }
    double value(const Key& key) const {
        switch (key.first) {
            case kPath: return path_[key.second];
            case kZeta: return zeta_[key.second];
            default: return m_;
        }
    }

    const std::vector<double>& path_;
    const std::vector<double>& zeta_;
    double m_;
    std::map<std::size_t, Form> groups_;
};

// Raw discrete inequality; label k sits at path index idx[k].
void add_raw(Numerators& num, const std::vector<double>& path, const std::vector<double>& maxes,
             const std::vector<std::size_t>& idx, double start_max, double m,
             const std::vector<double>& zeta) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double prev_max = k == 0 ? start_max : maxes[k - 1];
        num.positive_part(k, idx[k], 1);
        if (prev_max < m && m <= maxes[k]) num.level_minus(k, idx[k], 1);
        if (k > 0) {
            const std::size_t prev = idx[k - 1];
            num.positive_part(k, prev, -1);
            if (m <= prev_max && zeta[k] <= path[prev]) num.increment(k, prev, idx[k], -1);
        }
    }
}

void add_static(Numerators& num, const PathRecord& path) {
    for (std::size_t k = 0; k < path.stops.size(); ++k) {
        num.positive_part(k, path.stops[k], 1);
        if (k > 0) num.positive_part(k, path.stops[k - 1], -1);
    }
}

void add_dynamic(Numerators& num, const PathRecord& path, const std::vector<double>& zeta, double m) {
    const std::size_t end = path.stops.back();
    // First step at or above m, and the label interval (tau[k-1], tau[k]] holding it.
    std::size_t hit = end + 1;
    for (std::size_t s = 0; s <= end; ++s) {
        if (path.values[s] >= m) {
            hit = s;
            break;
        }
    }
    std::size_t hit_label = path.stops.size();
    if (hit <= end) {
        hit_label = static_cast<std::size_t>(std::lower_bound(path.stops.begin(), path.stops.end(), hit) -
                                             path.stops.begin());
    }
    // Sum of H_s (x_{s+1} - x_s); runs of equal H are merged, which leaves the
    // integer coefficients unchanged.
    std::size_t run_k = 0, run_from = 0, run_to = 0;
    long run_h = 0;
    for (std::size_t s = 0; s < end; ++s) {
        const std::size_t k = path.label_of_step(s);
        const std::size_t a = path.i_minus(s);
        long h = 0;
        if (k == hit_label && s >= hit) h -= 1;
        if (k > 0 && m <= path.running_max[a] && zeta[k] <= path.values[a]) h -= 1;
        if (h == run_h && k == run_k && s == run_to) {
            run_to = s + 1;
            continue;
        }
        if (run_h != 0) num.increment(run_k, run_from, run_to, run_h);
        run_k = k;
        run_h = h;
        run_from = s;
        run_to = s + 1;
    }
    if (run_h != 0) num.increment(run_k, run_from, run_to, run_h);
}

void check_path(const PathRecord& path, const std::vector<double>& zeta, double m) {
    check_zeta(zeta, m);
    if (zeta.size() != path.stops.size()) throw std::invalid_argument("zeta needs one value per label");
    if (path.running_max.size() != path.values.size()) throw std::invalid_argument("path lacks its running maximum");
    if (!(path.values.front() < m)) throw std::invalid_argument("path must start below m");
}

std::vector<double> label_values(const PathRecord& path) {
    std::vector<double> out;
    for (std::size_t k = 0; k < path.stops.size(); ++k) out.push_back(path.value_at(k));
    return out;
}

std::vector<double> zeta_on_labels(const Boundary& zeta, const std::vector<double>& labels) {
    if (!zeta.refined_by(labels)) throw std::invalid_argument("labels do not refine the boundary breakpoints");
    return zeta.sample(labels);
}

// Weighted integral over d phi of f(m) with the density part by trapezoid on the surface levels.
template <class F>
double integrate_dphi(const Payoff& payoff, const ZetaSurface& surface, F&& f) {
    double total = 0.0;
    for (const auto& a : payoff.atoms()) total += a.weight * f(a.level);
    if (payoff.has_density()) {
        const auto& levels = surface.levels();
        const double all = payoff.density_mass(payoff.density_grid().front(), payoff.density_grid().back());
        const double inside = levels.empty() ? 0.0 : payoff.density_mass(levels.front(), levels.back());
        if (all - inside > 1e-12 * std::max(1.0, all)) {
            throw std::invalid_argument("zeta surface levels do not cover the payoff density");
        }
        for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
            const double mass = payoff.density_mass(levels[i], levels[i + 1]);
            if (mass > 0.0) total += mass * 0.5 * (f(levels[i]) + f(levels[i + 1]));
        }
    }
    return total;
}

}  // namespace

double pathwise_rhs(const std::vector<double>& values, const std::vector<double>& maxes,
                    const std::vector<double>& zeta, double m, double start) {
    check_zeta(zeta, m);
    if (values.size() != zeta.size() || maxes.size() != zeta.size()) {
        throw std::invalid_argument("values, maxes and zeta must have one entry per label");
    }
    if (!(start < m)) throw std::invalid_argument("path must start below m");
    double prev = start;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (maxes[k] < values[k] || maxes[k] < prev) throw std::invalid_argument("running maxima are inconsistent");
        prev = maxes[k];
    }
    std::vector<double> path{start};
    path.insert(path.end(), values.begin(), values.end());
    std::vector<std::size_t> idx(values.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k + 1;
    Numerators num(path, zeta, m);
    add_raw(num, path, maxes, idx, start, m, zeta);
    return num.total();
}

Slack verify_pathwise(const PathRecord& path, const std::vector<double>& zeta, double m, PathwiseVariant variant,
                      double tolerance) {
    check_path(path, zeta, m);
    Numerators num(path.values, zeta, m);
    if (variant == PathwiseVariant::raw) {
        std::vector<double> maxes;
        for (std::size_t k = 0; k < path.stops.size(); ++k) maxes.push_back(path.max_at(k));
        add_raw(num, path.values, maxes, path.stops, path.values.front(), m, zeta);
    } else {
        add_static(num, path);
        add_dynamic(num, path, zeta, m);
    }
    const double lhs = path.max_at(path.stops.size() - 1) >= m ? 1.0 : 0.0;
    const double slack = num.total() - lhs;
    return Slack{slack >= -tolerance, slack};
}

double static_cost(const MarginalFamily& family, const Boundary& zeta, double m) {
    const auto& bp = zeta.breakpoints();
    const auto& z = zeta.values();
    double total = ratio(family.call_price(1.0, z.back()), m, z.back());
    for (std::size_t k = 1; k < z.size(); ++k) {
        if (z[k] == z[k - 1]) continue;
        const double s = bp[k];
        total += ratio(family.call_price(s, z[k - 1]), m, z[k - 1]) - ratio(family.call_price(s, z[k]), m, z[k]);
    }
    return total;
}

double static_payout(const std::vector<double>& labels, const std::vector<double>& values, const Boundary& zeta,
                     double m) {
    if (labels.size() != values.size()) throw std::invalid_argument("need one value per label");
    if (!zeta.refined_by(labels)) throw std::invalid_argument("labels do not refine the boundary breakpoints");
    if (!zeta.feasible_for(m)) throw std::invalid_argument("boundary must stay strictly below m");
    auto value_at = [&](double t) {
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (std::abs(labels[j] - t) <= 1e-12) return values[j];
        }
        throw std::invalid_argument("label missing");
    };
    const auto& bp = zeta.breakpoints();
    const auto& z = zeta.values();
    double total = plus_ratio(value_at(1.0), z.back(), m);
    for (std::size_t k = 1; k < z.size(); ++k) {
        if (z[k] == z[k - 1]) continue;
        const double x = value_at(bp[k]);
        total += plus_ratio(x, z[k - 1], m) - plus_ratio(x, z[k], m);
    }
    return total;
}

double dynamic_payout(const PathRecord& path, const std::vector<double>& zeta, double m) {
    check_path(path, zeta, m);
    Numerators num(path.values, zeta, m);
    add_dynamic(num, path, zeta, m);
    return num.total();
}

double dynamic_payout(const PathRecord& path, const Boundary& zeta, double m) {
    return dynamic_payout(path, zeta_on_labels(zeta, path.labels), m);
}

double mixture_payout(const PathRecord& path, const DualStrategy& strategy) {
    const auto values = label_values(path);
    return integrate_dphi(strategy.payoff, strategy.surface, [&](double m) {
        const Boundary& zeta = strategy.surface.at(m);
        const auto z = zeta_on_labels(zeta, path.labels);
        check_path(path, z, m);
        Numerators num(path.values, z, m);
        add_static(num, path);
        add_dynamic(num, path, z, m);
        return num.total();
    });
}

nlohmann::json MartingaleCheck::to_json() const {
    return {{"lhs", lhs}, {"lhs_stderr", lhs_error}, {"rhs", rhs}, {"rhs_stderr", rhs_error}, {"holds", holds}};
}

MartingaleCheck martingale_ineq_check(const MartingaleSamples& samples, const ZetaSurface& surface,
                                      const Payoff& payoff, double sigmas) {
    if (samples.n == 0 || samples.times.empty()) throw std::invalid_argument("martingale sample is empty");
    const std::size_t nt = samples.times.size();
    std::vector<double> lhs(samples.n), rhs(samples.n);
    std::vector<double> path(nt);
    for (std::size_t i = 0; i < samples.n; ++i) {
        for (std::size_t k = 0; k < nt; ++k) path[k] = samples.value(i, k);
        lhs[i] = payoff(samples.max(i, nt - 1)) - payoff.base();
        rhs[i] = integrate_dphi(payoff, surface, [&](double m) {
            return static_payout(samples.times, path, surface.at(m), m);
        });
    }
    auto stats = [](const std::vector<double>& xs) {
        const double n = static_cast<double>(xs.size());
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= n;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double se = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
        return std::pair{mean, se};
    };
    MartingaleCheck out;
    const auto [lm, ls] = stats(lhs);
    const auto [rm, rs] = stats(rhs);
    out.lhs = payoff.base() + lm;
    out.lhs_error = ls;
    out.rhs = payoff.base() + rm;
    out.rhs_error = rs;
    out.holds = out.lhs <= out.rhs + sigmas * std::hypot(ls, rs);
    return out;
}

double remark_bound(const MarginalFamily& c_m, const ZetaSurface& surface, const Payoff& payoff) {
    return payoff.base() + integrate_dphi(payoff, surface, [&](double m) { return psi(c_m, surface.at(m), m); });
}

nlohmann::json GapReport::to_json() const {
    return {{"primal", primal},
            {"primal_ci", primal_ci},
            {"dual", dual},
            {"allowance", allowance},
            {"gap", gap},
            {"relative_gap", relative_gap},
            {"status", weak_duality_violation ? "WEAK-DUALITY-VIOLATION" : (within_budget ? "ok" : "gap")}};
}

GapReport gap_report(double primal, double primal_ci, double dual, double allowance) {
    GapReport out;
    out.primal = primal;
    out.primal_ci = primal_ci;
    out.dual = dual;
    out.allowance = allowance;
    out.gap = dual - primal;
    out.relative_gap = dual != 0.0 ? out.gap / dual : 0.0;
    out.weak_duality_violation = out.gap < -(primal_ci + allowance);
    out.within_budget = std::abs(out.gap) <= primal_ci + allowance;
    return out;
}

void VerificationReport::add(std::size_t case_id, double slack, bool ok) {
    min_slack = n_cases == 0 ? slack : std::min(min_slack, slack);
    mean_slack += (slack - mean_slack) / static_cast<double>(n_cases + 1);
    ++n_cases;
    if (!ok && failures.size() < kMaxReportedFailures) failures.push_back({case_id, slack});
}

nlohmann::json VerificationReport::to_json() const {
    nlohmann::json f = nlohmann::json::array();
    for (const auto& c : failures) f.push_back({{"case_id", c.case_id}, {"slack", c.slack}});
    nlohmann::json out{{"check", check}, {"n_cases", n_cases}, {"failures", f}};
    out["min_slack"] = n_cases ? nlohmann::json(min_slack) : nlohmann::json(nullptr);
    out["mean_slack"] = n_cases ? nlohmann::json(mean_slack) : nlohmann::json(nullptr);
    return out;
}

VerificationReport pathwise_suite(std::size_t n_cases, std::uint64_t seed, double tolerance) {
    VerificationReport report;
    report.check = "pathwise";
    for (std::size_t c = 0; c < n_cases; ++c) {
        Philox4x32 rng(seed, c);
        boost::random::normal_distribution<double> normal;
        auto u = [&] { return rng.uniform(); };

        const double m = 0.1 + 1.9 * u();
        const std::size_t n = 1 + static_cast<std::size_t>(u() * 5.0);
        std::vector<double> values{0.0};
        std::vector<std::size_t> stops;
        std::vector<double> labels;
        const double jump_rate = u() < 0.5 ? 0.0 : 0.15;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t len = u() < 0.15 ? 0 : 1 + static_cast<std::size_t>(u() * 30.0);
            for (std::size_t s = 0; s < len; ++s) {
                double step = 0.15 * m * normal(rng);
                if (u() < jump_rate) step += (u() < 0.5 ? -1.0 : 1.0) * 1.5 * m * u();
                values.push_back(values.back() + step);
            }
            stops.push_back(values.size() - 1);
            labels.push_back(static_cast<double>(k + 1) / static_cast<double>(n));
        }
        // Exact touches of the level, sometimes right at a stop.
        if (values.size() > 1 && u() < 0.3) {
            const std::size_t at = 1 + static_cast<std::size_t>(u() * static_cast<double>(values.size() - 1));
            values[std::min(at, values.size() - 1)] = m;
        }
        if (u() < 0.1) {
            const std::size_t at = stops[static_cast<std::size_t>(u() * static_cast<double>(n))];
            if (at > 0) values[at] = m;
        }

        std::vector<double> zeta(n);
        for (auto& z : zeta) z = m - (0.02 + 3.0 * m) * u();
        std::sort(zeta.begin(), zeta.end());
        if (u() < 0.2) {
            zeta.back() = m - 1e-9;
        } else if (u() < 0.1) {
            std::fill(zeta.begin(), zeta.end(), zeta.front());
        }

        const PathRecord path = PathRecord::from_values(std::move(values), std::move(labels), std::move(stops));
        const Slack raw = verify_pathwise(path, zeta, m, PathwiseVariant::raw, tolerance);
        const Slack integrated = verify_pathwise(path, zeta, m, PathwiseVariant::integrated, tolerance);
        report.add(c, std::min(raw.slack, integrated.slack), raw.holds && integrated.holds);
    }
    return report;
}

VerificationReport superhedge_suite(const MarginalFamily& family, const DualStrategy& strategy,
                                    const std::vector<double>& labels, const SimulationConfig& config,
                                    double allowance) {
    std::vector<double> slack(config.n_paths);
    for_each_embedded_path(family, labels, config, [&](std::size_t p, const PathRecord& path) {
        const double target = strategy.payoff(path.max_at(path.stops.size() - 1)) - strategy.payoff.base();
        slack[p] = mixture_payout(path, strategy) - target;
    });
    VerificationReport report;
    report.check = "superhedge";
    for (std::size_t p = 0; p < slack.size(); ++p) report.add(p, slack[p], slack[p] >= -allowance);
    return report;
}

}  // namespace maxembed
