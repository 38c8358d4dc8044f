#pragma once

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace maxembed {

/// Rectangular table of call prices c(t, x) on a (t, x) grid.
///
/// Values are interpolated linearly in t and piecewise-linearly in x. Both
/// schemes keep convexity and monotonicity of the nodal data. Outside the
/// x-grid the surface follows the last slope until it meets the asymptote
/// c = 0 (right) or c = -x (left).
class CallSurface {
public:
    CallSurface(std::vector<double> t_grid, std::vector<double> x_grid,
                std::vector<double> values);

    const std::vector<double>& t_grid() const { return t_grid_; }
    const std::vector<double>& x_grid() const { return x_grid_; }
    double node(std::size_t j, std::size_t i) const { return values_[j * x_grid_.size() + i]; }

    /// c(t, x); `extrapolated` is set when x lies outside the x-grid.
    double call(double t, double x, bool* extrapolated = nullptr) const;
    /// Derivative of the t-interpolant; central differences at t-nodes.
    double dt_call(double t, double x) const;
    /// Right and left x-derivatives of c(t, .).
    double right_slope(double t, double x) const;
    double left_slope(double t, double x) const;
    /// Smallest x with c(t, x) = 0 along the (extrapolated) surface.
    double upper_endpoint(double t) const;
    /// Largest x with c(t, x) = -x.
    double lower_endpoint(double t) const;

private:
    double row_call(std::size_t j, double x, bool* extrapolated) const;
    double row_slope(std::size_t j, double x, bool right) const;
    // Bracketing t-nodes and the interpolation weight on the upper one.
    std::pair<std::size_t, double> locate_t(double t) const;

    std::vector<double> t_grid_;
    std::vector<double> x_grid_;
    std::vector<double> values_;
};

struct CallQuote {
    double value = 0.0;
    bool extrapolated = false;
};

enum class FamilyKind { gaussian, scaled, tabulated };

/// Base law X of a scaled family, mu_t = law(sqrt(t) X).
enum class BaseLaw { uniform };

/// Peacock (mu_t), t in [0, 1], exposed through its call function.
///
/// Immutable; copies share tabulated data.
class MarginalFamily {
public:
    static MarginalFamily gaussian(double sigma);
    static MarginalFamily scaled(BaseLaw law);
    static MarginalFamily tabulated(CallSurface surface);

    FamilyKind kind() const;
    bool analytic() const { return kind() != FamilyKind::tabulated; }
    const CallSurface* surface() const;
    std::string describe() const;

    double call_price(double t, double x) const;
    CallQuote call_quote(double t, double x) const;
    /// d/dt c(t, x). Returns +inf at the (0, 0) singularity of analytic kinds.
    double dt_call(double t, double x) const;

    /// P(X <= x) and P(X < x) under mu_t.
    double cdf(double t, double x) const;
    double cdf_left(double t, double x) const;
    double quantile(double t, double p) const;

    /// Mean of mu_t restricted to [x, inf); equals x at or above the right endpoint.
    double barycenter(double t, double x) const;
    double barycenter_inverse(double t, double m) const;

    double upper_endpoint(double t) const;
    double lower_endpoint(double t) const;
    /// Standard deviation of mu_1, used to size grids and probes.
    double unit_scale() const;

private:
    struct Gaussian {
        double sigma;
    };
    struct Scaled {
        BaseLaw law;
    };
    struct Tabulated {
        std::shared_ptr<const CallSurface> surface;
    };
    using Impl = std::variant<Gaussian, Scaled, Tabulated>;

    explicit MarginalFamily(Impl impl) : impl_(std::move(impl)) {}

    Impl impl_;
};

struct Violation {
    std::string kind;
    double t = 0.0;
    double x = 0.0;
    double magnitude = 0.0;
};

struct ValidationReport {
    bool pass = true;
    std::vector<Violation> violations;

    /// Keeps the worst node per violation kind.
    void record(const std::string& kind, double t, double x, double magnitude);
    nlohmann::json to_json() const;
};

/// Default tolerances: 1e-8 for analytic families, 1e-4 for tabulated ones.
double default_tolerance(const MarginalFamily& family);

/// Convex-order, convexity, slope, centering and mu_0 = delta_0 checks.
ValidationReport check_peacock(const MarginalFamily& family, const std::vector<double>& t_grid,
                               const std::vector<double>& x_grid, double tolerance = -1.0);

/// Increasing mean residual value: b_t(x) non-decreasing in t.
ValidationReport check_imrv(const MarginalFamily& family, const std::vector<double>& t_grid,
                            const std::vector<double>& x_grid, double tolerance = -1.0);

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t row, const std::string& what)
        : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

struct LoadedSurface {
    CallSurface surface;
    ValidationReport report;
};

/// Reads a `t,x,c` CSV. A missing t = 0 row is synthesized as (-x)^+.
LoadedSurface load_call_surface(const std::filesystem::path& path);
LoadedSurface parse_call_surface(std::istream& in);

/// Tabulates an analytic family onto a grid (t-grid must start at 0 and end at 1).
CallSurface tabulate(const MarginalFamily& family, const std::vector<double>& t_grid,
                     const std::vector<double>& x_grid);

std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace maxembed
