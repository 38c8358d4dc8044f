#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "maxembed/marginals.hpp"

namespace maxembed {

namespace {

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

bool strictly_increasing(const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

// Slope of the first/last segment of a row.
double edge_slope(const std::vector<double>& xs, const double* row, bool left) {
    const std::size_t n = xs.size();
    if (left) return (row[1] - row[0]) / (xs[1] - xs[0]);
    return (row[n - 1] - row[n - 2]) / (xs[n - 1] - xs[n - 2]);
}

// Point where the left edge line meets the asymptote c = -x.
double left_meeting(const std::vector<double>& xs, const double* row) {
    const double s = edge_slope(xs, row, true);
    if (s <= -1.0) return xs.front();
    return std::min(xs.front(), (s * xs.front() - row[0]) / (1.0 + s));
}

// Point where the right edge line meets c = 0.
double right_meeting(const std::vector<double>& xs, const double* row) {
    const double s = edge_slope(xs, row, false);
    if (s >= 0.0 || row[xs.size() - 1] <= 0.0) return xs.back();
    return xs.back() - row[xs.size() - 1] / s;
}

}  // namespace

CallSurface::CallSurface(std::vector<double> t_grid, std::vector<double> x_grid, std::vector<double> values)
    : t_grid_(std::move(t_grid)), x_grid_(std::move(x_grid)), values_(std::move(values)) {
    if (t_grid_.size() < 2 || x_grid_.size() < 2) {
        throw std::invalid_argument("call surface needs at least two t-nodes and two x-nodes");
    }
    if (!strictly_increasing(t_grid_) || !strictly_increasing(x_grid_)) {
        throw std::invalid_argument("call surface grids must be strictly increasing");
    }
    if (t_grid_.front() != 0.0 || t_grid_.back() != 1.0) {
        throw std::invalid_argument("call surface t-grid must run from 0 to 1");
    }
    if (values_.size() != t_grid_.size() * x_grid_.size()) {
        throw std::invalid_argument("call surface value count does not match the grid");
    }
}

std::pair<std::size_t, double> CallSurface::locate_t(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::domain_error("time " + std::to_string(t) + " outside [0, 1]");
    }
    auto it = std::upper_bound(t_grid_.begin(), t_grid_.end(), t);
    if (it == t_grid_.end()) return {t_grid_.size() - 2, 1.0};
    const std::size_t j = static_cast<std::size_t>(it - t_grid_.begin()) - 1;
    return {j, (t - t_grid_[j]) / (t_grid_[j + 1] - t_grid_[j])};
}

double CallSurface::row_call(std::size_t j, double x, bool* extrapolated) const {
    const double* row = &values_[j * x_grid_.size()];
    const auto& xs = x_grid_;
    if (x < xs.front() || x > xs.back()) {
        if (extrapolated) *extrapolated = true;
        if (x < xs.front()) {
            const double s = edge_slope(xs, row, true);
            const double meet = left_meeting(xs, row);
            if (x >= meet) return row[0] + s * (x - xs.front());
            const double at_meet = row[0] + s * (meet - xs.front());
            return at_meet - (x - meet);
        }
        const double s = edge_slope(xs, row, false);
        const double meet = right_meeting(xs, row);
        const double last = row[xs.size() - 1];
        if (x <= meet) return last + s * (x - xs.back());
        return last + s * (meet - xs.back());
    }
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.end()) return row[xs.size() - 1];
    const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
    const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    return (1.0 - w) * row[i] + w * row[i + 1];
}

double CallSurface::row_slope(std::size_t j, double x, bool right) const {
    const double* row = &values_[j * x_grid_.size()];
    const auto& xs = x_grid_;
    const double lmeet = left_meeting(xs, row);
    const double rmeet = right_meeting(xs, row);
    // Knot sequence: lmeet <= xs.front() < ... < xs.back() <= rmeet.
    if (right ? x < lmeet : x <= lmeet) return -1.0;
    if (right ? x >= rmeet : x > rmeet) return 0.0;
    if (right ? x < xs.front() : x <= xs.front()) return edge_slope(xs, row, true);
    if (right ? x >= xs.back() : x > xs.back()) return edge_slope(xs, row, false);
    std::size_t i;
    if (right) {
        i = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
    } else {
        i = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
    }
    return (row[i + 1] - row[i]) / (xs[i + 1] - xs[i]);
}

double CallSurface::call(double t, double x, bool* extrapolated) const {
    if (extrapolated) *extrapolated = false;
    const auto [j, w] = locate_t(t);
    if (w == 0.0) return row_call(j, x, extrapolated);
    if (w == 1.0) return row_call(j + 1, x, extrapolated);
    return (1.0 - w) * row_call(j, x, extrapolated) + w * row_call(j + 1, x, extrapolated);
}

double CallSurface::dt_call(double t, double x) const {
    const auto [j, w] = locate_t(t);
    const std::size_t last = t_grid_.size() - 1;
    // Snap to a node when t sits on the grid.
    std::size_t node = last + 1;
    const double tol = 1e-12;
    if (std::abs(t - t_grid_[j]) <= tol) node = j;
    if (std::abs(t - t_grid_[j + 1]) <= tol) node = j + 1;
    if (node > last) {
        return (row_call(j + 1, x, nullptr) - row_call(j, x, nullptr)) / (t_grid_[j + 1] - t_grid_[j]);
    }
    const std::size_t lo = node == 0 ? 0 : node - 1;
    const std::size_t hi = node == last ? last : node + 1;
    return (row_call(hi, x, nullptr) - row_call(lo, x, nullptr)) / (t_grid_[hi] - t_grid_[lo]);
}

double CallSurface::right_slope(double t, double x) const {
    const auto [j, w] = locate_t(t);
    if (w == 0.0) return row_slope(j, x, true);
    if (w == 1.0) return row_slope(j + 1, x, true);
    return (1.0 - w) * row_slope(j, x, true) + w * row_slope(j + 1, x, true);
}

double CallSurface::left_slope(double t, double x) const {
    const auto [j, w] = locate_t(t);
    if (w == 0.0) return row_slope(j, x, false);
    if (w == 1.0) return row_slope(j + 1, x, false);
    return (1.0 - w) * row_slope(j, x, false) + w * row_slope(j + 1, x, false);
}

double CallSurface::upper_endpoint(double t) const {
    const auto [j, w] = locate_t(t);
    const double a = right_meeting(x_grid_, &values_[j * x_grid_.size()]);
    const double b = right_meeting(x_grid_, &values_[(j + 1) * x_grid_.size()]);
    if (w == 0.0) return a;
    if (w == 1.0) return b;
    return std::max(a, b);
}

double CallSurface::lower_endpoint(double t) const {
    const auto [j, w] = locate_t(t);
    const double a = left_meeting(x_grid_, &values_[j * x_grid_.size()]);
    const double b = left_meeting(x_grid_, &values_[(j + 1) * x_grid_.size()]);
    if (w == 0.0) return a;
    if (w == 1.0) return b;
    return std::min(a, b);
}

LoadedSurface load_call_surface(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path.string());
    return parse_call_surface(in);
}

LoadedSurface parse_call_surface(std::istream& in) {
    auto trim = [](std::string s) {
        const auto first = s.find_first_not_of(" \t\r");
        if (first == std::string::npos) return std::string();
        const auto last = s.find_last_not_of(" \t\r");
        return s.substr(first, last - first + 1);
    };

    std::string line;
    std::size_t row = 0;
    bool have_header = false;
    std::map<std::pair<double, double>, double> nodes;
    while (std::getline(in, line)) {
        ++row;
        line = trim(line);
        if (line.empty()) continue;
        if (!have_header) {
            std::string compact;
            for (char ch : line) {
                if (ch != ' ' && ch != '\t') compact.push_back(ch);
            }
            if (compact != "t,x,c") throw ParseError(row, "expected header `t,x,c`");
            have_header = true;
            continue;
        }
        std::array<double, 3> fields{};
        std::stringstream ss(line);
        std::string cell;
        std::size_t count = 0;
        while (std::getline(ss, cell, ',')) {
            if (count == 3) throw ParseError(row, "too many fields");
            cell = trim(cell);
            std::size_t used = 0;
            try {
                fields[count] = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ParseError(row, "malformed number `" + cell + "`");
            }
            if (used != cell.size() || !std::isfinite(fields[count])) {
                throw ParseError(row, "malformed number `" + cell + "`");
            }
            ++count;
        }
        if (count != 3) throw ParseError(row, "expected 3 fields");
        const auto [t, x, c] = fields;
        if (t < 0.0 || t > 1.0) throw ParseError(row, "t outside [0, 1]");
        if (!nodes.emplace(std::make_pair(t, x), c).second) {
            throw ParseError(row, "duplicate node (t=" + std::to_string(t) + ", x=" + std::to_string(x) + ")");
        }
    }
    if (!have_header) throw ParseError(row, "empty file");
    if (nodes.empty()) throw ParseError(row, "no data rows");

    std::set<double> ts, xs;
    for (const auto& [key, c] : nodes) {
        ts.insert(key.first);
        xs.insert(key.second);
    }
    if (!ts.contains(0.0)) {
        for (double x : xs) nodes.emplace(std::make_pair(0.0, x), positive_part(-x));
        ts.insert(0.0);
    }
    if (nodes.size() != ts.size() * xs.size()) {
        for (double t : ts) {
            for (double x : xs) {
                if (!nodes.contains({t, x})) {
                    throw ParseError(row, "grid is not rectangular: missing node (t=" + std::to_string(t) +
                                              ", x=" + std::to_string(x) + ")");
                }
            }
        }
    }
    if (*ts.rbegin() != 1.0) throw ParseError(row, "t-grid must end at 1");
    if (xs.size() < 2) throw ParseError(row, "need at least two strikes");

    std::vector<double> t_grid(ts.begin(), ts.end());
    std::vector<double> x_grid(xs.begin(), xs.end());
    std::vector<double> values;
    values.reserve(nodes.size());
    for (const auto& [key, c] : nodes) values.push_back(c);  // map order is t-major, then x

    CallSurface surface(t_grid, x_grid, std::move(values));
    auto family = MarginalFamily::tabulated(surface);
    ValidationReport report = check_peacock(family, t_grid, x_grid);
    return LoadedSurface{std::move(surface), std::move(report)};
}

}  // namespace maxembed
