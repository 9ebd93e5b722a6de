#include "qsurf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qsurf/error.hpp"

namespace qsurf {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::support_escapes_box: return "support-escapes-box";
        case ErrorCode::ball_escapes_box: return "ball-escapes-box";
        case ErrorCode::negativity: return "negativity";
        case ErrorCode::length_mismatch: return "length-mismatch";
        case ErrorCode::ordering_violation: return "ordering-violation";
        case ErrorCode::box_too_small: return "box-too-small";
        case ErrorCode::non_convergence: return "non-convergence";
        case ErrorCode::family_disagreement: return "family-disagreement";
        case ErrorCode::segregation_violation: return "segregation-violation";
        case ErrorCode::coincident_points: return "coincident-points";
        case ErrorCode::radius_below_grid: return "radius-below-grid";
        case ErrorCode::no_root: return "no-root";
        case ErrorCode::nonvanishing_at_sphere: return "nonvanishing-at-sphere";
        case ErrorCode::overlap: return "overlap";
        case ErrorCode::parse_error: return "parse-error";
        case ErrorCode::validation_error: return "validation-error";
        case ErrorCode::missing_input: return "missing-input";
        case ErrorCode::io_error: return "io-error";
    }
    return "error";
}

double unit_sphere_area(int dim) {
    return dim == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
}

double ball_volume(int dim, double r) {
    return dim == 2 ? std::numbers::pi * r * r : 4.0 / 3.0 * std::numbers::pi * r * r * r;
}

double sphere_area(int dim, double r) {
    return dim == 2 ? 2.0 * std::numbers::pi * r : 4.0 * std::numbers::pi * r * r;
}

std::size_t Grid::cell_count() const {
    std::size_t c = 1;
    for (int a = 0; a < dim_; ++a) c *= static_cast<std::size_t>(cells_[a]);
    return c;
}

Index3 Grid::unravel(std::size_t idx) const {
    Index3 p{};
    p[2] = static_cast<int>(idx % nodes_[2]);
    idx /= nodes_[2];
    p[1] = static_cast<int>(idx % nodes_[1]);
    p[0] = static_cast<int>(idx / nodes_[1]);
    return p;
}

Point Grid::upper() const {
    Point u = origin_;
    for (int a = 0; a < dim_; ++a) u[a] += h_ * cells_[a];
    return u;
}

double Grid::node_weight(const Index3& p) const {
    double w = cell_volume();
    for (int a = 0; a < dim_; ++a)
        if (p[a] == 0 || p[a] == cells_[a]) w *= 0.5;
    return w;
}

std::vector<double> Grid::node_weights() const {
    std::vector<double> w(node_count());
    for (std::size_t n = 0; n < w.size(); ++n) w[n] = node_weight(unravel(n));
    return w;
}

double Grid::cell_volume() const { return std::pow(h_, dim_); }

double Grid::distance_to_boundary(const Point& p) const {
    double d = INFINITY;
    const Point u = upper();
    for (int a = 0; a < dim_; ++a) d = std::min({d, p[a] - origin_[a], u[a] - p[a]});
    return d;
}

Grid build_grid(int dim, std::span<const double> origin, double h, std::span<const int> cells_per_axis) {
    if (dim != 2 && dim != 3)
        throw Error(ErrorCode::invalid_argument, "grid dimension must be 2 or 3, got " + std::to_string(dim));
    if (!std::isfinite(h) || h <= 0.0) throw Error(ErrorCode::invalid_argument, "grid spacing must be finite and positive");
    if (origin.size() != static_cast<std::size_t>(dim) || cells_per_axis.size() != static_cast<std::size_t>(dim))
        throw Error(ErrorCode::invalid_argument, "origin and cells_per_axis need one entry per axis");
    Grid g;
    g.dim_ = dim;
    g.h_ = h;
    for (int a = 0; a < 3; ++a) {
        if (a < dim) {
            if (!std::isfinite(origin[a])) throw Error(ErrorCode::invalid_argument, "grid origin must be finite");
            if (cells_per_axis[a] < 8) throw Error(ErrorCode::invalid_argument, "at least 8 cells per axis are required");
            g.origin_[a] = origin[a];
            g.cells_[a] = cells_per_axis[a];
            g.nodes_[a] = cells_per_axis[a] + 1;
        } else {
            g.origin_[a] = 0.0;
            g.cells_[a] = 0;
            g.nodes_[a] = 1;
        }
    }
    return g;
}

ScalarField::ScalarField(Grid grid) : grid_(grid), values_(grid.node_count(), 0.0) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.node_count())
        throw Error(ErrorCode::length_mismatch, "field has " + std::to_string(values_.size()) + " values, grid has " +
                                                    std::to_string(grid_.node_count()) + " nodes");
}

ScalarField ScalarField::constant(const Grid& grid, double value) {
    ScalarField f(grid);
    std::fill(f.values_.begin(), f.values_.end(), value);
    return f;
}

double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double ScalarField::min() const { return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }

bool ScalarField::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* what) {
    if (!(a.grid() == b.grid()))
        throw Error(ErrorCode::length_mismatch, std::string(what) + ": fields live on different grids");
}

ScalarField positive_part(const ScalarField& u) {
    ScalarField out(u.grid());
    for (std::size_t n = 0; n < u.size(); ++n) out[n] = std::max(u[n], 0.0);
    return out;
}

ScalarField negative_part(const ScalarField& u) {
    ScalarField out(u.grid());
    for (std::size_t n = 0; n < u.size(); ++n) out[n] = std::max(-u[n], 0.0);
    return out;
}

double MeasureSpec::total_mass(int dim) const {
    double m = 0.0;
    for (const Atom& a : atoms) m += a.sign * a.mass;
    for (const Shell& s : shells) m += s.sign * s.surface_density * sphere_area(dim, s.radius);
    if (background) m -= integrate(*background);
    return m;
}

namespace {

double bump(double t) {
    if (t >= 1.0) return 0.0;
    const double q = 1.0 - t * t;
    return q * q;
}

// Node index range covering the ball |x - c| <= r, clipped to the grid.
void node_range(const Grid& g, const Point& c, double r, Index3& lo, Index3& hi) {
    for (int a = 0; a < 3; ++a) {
        if (a >= g.dim()) {
            lo[a] = 0;
            hi[a] = 0;
            continue;
        }
        lo[a] = std::max(0, static_cast<int>(std::floor((c[a] - r - g.origin()[a]) / g.spacing())));
        hi[a] = std::min(g.cells()[a], static_cast<int>(std::ceil((c[a] + r - g.origin()[a]) / g.spacing())));
    }
}

double dist(const Point& a, const Point& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

// Adds mass * profile / (grid integral of profile) over the nodes within `reach` of c.
template <class Profile>
void deposit(ScalarField& out, const Point& c, double reach, double mass, Profile&& profile, const char* what) {
    const Grid& g = out.grid();
    Index3 lo, hi;
    node_range(g, c, reach, lo, hi);
    std::vector<std::pair<std::size_t, double>> raw;
    double total = 0.0;
    for (int i = lo[0]; i <= hi[0]; ++i)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int k = lo[2]; k <= hi[2]; ++k) {
                const double v = profile(dist(g.node(i, j, k), c));
                if (v <= 0.0) continue;
                const Index3 p{i, j, k};
                raw.emplace_back(g.index(p), v);
                total += v * g.node_weight(p);
            }
    if (total <= 0.0)
        throw Error(ErrorCode::invalid_argument, std::string(what) + " mollifier radius is below the grid resolution");
    for (auto [n, v] : raw) out[n] += mass * v / total;
}

}  // namespace

ScalarField rasterize_measure(const MeasureSpec& spec, const Grid& grid) {
    ScalarField out(grid);
    for (const Atom& a : spec.atoms) {
        if (a.mass == 0.0) continue;
        if (!(a.mollifier_radius > 0.0)) throw Error(ErrorCode::invalid_argument, "atom mollifier radius must be positive");
        if (grid.distance_to_boundary(a.center) < 3.0 * a.mollifier_radius)
            throw Error(ErrorCode::support_escapes_box, "atom support is not 2 mollifier radii inside the box");
        const double r = a.mollifier_radius;
        deposit(out, a.center, r, a.sign * a.mass, [r](double s) { return bump(s / r); }, "atom");
    }
    for (const Shell& s : spec.shells) {
        if (s.surface_density == 0.0) continue;
        const double rho = s.mollifier_radius;
        if (!(rho > 0.0) || !(s.radius > rho))
            throw Error(ErrorCode::invalid_argument, "shell needs 0 < mollifier_radius < radius");
        if (grid.distance_to_boundary(s.center) < s.radius + 3.0 * rho)
            throw Error(ErrorCode::support_escapes_box, "shell support is not 2 mollifier radii inside the box");
        const double mass = s.sign * s.surface_density * sphere_area(grid.dim(), s.radius);
        const double R = s.radius;
        deposit(out, s.center, R + rho, mass, [R, rho](double r) { return bump(std::abs(r - R) / rho); }, "shell");
    }
    if (spec.background) {
        require_same_grid(out, *spec.background, "measure background");
        for (std::size_t n = 0; n < out.size(); ++n) out[n] -= (*spec.background)[n];
    }
    return out;
}

double integrate(const ScalarField& field) {
    const Grid& g = field.grid();
    double total = 0.0;
    for (std::size_t n = 0; n < field.size(); ++n) total += field[n] * g.node_weight(g.unravel(n));
    return total;
}

double dirichlet_energy(const ScalarField& field) {
    const Grid& g = field.grid();
    const auto& v = field.values();
    double total = 0.0;
    for_each_edge(g, [&](std::size_t a, std::size_t b) {
        const double d = v[b] - v[a];
        total += d * d;
    });
    return total * std::pow(g.spacing(), g.dim() - 2);
}

namespace {

struct CellLocation {
    Index3 base{};
    std::array<double, 3> t{};
};

CellLocation locate(const Grid& g, const Point& p) {
    CellLocation loc;
    const double tol = 1e-9;
    for (int a = 0; a < g.dim(); ++a) {
        const double s = (p[a] - g.origin()[a]) / g.spacing();
        if (!(s >= -tol && s <= g.cells()[a] + tol))
            throw Error(ErrorCode::ball_escapes_box, "interpolation point lies outside the grid box");
        int i = static_cast<int>(std::floor(s));
        i = std::clamp(i, 0, g.cells()[a] - 1);
        loc.base[a] = i;
        loc.t[a] = std::clamp(s - i, 0.0, 1.0);
    }
    return loc;
}

}  // namespace

double interpolate(const ScalarField& field, const Point& p) {
    const Grid& g = field.grid();
    const CellLocation c = locate(g, p);
    const auto& t = c.t;
    if (g.dim() == 2) {
        const std::size_t n00 = g.index(c.base[0], c.base[1], 0);
        const std::size_t n10 = g.index(c.base[0] + 1, c.base[1], 0);
        const double v00 = field[n00], v01 = field[n00 + 1], v10 = field[n10], v11 = field[n10 + 1];
        return (1 - t[0]) * ((1 - t[1]) * v00 + t[1] * v01) + t[0] * ((1 - t[1]) * v10 + t[1] * v11);
    }
    double v = 0.0;
    for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj)
            for (int dk = 0; dk < 2; ++dk) {
                const double w = (di ? t[0] : 1 - t[0]) * (dj ? t[1] : 1 - t[1]) * (dk ? t[2] : 1 - t[2]);
                v += w * field[g.index(c.base[0] + di, c.base[1] + dj, c.base[2] + dk)];
            }
    return v;
}

std::array<double, 3> interpolate_gradient(const ScalarField& field, const Point& p) {
    const Grid& g = field.grid();
    const CellLocation c = locate(g, p);
    const auto& t = c.t;
    const double inv_h = 1.0 / g.spacing();
    std::array<double, 3> grad{0.0, 0.0, 0.0};
    if (g.dim() == 2) {
        const std::size_t n00 = g.index(c.base[0], c.base[1], 0);
        const std::size_t n10 = g.index(c.base[0] + 1, c.base[1], 0);
        const double v00 = field[n00], v01 = field[n00 + 1], v10 = field[n10], v11 = field[n10 + 1];
        grad[0] = ((1 - t[1]) * (v10 - v00) + t[1] * (v11 - v01)) * inv_h;
        grad[1] = ((1 - t[0]) * (v01 - v00) + t[0] * (v11 - v10)) * inv_h;
        return grad;
    }
    for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj)
            for (int dk = 0; dk < 2; ++dk) {
                const double v = field[g.index(c.base[0] + di, c.base[1] + dj, c.base[2] + dk)];
                const double wx = di ? t[0] : 1 - t[0], wy = dj ? t[1] : 1 - t[1], wz = dk ? t[2] : 1 - t[2];
                grad[0] += (di ? 1.0 : -1.0) * wy * wz * v;
                grad[1] += (dj ? 1.0 : -1.0) * wx * wz * v;
                grad[2] += (dk ? 1.0 : -1.0) * wx * wy * v;
            }
    for (double& x : grad) x *= inv_h;
    return grad;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

}  // namespace

void sphere_quadrature(int dim, double r, double h, const Point& center, std::vector<Point>& points,
                       std::vector<double>& weights) {
    points.clear();
    weights.clear();
    if (dim == 2) {
        const int n = std::max(64, static_cast<int>(std::ceil(8.0 * r / h)));
        for (int j = 0; j < n; ++j) {
            const double th = 2.0 * std::numbers::pi * j / n;
            points.push_back({center[0] + r * std::cos(th), center[1] + r * std::sin(th), 0.0});
            weights.push_back(1.0 / n);
        }
        return;
    }
    // Gauss-Legendre in cos(theta) times a uniform azimuthal rule.
    const int nt = std::max(16, static_cast<int>(std::ceil(4.0 * r / h)));
    const int np = 2 * nt;
    std::vector<double> x, w;
    gauss_legendre(nt, x, w);
    for (int i = 0; i < nt; ++i) {
        const double ct = x[i], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int j = 0; j < np; ++j) {
            const double ph = 2.0 * std::numbers::pi * j / np;
            points.push_back({center[0] + r * st * std::cos(ph), center[1] + r * st * std::sin(ph), center[2] + r * ct});
            weights.push_back(w[i] / (2.0 * np));
        }
    }
}

double spherical_average(const ScalarField& field, const Point& center, double r) {
    const Grid& g = field.grid();
    if (!(r > 0.0)) throw Error(ErrorCode::invalid_argument, "sphere radius must be positive");
    if (g.distance_to_boundary(center) < r * (1.0 - 1e-12))
        throw Error(ErrorCode::ball_escapes_box, "sphere of radius " + std::to_string(r) + " leaves the grid box");
    std::vector<Point> pts;
    std::vector<double> wts;
    sphere_quadrature(g.dim(), r, g.spacing(), center, pts, wts);
    double s = 0.0;
    for (std::size_t q = 0; q < pts.size(); ++q) s += wts[q] * interpolate(field, pts[q]);
    return s;
}

}  // namespace qsurf
