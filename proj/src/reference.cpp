#include "qsurf/reference.hpp"

#include <algorithm>
#include <cmath>

#include "qsurf/error.hpp"

namespace qsurf {

namespace {

constexpr double kPi = 3.14159265358979323846;

double basis(int dim, double r) { return dim == 2 ? std::log(r) : std::pow(r, 2.0 - dim); }
double basis_prime(int dim, double r) { return dim == 2 ? 1.0 / r : (2.0 - dim) * std::pow(r, 1.0 - dim); }

double piece_value(int dim, const RadialPiece& p, double r) { return p.a + p.b * basis(dim, r); }
double piece_slope(int dim, const RadialPiece& p, double r) { return p.b * basis_prime(dim, r); }

void require_dim(int dim, const char* what) {
    if (dim != 2 && dim != 3) throw Error(ErrorCode::invalid_argument, std::string(what) + ": dim must be 2 or 3");
}

// Gauss-Legendre nodes and weights on [-1, 1].
struct Rule {
    std::vector<double> x, w;
};

const Rule& gauss_legendre(int n) {
    static thread_local std::vector<Rule> cache;
    if (static_cast<int>(cache.size()) <= n) cache.resize(n + 1);
    Rule& rule = cache[n];
    if (!rule.x.empty()) return rule;
    rule.x.resize(n);
    rule.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        rule.x[i] = x;
        rule.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

// Σ fn(t) w over [a, b].
template <class Fn>
double integrate_1d(double a, double b, int order, Fn&& fn) {
    const Rule& rule = gauss_legendre(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < order; ++i) s += rule.w[i] * fn(mid + half * rule.x[i]);
    return s * half;
}

double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Points of the sphere |x - c| = rho with polar angle θ measured from the last
// axis, visited as fn(x, unit normal, weight). Gauss-Legendre in θ on each
// interval between consecutive `splits`, trapezoid in the azimuth.
template <class Fn>
void sphere_rule(int dim, const Point& c, double rho, std::vector<double> splits, int order, Fn&& fn) {
    splits.push_back(0.0);
    splits.push_back(kPi);
    std::sort(splits.begin(), splits.end());
    const Rule& rule = gauss_legendre(order);
    const int n_phi = 2 * order;
    for (std::size_t s = 0; s + 1 < splits.size(); ++s) {
        const double a = splits[s], b = splits[s + 1];
        if (!(b > a)) continue;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int i = 0; i < order; ++i) {
            const double th = mid + half * rule.x[i];
            const double wt = rule.w[i] * half;
            const double st = std::sin(th), ct = std::cos(th);
            if (dim == 2) {
                for (int side = -1; side <= 1; side += 2) {
                    const Point n{side * st, ct, 0.0};
                    fn(Point{c[0] + rho * n[0], c[1] + rho * n[1], 0.0}, n, wt * rho);
                }
            } else {
                for (int k = 0; k < n_phi; ++k) {
                    const double ph = 2.0 * kPi * k / n_phi;
                    const Point n{st * std::cos(ph), st * std::sin(ph), ct};
                    fn(Point{c[0] + rho * n[0], c[1] + rho * n[1], c[2] + rho * n[2]}, n,
                       wt * rho * rho * st * 2.0 * kPi / n_phi);
                }
            }
        }
    }
}

// ∫_{∂W} (h ∂_ν u - u ∂_ν h)
double window_flux(const AnalyticField& u, const TestFunction& h, const Point& c, double rho,
                   const std::vector<double>& splits, int order) {
    double sum = 0.0;
    sphere_rule(u.dim, c, rho, splits, order, [&](const Point& x, const Point& n, double w) {
        const double uv = u.value(x);
        const Point gu = u.gradient(x);
        const auto gh = h.gradient(x);
        sum += w * (h.value(x) * dot(gu, n) - uv * (gh[0] * n[0] + gh[1] * n[1] + gh[2] * n[2]));
    });
    return sum;
}

// ∫ h over {x_N = t} ∩ B_rho(c)
double flat_slice(int dim, const TestFunction& h, const Point& c, double rho, double t, int order) {
    const int axis = dim - 1;
    const double dz = t - c[axis];
    if (std::abs(dz) >= rho) return 0.0;
    const double a = std::sqrt(rho * rho - dz * dz);
    if (dim == 2) return integrate_1d(c[0] - a, c[0] + a, order, [&](double x) { return h.value({x, t, 0.0}); });
    const int n_phi = 2 * order;
    return integrate_1d(0.0, a, order, [&](double s) {
        double ring = 0.0;
        for (int k = 0; k < n_phi; ++k) {
            const double ph = 2.0 * kPi * k / n_phi;
            ring += h.value({c[0] + s * std::cos(ph), c[1] + s * std::sin(ph), t});
        }
        return ring * s * 2.0 * kPi / n_phi;
    });
}

WindowResidual finish(double surface, double correction) {
    WindowResidual out;
    out.surface = surface;
    out.correction = correction;
    out.residual = surface - correction;
    out.scale = std::max({std::abs(surface), std::abs(correction), 1.0});
    return out;
}

}  // namespace

std::vector<double> RadialSolution::breakpoints() const {
    std::vector<double> out;
    for (const auto& p : pieces) out.push_back(p.r_lo);
    if (!pieces.empty()) out.push_back(pieces.back().r_hi);
    return out;
}

double RadialSolution::value(double r) const {
    for (const auto& p : pieces)
        if (r >= p.r_lo && r <= p.r_hi) return piece_value(dim, p, r);
    return 0.0;
}

double RadialSolution::derivative_left(double r) const {
    for (const auto& p : pieces)
        if (r > p.r_lo && r <= p.r_hi) return piece_slope(dim, p, r);
    return 0.0;
}

double RadialSolution::derivative_right(double r) const {
    for (const auto& p : pieces)
        if (r >= p.r_lo && r < p.r_hi) return piece_slope(dim, p, r);
    return 0.0;
}

double RadialSolution::derivative(double r) const {
    for (const auto& p : pieces)
        if (r >= p.r_lo && r <= p.r_hi) return piece_slope(dim, p, r);
    return 0.0;
}

double RadialSolution::continuity_residual() const {
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
        const double r = pieces[i].r_hi;
        worst = std::max(worst, std::abs(piece_value(dim, pieces[i], r) - piece_value(dim, pieces[i + 1], r)));
    }
    return worst;
}

double RadialSolution::jump_residual() const {
    double worst = 0.0;
    for (const auto& s : shells)
        worst = std::max(worst, std::abs(derivative_right(s.radius) - derivative_left(s.radius) + s.density));
    return worst;
}

double RadialSolution::boundary_residual() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < boundary_radii.size(); ++i) {
        const double r = boundary_radii[i];
        worst = std::max(worst, std::abs(value(r)));
        if (i < boundary_gradients.size())
            worst = std::max(worst, std::abs(std::abs(derivative(r)) - boundary_gradients[i]));
    }
    return worst;
}

ScalarField RadialSolution::sample(const Grid& grid, const Point& center, double r_min) const {
    return ScalarField::sample(grid, [&](const Point& x) {
        const double r = std::sqrt((x[0] - center[0]) * (x[0] - center[0]) + (x[1] - center[1]) * (x[1] - center[1]) +
                                   (x[2] - center[2]) * (x[2] - center[2]));
        return value(std::max(r, r_min));
    });
}

RadialSolution radial_one_phase(double mass, double g0, int dim) {
    require_dim(dim, "radial_one_phase");
    if (!(mass > 0.0) || !(g0 > 0.0))
        throw Error(ErrorCode::invalid_argument, "radial_one_phase needs positive mass and gradient bound");
    RadialSolution s;
    s.dim = dim;
    double R;
    RadialPiece p;
    if (dim == 2) {
        R = mass / (2.0 * kPi * g0);
        p.b = -mass / (2.0 * kPi);
        p.a = -p.b * std::log(R);
    } else {
        R = std::sqrt(mass / (4.0 * kPi * g0));
        p.b = mass / (4.0 * kPi);
        p.a = -p.b / R;
    }
    p.r_lo = 0.0;
    p.r_hi = R;
    s.pieces = {p};
    s.boundary_radii = {R};
    s.boundary_gradients = {g0};
    return s;
}

RadialSolution kelvin_invert(const RadialSolution& radial, double inversion_radius, bool odd) {
    const int dim = radial.dim;
    require_dim(dim, "kelvin_invert");
    const double rho = inversion_radius;
    if (!(rho > 0.0)) throw Error(ErrorCode::invalid_argument, "kelvin_invert needs a positive inversion radius");
    double coeff_scale = 1.0;
    for (const auto& p : radial.pieces) {
        if (!(p.r_lo > 0.0)) throw Error(ErrorCode::invalid_argument, "kelvin_invert needs pieces away from r = 0");
        coeff_scale = std::max({coeff_scale, std::abs(p.a), std::abs(p.b)});
    }
    const double at_sphere = radial.value(rho);
    if (std::abs(at_sphere) > 1e-12 * coeff_scale)
        throw Error(ErrorCode::nonvanishing_at_sphere,
                    "u = " + std::to_string(at_sphere) + " on the inversion sphere");
    const double s = odd ? -1.0 : 1.0;
    RadialSolution out;
    out.dim = dim;
    for (auto it = radial.pieces.rbegin(); it != radial.pieces.rend(); ++it) {
        RadialPiece q;
        q.r_lo = rho * rho / it->r_hi;
        q.r_hi = rho * rho / it->r_lo;
        if (dim == 2) {
            q.a = s * (it->a + 2.0 * it->b * std::log(rho));
            q.b = -s * it->b;
        } else {
            q.a = s * it->b * std::pow(rho, 2.0 - dim);
            q.b = s * it->a * std::pow(rho, dim - 2.0);
        }
        out.pieces.push_back(q);
    }
    for (std::size_t i = 0; i + 1 < out.pieces.size(); ++i) {
        const double r = out.pieces[i].r_hi;
        out.shells.push_back({r, 0.0 - (out.derivative_right(r) - out.derivative_left(r))});
    }
    for (auto it = radial.boundary_radii.rbegin(); it != radial.boundary_radii.rend(); ++it) {
        const double r = rho * rho / *it;
        out.boundary_radii.push_back(r);
        out.boundary_gradients.push_back(std::abs(out.derivative(r)));
    }
    return out;
}

AnnulusConstruction annular_construction(double shell_radius, double shell_density, double inner_radius, int dim) {
    if (dim != 3) throw Error(ErrorCode::invalid_argument, "annular_construction is defined for dim = 3");
    const double s = shell_radius, rho = shell_density, r0 = inner_radius;
    if (!(r0 > 0.0) || !(s > r0) || !(rho > 0.0))
        throw Error(ErrorCode::invalid_argument, "annular_construction needs 0 < inner_radius < shell_radius and density > 0");
    // u = α(1/r0 - 1/r) inside the shell, β(1/r - 1/R) outside, β = R² from |u'(R)| = 1
    const double disc = r0 * r0 + 4.0 * rho * s * (s - r0);
    const double R = 0.5 * (r0 + std::sqrt(disc));
    const double alpha = rho * s * s - R * R;
    if (!(R > s) || !(alpha > 0.0))
        throw Error(ErrorCode::no_root, "no outer radius beyond the shell for density " + std::to_string(rho) +
                                            " (needs density > 1)");
    const double beta = R * R;

    AnnulusConstruction out;
    out.outer_radius = R;
    RadialSolution& u = out.one_phase;
    u.dim = 3;
    u.pieces = {{r0, s, alpha / r0, -alpha}, {s, R, -beta / R, beta}};
    u.shells = {{s, rho}};
    u.boundary_radii = {r0, R};
    u.boundary_gradients = {alpha / (r0 * r0), 1.0};

    const RadialSolution inner = kelvin_invert(u, r0, true);
    RadialSolution& w = out.two_phase;
    w.dim = 3;
    w.pieces = inner.pieces;
    w.pieces.insert(w.pieces.end(), u.pieces.begin(), u.pieces.end());
    w.shells = inner.shells;
    w.shells.push_back({r0, 0.0 - (u.derivative_right(r0) - inner.derivative_left(r0))});
    w.shells.push_back({s, rho});
    w.boundary_radii = {inner.boundary_radii.front(), R};
    w.boundary_gradients = {inner.boundary_gradients.front(), 1.0};
    out.inverted_radius = inner.boundary_radii.front();
    out.inverted_gradient = inner.boundary_gradients.front();
    w.notes.push_back("gradient on the inverted free boundary = R^N |u'(R)| (by differentiating the odd Kelvin transform)");
    return out;
}

ScalarField odd_reflection(const ScalarField& u, const Point& normal, double offset, double tau) {
    const Grid& g = u.grid();
    const double len = std::sqrt(dot(normal, normal));
    if (!(len > 0.0)) throw Error(ErrorCode::invalid_argument, "odd_reflection needs a nonzero normal");
    const Point n{normal[0] / len, normal[1] / len, normal[2] / len};
    const double t = offset / len;
    const double h = g.spacing();
    ScalarField out(g);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Point x = g.node(i);
        const double side = dot(x, n) - t;
        if (side < -h * (1.0 + 1e-9) && std::abs(u[i]) > tau)
            throw Error(ErrorCode::overlap, "support extends more than one cell across the reflection plane");
        if (std::abs(side) <= 1e-9 * h) {
            out[i] = 0.0;
        } else if (side > 0.0) {
            out[i] = u[i];
        } else {
            const Point xt{x[0] - 2.0 * side * n[0], x[1] - 2.0 * side * n[1], x[2] - 2.0 * side * n[2]};
            out[i] = g.contains(xt) ? -interpolate(u, xt) : 0.0;
        }
    }
    return out;
}

ScalarField AnalyticField::sample(const Grid& grid) const { return ScalarField::sample(grid, value); }

TwoPlane two_plane(TwoPlaneKind kind, int dim, double parameter) {
    require_dim(dim, "two_plane");
    TwoPlane tp;
    tp.kind = kind;
    tp.dim = dim;
    if (kind == TwoPlaneKind::gap) {
        if (!(parameter > 0.0)) throw Error(ErrorCode::invalid_argument, "two_plane gap needs gamma > 0");
        tp.gamma = parameter;
    }
    if (kind == TwoPlaneKind::linear) {
        tp.slope = parameter;
        tp.minimizer = parameter >= 1.0;
    }
    return tp;
}

AnalyticField TwoPlane::field() const {
    AnalyticField f;
    f.dim = dim;
    const int axis = dim - 1;
    const TwoPlaneKind k = kind;
    const double gam = gamma, a = slope;
    f.value = [=](const Point& x) {
        const double z = x[axis];
        switch (k) {
            case TwoPlaneKind::plus: return std::max(z, 0.0);
            case TwoPlaneKind::minus: return std::min(z, 0.0);
            case TwoPlaneKind::gap: return std::max(z, 0.0) + std::min(z + gam, 0.0);
            case TwoPlaneKind::linear: return a * z;
        }
        return 0.0;
    };
    f.gradient = [=](const Point& x) {
        const double z = x[axis];
        double d = 0.0;
        switch (k) {
            case TwoPlaneKind::plus: d = z > 0.0 ? 1.0 : 0.0; break;
            case TwoPlaneKind::minus: d = z < 0.0 ? 1.0 : 0.0; break;
            case TwoPlaneKind::gap: d = (z > 0.0 || z < -gam) ? 1.0 : 0.0; break;
            case TwoPlaneKind::linear: d = a; break;
        }
        Point out{};
        out[axis] = d;
        return out;
    };
    static const char* names[] = {"plus", "minus", "gap", "linear"};
    f.name = std::string("two_plane_") + names[static_cast<int>(k)];
    return f;
}

ExteriorBall exterior_ball_null(double radius, const Point& center, int dim) {
    require_dim(dim, "exterior_ball_null");
    if (!(radius > 0.0)) throw Error(ErrorCode::invalid_argument, "exterior_ball_null needs r > 0");
    ExteriorBall e;
    e.dim = dim;
    e.center = center;
    e.radius = radius;
    if (dim == 2) {
        e.b = radius;
        e.c = 0.0;
    } else {
        // nonnegative outside the ball with |∇u| = 1 on the sphere
        e.b = -std::pow(radius, dim - 1.0) / (dim - 2.0);
        e.c = radius / (dim - 2.0);
    }
    return e;
}

AnalyticField ExteriorBall::field() const {
    AnalyticField f;
    f.dim = dim;
    f.name = "exterior_ball";
    const ExteriorBall e = *this;
    f.value = [e](const Point& x) {
        const Point d{x[0] - e.center[0], x[1] - e.center[1], x[2] - e.center[2]};
        const double r = std::sqrt(dot(d, d));
        if (r <= e.radius) return 0.0;
        return e.dim == 2 ? e.b * std::log(r / e.radius) : e.b * std::pow(r, 2.0 - e.dim) + e.c;
    };
    f.gradient = [e](const Point& x) {
        const Point d{x[0] - e.center[0], x[1] - e.center[1], x[2] - e.center[2]};
        const double r = std::sqrt(dot(d, d));
        if (r <= e.radius) return Point{};
        const double dr = e.dim == 2 ? e.b / r : e.b * (2.0 - e.dim) * std::pow(r, 1.0 - e.dim);
        return Point{dr * d[0] / r, dr * d[1] / r, dr * d[2] / r};
    };
    return f;
}

double cone_f(double theta) {
    const double c = std::cos(theta);
    return 2.0 + c * std::log((1.0 - c) / (1.0 + c));
}

double cone_fprime(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return -s * std::log((1.0 - c) / (1.0 + c)) + 2.0 * c / s;
}

ConeProfile ac_cone(int resolution) {
    if (resolution < 256) throw Error(ErrorCode::invalid_argument, "ac_cone needs at least 256 samples");
    ConeProfile cp;
    const double half_pi = 0.5 * kPi;
    cp.theta.resize(resolution);
    cp.f.resize(resolution);
    const double d = 1e-3;
    auto flux = [](double t) { return std::sin(t) * cone_fprime(t); };
    for (int k = 0; k < resolution; ++k) {
        const double t = half_pi * (k + 1) / resolution;
        cp.theta[k] = t;
        cp.f[k] = cone_f(t);
        if (t <= 0.1 || t >= half_pi) continue;
        const double dflux = (-flux(t + 2 * d) + 8.0 * flux(t + d) - 8.0 * flux(t - d) + flux(t - 2 * d)) / (12.0 * d);
        cp.ode_residual = std::max(cp.ode_residual, std::abs(dflux + 2.0 * std::sin(t) * cp.f[k]));
    }
    double lo = 0.1, hi = half_pi;
    if (!(cone_f(lo) < 0.0 && cone_f(hi) > 0.0)) throw Error(ErrorCode::no_root, "cone profile has no sign change");
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        (cone_f(mid) < 0.0 ? lo : hi) = mid;
    }
    cp.theta0 = 0.5 * (lo + hi);
    cp.theta0_degrees = cp.theta0 * 180.0 / kPi;
    cp.f_at_theta0 = cone_f(cp.theta0);
    cp.fprime_theta0 = cone_fprime(cp.theta0);
    cp.fprime_half_pi = cone_fprime(half_pi);
    return cp;
}

AnalyticField ConeProfile::field() const {
    AnalyticField f;
    f.dim = 3;
    f.name = "ac_cone";
    const double t0 = theta0, scale = 1.0 / fprime_theta0;
    auto polar = [](const Point& x, double& r, double& th) {
        r = std::sqrt(dot(x, x));
        th = r > 0.0 ? std::acos(std::clamp(x[2] / r, -1.0, 1.0)) : 0.0;
    };
    auto inside = [t0](double th) { return th > t0 && th < kPi - t0; };
    f.value = [=](const Point& x) {
        double r, th;
        polar(x, r, th);
        return inside(th) ? r * cone_f(th) * scale : 0.0;
    };
    f.gradient = [=](const Point& x) {
        double r, th;
        polar(x, r, th);
        if (!(r > 0.0) || !inside(th)) return Point{};
        const double F = cone_f(th) * scale, dF = cone_fprime(th) * scale;
        const double rho = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        const double cp = rho > 0.0 ? x[0] / rho : 1.0, sp = rho > 0.0 ? x[1] / rho : 0.0;
        const double st = std::sin(th), ct = std::cos(th);
        return Point{F * st * cp + dF * ct * cp, F * st * sp + dF * ct * sp, F * ct - dF * st};
    };
    return f;
}

SakaiRadii sakai_radius_identity(double R, double M, double l0, int dim) {
    require_dim(dim, "sakai_radius_identity");
    if (!(R > 0.0) || !(M > 0.0) || !(l0 > 0.0))
        throw Error(ErrorCode::invalid_argument, "sakai_radius_identity needs positive R, M and l0");
    const double N = dim;
    SakaiRadii out;
    out.r = R * std::pow(N * l0 / (M * R), 1.0 / N);
    out.sigma = std::pow(std::pow(out.r, N) * M / (N * l0), 1.0 / (N - 1.0));
    out.r_bound = 2.0 * N * l0 / M;
    out.below_bound = out.r < out.r_bound;
    return out;
}

WindowResidual null_qs_window_residual(const TwoPlane& solution, const TestFunction& h, const Point& window_center,
                                       double window_radius, double g, int order) {
    if (!(window_radius > 0.0)) throw Error(ErrorCode::invalid_argument, "window radius must be positive");
    const int dim = solution.dim;
    const int axis = dim - 1;
    // (plane height, phase sign) of each free surface
    std::vector<std::pair<double, int>> planes;
    switch (solution.kind) {
        case TwoPlaneKind::plus: planes = {{0.0, 1}}; break;
        case TwoPlaneKind::minus: planes = {{0.0, -1}}; break;
        case TwoPlaneKind::gap: planes = {{0.0, 1}, {-solution.gamma, -1}}; break;
        case TwoPlaneKind::linear: planes = {{0.0, 1}, {0.0, -1}}; break;
    }
    double surface = 0.0;
    std::vector<double> splits;
    for (const auto& [t, sign] : planes) {
        surface += sign * g * flat_slice(dim, h, window_center, window_radius, t, order);
        const double cz = (t - window_center[axis]) / window_radius;
        if (std::abs(cz) < 1.0) splits.push_back(std::acos(cz));
    }
    return finish(surface, window_flux(solution.field(), h, window_center, window_radius, splits, order));
}

WindowResidual null_qs_window_residual(const ExteriorBall& solution, const TestFunction& h, double window_radius,
                                       double g, int order) {
    if (!(window_radius > solution.radius))
        throw Error(ErrorCode::invalid_argument, "the window must contain the excluded ball");
    double surface = 0.0;
    sphere_rule(solution.dim, solution.center, solution.radius, {}, order,
                [&](const Point& x, const Point&, double w) { surface += g * h.value(x) * w; });
    return finish(surface, window_flux(solution.field(), h, solution.center, window_radius, {}, order));
}

WindowResidual null_qs_window_residual(const ConeProfile& cone, const TestFunction& h, double window_radius, double g,
                                       int order) {
    if (!(window_radius > 0.0)) throw Error(ErrorCode::invalid_argument, "window radius must be positive");
    const int n_phi = 2 * order;
    double surface = 0.0;
    for (double th : {cone.theta0, kPi - cone.theta0}) {
        const double st = std::sin(th), ct = std::cos(th);
        surface += g * integrate_1d(0.0, window_radius, order, [&](double r) {
            double ring = 0.0;
            for (int k = 0; k < n_phi; ++k) {
                const double ph = 2.0 * kPi * k / n_phi;
                ring += h.value({r * st * std::cos(ph), r * st * std::sin(ph), r * ct});
            }
            return ring * r * st * 2.0 * kPi / n_phi;
        });
    }
    return finish(surface, window_flux(cone.field(), h, Point{}, window_radius,
                                       {cone.theta0, kPi - cone.theta0}, order));
}

}  // namespace qsurf
