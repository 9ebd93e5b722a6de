#include "qsurf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "qsurf/error.hpp"
#include "sampling.hpp"

namespace qsurf {

using detail::distance;

TestFunction TestFunction::constant_one() {
    TestFunction t;
    t.kind = TestKind::constant;
    t.label = "1";
    t.value = [](const Point&) { return 1.0; };
    t.gradient = [](const Point&) { return std::array<double, 3>{0.0, 0.0, 0.0}; };
    return t;
}

TestFunction TestFunction::kernel_at(const Point& y, int dim) {
    TestFunction t;
    t.kind = TestKind::kernel;
    t.pole = y;
    std::ostringstream s;
    s << "G(x - (" << y[0] << ", " << y[1];
    if (dim == 3) s << ", " << y[2];
    s << "))";
    t.label = s.str();
    t.value = [y, dim](const Point& x) { return newtonian_kernel(x, y, dim); };
    t.gradient = [y, dim](const Point& x) { return newtonian_kernel_gradient(x, y, dim); };
    return t;
}

TestFunction TestFunction::general_function(std::string label, std::function<double(const Point&)> value,
                                            std::function<std::array<double, 3>(const Point&)> gradient) {
    TestFunction t;
    t.kind = TestKind::general;
    t.label = std::move(label);
    t.value = std::move(value);
    t.gradient = std::move(gradient);
    return t;
}

ScalarField TestFunction::sample(const Grid& grid) const {
    ScalarField out(grid);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = value(grid.node(n));
    return out;
}

Point Box::center() const { return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])}; }

double Box::circumradius(int dim) const {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += 0.25 * (hi[a] - lo[a]) * (hi[a] - lo[a]);
    return std::sqrt(s);
}

Box support_box(const PhaseSolution& solution) {
    const std::vector<ScalarField> phases = solution.phases();
    const Grid& g = phases.at(0).grid();
    Box b;
    b.lo = {INFINITY, INFINITY, INFINITY};
    b.hi = {-INFINITY, -INFINITY, -INFINITY};
    bool any = false;
    for (const auto& u : phases)
        for (std::size_t n = 0; n < u.size(); ++n) {
            if (!(u[n] > solution.support_tau)) continue;
            any = true;
            const Point x = g.node(n);
            for (int a = 0; a < 3; ++a) {
                b.lo[a] = std::min(b.lo[a], x[a]);
                b.hi[a] = std::max(b.hi[a], x[a]);
            }
        }
    if (!any) {
        const Point up = g.upper();
        for (int a = 0; a < 3; ++a) b.lo[a] = b.hi[a] = 0.5 * (g.origin()[a] + up[a]);
    }
    return b;
}

namespace {

// Polynomials in three variables as monomial -> coefficient maps.
using Monomial = std::array<int, 3>;
using Poly = std::map<Monomial, double>;

Poly laplacian(const Poly& p, int dim) {
    Poly out;
    for (const auto& [m, c] : p)
        for (int a = 0; a < dim; ++a) {
            if (m[a] < 2) continue;
            Monomial q = m;
            q[a] -= 2;
            out[q] += c * m[a] * (m[a] - 1);
        }
    std::erase_if(out, [](const auto& kv) { return kv.second == 0.0; });
    return out;
}

Poly times_r2(const Poly& p, int dim) {
    Poly out;
    for (const auto& [m, c] : p)
        for (int a = 0; a < dim; ++a) {
            Monomial q = m;
            q[a] += 2;
            out[q] += c;
        }
    return out;
}

// Harmonic projection of a homogeneous polynomial of degree l:
// Σ_k c_k |x|^{2k} Δ^k p with c_{k+1} = -c_k / (2 (k+1) (N + 2l - 4 - 2k)).
Poly harmonic_projection(const Poly& p, int degree, int dim) {
    Poly out = p;
    Poly lap = laplacian(p, dim);
    double coef = 1.0;
    for (int k = 0; !lap.empty(); ++k) {
        coef = -coef / (2.0 * (k + 1) * (dim + 2 * degree - 4 - 2 * k));
        Poly term = lap;
        for (int j = 0; j <= k; ++j) term = times_r2(term, dim);
        for (const auto& [m, c] : term) out[m] += coef * c;
        lap = laplacian(lap, dim);
    }
    std::erase_if(out, [](const auto& kv) { return std::abs(kv.second) < 1e-15; });
    return out;
}

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

TestFunction polynomial_test(const Poly& p, const Point& c, const Monomial& lead, int degree, int dim) {
    TestFunction t;
    t.kind = TestKind::harmonic_polynomial;
    t.multi_index = lead;
    t.degree = degree;
    const char* names[3] = {"x", "y", "z"};
    std::ostringstream label;
    label << "H[";
    bool first = true;
    for (int a = 0; a < dim; ++a) {
        if (lead[a] == 0) continue;
        if (!first) label << " ";
        label << names[a];
        if (lead[a] > 1) label << "^" << lead[a];
        first = false;
    }
    label << "]";
    t.label = label.str();
    const std::vector<std::pair<Monomial, double>> terms(p.begin(), p.end());
    t.value = [terms, c](const Point& x) {
        const Point y{x[0] - c[0], x[1] - c[1], x[2] - c[2]};
        double s = 0.0;
        for (const auto& [m, k] : terms) s += k * ipow(y[0], m[0]) * ipow(y[1], m[1]) * ipow(y[2], m[2]);
        return s;
    };
    t.gradient = [terms, c](const Point& x) {
        const Point y{x[0] - c[0], x[1] - c[1], x[2] - c[2]};
        std::array<double, 3> g{0.0, 0.0, 0.0};
        for (const auto& [m, k] : terms)
            for (int a = 0; a < 3; ++a) {
                if (m[a] == 0) continue;
                double v = k * m[a];
                for (int b = 0; b < 3; ++b) v *= ipow(y[b], b == a ? m[b] - 1 : m[b]);
                g[a] += v;
            }
        return g;
    };
    return t;
}

}  // namespace

std::vector<TestFunction> harmonic_polynomials(int dim, int degree, const Point& c) {
    if (dim != 2 && dim != 3) throw Error(ErrorCode::invalid_argument, "dimension must be 2 or 3");
    if (degree < 0 || degree > 4) throw Error(ErrorCode::invalid_argument, "harmonic polynomial degree must be 0..4");
    if (degree == 0) return {TestFunction::constant_one()};
    // projections of the monomials with x-exponent 0 or 1 span the harmonic space
    std::vector<Monomial> leads;
    for (int ax = 0; ax <= 1 && ax <= degree; ++ax) {
        const int rest = degree - ax;
        if (dim == 2) leads.push_back({ax, rest, 0});
        else
            for (int j = rest; j >= 0; --j) leads.push_back({ax, j, rest - j});
    }
    std::vector<TestFunction> out;
    for (const auto& m : leads) {
        Poly p{{m, 1.0}};
        out.push_back(polynomial_test(harmonic_projection(p, degree, dim), c, m, degree, dim));
    }
    return out;
}

std::vector<TestFunction> harmonic_test_set(int dim, const Box& support, int max_degree, int kernel_count) {
    if (max_degree < 0 || kernel_count < 0)
        throw Error(ErrorCode::invalid_argument, "test-set sizes must be nonnegative");
    std::vector<TestFunction> out{TestFunction::constant_one()};
    const Point c = support.center();
    for (int l = 1; l <= std::min(max_degree, 4); ++l) {
        auto hp = harmonic_polynomials(dim, l, c);
        out.insert(out.end(), hp.begin(), hp.end());
    }
    const double radius = 1.5 * std::max(support.circumradius(dim), 1e-12);
    constexpr double golden = 2.399963229728653;   // π (3 - √5)
    for (int k = 0; k < kernel_count; ++k) {
        Point y = c;
        if (dim == 2) {
            const double t = 2.0 * M_PI * (k + 0.5) / kernel_count;
            y[0] += radius * std::cos(t);
            y[1] += radius * std::sin(t);
        } else {
            const double z = 1.0 - 2.0 * (k + 0.5) / kernel_count;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            y[0] += radius * rho * std::cos(golden * k);
            y[1] += radius * rho * std::sin(golden * k);
            y[2] += radius * z;
        }
        out.push_back(TestFunction::kernel_at(y, dim));
    }
    return out;
}

std::vector<TestFunction> harmonic_test_set(int dim, const Box& support, int k) {
    if (k < 1) throw Error(ErrorCode::invalid_argument, "test-set size k must be at least 1");
    return harmonic_test_set(dim, support, std::min(4, k), k - 1);
}

double surface_integral_contour(const BoundaryGeometry& geometry, const ScalarField& g, const TestFunction& h) {
    double s = 0.0;
    for (const auto& e : geometry.elements) s += interpolate(g, e.midpoint) * h.value(e.midpoint) * e.weight;
    return s;
}

namespace {

// Green route on one phase with the test values supplied per node (NaN marks
// nodes where the test was not needed). Returns ∫_{Ω} h f - Σ_edges Δh Δu_s.
struct GreenParts {
    double volume = 0.0;
    double flux = 0.0;
    double collar = 0.0;   // share of `flux` from edges touching the cutoff collar
    double value() const { return volume - flux; }
};

GreenParts green_parts(const ScalarField& us, const ScalarField& fs, const std::vector<double>& h, double tau,
                       const std::vector<char>* collar) {
    const Grid& g = us.grid();
    const double es = std::pow(g.spacing(), g.dim() - 2);
    GreenParts out;
    for (std::size_t n = 0; n < us.size(); ++n)
        if (us[n] > tau && fs[n] != 0.0) out.volume += fs[n] * h[n] * g.node_weight(g.unravel(n));
    for_each_edge(g, [&](std::size_t a, std::size_t b) {
        const double ua = us[a] > tau ? us[a] : 0.0;
        const double ub = us[b] > tau ? us[b] : 0.0;
        if (ua == ub) return;
        const double term = (h[b] - h[a]) * (ub - ua) * es;
        out.flux += term;
        if (collar && ((*collar)[a] || (*collar)[b])) out.collar += term;
    });
    return out;
}

// Node values of h * cutoff on the nodes the Green route touches.
std::vector<double> sample_needed(const Grid& g, const std::vector<const ScalarField*>& phases, double tau,
                                  const std::function<double(const Point&)>& value, const std::vector<double>* cutoff) {
    const std::size_t n = g.node_count();
    std::vector<char> need(n, 0);
    for (const ScalarField* u : phases)
        for (std::size_t i = 0; i < n; ++i)
            if ((*u)[i] > tau) {
                need[i] = 1;
                for_each_neighbour(g, i, [&](std::size_t j) { need[j] = 1; });
            }
    std::vector<double> h(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (need[i]) h[i] = value(g.node(i)) * (cutoff ? (*cutoff)[i] : 1.0);
    return h;
}

// Smooth cutoff: 0 within 2 cells of the given supports, 1 beyond 4 cells,
// a C¹ ramp in between.
std::vector<double> collar_cutoff(const Grid& g, const std::vector<const ScalarField*>& others, double tau,
                                  std::vector<char>& collar) {
    const std::size_t n = g.node_count();
    const double h = g.spacing();
    const int reach = 4;
    std::vector<double> dist(n, INFINITY);
    const int d = g.dim();
    const Index3 nodes = g.nodes();
    for (const ScalarField* u : others)
        for (std::size_t i = 0; i < n; ++i) {
            if (!((*u)[i] > tau)) continue;
            const Index3 p = g.unravel(i);
            for (int a = -reach; a <= reach; ++a)
                for (int b = -reach; b <= reach; ++b)
                    for (int c = (d == 3 ? -reach : 0); c <= (d == 3 ? reach : 0); ++c) {
                        const Index3 q{p[0] + a, p[1] + b, p[2] + c};
                        if (q[0] < 0 || q[1] < 0 || q[2] < 0 || q[0] >= nodes[0] || q[1] >= nodes[1] ||
                            q[2] >= nodes[2])
                            continue;
                        const std::size_t j = g.index(q);
                        dist[j] = std::min(dist[j], h * std::sqrt(static_cast<double>(a * a + b * b + c * c)));
                    }
        }
    std::vector<double> phi(n, 1.0);
    collar.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (dist[i] - 2.0 * h) / (2.0 * h);
        if (t >= 1.0) continue;
        collar[i] = 1;
        phi[i] = t <= 0.0 ? 0.0 : t * t * (3.0 - 2.0 * t);
    }
    return phi;
}

double measure_integral(const ScalarField& f, const std::vector<double>& h_full) {
    const Grid& g = f.grid();
    double s = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n)
        if (f[n] != 0.0) s += f[n] * h_full[n] * g.node_weight(g.unravel(n));
    return s;
}

struct PairSpec {
    int i = 1, j = 0;   // 1-based phase indices, j = 0 for the null phase
};

}  // namespace

double surface_integral_green(const ScalarField& u_s, const ScalarField& f_s, const ScalarField& h_sampled,
                              double tau) {
    require_same_grid(u_s, f_s, "surface_integral_green");
    require_same_grid(u_s, h_sampled, "surface_integral_green");
    return green_parts(u_s, f_s, h_sampled.values(), tau, nullptr).value();
}

double surface_integral_green(const ScalarField& u, int sign, const ScalarField& f_s, const TestFunction& h,
                              double tau) {
    if (sign != 1 && sign != -1) throw Error(ErrorCode::invalid_argument, "phase sign must be +1 or -1");
    require_same_grid(u, f_s, "surface_integral_green");
    ScalarField us(u.grid());
    for (std::size_t n = 0; n < u.size(); ++n) us[n] = std::max(sign * u[n], 0.0);
    const std::vector<double> hv = sample_needed(u.grid(), {&us}, tau, h.value, nullptr);
    return green_parts(us, f_s, hv, tau, nullptr).value();
}

double QIReport::max_relative_contour() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, std::abs(r.residual_contour) / r.scale);
    return m;
}

double QIReport::max_relative_green() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, std::abs(r.residual_green) / r.scale);
    return m;
}

double QIReport::max_route_disagreement() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, std::abs(r.residual_contour - r.residual_green) / r.scale);
    return m;
}

namespace {

const char* kind_name(TestKind k) {
    switch (k) {
        case TestKind::constant: return "constant";
        case TestKind::harmonic_polynomial: return "harmonic_polynomial";
        case TestKind::kernel: return "kernel";
        case TestKind::general: return "general";
    }
    return "?";
}

std::vector<PairSpec> pairs_for(const PhaseSolution& s) {
    switch (s.kind) {
        case SolutionKind::one_phase: return {{1, 0}};
        case SolutionKind::two_phase: return {{1, 2}};
        case SolutionKind::multi_phase: break;
    }
    std::vector<PairSpec> out;
    const int m = static_cast<int>(s.fields.size());
    for (int i = 1; i <= m; ++i) out.push_back({i, 0});
    for (int i = 1; i <= m; ++i)
        for (int j = i + 1; j <= m; ++j) out.push_back({i, j});
    return out;
}

// Evaluates one row; shared by qi_residual and subharmonic_qi_check so the
// harmonic case matches exactly.
QIRow evaluate_row(const std::vector<ScalarField>& phases, const std::vector<ScalarField>& densities,
                   const ScalarField& g, const BoundaryGeometry& contours, const TestFunction& test, PairSpec pair,
                   double tau) {
    const Grid& grid = g.grid();
    const int m = static_cast<int>(phases.size());
    std::vector<const ScalarField*> involved{&phases[pair.i - 1]};
    if (pair.j > 0) involved.push_back(&phases[pair.j - 1]);
    std::vector<const ScalarField*> others;
    for (int k = 1; k <= m; ++k)
        if (k != pair.i && k != pair.j) others.push_back(&phases[k - 1]);

    std::vector<char> collar;
    std::vector<double> cutoff;
    const bool masked = !others.empty();
    if (masked) cutoff = collar_cutoff(grid, others, tau, collar);

    const std::vector<double> hv = sample_needed(grid, involved, tau, test.value, masked ? &cutoff : nullptr);

    QIRow row;
    row.kind = kind_name(test.kind);
    row.label = test.label;
    row.phase_i = pair.i;
    row.phase_j = pair.j;

    // contour route: elements of the two phases, cutoff interpolated at midpoints
    ScalarField cut_field(grid);
    if (masked) cut_field = ScalarField(grid, cutoff);
    double lhs_c = 0.0;
    for (const auto& e : contours.elements) {
        const double sgn = e.phase_i == pair.i ? 1.0 : (e.phase_i == pair.j ? -1.0 : 0.0);
        if (sgn == 0.0) continue;
        double v = interpolate(g, e.midpoint) * test.value(e.midpoint) * e.weight;
        if (masked) v *= interpolate(cut_field, e.midpoint);
        lhs_c += sgn * v;
    }

    // rhs: ∫ h d(μ_i - μ_j) with the rasterized densities
    std::vector<double> h_full(grid.node_count(), 0.0);
    for (std::size_t n = 0; n < h_full.size(); ++n) {
        const bool used = densities[pair.i - 1][n] != 0.0 || (pair.j > 0 && densities[pair.j - 1][n] != 0.0);
        if (used) h_full[n] = test.value(grid.node(n)) * (masked ? cutoff[n] : 1.0);
    }
    double rhs = measure_integral(densities[pair.i - 1], h_full);
    if (pair.j > 0) rhs -= measure_integral(densities[pair.j - 1], h_full);

    GreenParts gi = green_parts(phases[pair.i - 1], densities[pair.i - 1], hv, tau, masked ? &collar : nullptr);
    double lhs_g = gi.value();
    double collar_part = -gi.collar;
    if (pair.j > 0) {
        GreenParts gj = green_parts(phases[pair.j - 1], densities[pair.j - 1], hv, tau, masked ? &collar : nullptr);
        lhs_g -= gj.value();
        collar_part += gj.collar;
    }
    row.lhs_contour = lhs_c;
    row.lhs_green = lhs_g;
    row.rhs_measure = rhs;
    row.residual_contour = lhs_c - rhs;
    row.residual_green = lhs_g - rhs;
    row.scale = std::max({std::abs(lhs_c), std::abs(lhs_g), std::abs(rhs), 1.0});
    row.collar_contribution = masked ? collar_part : 0.0;
    return row;
}

double resolve_tau(const PhaseSolution& s, const QIOptions& o) {
    if (o.tau >= 0.0) return o.tau;
    return s.support_tau;
}

}  // namespace

QIReport qi_residual(const PhaseSolution& solution, const std::vector<ScalarField>& densities, const ScalarField& g,
                     const std::vector<TestFunction>& tests, const QIOptions& opts) {
    const std::vector<ScalarField> phases = solution.phases();
    if (densities.size() != phases.size())
        throw Error(ErrorCode::length_mismatch, "qi_residual needs one density per phase (" +
                                                    std::to_string(phases.size()) + "), got " +
                                                    std::to_string(densities.size()));
    for (const auto& d : densities) require_same_grid(phases[0], d, "qi_residual");
    require_same_grid(phases[0], g, "qi_residual");
    const double tau = resolve_tau(solution, opts);
    double level = opts.level > 0.0 ? opts.level : tau;
    if (!(level > 0.0)) level = default_tau(phases);
    QIReport rep;
    BoundaryGeometry contours;
    if (level > 0.0) contours = extract_phase_boundaries(solution, level);
    if (contours.empty()) rep.warnings.push_back("no boundary elements at the extraction level");
    for (const PairSpec& pair : pairs_for(solution))
        for (std::size_t t = 0; t < tests.size(); ++t) {
            QIRow row = evaluate_row(phases, densities, g, contours, tests[t], pair, tau);
            row.test_id = t;
            rep.rows.push_back(std::move(row));
        }
    return rep;
}

QIReport qi_residual(const PhaseSolution& solution, const std::vector<MeasureSpec>& measures, const ScalarField& g,
                     const std::vector<TestFunction>& tests, const QIOptions& opts) {
    std::vector<ScalarField> densities;
    for (const auto& m : measures) densities.push_back(rasterize_measure(m, g.grid()));
    return qi_residual(solution, densities, g, tests, opts);
}

SubharmonicCheck subharmonic_qi_check(const PhaseSolution& solution, const std::vector<ScalarField>& densities,
                                      const ScalarField& g, const TestFunction& h, const QIOptions& opts) {
    const std::vector<ScalarField> phases = solution.phases();
    if (phases.size() > 2)
        throw Error(ErrorCode::invalid_argument, "subharmonic_qi_check applies to one- and two-phase solutions");
    if (densities.size() != phases.size())
        throw Error(ErrorCode::length_mismatch, "subharmonic_qi_check needs one density per phase");
    const double tau = resolve_tau(solution, opts);
    double level = opts.level > 0.0 ? opts.level : tau;
    if (!(level > 0.0)) level = default_tau(phases);
    const BoundaryGeometry contours = extract_phase_boundaries(solution, level);
    const PairSpec pair = phases.size() == 2 ? PairSpec{1, 2} : PairSpec{1, 0};
    const QIRow row = evaluate_row(phases, densities, g, contours, h, pair, tau);

    SubharmonicCheck out;
    out.residual_contour = row.residual_contour;
    out.residual_green = row.residual_green;
    out.scale = row.scale;

    // curvature side: Δh >= -C h² on phase 1, Δh <= C h² on phase 2
    const Grid& grid = g.grid();
    const double hh = grid.spacing();
    const Index3 nodes = grid.nodes();
    bool wrong1 = false, wrong2 = false;
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        const bool in1 = phases[0][n] > tau;
        const bool in2 = phases.size() == 2 && phases[1][n] > tau;
        if (!in1 && !in2) continue;
        const Index3 p = grid.unravel(n);
        bool interior = true;
        for (int a = 0; a < grid.dim(); ++a) interior &= p[a] > 0 && p[a] < nodes[a] - 1;
        if (!interior) continue;
        const double c = h.value(grid.node(n));
        double lap = 0.0;
        for (int a = 0; a < grid.dim(); ++a) {
            Point xp = grid.node(n), xm = grid.node(n);
            xp[a] += hh;
            xm[a] -= hh;
            lap += h.value(xp) + h.value(xm) - 2.0 * c;
        }
        lap /= hh * hh;
        if (in1 && lap < -hh * hh) wrong1 = true;
        if (in2 && lap > hh * hh) wrong2 = true;
    }
    if (wrong1) out.warnings.push_back("wrong curvature side: test function is not subharmonic on phase 1");
    if (wrong2) out.warnings.push_back("wrong curvature side: test function is not superharmonic on phase 2");
    return out;
}

double sakai_threshold(int dim, double c_bound) {
    if (dim != 2 && dim != 3) throw Error(ErrorCode::invalid_argument, "dimension must be 2 or 3");
    return dim * std::pow(6.0, dim) * c_bound / 3.0;
}

SakaiReport sakai_check(const MeasureSpec& measure, const Grid& grid, double c_bound, const std::vector<double>& radii) {
    if (radii.empty()) throw Error(ErrorCode::invalid_argument, "sakai_check needs at least one radius");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] < radii[i - 1])) throw Error(ErrorCode::invalid_argument, "radii must be decreasing");
    if (radii.back() < 2.0 * grid.spacing())
        throw Error(ErrorCode::radius_below_grid, "smallest radius " + std::to_string(radii.back()) +
                                                      " is below two grid spacings");
    const int d = grid.dim();
    const ScalarField f = rasterize_measure(measure, grid);
    SakaiReport rep;
    rep.threshold = sakai_threshold(d, c_bound);
    rep.radii = radii;
    for (const auto& a : measure.atoms) rep.points.push_back(a.center);
    for (const auto& s : measure.shells) {
        const int count = d == 2 ? 16 : 26;
        constexpr double golden = 2.399963229728653;
        for (int k = 0; k < count; ++k) {
            Point p = s.center;
            if (d == 2) {
                const double t = 2.0 * M_PI * k / count;
                p[0] += s.radius * std::cos(t);
                p[1] += s.radius * std::sin(t);
            } else {
                const double z = 1.0 - 2.0 * (k + 0.5) / count;
                const double rho = std::sqrt(1.0 - z * z);
                p[0] += s.radius * rho * std::cos(golden * k);
                p[1] += s.radius * rho * std::sin(golden * k);
                p[2] += s.radius * z;
            }
            rep.points.push_back(p);
        }
    }
    rep.worst_by_radius.assign(radii.size(), INFINITY);
    rep.pass = !rep.points.empty();
    for (const Point& x : rep.points) {
        double best = -INFINITY;
        for (std::size_t k = 0; k < radii.size(); ++k) {
            const double r = radii[k];
            if (grid.distance_to_boundary(x) < r)
                throw Error(ErrorCode::ball_escapes_box, "Sakai ball of radius " + std::to_string(r) +
                                                             " leaves the grid box");
            double mass = 0.0;
            detail::sample_ball(grid, x, r, [&](const Point& y, double w) { mass += interpolate(f, y) * w; });
            const double value = r * mass / ball_volume(d, r);
            best = std::max(best, value);
            rep.worst_by_radius[k] = std::min(rep.worst_by_radius[k], value);
        }
        rep.best_values.push_back(best);
        if (!(best > rep.threshold)) rep.pass = false;
    }
    return rep;
}

}  // namespace qsurf
