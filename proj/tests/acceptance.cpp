// Acceptance suite: one line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qsurf/energy.hpp"
#include "qsurf/geometry.hpp"
#include "qsurf/minimize.hpp"
#include "qsurf/quadrature.hpp"
#include "qsurf/reference.hpp"

using namespace qsurf;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Grid box_grid(int dim, const std::vector<double>& origin, double h, const std::vector<int>& cells) {
    return build_grid(dim, origin, h, cells);
}

ScalarField atoms_density(const Grid& g, const std::vector<Point>& centers, double mass, double mollifier) {
    MeasureSpec m;
    for (const Point& c : centers) m.atoms.push_back(Atom{c, mass, mollifier, 1});
    return rasterize_measure(m, g);
}

// Solves shared between criteria.
struct RadialRun {
    int dim = 2;
    double h = 0.0;
    double seconds = 0.0;
    MeasureSpec measure;
    ScalarField g;
    PhaseSolution solution;
};

RadialRun radial_run(int dim) {
    RadialRun r;
    r.dim = dim;
    r.h = dim == 2 ? 1.0 / 64 : 1.0 / 16;
    const int n = dim == 2 ? 352 : 88;
    const Grid grid = box_grid(dim, std::vector<double>(dim, -0.5 * n * r.h), r.h, std::vector<int>(dim, n));
    r.measure.atoms.push_back(Atom{{}, dim == 2 ? 4.0 * M_PI : 16.0 * M_PI, 0.25, 1});
    r.g = ScalarField::constant(grid, 1.0);
    const auto t0 = std::chrono::steady_clock::now();
    r.solution = minimize_one_phase(rasterize_measure(r.measure, grid), r.g);
    r.seconds = seconds_since(t0);
    return r;
}

struct MultiRun {
    std::vector<MeasureSpec> measures;
    PhaseSolution solution;
    double h = 0.0;
};

// Dirac pair of equal mass and opposite sign, mirrored across x = 0.
MultiRun pair_run() {
    MultiRun r;
    r.h = 1.0 / 32;
    const Grid g = box_grid(2, {-5.5, -2.75}, r.h, {352, 176});
    for (double x : {2.5, -2.5}) {
        MeasureSpec m;
        m.atoms.push_back(Atom{{x, 0.0, 0.0}, 4.0 * M_PI, 0.25, 1});
        r.measures.push_back(m);
    }
    r.solution = minimize_two_phase(rasterize_measure(r.measures[0], g), rasterize_measure(r.measures[1], g),
                                    ScalarField::constant(g, 1.0));
    return r;
}

// Three concentrated atoms: two close enough for their phases to meet, one apart.
MultiRun triple_run() {
    MultiRun r;
    r.h = 1.0 / 32;
    const Grid g = box_grid(2, {-6.0, -6.0}, r.h, {384, 384});
    std::vector<ScalarField> f;
    for (const Point& c : {Point{-0.85, 0.0, 0.0}, Point{0.85, 0.0, 0.0}, Point{0.0, 3.2, 0.0}}) {
        MeasureSpec m;
        m.atoms.push_back(Atom{c, 2.0 * M_PI, 0.05, 1});
        r.measures.push_back(m);
        f.push_back(rasterize_measure(m, g));
    }
    r.solution = minimize_multi_phase(f, ScalarField::constant(g, 1.0));
    return r;
}

Outcome cone_criterion() {
    const auto t0 = std::chrono::steady_clock::now();
    const ConeProfile c = ac_cone();
    const double t = seconds_since(t0);
    const bool ok = std::abs(c.theta0_degrees - 33.534) <= 1e-3 && c.ode_residual <= 1e-8 &&
                    std::abs(c.fprime_half_pi) <= 1e-8 && t < 1.0;
    return {ok, fmt("theta0=%.6f deg, ode=%.2e, f'(pi/2)=%.2e, %.3fs", c.theta0_degrees, c.ode_residual,
                    c.fprime_half_pi, t)};
}

Outcome annulus_criterion() {
    const auto t0 = std::chrono::steady_clock::now();
    const AnnulusConstruction a = annular_construction(2.0, 3.0, 1.0, 3);
    const double t = seconds_since(t0);
    const double res = std::max({a.one_phase.continuity_residual(), a.one_phase.jump_residual(),
                                 a.two_phase.continuity_residual(), a.two_phase.jump_residual()});
    const bool ok = a.outer_radius == 3.0 && res <= 1e-12 && std::abs(a.inverted_radius - 1.0 / 3.0) <= 1e-15 && t < 1.0;
    return {ok, fmt("R=%.17g, residual=%.2e, inner=%.17g, %.3fs", a.outer_radius, res, a.inverted_radius, t)};
}

Outcome radial_criterion(const RadialRun& two, const RadialRun& three) {
    bool ok = true;
    std::string detail;
    for (const RadialRun* r : {&two, &three}) {
        const BoundaryGeometry geo = extract_phase_boundaries(r->solution);
        double worst = 0.0;
        for (const auto& e : geo.elements) worst = std::max(worst, std::abs(std::hypot(e.midpoint[0], e.midpoint[1], e.midpoint[2]) - 2.0));
        const double limit = r->dim == 2 ? 60.0 : 600.0;
        ok = ok && !geo.empty() && worst <= 2.0 * r->h && r->seconds < limit;
        detail += fmt("%dD max|r-R|=%.4f (2h=%.4f) %.1fs; ", r->dim, worst, 2.0 * r->h, r->seconds);
    }
    return {ok, detail};
}

Outcome qi_criterion(const RadialRun& two, const RadialRun& three) {
    bool ok = true;
    std::string detail;
    for (const RadialRun* r : {&two, &three}) {
        const auto tests = harmonic_test_set(r->dim, support_box(r->solution), 2, 8);
        const QIReport rep = qi_residual(r->solution, std::vector<MeasureSpec>{r->measure}, r->g, tests);
        const double c = rep.max_relative_contour(), g = rep.max_relative_green(), d = rep.max_route_disagreement();
        ok = ok && c <= 0.05 && g <= 0.05 && d <= 0.05;
        detail += fmt("%dD contour=%.4f green=%.2e disagreement=%.4f (%zu tests); ", r->dim, c, g, d, tests.size());
    }
    return {ok, detail};
}

Outcome energy_criterion() {
    std::mt19937 rng(20261018);
    std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.0, 1.0);
    const Grid g = box_grid(2, {0.0, 0.0}, 0.125, {12, 10});
    auto field = [&](auto& dist, double scale, double shift) {
        return ScalarField::sample(g, [&](const Point&) { return shift + scale * dist(rng); });
    };
    double split = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const ScalarField u = field(U, 1.0, 0.0), f1 = field(P, 2.0, 0.0), f2 = field(P, 2.0, 0.0),
                          gg = field(P, 1.0, 0.5);
        const double two = two_phase_energy(u, f1, f2, gg, 0.0).total;
        const double parts = one_phase_energy(positive_part(u), f1, gg, 0.0).total +
                             one_phase_energy(negative_part(u), f2, gg, 0.0).total;
        split = std::max(split, std::abs(two - parts) / std::max(1.0, std::abs(parts)));
    }
    double slack = INFINITY;
    for (int t = 0; t < 1000; ++t) {
        const ScalarField u1 = field(U, 1.0, 0.0), u2 = field(U, 1.0, 0.0);
        const ScalarField f1 = field(P, 1.0, 0.0), f2t = field(P, 1.0, 0.0), bump = field(P, 0.5, 0.0);
        ScalarField f1t = f1, f2 = f2t;
        for (std::size_t n = 0; n < g.node_count(); ++n) {
            f1t[n] += bump[n];
            f2[n] += bump[n];
        }
        const ScalarField gg = field(P, 1.0, 0.5);
        const double s = comparison_inequality_check(u1, u2, f1, f2, gg, f1t, f2t, gg, 0.0);
        const double scale = std::max(1.0, std::abs(one_phase_energy(positive_part(u1), f1, gg, 0.0).total) +
                                               std::abs(one_phase_energy(positive_part(u2), f1t, gg, 0.0).total));
        slack = std::min(slack, s / scale);
    }
    return {split <= 1e-10 && slack >= -1e-10, fmt("max split residual=%.2e, min slack=%.3e", split, slack)};
}

std::size_t violations(const PhaseSolution& s) {
    std::vector<ScalarField> barriers;
    if (s.kind == SolutionKind::two_phase) {
        barriers.push_back(positive_part(*s.barrier_upper));
        barriers.push_back(negative_part(*s.barrier_lower));
    } else {
        barriers = s.barriers;
    }
    const auto phases = s.phases();
    std::size_t bad = 0;
    for (std::size_t i = 0; i < phases.size(); ++i) bad += support_violations(phases[i], barriers.at(i), s.support_tau, 1);
    return bad;
}

Outcome inclusion_criterion(const MultiRun& pair, const MultiRun& triple) {
    const std::size_t a = violations(pair.solution), b = violations(triple.solution);
    return {a == 0 && b == 0, fmt("cells beyond the 1-cell halo: two-phase=%zu, three-phase=%zu", a, b)};
}

Outcome symmetry_criterion(const MultiRun& pair) {
    const ScalarField& u = pair.solution.fields.at(0);
    const double anti = reflect_deviation(u, {1.0, 0.0, 0.0}, 0.0, true) / u.max_abs();
    const BoundaryGeometry geo = extract_phase_boundaries(pair.solution);
    const double a1 = support_asphericity(geo, {2.5, 0.0, 0.0}, 1);
    const double a2 = support_asphericity(geo, {-2.5, 0.0, 0.0}, 2);
    const double lim = 2.0 * pair.h;
    return {anti <= 1e-4 && a1 <= lim && a2 <= lim,
            fmt("antisymmetry=%.2e, asphericity=%.4f/%.4f (2h=%.4f)", anti, a1, a2, lim)};
}

Outcome junction_criterion(const MultiRun& triple) {
    const PhaseSolution& s = triple.solution;
    const Grid& grid = s.fields.at(0).grid();
    const double h = triple.h;
    bool sakai = true;
    for (const auto& m : triple.measures) sakai = sakai && sakai_check(m, grid, 1.0, {16 * h, 8 * h, 4 * h, 2 * h}).pass;
    const auto hits = junction_scan(s, 4 * h);
    const BoundaryClassification cls = classify_boundary(s);
    const double factor = std::pow(2.0, 3.0 * 0.1);
    double worst = 0.0;
    std::size_t samples = 0;
    for (std::size_t i = 0; i < cls.labels.size(); ++i) {
        if (cls.labels[i] != BoundaryLabel::two_phase) continue;
        const Point& x = cls.geometry.elements[i].midpoint;
        double prev = -1.0;
        for (double r : {16 * h, 8 * h, 4 * h}) {
            const double v = cjk_product(s.fields[0], s.fields[1], s.fields[2], x, r, 0.1, s.support_tau, 16 * h).product;
            if (prev > 0.0) worst = std::max(worst, v / prev);
            else if (prev == 0.0 && v > 0.0) worst = INFINITY;
            prev = v;
        }
        ++samples;
    }
    const bool ok = sakai && hits.empty() && samples > 0 && worst <= factor;
    return {ok, fmt("sakai=%s, junction hits=%zu, two-phase samples=%zu, max cjk step ratio=%.3f (limit %.3f)",
                    sakai ? "pass" : "fail", hits.size(), samples, worst, factor)};
}

Outcome sakai_criterion() {
    bool ok = sakai_threshold(2, 1.0) == 24.0 && sakai_threshold(3, 1.0) == 216.0;
    std::string detail = fmt("thresholds %.17g/%.17g; ", sakai_threshold(2, 1.0), sakai_threshold(3, 1.0));
    for (int dim : {2, 3}) {
        const double h = dim == 2 ? 1.0 / 32 : 1.0 / 16;
        const int n = dim == 2 ? 64 : 32;
        const Grid g = box_grid(dim, std::vector<double>(dim, -1.0), h, std::vector<int>(dim, n));
        const std::vector<double> radii{8 * h, 4 * h, 2 * h};
        double prev = -INFINITY;
        bool prev_pass = false, monotone = true;
        int first_pass = -1;
        for (int k = 1; k <= 20; ++k) {
            MeasureSpec m;
            const double mass = (dim == 2 ? 0.5 : 2.0) * k;
            m.atoms.push_back(Atom{{}, mass, 2.5 * h, 1});
            const SakaiReport r = sakai_check(m, g, 1.0, radii);
            monotone = monotone && r.best_values.at(0) > prev && (!prev_pass || r.pass);
            if (r.pass && first_pass < 0) first_pass = k;
            prev = r.best_values[0];
            prev_pass = r.pass;
        }
        ok = ok && monotone && first_pass > 1;
        detail += fmt("%dD sweep monotone=%s, first passing mass index=%d; ", dim, monotone ? "yes" : "no", first_pass);
    }
    return {ok, detail};
}

Outcome null_qs_criterion() {
    const TestFunction one = TestFunction::constant_one();
    const Point wc{0.1, -0.2, 0.15};
    double worst = 0.0;
    for (const TwoPlane& p : {two_plane(TwoPlaneKind::plus), two_plane(TwoPlaneKind::minus),
                              two_plane(TwoPlaneKind::gap, 3, 1.0), two_plane(TwoPlaneKind::linear, 3, 1.0)})
        worst = std::max(worst, std::abs(null_qs_window_residual(p, one, wc, 2.0).relative()));
    worst = std::max(worst, std::abs(null_qs_window_residual(exterior_ball_null(1.0), one, 2.0).relative()));
    const bool flag = two_plane(TwoPlaneKind::linear, 3, 0.5).minimizer;
    return {worst <= 1e-3 && !flag, fmt("max windowed residual=%.2e, a=0.5 minimizer flag=%s", worst, flag ? "true" : "false")};
}

Outcome sigma_criterion() {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> U(0.05, 20.0);
    std::uniform_int_distribution<int> D(2, 3);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double R = U(rng), M = U(rng), l0 = U(rng);
        const SakaiRadii s = sakai_radius_identity(R, M, l0, D(rng));
        worst = std::max(worst, std::abs(s.sigma - R) / R);
    }
    return {worst <= 1e-12, fmt("max |sigma - R|/R = %.2e over 100 samples", worst)};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "cone angle", cone_criterion);
    report(2, "annular construction", annulus_criterion);

    RadialRun two, three;
    bool radial_ok = true;
    try {
        two = radial_run(2);
        three = radial_run(3);
    } catch (const std::exception& e) {
        radial_ok = false;
        std::printf("radial solves failed: %s\n", e.what());
    }
    report(3, "radial support radius", [&] { return radial_ok ? radial_criterion(two, three) : Outcome{false, "no solve"}; });
    report(4, "quadrature identity", [&] { return radial_ok ? qi_criterion(two, three) : Outcome{false, "no solve"}; });
    report(5, "energy split and comparison", energy_criterion);

    MultiRun pair, triple;
    bool multi_ok = true;
    try {
        pair = pair_run();
        triple = triple_run();
    } catch (const std::exception& e) {
        multi_ok = false;
        std::printf("multi-phase solves failed: %s\n", e.what());
    }
    report(6, "support inclusion", [&] { return multi_ok ? inclusion_criterion(pair, triple) : Outcome{false, "no solve"}; });
    report(7, "pair symmetry", [&] { return multi_ok ? symmetry_criterion(pair) : Outcome{false, "no solve"}; });
    report(8, "triple-junction exclusion", [&] { return multi_ok ? junction_criterion(triple) : Outcome{false, "no solve"}; });
    report(9, "Sakai thresholds", sakai_criterion);
    report(10, "null quadrature surfaces", null_qs_criterion);
    report(11, "sigma = R identity", sigma_criterion);

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
