#include <doctest.h>

#include <cmath>

#include "qsurf/error.hpp"
#include "qsurf/quadrature.hpp"
#include "qsurf/reference.hpp"

using namespace qsurf;

namespace {

Grid cube(int dim, double half, double h) {
    const int n = static_cast<int>(std::lround(2.0 * half / h));
    std::vector<double> o(dim, -half);
    std::vector<int> c(dim, n);
    return build_grid(dim, o, h, c);
}

double fd_laplacian(const TestFunction& t, const Point& x, int dim) {
    const double e = 1e-3;
    double lap = 0.0;
    for (int a = 0; a < dim; ++a) {
        Point p = x, m = x;
        p[a] += e;
        m[a] -= e;
        lap += (t.value(p) + t.value(m) - 2.0 * t.value(x)) / (e * e);
    }
    return lap;
}

}  // namespace

TEST_CASE("harmonic test functions are harmonic and their gradients are consistent") {
    for (int dim : {2, 3}) {
        const Box box{{-1.0, -1.0, dim == 3 ? -1.0 : 0.0}, {1.0, 1.0, dim == 3 ? 1.0 : 0.0}};
        const auto tests = harmonic_test_set(dim, box, 2, 8);
        const std::size_t polys = dim == 2 ? 4 : 8;
        CHECK(tests.size() == 1 + polys + 8);
        int kernels = 0;
        const Point x{0.3, -0.2, dim == 3 ? 0.1 : 0.0};
        for (const auto& t : tests) {
            CHECK(std::abs(fd_laplacian(t, x, dim)) <= 1e-4 * std::max(1.0, std::abs(t.value(x))));
            const auto grad = t.gradient(x);
            for (int a = 0; a < dim; ++a) {
                Point p = x, m = x;
                p[a] += 1e-6;
                m[a] -= 1e-6;
                CHECK(grad[a] == doctest::Approx((t.value(p) - t.value(m)) / 2e-6).epsilon(1e-6));
            }
            if (t.kind == TestKind::kernel) {
                ++kernels;
                const double r = std::hypot(t.pole[0], t.pole[1], t.pole[2]);
                CHECK(r == doctest::Approx(1.5 * box.circumradius(dim)));
            }
        }
        CHECK(kernels == 8);
    }
}

TEST_CASE("harmonic polynomial families have the expected sizes") {
    CHECK(harmonic_polynomials(2, 3, {}).size() == 2);
    CHECK(harmonic_polynomials(3, 2, {}).size() == 5);
    CHECK(harmonic_polynomials(3, 0, {}).size() == 1);
    const Box box{{-1, -1, 0}, {1, 1, 0}};
    // constant plus degree one, no kernels
    CHECK(harmonic_test_set(2, box, 1).size() == 3);
}

TEST_CASE("Sakai thresholds") {
    CHECK(sakai_threshold(2, 1.0) == 24.0);
    CHECK(sakai_threshold(3, 1.0) == 216.0);
    CHECK_THROWS_AS(sakai_threshold(4, 1.0), Error);
}

TEST_CASE("Sakai concentration grows with the mass") {
    const Grid g = cube(2, 1.0, 1.0 / 32);
    const std::vector<double> radii{0.25, 0.125, 0.0625};
    double prev = -1.0;
    bool prev_pass = false;
    for (int k = 1; k <= 10; ++k) {
        MeasureSpec m;
        m.atoms.push_back(Atom{{}, 1.0 * k, 0.05, 1});
        const SakaiReport r = sakai_check(m, g, 1.0, radii);
        CHECK(r.best_values.at(0) > prev);
        if (prev_pass) CHECK(r.pass);
        prev = r.best_values[0];
        prev_pass = r.pass;
    }
    CHECK(prev_pass);
}

TEST_CASE("contour route integrates g h over the boundary") {
    const Grid g = cube(2, 1.5, 1.0 / 32);
    const ScalarField u = ScalarField::sample(g, [](const Point& x) { return 1.0 - std::hypot(x[0], x[1]); });
    const BoundaryGeometry geo = extract_contour(u, 1e-12);
    const ScalarField two = ScalarField::constant(g, 2.0);
    CHECK(surface_integral_contour(geo, two, TestFunction::constant_one()) ==
          doctest::Approx(4.0 * M_PI).epsilon(1e-3));
    // x^2 - y^2 integrates to zero over the circle
    const auto quad = harmonic_polynomials(2, 2, {});
    for (const auto& h : quad) CHECK(std::abs(surface_integral_contour(geo, two, h)) < 1e-3);
}

TEST_CASE("the exact radial solution satisfies the quadrature identity on both routes") {
    const double h = 1.0 / 32;
    const Grid g = cube(2, 1.5, h);
    const double mass = 2.0 * M_PI;   // R = 1
    MeasureSpec m;
    m.atoms.push_back(Atom{{}, mass, 0.25, 1});
    const RadialSolution exact = radial_one_phase(mass, 1.0, 2);
    PhaseSolution s;
    s.kind = SolutionKind::one_phase;
    s.fields.push_back(exact.sample(g, {}, 0.5 * h));
    s.support_tau = 1e-12;
    const ScalarField one = ScalarField::constant(g, 1.0);
    const auto tests = harmonic_test_set(2, support_box(s), 2, 8);
    const QIReport rep = qi_residual(s, std::vector<MeasureSpec>{m}, one, tests);
    CHECK(rep.rows.size() == tests.size());
    CHECK(rep.max_relative_contour() <= 0.05);
    CHECK(rep.max_relative_green() <= 0.05);
    CHECK(rep.max_route_disagreement() <= 0.05);
}

TEST_CASE("qi_residual checks its inputs") {
    const Grid g = cube(2, 1.0, 0.125);
    PhaseSolution s;
    s.kind = SolutionKind::one_phase;
    s.fields.push_back(ScalarField::constant(g, 0.0));
    const ScalarField one = ScalarField::constant(g, 1.0);
    CHECK_THROWS_AS(qi_residual(s, std::vector<ScalarField>{}, one, {TestFunction::constant_one()}), Error);
}
