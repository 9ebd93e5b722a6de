#include <doctest.h>

#include <cmath>

#include "qsurf/error.hpp"
#include "qsurf/geometry.hpp"

using namespace qsurf;

namespace {

Grid cube(int dim, double half, double h) {
    const int n = static_cast<int>(std::lround(2.0 * half / h));
    std::vector<double> o(dim, -half);
    std::vector<int> c(dim, n);
    return build_grid(dim, o, h, c);
}

double norm(const Point& p) { return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); }

PhaseSolution as_solution(std::vector<ScalarField> fields, SolutionKind kind, double tau = 0.0) {
    PhaseSolution s;
    s.kind = kind;
    s.fields = std::move(fields);
    s.support_tau = tau;
    return s;
}

}  // namespace

TEST_CASE("contours of a cone recover circle and sphere") {
    for (int dim : {2, 3}) {
        const double h = dim == 2 ? 1.0 / 32 : 1.0 / 16;
        const Grid g = cube(dim, 1.5, h);
        const ScalarField u = ScalarField::sample(g, [](const Point& x) { return 1.0 - norm(x); });
        const BoundaryGeometry geo = extract_contour(u, 1e-12);
        CHECK(geo.dim == dim);
        CHECK(geo.total_weight() == doctest::Approx(sphere_area(dim, 1.0)).epsilon(dim == 2 ? 1e-3 : 5e-3));
        for (const auto& e : geo.elements) {
            CHECK(norm(e.normal) == doctest::Approx(1.0));
            // normals point out of {u > 0}
            double dot = 0.0;
            for (int a = 0; a < dim; ++a) dot += e.normal[a] * e.midpoint[a];
            CHECK(dot > 0.0);
        }
        CHECK(support_asphericity(geo, {}) <= h);
    }
}

TEST_CASE("the negative sign extracts the other phase") {
    const Grid g = cube(2, 1.5, 1.0 / 16);
    const ScalarField u = ScalarField::sample(g, [](const Point& x) { return x[0]; });
    const BoundaryGeometry neg = extract_contour(u, 0.25, -1, 2);
    REQUIRE_FALSE(neg.empty());
    for (const auto& e : neg.elements) {
        CHECK(e.midpoint[0] == doctest::Approx(-0.25));
        CHECK(e.normal[0] == doctest::Approx(1.0));
        CHECK(e.phase_i == 2);
    }
    CHECK(neg.total_weight() == doctest::Approx(3.0));
}

TEST_CASE("linear extension continues ramps across the free boundary") {
    const double h = 0.1;
    const Grid g = cube(2, 1.0, h);
    // a ramp that vanishes at x = 0.05, between two nodes
    const ScalarField u = ScalarField::sample(g, [](const Point& x) { return std::max(x[0] - 0.05, 0.0); });
    const ScalarField e = linear_extension(u, 0.0);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        CHECK(e[n] <= u[n]);
        const Point x = g.node(n);
        if (std::abs(x[0]) < 1e-12 && std::abs(x[1]) < 0.85) CHECK(e[n] == doctest::Approx(-0.05));
        if (x[0] < -0.15) CHECK(e[n] == u[n]);
    }
    const BoundaryGeometry geo = extract_contour(e, 1e-12);
    for (const auto& el : geo.elements) CHECK(el.midpoint[0] == doctest::Approx(0.05));
}

TEST_CASE("support violations respect the halo") {
    const Grid g = cube(2, 1.0, 0.1);
    const ScalarField barrier = ScalarField::sample(g, [](const Point& x) { return x[0] < 0.0 ? 1.0 : 0.0; });
    const ScalarField inside = ScalarField::sample(g, [](const Point& x) { return x[0] < 0.05 ? 1.0 : 0.0; });
    const ScalarField outside = ScalarField::sample(g, [](const Point& x) { return x[0] < 0.25 ? 1.0 : 0.0; });
    CHECK(support_violations(inside, barrier, 0.5, 1) == 0);
    // the last barrier column is x = -0.1, so x = 0.1 and 0.2 lie two and three steps away
    CHECK(support_violations(outside, barrier, 0.5, 1) == 42);
    CHECK(support_violations(outside, barrier, 0.5, 2) == 21);
    CHECK(support_violations(outside, barrier, 0.5, 3) == 0);
}

TEST_CASE("supports split into interior and boundary cells") {
    const Grid g = cube(2, 1.0, 0.25);
    const ScalarField u = ScalarField::sample(g, [](const Point& x) { return x[0] - 0.125; });
    const Supports s = extract_supports(u, 0.0);
    // columns of cells: three fully positive, one cut, four fully negative
    CHECK(s.plus.interior.size() == 24);
    CHECK(s.plus.boundary.size() == 8);
    CHECK(s.minus.interior.size() == 32);
    CHECK(s.minus.boundary.size() == 8);
}

TEST_CASE("classification separates one-phase, two-phase and branch points") {
    const double h = 1.0 / 16;
    const Grid g = cube(2, 1.0, h);
    // u+ and u- touch along x = 0 for y > 0 and are separated by a gap for y < 0
    const ScalarField u = ScalarField::sample(g, [](const Point& x) {
        if (x[1] > 0.0) return x[0];
        return x[0] > 0.25 ? x[0] - 0.25 : (x[0] < -0.25 ? x[0] + 0.25 : 0.0);
    });
    const PhaseSolution s = as_solution({u}, SolutionKind::two_phase, 1e-9);
    const BoundaryClassification c = classify_boundary(s);
    CHECK(c.classification_radius == doctest::Approx(3 * h));
    CHECK(c.count(BoundaryLabel::two_phase) > 0);
    CHECK(c.count(BoundaryLabel::one_phase) > 0);
    for (std::size_t i = 0; i < c.labels.size(); ++i) {
        const Point& m = c.geometry.elements[i].midpoint;
        if (m[1] > 0.3 && std::abs(m[1]) < 0.8) CHECK(c.labels[i] == BoundaryLabel::two_phase);
        if (m[1] < -0.3 && std::abs(m[1]) < 0.8) CHECK(c.labels[i] == BoundaryLabel::one_phase);
    }
}

TEST_CASE("junction scan sees three phases only near a triple point") {
    const double h = 1.0 / 16;
    const Grid g = cube(2, 1.0, h);
    auto sector = [](int k) {
        return [k](const Point& x) {
            const double a = std::atan2(x[1], x[0]) + M_PI;
            const int s = std::min(2, static_cast<int>(a / (2.0 * M_PI / 3.0)));
            return s == k ? norm(x) : 0.0;
        };
    };
    std::vector<ScalarField> phases = {ScalarField::sample(g, sector(0)), ScalarField::sample(g, sector(1)),
                                       ScalarField::sample(g, sector(2))};
    const auto hits = junction_scan(phases, 4 * h, 1e-12);
    REQUIRE_FALSE(hits.empty());
    // a hit ball reaches the supported nodes next to the triple point
    for (const Point& p : hits) CHECK(norm(p) <= 4 * h + std::sqrt(2.0) * h);
    phases[2] = ScalarField::constant(g, 0.0);
    CHECK(junction_scan(phases, 4 * h, 1e-12).empty());
}

TEST_CASE("reflection comparisons detect symmetry") {
    const Grid g = cube(2, 1.0, 0.125);
    const ScalarField odd = ScalarField::sample(g, [](const Point& x) { return std::sin(x[0]) * (1.0 + x[1] * x[1]); });
    const ScalarField even = ScalarField::sample(g, [](const Point& x) { return std::cos(x[0]) + x[1]; });
    CHECK(reflect_deviation(odd, {1.0, 0.0, 0.0}, 0.0, true) <= 1e-14);
    CHECK(reflect_deviation(even, {1.0, 0.0, 0.0}, 0.0, false) <= 1e-14);
    CHECK(reflect_deviation(even, {0.0, 1.0, 0.0}, 0.0, false) == doctest::Approx(2.0));
    const ScalarField ramp = ScalarField::sample(g, [](const Point& x) { return x[0]; });
    CHECK(reflect_compare(ramp, {1.0, 0.0, 0.0}, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("probe quantities on simple fields") {
    const double h = 1.0 / 32;
    const Grid g = cube(2, 1.0, h);
    const ScalarField half = ScalarField::sample(g, [](const Point& x) { return std::max(x[0], 0.0); });
    CHECK(density_ratio(half, {}, 0.5) == doctest::Approx(0.5).epsilon(2e-2));
    CHECK(lipschitz_quotient(half, {}, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    const ProbeReport nd = nondegeneracy_probe(half, {}, {0.5, 0.25}, 0.1, 1.0, 4.0);
    REQUIRE(nd.values.size() == 2);
    // the average of x+ over a circle of radius r is r / pi
    CHECK(nd.values[0] == doctest::Approx(1.0 / M_PI).epsilon(1e-2));
    CHECK(nd.verdict == Verdict::pass);
    CHECK(nd.extras.at("radius_bound") == doctest::Approx(1.0));
    CHECK_THROWS_AS(density_ratio(half, {0.9, 0.0, 0.0}, 0.5), Error);
    const ProbeReport aux = aux_weighted_bound_check(half, {}, 0.25);
    CHECK(aux.verdict == Verdict::indeterminate);
    CHECK(poincare_ratio(half, {}, 0.5) > 0.0);
}

TEST_CASE("cjk product is permutation invariant and rejects overlap") {
    const double h = 1.0 / 16;
    const Grid g = cube(2, 1.0, h);
    const ScalarField a = ScalarField::sample(g, [](const Point& x) { return std::max(x[0], 0.0); });
    const ScalarField b = ScalarField::sample(g, [](const Point& x) { return x[0] < 0.0 && x[1] > 0.0 ? -x[0] * x[1] : 0.0; });
    const ScalarField c = ScalarField::sample(g, [](const Point& x) { return x[0] < 0.0 && x[1] < 0.0 ? x[0] * x[1] : 0.0; });
    const double p1 = cjk_product(a, b, c, {}, 0.5).product;
    CHECK(p1 > 0.0);
    CHECK(cjk_product(c, a, b, {}, 0.5).product == p1);
    CHECK_THROWS_AS(cjk_product(a, a, c, {}, 0.5), Error);
}

TEST_CASE("boundary gradient statistics compare |grad u| with g") {
    const Grid g = cube(2, 1.0, 1.0 / 32);
    const ScalarField u = ScalarField::sample(g, [](const Point& x) { return std::max(0.5 - norm(x), 0.0); });
    const BoundaryGeometry geo = extract_contour(linear_extension(u, 0.0), 1e-12);
    const GradientStats st = boundary_gradient_stats(u, geo, ScalarField::constant(g, 1.0));
    CHECK(st.samples == geo.elements.size());
    CHECK(st.mean_ratio == doctest::Approx(1.0).epsilon(2e-2));
}
