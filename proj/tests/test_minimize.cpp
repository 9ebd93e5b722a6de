#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qsurf/error.hpp"
#include "qsurf/kernel.hpp"
#include "qsurf/minimize.hpp"

using namespace qsurf;

namespace {

Grid square(double half, double h) {
    const int n = static_cast<int>(std::lround(2.0 * half / h));
    std::vector<double> o{-half, -half};
    std::vector<int> c{n, n};
    return build_grid(2, o, h, c);
}

double support_radius(const ScalarField& u, double tau) {
    const Grid& g = u.grid();
    double area = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n)
        if (u[n] > tau) area += g.node_weight(g.unravel(n));
    return std::sqrt(area / M_PI);
}

ScalarField atom_density(const Grid& g, const Point& c, double mass, double mollifier = 0.125) {
    MeasureSpec m;
    m.atoms.push_back(Atom{c, mass, mollifier, 1});
    return rasterize_measure(m, g);
}

}  // namespace

TEST_CASE("solve options are validated") {
    SolveOptions o;
    CHECK_NOTHROW(o.validate());
    o.max_outer_iters = 0;
    CHECK_THROWS_AS(o.validate(), Error);
    o = {};
    o.regularization_schedule = {0.1, 0.2};
    CHECK_THROWS_AS(o.validate(), Error);
    o = {};
    o.seed_mode = SeedMode::custom;
    CHECK_THROWS_AS(o.validate(), Error);
}

TEST_CASE("small radial one-phase solve finds the closed-form support") {
    const double h = 1.0 / 32;
    const Grid g = square(1.25, h);
    // |grad u| = 1 on the free boundary: mass = 2 pi R with R = 1/2
    const ScalarField f = atom_density(g, {}, M_PI);
    const PhaseSolution s = minimize_one_phase(f, ScalarField::constant(g, 1.0));
    REQUIRE(s.fields.size() == 1);
    CHECK(s.fields[0].min() >= 0.0);
    CHECK(std::abs(support_radius(s.fields[0], s.support_tau) - 0.5) <= 2.0 * h);
    CHECK(s.energy.total < 0.0);
    CHECK_FALSE(s.log.empty());
    CHECK(s.energy.total == doctest::Approx(one_phase_energy(s.fields[0], f, ScalarField::constant(g, 1.0), s.support_tau).total));
}

TEST_CASE("the one-phase solve reports supports that reach the box") {
    const Grid g = square(0.5, 1.0 / 16);
    const ScalarField f = atom_density(g, {}, 4.0 * M_PI);
    CHECK_THROWS_AS(minimize_one_phase(f, ScalarField::constant(g, 1.0)), Error);
}

TEST_CASE("largest and smallest minimizers agree for a radial datum") {
    const Grid g = square(1.0, 1.0 / 16);
    const ScalarField f = atom_density(g, {}, M_PI);
    const ScalarField one = ScalarField::constant(g, 1.0);
    const PhaseSolution big = select_extremal(f, one, Extremal::largest);
    const PhaseSolution small = select_extremal(f, one, Extremal::smallest);
    CHECK(big.extremal == "largest");
    CHECK(small.extremal == "smallest");
    double diff = 0.0;
    for (std::size_t n = 0; n < g.node_count(); ++n) diff = std::max(diff, std::abs(big.fields[0][n] - small.fields[0][n]));
    CHECK(diff <= 1e-6 * big.fields[0].max_abs());
    CHECK(std::abs(big.energy.total - small.energy.total) <= 1e-6 * std::abs(big.energy.total));
}

TEST_CASE("two-phase solve keeps the sign structure of its data") {
    const double h = 1.0 / 16;
    std::vector<double> o{-2.0, -1.0};
    std::vector<int> c{64, 32};
    const Grid g = build_grid(2, o, h, c);
    const ScalarField f1 = atom_density(g, {1.0, 0.0, 0.0}, M_PI), f2 = atom_density(g, {-1.0, 0.0, 0.0}, M_PI);
    const PhaseSolution s = minimize_two_phase(f1, f2, ScalarField::constant(g, 1.0));
    REQUIRE(s.barrier_upper.has_value());
    REQUIRE(s.barrier_lower.has_value());
    const ScalarField& u = s.fields[0];
    CHECK(interpolate(u, {1.0, 0.0, 0.0}) > 0.0);
    CHECK(interpolate(u, {-1.0, 0.0, 0.0}) < 0.0);
    // barriers bracket the solution
    for (std::size_t n = 0; n < u.size(); ++n) {
        CHECK(u[n] <= (*s.barrier_upper)[n] + 1e-6);
        CHECK(u[n] >= (*s.barrier_lower)[n] - 1e-6);
    }
    CHECK(s.phases().size() == 2);
}

TEST_CASE("segregation projection leaves disjoint supports") {
    std::vector<double> o{0.0, 0.0};
    std::vector<int> c{8, 8};
    const Grid g = build_grid(2, o, 0.125, c);
    std::vector<ScalarField> u = {ScalarField::sample(g, [](const Point& x) { return 1.0 - x[0]; }),
                                  ScalarField::sample(g, [](const Point& x) { return x[0]; }),
                                  ScalarField::sample(g, [](const Point& x) { return x[1] * 0.5; })};
    const auto p = segregation_project(u);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        int positive = 0;
        double largest = 0.0;
        for (const auto& v : u) largest = std::max(largest, v[n]);
        for (const auto& v : p) {
            CHECK(v[n] >= 0.0);
            CHECK(v[n] <= largest + 1e-15);
            if (v[n] > 0.0) ++positive;
        }
        CHECK(positive <= 1);
    }
}

TEST_CASE("Newtonian potential of a mollified atom matches the kernel outside the mollifier") {
    const Grid g = square(2.0, 1.0 / 16);
    const double mass = 3.0;
    const ScalarField f = atom_density(g, {}, mass, 0.25);
    const ScalarField v = newtonian_potential(f);
    // exterior values differ from the kernel only by the constant normalization of the log in 2D
    const Point a{1.0, 0.0, 0.0}, b{0.0, 1.5, 0.0};
    const double dv = interpolate(v, a) - interpolate(v, b);
    const double dk = mass * (newtonian_kernel(a, {}, 2) - newtonian_kernel(b, {}, 2));
    CHECK(dv == doctest::Approx(dk).epsilon(2e-2));
}

TEST_CASE("the default continuation schedule decreases") {
    const Grid g = square(1.0, 1.0 / 32);
    const auto s = default_schedule(g, 1.0);
    REQUIRE(s.size() >= 2);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] < s[i - 1]);
    CHECK(s.back() > 0.0);
}
