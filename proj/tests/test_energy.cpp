#include <doctest.h>

#include <cmath>
#include <random>

#include "qsurf/energy.hpp"
#include "qsurf/error.hpp"

using namespace qsurf;

namespace {

Grid small_grid() {
    std::vector<double> o{0.0, 0.0};
    std::vector<int> c{10, 8};
    return build_grid(2, o, 0.125, c);
}

ScalarField random_field(const Grid& g, std::mt19937& rng, double lo, double hi) {
    std::uniform_real_distribution<double> U(lo, hi);
    return ScalarField::sample(g, [&](const Point&) { return U(rng); });
}

}  // namespace

TEST_CASE("one-phase energy matches a hand evaluation") {
    const Grid g = small_grid();
    const ScalarField u = ScalarField::sample(g, [](const Point& x) { return x[0] > 0.5 ? x[0] - 0.5 : 0.0; });
    const ScalarField f = ScalarField::constant(g, 2.0);
    const ScalarField gg = ScalarField::constant(g, 1.5);
    const EnergyBreakdown e = one_phase_energy(u, f, gg, 0.0);
    double src = 0.0, pen = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) {
        const double w = g.node_weight(g.unravel(n));
        src += -2.0 * 2.0 * u[n] * w;
        if (u[n] > 0.0) pen += 1.5 * 1.5 * w;
    }
    CHECK(e.dirichlet == doctest::Approx(dirichlet_energy(u)));
    CHECK(e.source_plus == doctest::Approx(src));
    CHECK(e.perimeter_penalty == doctest::Approx(pen));
    CHECK(e.total == doctest::Approx(e.dirichlet + src + pen));
}

TEST_CASE("one-phase energy rejects negative fields") {
    const Grid g = small_grid();
    const ScalarField u = ScalarField::constant(g, -1e-3);
    const ScalarField one = ScalarField::constant(g, 1.0);
    CHECK_THROWS_AS(one_phase_energy(u, one, one, 1e-6), Error);
    CHECK_NOTHROW(one_phase_energy(u, one, one, 1e-2));
}

TEST_CASE("two-phase energy splits into the one-phase energies of the parts") {
    std::mt19937 rng(11);
    const Grid g = small_grid();
    for (int t = 0; t < 50; ++t) {
        const ScalarField u = random_field(g, rng, -1.0, 1.0);
        const ScalarField f1 = random_field(g, rng, 0.0, 2.0), f2 = random_field(g, rng, 0.0, 2.0);
        const ScalarField gg = random_field(g, rng, 0.5, 1.5);
        const EnergyBreakdown two = two_phase_energy(u, f1, f2, gg, 0.0);
        const double parts = one_phase_energy(positive_part(u), f1, gg, 0.0).total +
                             one_phase_energy(negative_part(u), f2, gg, 0.0).total;
        CHECK(std::abs(two.total - parts) <= 1e-10 * std::max(1.0, std::abs(parts)));
        CHECK(std::abs(energy_split_check(u, f1, f2, gg, 0.0)) <= 1e-10);
    }
}

TEST_CASE("multi-phase energy is the sum of the phase energies") {
    std::mt19937 rng(3);
    const Grid g = small_grid();
    std::vector<ScalarField> u, f;
    for (int i = 0; i < 3; ++i) {
        u.push_back(random_field(g, rng, 0.0, 1.0));
        f.push_back(random_field(g, rng, 0.0, 1.0));
    }
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        const int keep = static_cast<int>(n % 3);
        for (int i = 0; i < 3; ++i)
            if (i != keep) u[i][n] = 0.0;
    }
    const ScalarField gg = ScalarField::constant(g, 1.0);
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) sum += one_phase_energy(u[i], f[i], gg, 0.0).total;
    CHECK(multi_phase_energy(u, f, gg, 0.0).total == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("the comparison slack is nonnegative for ordered data") {
    std::mt19937 rng(5);
    const Grid g = small_grid();
    for (int t = 0; t < 100; ++t) {
        const ScalarField u1 = random_field(g, rng, -1.0, 1.0), u2 = random_field(g, rng, -1.0, 1.0);
        const ScalarField f1 = random_field(g, rng, 0.0, 1.0), f2t = random_field(g, rng, 0.0, 1.0);
        ScalarField f1t = f1, f2 = f2t;
        const ScalarField bump = random_field(g, rng, 0.0, 0.5);
        for (std::size_t n = 0; n < g.node_count(); ++n) {
            f1t[n] += bump[n];
            f2[n] += 0.5 * bump[n];
        }
        const ScalarField gg = random_field(g, rng, 0.5, 1.5);
        const double s = comparison_inequality_check(u1, u2, f1, f2, gg, f1t, f2t, gg, 0.0);
        CHECK(s >= -1e-10 * std::max(1.0, dirichlet_energy(u1) + dirichlet_energy(u2)));
    }
}

TEST_CASE("the comparison check refuses unordered data") {
    const Grid g = small_grid();
    const ScalarField z = ScalarField::constant(g, 0.0), one = ScalarField::constant(g, 1.0),
                      two = ScalarField::constant(g, 2.0);
    CHECK_THROWS_AS(comparison_inequality_check(z, z, two, z, one, one, z, one, 0.0), Error);
}

TEST_CASE("default tau scales with the field") {
    const Grid g = small_grid();
    CHECK(default_tau(ScalarField::constant(g, -4.0)) == doctest::Approx(4e-8));
}
