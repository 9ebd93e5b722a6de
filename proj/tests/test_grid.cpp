#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "qsurf/error.hpp"
#include "qsurf/grid.hpp"
#include "qsurf/kernel.hpp"

using namespace qsurf;

namespace {

Grid grid2(int n = 16, double h = 0.125, double o = -1.0) {
    std::vector<double> origin{o, o};
    std::vector<int> cells{n, n};
    return build_grid(2, origin, h, cells);
}

Grid grid3(int n = 8, double h = 0.25, double o = -1.0) {
    std::vector<double> origin{o, o, o};
    std::vector<int> cells{n, n, n};
    return build_grid(3, origin, h, cells);
}

}  // namespace

TEST_CASE("row-major indexing round trips") {
    const Grid g = grid3(8, 0.5);
    CHECK(g.node_count() == 729);
    for (std::size_t n = 0; n < g.node_count(); ++n) CHECK(g.index(g.unravel(n)) == n);
    CHECK(g.index(1, 0, 0) == 81);
    CHECK(g.index(0, 1, 0) == 9);
    CHECK(g.index(0, 0, 1) == 1);
    const Point p = g.node(2, 3, 4);
    CHECK(p[0] == doctest::Approx(0.0));
    CHECK(p[1] == doctest::Approx(0.5));
    CHECK(p[2] == doctest::Approx(1.0));
}

TEST_CASE("trapezoid weights integrate polynomials of degree one exactly") {
    for (const Grid& g : {grid2(), grid3()}) {
        double vol = 1.0;
        for (int a = 0; a < g.dim(); ++a) vol *= g.cells()[a] * g.spacing();
        double sum = 0.0;
        for (double w : g.node_weights()) sum += w;
        CHECK(sum == doctest::Approx(vol).epsilon(1e-14));
        const ScalarField lin = ScalarField::sample(g, [](const Point& x) { return 3.0 + 2.0 * x[0] - x[1] + x[2]; });
        // the box is symmetric about 0, so the odd terms vanish
        CHECK(integrate(lin) == doctest::Approx(3.0 * vol).epsilon(1e-13));
    }
}

TEST_CASE("forward-difference Dirichlet energy is exact for affine fields") {
    const Grid g = grid3();
    const ScalarField u = ScalarField::sample(g, [](const Point& x) { return 0.5 + 2.0 * x[0] - 3.0 * x[1] + x[2]; });
    const double vol = std::pow(8 * 0.25, 3);
    CHECK(dirichlet_energy(u) == doctest::Approx(14.0 * vol).epsilon(1e-12));
    std::size_t edges = 0;
    for_each_edge(g, [&](std::size_t a, std::size_t b) {
        CHECK(a < b);
        ++edges;
    });
    CHECK(edges == 3 * g.cell_count());
}

TEST_CASE("neighbour visitor mirrors the edge visitor") {
    const Grid g = grid2(8, 0.25);
    std::vector<int> degree(g.node_count(), 0), visited(g.node_count(), 0);
    for_each_edge(g, [&](std::size_t a, std::size_t b) {
        ++degree[a];
        ++degree[b];
    });
    for (std::size_t n = 0; n < g.node_count(); ++n) for_each_neighbour(g, n, [&](std::size_t) { ++visited[n]; });
    CHECK(degree == visited);
}

TEST_CASE("interpolation reproduces multilinear functions") {
    const Grid g = grid3();
    auto f = [](const Point& x) { return 1.0 + x[0] - 2.0 * x[1] + 0.5 * x[2] + x[0] * x[1] * x[2]; };
    const ScalarField u = ScalarField::sample(g, f);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-0.99, 0.99);
    for (int t = 0; t < 50; ++t) {
        const Point p{U(rng), U(rng), U(rng)};
        CHECK(interpolate(u, p) == doctest::Approx(f(p)).epsilon(1e-12));
    }
    const ScalarField lin = ScalarField::sample(g, [](const Point& x) { return 2.0 * x[0] - x[2]; });
    const auto grad = interpolate_gradient(lin, {0.1, 0.2, 0.3});
    CHECK(grad[0] == doctest::Approx(2.0));
    CHECK(grad[1] == doctest::Approx(0.0));
    CHECK(grad[2] == doctest::Approx(-1.0));
}

TEST_CASE("spherical averages of harmonic functions equal the center value") {
    const Grid g = grid2(64, 1.0 / 32);
    const ScalarField u = ScalarField::sample(g, [](const Point& x) { return x[0] * x[0] - x[1] * x[1] + 3.0 * x[0]; });
    const Point c{0.1, -0.05, 0.0};
    const double exact = c[0] * c[0] - c[1] * c[1] + 3.0 * c[0];
    CHECK(spherical_average(u, c, 0.5) == doctest::Approx(exact).epsilon(2e-3));
    std::vector<Point> pts;
    std::vector<double> w;
    sphere_quadrature(3, 0.5, 0.05, {}, pts, w);
    double s = 0.0;
    for (double x : w) s += x;
    CHECK(s == doctest::Approx(1.0));
    for (const Point& p : pts) CHECK(std::hypot(p[0], p[1], p[2]) == doctest::Approx(0.5));
}

TEST_CASE("rasterized measures carry their mass") {
    const Grid g = grid2(128, 1.0 / 32, -2.0);
    MeasureSpec m;
    m.atoms.push_back(Atom{{0.3, -0.2, 0.0}, 5.0, 0.25, 1});
    m.shells.push_back(Shell{{0.0, 0.0, 0.0}, 1.0, 2.0, 0.125, 1});
    const double expected = 5.0 + 2.0 * 2.0 * M_PI;
    CHECK(m.total_mass(2) == doctest::Approx(expected));
    CHECK(integrate(rasterize_measure(m, g)) == doctest::Approx(expected).epsilon(1e-3));
    MeasureSpec bad;
    bad.atoms.push_back(Atom{{1.9, 0.0, 0.0}, 1.0, 0.25, 1});
    CHECK_THROWS_AS(rasterize_measure(bad, g), Error);
}

TEST_CASE("grid construction validates its arguments") {
    std::vector<double> o{0.0, 0.0};
    std::vector<int> c{8, 8};
    CHECK_THROWS_AS(build_grid(2, o, 0.0, c), Error);
    CHECK_THROWS_AS(build_grid(4, o, 1.0, c), Error);
    std::vector<int> c1{8};
    std::vector<int> c2{8, 4};
    CHECK_THROWS_AS(build_grid(2, o, 1.0, c2), Error);
    CHECK_THROWS_AS(build_grid(2, o, 1.0, c1), Error);
}

TEST_CASE("fields survive a write/read round trip") {
    const Grid g = grid3(8, 0.25);
    const ScalarField u = ScalarField::sample(g, [](const Point& x) { return std::sin(x[0]) + x[1] * x[2]; });
    const auto dir = std::filesystem::temp_directory_path() / "qsurf_field_roundtrip";
    std::filesystem::create_directories(dir);
    write_field(u, dir / "u.json");
    CHECK(std::filesystem::exists(raw_path_for(dir / "u.json")));
    const ScalarField v = read_field(dir / "u.json");
    CHECK(v.grid() == g);
    CHECK(v.values() == u.values());
    CHECK_THROWS_AS(read_field(dir / "missing.json"), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("the Newtonian kernel is harmonic off the pole and has unit flux") {
    for (int dim : {2, 3}) {
        const Point y{0.2, -0.1, dim == 3 ? 0.3 : 0.0};
        const Point x{1.0, 0.7, dim == 3 ? -0.4 : 0.0};
        const double e = 1e-3;
        double lap = 0.0;
        for (int a = 0; a < dim; ++a) {
            Point p = x, m = x;
            p[a] += e;
            m[a] -= e;
            lap += newtonian_kernel(p, y, dim) + newtonian_kernel(m, y, dim) - 2.0 * newtonian_kernel(x, y, dim);
            const double fd = (newtonian_kernel(p, y, dim) - newtonian_kernel(m, y, dim)) / (2.0 * e);
            CHECK(newtonian_kernel_gradient(x, y, dim)[a] == doctest::Approx(fd).epsilon(1e-6));
        }
        CHECK(std::abs(lap / (e * e)) < 1e-4);
        // -dG/dr times the sphere area is one
        const double r = 0.7, dr = 1e-5;
        const double flux = -(newtonian_radial(r + dr, dim) - newtonian_radial(r - dr, dim)) / (2 * dr) * sphere_area(dim, r);
        CHECK(flux == doctest::Approx(1.0).epsilon(1e-8));
    }
}
