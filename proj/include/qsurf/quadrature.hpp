#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qsurf/geometry.hpp"
#include "qsurf/grid.hpp"
#include "qsurf/kernel.hpp"
#include "qsurf/minimize.hpp"

namespace qsurf {

enum class TestKind { constant, harmonic_polynomial, kernel, general };

struct TestFunction {
    TestKind kind = TestKind::constant;
    std::string label;
    Point pole{};                   // kernel center (kind == kernel)
    std::array<int, 3> multi_index{};
    int degree = 0;
    std::function<double(const Point&)> value;
    std::function<std::array<double, 3>(const Point&)> gradient;

    static TestFunction constant_one();
    static TestFunction kernel_at(const Point& y, int dim);
    static TestFunction general_function(std::string label, std::function<double(const Point&)> value,
                                         std::function<std::array<double, 3>(const Point&)> gradient);

    ScalarField sample(const Grid& grid) const;
};

struct Box {
    Point lo{};
    Point hi{};
    Point center() const;
    double circumradius(int dim) const;
};

// Bounding box of the nodes where any phase exceeds tau.
Box support_box(const PhaseSolution& solution);

// Harmonic polynomials of exact degree `degree` (2l+1 in 3D, 2 in 2D), centered at c.
std::vector<TestFunction> harmonic_polynomials(int dim, int degree, const Point& c);

// Constant 1, harmonic polynomials of degree 1..max_degree, and `kernel_count`
// kernels with poles on the circle/sphere of radius 1.5 x the circumradius of `support`.
std::vector<TestFunction> harmonic_test_set(int dim, const Box& support, int max_degree, int kernel_count);
// Convenience form: degree min(4, k), k - 1 kernels (k = 1 gives constant + linear).
std::vector<TestFunction> harmonic_test_set(int dim, const Box& support, int k);

double surface_integral_contour(const BoundaryGeometry& geometry, const ScalarField& g, const TestFunction& h);

// Volume route: ∫_{Ω_s} h f_s - Σ_edges (Δh)(Δu_s) with u_s = (s·u)+ zeroed below tau.
double surface_integral_green(const ScalarField& u, int sign, const ScalarField& f_s, const TestFunction& h,
                              double tau);
double surface_integral_green(const ScalarField& u_s, const ScalarField& f_s, const ScalarField& h_sampled,
                              double tau);

struct QIRow {
    std::size_t test_id = 0;
    std::string kind;
    std::string label;
    int phase_i = 1;
    int phase_j = 0;             // 0: the null phase
    double lhs_contour = 0.0;
    double lhs_green = 0.0;
    double rhs_measure = 0.0;
    double residual_contour = 0.0;
    double residual_green = 0.0;
    double scale = 1.0;
    double collar_contribution = 0.0;
};

struct QIReport {
    std::vector<QIRow> rows;
    std::vector<std::string> warnings;
    double max_relative_contour() const;
    double max_relative_green() const;
    double max_route_disagreement() const;
};

struct QIOptions {
    double tau = -1.0;          // < 0: the solution's support_tau
    double level = -1.0;        // contour level; < 0: tau
};

// `densities` holds the rasterized density of each phase (same order as solution.phases()).
QIReport qi_residual(const PhaseSolution& solution, const std::vector<ScalarField>& densities, const ScalarField& g,
                     const std::vector<TestFunction>& tests, const QIOptions& opts = {});
QIReport qi_residual(const PhaseSolution& solution, const std::vector<MeasureSpec>& measures, const ScalarField& g,
                     const std::vector<TestFunction>& tests, const QIOptions& opts = {});

struct SubharmonicCheck {
    double residual_contour = 0.0;   // lhs - rhs
    double residual_green = 0.0;
    double scale = 1.0;
    std::vector<std::string> warnings;
};

// lhs - rhs for a (sub/super)harmonic test h; phase 1 should see a subharmonic h,
// phase 2 a superharmonic one.
SubharmonicCheck subharmonic_qi_check(const PhaseSolution& solution, const std::vector<ScalarField>& densities,
                                      const ScalarField& g, const TestFunction& h, const QIOptions& opts = {});

double sakai_threshold(int dim, double c_bound);

struct SakaiReport {
    double threshold = 0.0;
    std::vector<Point> points;
    std::vector<double> best_values;    // max over radii per point
    std::vector<double> radii;
    std::vector<double> worst_by_radius; // min over points per radius
    bool pass = false;
};

SakaiReport sakai_check(const MeasureSpec& measure, const Grid& grid, double c_bound, const std::vector<double>& radii);

}  // namespace qsurf
