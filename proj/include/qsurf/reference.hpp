#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qsurf/grid.hpp"
#include "qsurf/quadrature.hpp"

namespace qsurf {

// On [r_lo, r_hi] the profile is a + b·log r (2D) or a + b·r^{2-N} (3D).
struct RadialPiece {
    double r_lo = 0.0;
    double r_hi = 0.0;
    double a = 0.0;
    double b = 0.0;
};

// A breakpoint between two pieces; `density` is the surface density of the
// measure there, i.e. u'(r+) - u'(r-) = -density.
struct RadialShell {
    double radius = 0.0;
    double density = 0.0;
};

struct RadialSolution {
    int dim = 3;
    std::vector<RadialPiece> pieces;        // contiguous, increasing
    std::vector<RadialShell> shells;        // interior breakpoints
    std::vector<double> boundary_radii;     // ends of the support where u = 0
    std::vector<double> boundary_gradients; // |u'| there
    std::vector<std::string> notes;

    std::vector<double> breakpoints() const;
    double value(double r) const;       // 0 outside the pieces
    double derivative(double r) const;  // one-sided from inside the piece containing r
    double derivative_left(double r) const;
    double derivative_right(double r) const;

    // Largest jump of u over the shells, and largest |u'(r+) - u'(r-) + density|.
    double continuity_residual() const;
    double jump_residual() const;
    // Largest |u| and | |u'| - stated gradient | over the boundary radii.
    double boundary_residual() const;

    // Values on the grid nodes around `center`; radii below r_min are clamped
    // to r_min (the Dirac solution is singular at the origin).
    ScalarField sample(const Grid& grid, const Point& center, double r_min = 0.0) const;
};

// Dirac mass c at the origin with constant gradient bound g0.
RadialSolution radial_one_phase(double mass, double g0, int dim);

struct AnnulusConstruction {
    RadialSolution one_phase;     // u on [inner_radius, R], zero at both ends
    RadialSolution two_phase;     // odd Kelvin extension across the inner sphere
    double outer_radius = 0.0;    // R
    double inverted_radius = 0.0; // inner_radius² / R
    double inverted_gradient = 0.0;
};

// Shell of density `shell_density` on |x| = shell_radius inside the annulus
// inner_radius < |x| < R with u = 0 on both spheres and |u'(R)| = 1. R is the
// positive root of R² - r_in R - ρ s (s - r_in) = 0, which exceeds the shell
// radius only when ρ > 1.
AnnulusConstruction annular_construction(double shell_radius = 2.0, double shell_density = 3.0,
                                         double inner_radius = 1.0, int dim = 3);

// u*(r) = -(ρ/r)^{N-2} u(ρ²/r) for the inversion sphere of radius ρ. The
// input must vanish on that sphere. `odd = false` gives the even reflection.
RadialSolution kelvin_invert(const RadialSolution& radial, double inversion_radius = 1.0, bool odd = true);

// Antisymmetric extension of u across {x·n = offset}: nodes with x·n < offset
// take -u(x^t). Throws overlap if u is nonzero more than one cell on the far side.
ScalarField odd_reflection(const ScalarField& u, const Point& normal, double offset, double tau = 0.0);

struct AnalyticField {
    int dim = 3;
    std::string name;
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient;

    ScalarField sample(const Grid& grid) const;
};

enum class TwoPlaneKind { plus, minus, gap, linear };

struct TwoPlane {
    TwoPlaneKind kind = TwoPlaneKind::plus;
    int dim = 3;
    double gamma = 0.0;   // gap width
    double slope = 1.0;   // linear slope a
    bool minimizer = true;

    AnalyticField field() const;
};

// Two-plane solutions in x_N: x_N⁺, -x_N⁻, x_N⁺ - (x_N + γ)⁻, a·x_N.
TwoPlane two_plane(TwoPlaneKind kind, int dim = 3, double parameter = 0.0);

struct ExteriorBall {
    int dim = 3;
    Point center{};
    double radius = 1.0;
    double b = 0.0;   // u = b|x - x0|^{2-N} + c in 3D; u = b log(|x - x0| / r) in 2D
    double c = 0.0;

    AnalyticField field() const;
};

ExteriorBall exterior_ball_null(double radius, const Point& center = {}, int dim = 3);

struct ConeProfile {
    std::vector<double> theta;
    std::vector<double> f;
    double theta0 = 0.0;              // radians
    double theta0_degrees = 0.0;
    double fprime_theta0 = 0.0;
    double fprime_half_pi = 0.0;
    double f_at_theta0 = 0.0;
    double ode_residual = 0.0;        // max |(sin θ f')' + 2 sin θ f| over tabulated θ in (0.1, π/2)

    // r·max(f(θ)/f'(θ0), 0) with θ the polar angle from the x3 axis.
    AnalyticField field() const;
};

double cone_f(double theta);
double cone_fprime(double theta);

ConeProfile ac_cone(int resolution = 1024);

struct SakaiRadii {
    double r = 0.0;
    double sigma = 0.0;
    double r_bound = 0.0;        // 2 N l0 / M
    bool below_bound = false;    // r < r_bound
};

// r = R (N l0 / (M R))^{1/N}, σ = (r^N M / (N l0))^{1/(N-1)}.
SakaiRadii sakai_radius_identity(double R, double M, double l0, int dim);

struct WindowResidual {
    double surface = 0.0;     // Σ_s s ∫_{∂Ω_s ∩ W} g h
    double correction = 0.0;  // ∫_{∂W} (h ∂_ν u - u ∂_ν h), u signed
    double residual = 0.0;    // surface - correction
    double scale = 1.0;
    double relative() const { return residual / scale; }
};

// Quadrature identity of a null configuration restricted to the ball W of
// radius `window_radius` about `window_center`; g is constant. Integrals are
// evaluated by Gauss-Legendre rules split where the free surface meets ∂W.
WindowResidual null_qs_window_residual(const TwoPlane& solution, const TestFunction& h, const Point& window_center,
                                       double window_radius, double g = 1.0, int order = 48);
WindowResidual null_qs_window_residual(const ExteriorBall& solution, const TestFunction& h,
                                       double window_radius, double g = 1.0, int order = 48);
// Window centered at the cone vertex.
WindowResidual null_qs_window_residual(const ConeProfile& cone, const TestFunction& h, double window_radius,
                                       double g = 1.0, int order = 48);

}  // namespace qsurf
