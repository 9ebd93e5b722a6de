#pragma once

#include <map>
#include <string>
#include <vector>

#include "qsurf/grid.hpp"
#include "qsurf/minimize.hpp"

namespace qsurf {

// Cells are identified by the node index of their lower corner.
struct CellSet {
    std::vector<std::size_t> interior;   // every corner above tau
    std::vector<std::size_t> boundary;   // some but not all corners above tau
};

struct Supports {
    CellSet plus;
    CellSet minus;
};

Supports extract_supports(const ScalarField& u, double tau);

struct BoundaryElement {
    Point midpoint{};
    Point normal{};          // unit, pointing away from the phase
    double weight = 0.0;     // segment length (2D) or triangle area (3D)
    int phase_i = 1;
    int phase_j = 0;         // 0: the null phase {u = 0}
};

struct BoundaryGeometry {
    int dim = 2;
    double extraction_level = 0.0;
    std::vector<BoundaryElement> elements;

    bool empty() const { return elements.empty(); }
    double total_weight() const;
    void append(const BoundaryGeometry& other);
};

// Level set {sign * u = level} by marching squares (2D) or marching
// tetrahedra on a six-tetrahedron split of each cube (3D).
BoundaryGeometry extract_contour(const ScalarField& u, double level, int sign = 1, int phase = 1);

// Nodes at or below tau next to the support (any of the 3^d - 1 lattice
// directions) receive the mean of the extrapolations 2 u_j - u_k along the
// lattice lines that enter the support with two nodes above tau, or -max u_j
// when no such line exists. Values are never raised. The level set of the
// result sits between nodes instead of on the first vanishing node.
ScalarField linear_extension(const ScalarField& u, double tau);

// Boundaries of every phase (contours of the linear extensions) at `level`;
// level < 0 selects the solution's support_tau.
BoundaryGeometry extract_phase_boundaries(const PhaseSolution& solution, double level = -1.0);

// Nodes where `phase` exceeds tau but no node of {barrier > tau} lies within
// `halo_cells` grid steps along every axis (a (2k+1)^d block).
std::size_t support_violations(const ScalarField& phase, const ScalarField& barrier, double tau, int halo_cells = 1);

enum class BoundaryLabel { one_phase, two_phase, branch };
const char* boundary_label_name(BoundaryLabel label);

struct BoundaryClassification {
    BoundaryGeometry geometry;            // phase_j filled with the nearest other phase for two_phase elements
    std::vector<BoundaryLabel> labels;    // one per element
    double classification_radius = 0.0;

    std::size_t count(BoundaryLabel label) const;
};

BoundaryClassification classify_boundary(const BoundaryGeometry& geometry, double r_class);
// r_class < 0 selects 3h.
BoundaryClassification classify_boundary(const PhaseSolution& solution, double r_class = -1.0);

// Nodes whose closed r_scan-ball meets the supports (> tau) of at least three phases.
std::vector<Point> junction_scan(const std::vector<ScalarField>& phases, double r_scan, double tau);
// r_scan < 0 selects 4h.
std::vector<Point> junction_scan(const PhaseSolution& solution, double r_scan = -1.0);

enum class Verdict { pass, fail, indeterminate };
const char* verdict_name(Verdict v);

struct ProbeReport {
    std::string probe;
    Point center{};
    std::vector<double> radii;
    std::vector<double> values;
    Verdict verdict = Verdict::indeterminate;
    double threshold = 0.0;
    std::map<std::string, double> extras;
    std::vector<std::string> warnings;
};

// values[k] = spherical_average(u, x, r_k) / r_k. The extras carry the radius
// bound 2 N l / M when both l and M are positive.
ProbeReport nondegeneracy_probe(const ScalarField& u, const Point& x, const std::vector<double>& radii, double d_min,
                                double l = 0.0, double m_hat = 0.0);

// Fraction of B_r(center) where u > tau, sampled on a sub-lattice with at least 8 points per cell.
double density_ratio(const ScalarField& u, const Point& center, double r, double tau = 0.0);

struct CjkValue {
    double product = 0.0;        // ∏ I_i / r^{3(2+eps)}
    double integrals[3] = {0.0, 0.0, 0.0};
    double rhs_proxy = 0.0;      // (1 + Σ_i I_i(r_max))³
};

// I_i = ∫_{B_r} |∇u_i|² / max(|x - center|, h/2)^{N-2}.
CjkValue cjk_product(const ScalarField& u1, const ScalarField& u2, const ScalarField& u3, const Point& center,
                     double r, double epsilon = 0.1, double tau = 0.0, double r_max = -1.0);

// ∫_{B_r} |∇u|²/|x|^{N-2} over 1 + ∫_{B_2r} u², with verdict indeterminate.
ProbeReport aux_weighted_bound_check(const ScalarField& u, const Point& center, double r = 1.0);

// |{|v| <= tau} ∩ B_r| (avg_{∂B_r} v / r)² over ∫_{B_r} |∇v|².
double poincare_ratio(const ScalarField& v, const Point& center, double r, double tau = 0.0);

// max over grid nodes with x·n > t of u(x) - s u(x^t), s = -1 when `odd`.
double reflect_compare(const ScalarField& u, const Point& normal, double offset, bool odd = false);
// max over the same nodes of |u(x) - s u(x^t)|.
double reflect_deviation(const ScalarField& u, const Point& normal, double offset, bool odd = false);

// max |u(x) - u(y)| / |x - y| over grid neighbours (including diagonals) inside B_r(center).
double lipschitz_quotient(const ScalarField& u, const Point& center, double r);

struct GradientStats {
    double mean_ratio = 0.0;     // mean of |∇u| / g over the sampled elements
    double max_deviation = 0.0;  // max | |∇u| / g - 1 |
    std::size_t samples = 0;
};

// |∇u| of the linear extension at the contour level, sampled half a cell inside
// each element (along -normal) and compared with g.
GradientStats boundary_gradient_stats(const ScalarField& u, const BoundaryGeometry& geometry, const ScalarField& g,
                                      int phase = 0);

// max - min distance from `center` over the element midpoints of `phase` (0: all).
double support_asphericity(const BoundaryGeometry& geometry, const Point& center, int phase = 0);

}  // namespace qsurf
