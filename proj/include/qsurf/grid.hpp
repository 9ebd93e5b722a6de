#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace qsurf {

// Points always carry three coordinates; in 2D the third one is zero.
using Point = std::array<double, 3>;
using Index3 = std::array<int, 3>;

double unit_sphere_area(int dim);          // 2π or 4π
double ball_volume(int dim, double r);
double sphere_area(int dim, double r);

// Uniform isotropic grid. Values live on nodes; node (i, j, k) has flat index
// (i * n1 + j) * n2 + k, so the last axis varies fastest. In 2D the third axis
// is degenerate with a single node.
class Grid {
public:
    Grid() = default;

    int dim() const { return dim_; }
    const Point& origin() const { return origin_; }
    double spacing() const { return h_; }
    const Index3& cells() const { return cells_; }
    const Index3& nodes() const { return nodes_; }
    std::size_t node_count() const {
        return static_cast<std::size_t>(nodes_[0]) * nodes_[1] * nodes_[2];
    }
    std::size_t cell_count() const;
    Index3 strides() const { return {nodes_[1] * nodes_[2], nodes_[2], 1}; }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * nodes_[1] + j) * nodes_[2] + k;
    }
    std::size_t index(const Index3& p) const { return index(p[0], p[1], p[2]); }
    Index3 unravel(std::size_t idx) const;

    Point node(int i, int j, int k) const {
        return {origin_[0] + i * h_, origin_[1] + j * h_, dim_ == 3 ? origin_[2] + k * h_ : 0.0};
    }
    Point node(std::size_t idx) const {
        Index3 p = unravel(idx);
        return node(p[0], p[1], p[2]);
    }
    Point upper() const;

    // Trapezoidal weight: h^dim, halved once per axis on which the node is on the boundary.
    double node_weight(const Index3& p) const;
    std::vector<double> node_weights() const;

    double cell_volume() const;
    // Distance from p to the nearest box face (negative if outside).
    double distance_to_boundary(const Point& p) const;
    bool contains(const Point& p) const { return distance_to_boundary(p) >= -1e-12 * h_; }

    bool operator==(const Grid& other) const = default;

private:
    friend Grid build_grid(int, std::span<const double>, double, std::span<const int>);

    int dim_ = 2;
    Point origin_{0.0, 0.0, 0.0};
    double h_ = 1.0;
    Index3 cells_{8, 8, 0};
    Index3 nodes_{9, 9, 1};
};

Grid build_grid(int dim, std::span<const double> origin, double h, std::span<const int> cells_per_axis);

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(Grid grid);
    ScalarField(Grid grid, std::vector<double> values);

    template <class Fn>
    static ScalarField sample(const Grid& grid, Fn&& fn) {
        ScalarField out(grid);
        for (std::size_t n = 0; n < out.size(); ++n) out.values_[n] = fn(grid.node(n));
        return out;
    }
    static ScalarField constant(const Grid& grid, double value);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](std::size_t n) const { return values_[n]; }
    double& operator[](std::size_t n) { return values_[n]; }

    double max_abs() const;
    double min() const;
    double max() const;
    bool all_finite() const;

private:
    Grid grid_;
    std::vector<double> values_;
};

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* what);

ScalarField positive_part(const ScalarField& u);
ScalarField negative_part(const ScalarField& u);   // max(-u, 0)

struct Atom {
    Point center{};
    double mass = 0.0;
    double mollifier_radius = 0.25;
    int sign = 1;
};

struct Shell {
    Point center{};
    double radius = 1.0;
    double surface_density = 0.0;
    double mollifier_radius = 0.125;
    int sign = 1;
};

struct MeasureSpec {
    std::vector<Atom> atoms;
    std::vector<Shell> shells;
    std::optional<ScalarField> background;   // subtracted from the density

    double total_mass(int dim) const;
    bool empty() const { return atoms.empty() && shells.empty() && !background; }
};

ScalarField rasterize_measure(const MeasureSpec& spec, const Grid& grid);

double integrate(const ScalarField& field);

// Sum over cells of the squared forward-difference gradient taken at each
// cell's lower corner, times h^dim.
double dirichlet_energy(const ScalarField& field);

// Visits every edge that contributes to dirichlet_energy as fn(a, b) with node
// indices a < b: the d edges leaving each cell's lower corner.
template <class Fn>
void for_each_edge(const Grid& grid, Fn&& fn) {
    const Index3 n = grid.nodes();
    const Index3 s = grid.strides();
    const int d = grid.dim();
    const int nk = d == 3 ? n[2] - 1 : 1;
    for (int i = 0; i < n[0] - 1; ++i)
        for (int j = 0; j < n[1] - 1; ++j)
            for (int k = 0; k < nk; ++k) {
                const std::size_t a = grid.index(i, j, k);
                for (int axis = 0; axis < d; ++axis) fn(a, a + static_cast<std::size_t>(s[axis]));
            }
}

// Neighbours of node `a` in the edge graph of for_each_edge.
template <class Fn>
void for_each_neighbour(const Grid& grid, std::size_t a, Fn&& fn) {
    const Index3 n = grid.nodes();
    const Index3 s = grid.strides();
    const int d = grid.dim();
    const Index3 p = grid.unravel(a);
    auto lower_corner = [&](const Index3& q) {
        for (int axis = 0; axis < d; ++axis)
            if (q[axis] < 0 || q[axis] >= n[axis] - 1) return false;
        return true;
    };
    if (lower_corner(p))
        for (int axis = 0; axis < d; ++axis) fn(a + static_cast<std::size_t>(s[axis]));
    for (int axis = 0; axis < d; ++axis) {
        Index3 q = p;
        --q[axis];
        if (lower_corner(q)) fn(a - static_cast<std::size_t>(s[axis]));
    }
}

double interpolate(const ScalarField& field, const Point& p);
std::array<double, 3> interpolate_gradient(const ScalarField& field, const Point& p);

double spherical_average(const ScalarField& field, const Point& center, double r);
// Quadrature nodes on the sphere |x - center| = r used by spherical_average (weights sum to 1).
void sphere_quadrature(int dim, double r, double h, const Point& center, std::vector<Point>& points,
                       std::vector<double>& weights);

void write_field(const ScalarField& field, const std::filesystem::path& header_path);
ScalarField read_field(const std::filesystem::path& header_path);
std::filesystem::path raw_path_for(const std::filesystem::path& header_path);

}  // namespace qsurf
