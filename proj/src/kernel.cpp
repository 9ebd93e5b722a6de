#include "qsurf/kernel.hpp"

#include <cmath>
#include <numbers>

#include "qsurf/error.hpp"

namespace qsurf {

double newtonian_radial(double r, int dim) {
    if (dim == 2) return -std::log(r) / (2.0 * std::numbers::pi);
    return 1.0 / (4.0 * std::numbers::pi * r);
}

double newtonian_kernel(const Point& x, const Point& y, int dim) {
    const double r = std::hypot(x[0] - y[0], x[1] - y[1], dim == 3 ? x[2] - y[2] : 0.0);
    if (r == 0.0) throw Error(ErrorCode::coincident_points, "kernel evaluated at its pole");
    return newtonian_radial(r, dim);
}

std::array<double, 3> newtonian_kernel_gradient(const Point& x, const Point& y, int dim) {
    const double dx = x[0] - y[0], dy = x[1] - y[1], dz = dim == 3 ? x[2] - y[2] : 0.0;
    const double r2 = dx * dx + dy * dy + dz * dz;
    if (r2 == 0.0) throw Error(ErrorCode::coincident_points, "kernel gradient evaluated at its pole");
    // ∇G = -x / (σ_N |x|^N)
    const double c = dim == 2 ? -1.0 / (2.0 * std::numbers::pi * r2)
                              : -1.0 / (4.0 * std::numbers::pi * r2 * std::sqrt(r2));
    return {c * dx, c * dy, c * dz};
}

}  // namespace qsurf
