#pragma once

#include <array>

#include "qsurf/grid.hpp"

namespace qsurf {

// Fundamental solution of -Δ: -(1/2π) log|x - y| in 2D, 1/(4π|x - y|) in 3D.
double newtonian_kernel(const Point& x, const Point& y, int dim);
std::array<double, 3> newtonian_kernel_gradient(const Point& x, const Point& y, int dim);

// The same kernel as a function of the distance r > 0.
double newtonian_radial(double r, int dim);

}  // namespace qsurf
