#pragma once

#include <cmath>

#include "qsurf/grid.hpp"

namespace qsurf::detail {

// Sub-lattice of B_r(center) with spacing h/3 (2D) or h/2 (3D), offset by half a
// spacing so the sample set is symmetric about the center. fn(x, weight).
template <class Fn>
void sample_ball(const Grid& g, const Point& center, double r, Fn&& fn) {
    const int d = g.dim();
    const double s = g.spacing() / (d == 2 ? 3.0 : 2.0);
    const int k = static_cast<int>(std::ceil(r / s));
    const double w = std::pow(s, d);
    for (int a = -k; a < k; ++a)
        for (int b = -k; b < k; ++b)
            for (int c = (d == 3 ? -k : 0); c < (d == 3 ? k : 1); ++c) {
                const Point o{(a + 0.5) * s, (b + 0.5) * s, d == 3 ? (c + 0.5) * s : 0.0};
                if (o[0] * o[0] + o[1] * o[1] + o[2] * o[2] > r * r) continue;
                fn(Point{center[0] + o[0], center[1] + o[1], center[2] + o[2]}, w);
            }
}

inline double distance(const Point& a, const Point& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

}  // namespace qsurf::detail
