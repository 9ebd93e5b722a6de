#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "qsurf/error.hpp"
#include "qsurf/geometry.hpp"

namespace qsurf {

namespace {

Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Point cross(const Point& a, const Point& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Point& a) { return std::sqrt(dot(a, a)); }

Point lerp(const Point& a, const Point& b, double va, double vb, double level) {
    const double t = (level - va) / (vb - va);
    return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
}

// Orients `n` away from `inside` (a point of the phase near the element).
void emit(BoundaryGeometry& out, const Point& mid, Point n, double weight, const Point& inside, int phase) {
    if (!(weight > 0.0)) return;
    const double len = norm(n);
    for (double& c : n) c /= len;
    if (dot(n, sub(inside, mid)) > 0.0)
        for (double& c : n) c = -c;
    out.elements.push_back({mid, n, weight, phase, 0});
}

void march_squares(const ScalarField& u, double level, int sign, int phase, BoundaryGeometry& out) {
    const Grid& g = u.grid();
    const Index3 c = g.cells();
    for (int i = 0; i < c[0]; ++i)
        for (int j = 0; j < c[1]; ++j) {
            const Point p[4] = {g.node(i, j, 0), g.node(i + 1, j, 0), g.node(i + 1, j + 1, 0), g.node(i, j + 1, 0)};
            const double v[4] = {sign * u[g.index(i, j, 0)], sign * u[g.index(i + 1, j, 0)],
                                 sign * u[g.index(i + 1, j + 1, 0)], sign * u[g.index(i, j + 1, 0)]};
            bool in[4];
            int count = 0;
            for (int k = 0; k < 4; ++k) count += (in[k] = v[k] > level);
            if (count == 0 || count == 4) continue;
            // crossing on edge k between corner k and corner k+1
            Point x[4];
            bool cut[4];
            for (int k = 0; k < 4; ++k) {
                const int l = (k + 1) % 4;
                cut[k] = in[k] != in[l];
                if (cut[k]) x[k] = lerp(p[k], p[l], v[k], v[l], level);
            }
            Point inside{};
            int n_in = 0;
            for (int k = 0; k < 4; ++k)
                if (in[k]) {
                    for (int a = 0; a < 3; ++a) inside[a] += p[k][a];
                    ++n_in;
                }
            for (double& a : inside) a /= n_in;

            auto segment = [&](int e0, int e1, const Point& inner) {
                const Point& a = x[e0];
                const Point& b = x[e1];
                const Point d = sub(b, a);
                const Point mid{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.0};
                emit(out, mid, Point{d[1], -d[0], 0.0}, norm(d), inner, phase);
            };
            if (count == 2 && in[0] == in[2]) {
                // saddle: the cell-center value decides which diagonal pair is joined
                const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                const bool join_inside = center > level;
                for (int k = 0; k < 4; ++k) {
                    // a corner cut off from the rest of the cell
                    if (in[k] == join_inside) continue;
                    const int prev = (k + 3) % 4;
                    segment(prev, k, in[k] ? p[k] : inside);
                }
                continue;
            }
            int e[2], m = 0;
            for (int k = 0; k < 4; ++k)
                if (cut[k]) e[m++] = k;
            segment(e[0], e[1], inside);
        }
}

// Six tetrahedra sharing the cube diagonal from corner 0 to corner 7; corner
// bits are (x, y, z) offsets.
constexpr int kTets[6][4] = {{0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7}, {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7}};

void march_tetrahedra(const ScalarField& u, double level, int sign, int phase, BoundaryGeometry& out) {
    const Grid& g = u.grid();
    const Index3 c = g.cells();
    Point p[8];
    double v[8];
    for (int i = 0; i < c[0]; ++i)
        for (int j = 0; j < c[1]; ++j)
            for (int k = 0; k < c[2]; ++k) {
                int above = 0;
                for (int b = 0; b < 8; ++b) {
                    const int di = b & 1, dj = (b >> 1) & 1, dk = (b >> 2) & 1;
                    v[b] = sign * u[g.index(i + di, j + dj, k + dk)];
                    above += v[b] > level;
                }
                if (above == 0 || above == 8) continue;
                for (int b = 0; b < 8; ++b) p[b] = g.node(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
                for (const auto& tet : kTets) {
                    int ins[4], outs[4], ni = 0, no = 0;
                    for (int q : tet) (v[q] > level ? ins[ni++] : outs[no++]) = q;
                    if (ni == 0 || no == 0) continue;
                    Point inside{};
                    for (int q = 0; q < ni; ++q)
                        for (int a = 0; a < 3; ++a) inside[a] += p[ins[q]][a] / ni;
                    auto tri = [&](const Point& a, const Point& b, const Point& d) {
                        const Point n = cross(sub(b, a), sub(d, a));
                        const Point mid{(a[0] + b[0] + d[0]) / 3.0, (a[1] + b[1] + d[1]) / 3.0,
                                        (a[2] + b[2] + d[2]) / 3.0};
                        emit(out, mid, n, 0.5 * norm(n), inside, phase);
                    };
                    auto cross_pt = [&](int a, int b) { return lerp(p[a], p[b], v[a], v[b], level); };
                    if (ni == 1 || no == 1) {
                        const int apex = ni == 1 ? ins[0] : outs[0];
                        const int* rest = ni == 1 ? outs : ins;
                        tri(cross_pt(apex, rest[0]), cross_pt(apex, rest[1]), cross_pt(apex, rest[2]));
                    } else {
                        const Point a = cross_pt(ins[0], outs[0]);
                        const Point b = cross_pt(ins[0], outs[1]);
                        const Point d = cross_pt(ins[1], outs[1]);
                        const Point e = cross_pt(ins[1], outs[0]);
                        tri(a, b, d);
                        tri(a, d, e);
                    }
                }
            }
}

}  // namespace

Supports extract_supports(const ScalarField& u, double tau) {
    const Grid& g = u.grid();
    const int d = g.dim();
    const Index3 c = g.cells();
    const Index3 st = g.strides();
    Supports s;
    for (int i = 0; i < c[0]; ++i)
        for (int j = 0; j < c[1]; ++j)
            for (int k = 0; k < (d == 3 ? c[2] : 1); ++k) {
                const std::size_t base = g.index(i, j, k);
                int plus = 0, minus = 0;
                const int corners = d == 3 ? 8 : 4;
                for (int b = 0; b < corners; ++b) {
                    const std::size_t n = base + (b & 1) * st[0] + ((b >> 1) & 1) * st[1] + ((b >> 2) & 1) * st[2];
                    plus += u[n] > tau;
                    minus += u[n] < -tau;
                }
                if (plus == corners) s.plus.interior.push_back(base);
                else if (plus > 0) s.plus.boundary.push_back(base);
                if (minus == corners) s.minus.interior.push_back(base);
                else if (minus > 0) s.minus.boundary.push_back(base);
            }
    return s;
}

double BoundaryGeometry::total_weight() const {
    double w = 0.0;
    for (const auto& e : elements) w += e.weight;
    return w;
}

void BoundaryGeometry::append(const BoundaryGeometry& other) {
    elements.insert(elements.end(), other.elements.begin(), other.elements.end());
}

BoundaryGeometry extract_contour(const ScalarField& u, double level, int sign, int phase) {
    if (!(level > 0.0)) throw Error(ErrorCode::invalid_argument, "contour level must be positive");
    if (sign != 1 && sign != -1) throw Error(ErrorCode::invalid_argument, "contour sign must be +1 or -1");
    BoundaryGeometry out;
    out.dim = u.grid().dim();
    out.extraction_level = level;
    if (out.dim == 2) march_squares(u, level, sign, phase, out);
    else march_tetrahedra(u, level, sign, phase, out);
    return out;
}

ScalarField linear_extension(const ScalarField& u, double tau) {
    const Grid& g = u.grid();
    const int d = g.dim();
    const Index3 nodes = g.nodes();
    ScalarField out = u;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > tau) continue;
        const Index3 p = g.unravel(i);
        double sum = 0.0, nearest = 0.0;
        int count = 0;
        for (int a = -1; a <= 1; ++a)
            for (int b = -1; b <= 1; ++b)
                for (int c = (d == 3 ? -1 : 0); c <= (d == 3 ? 1 : 0); ++c) {
                    if (a == 0 && b == 0 && c == 0) continue;
                    const Index3 q1{p[0] + a, p[1] + b, p[2] + c};
                    bool ok = true;
                    for (int k = 0; k < 3; ++k) ok &= q1[k] >= 0 && q1[k] < nodes[k];
                    if (!ok) continue;
                    const double v1 = u[g.index(q1)];
                    if (!(v1 > tau)) continue;
                    nearest = std::max(nearest, v1);
                    const Index3 q2{p[0] + 2 * a, p[1] + 2 * b, p[2] + 2 * c};
                    for (int k = 0; k < 3; ++k) ok &= q2[k] >= 0 && q2[k] < nodes[k];
                    if (!ok) continue;
                    const double v2 = u[g.index(q2)];
                    if (!(v2 > tau)) continue;
                    sum += 2.0 * v1 - v2;
                    ++count;
                }
        // without a usable line the crossing is put halfway to the largest neighbour
        if (count > 0) out[i] = std::min(sum / count, u[i]);
        else if (nearest > 0.0) out[i] = std::min(-nearest, u[i]);
    }
    return out;
}

BoundaryGeometry extract_phase_boundaries(const PhaseSolution& solution, double level) {
    const std::vector<ScalarField> phases = solution.phases();
    if (level < 0.0) level = solution.support_tau;
    if (!(level > 0.0)) level = default_tau(phases);
    BoundaryGeometry out;
    out.dim = phases.at(0).grid().dim();
    out.extraction_level = level;
    if (!(level > 0.0)) return out;   // every phase vanishes
    for (std::size_t i = 0; i < phases.size(); ++i)
        out.append(extract_contour(linear_extension(phases[i], level), level, 1, static_cast<int>(i) + 1));
    return out;
}

const char* boundary_label_name(BoundaryLabel label) {
    switch (label) {
        case BoundaryLabel::one_phase: return "one_phase";
        case BoundaryLabel::two_phase: return "two_phase";
        case BoundaryLabel::branch: return "branch";
    }
    return "?";
}

std::size_t BoundaryClassification::count(BoundaryLabel label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

namespace {

// Uniform bucket hash over element midpoints.
class PointHash {
public:
    PointHash(const std::vector<BoundaryElement>& elems, double cell) : elems_(elems), cell_(cell) {
        for (std::size_t i = 0; i < elems.size(); ++i) buckets_[key(bucket(elems[i].midpoint))].push_back(i);
    }

    template <class Fn>
    void near(const Point& p, double radius, Fn&& fn) const {
        const auto b = bucket(p);
        const int reach = static_cast<int>(std::ceil(radius / cell_));
        for (int dx = -reach; dx <= reach; ++dx)
            for (int dy = -reach; dy <= reach; ++dy)
                for (int dz = -reach; dz <= reach; ++dz) {
                    auto it = buckets_.find(key({b[0] + dx, b[1] + dy, b[2] + dz}));
                    if (it == buckets_.end()) continue;
                    for (std::size_t i : it->second) {
                        const double dist = norm(sub(elems_[i].midpoint, p));
                        if (dist <= radius) fn(i, dist);
                    }
                }
    }

private:
    std::array<long long, 3> bucket(const Point& p) const {
        return {static_cast<long long>(std::floor(p[0] / cell_)), static_cast<long long>(std::floor(p[1] / cell_)),
                static_cast<long long>(std::floor(p[2] / cell_))};
    }
    static long long key(const std::array<long long, 3>& b) {
        return ((b[0] + (1 << 20)) << 42) ^ ((b[1] + (1 << 20)) << 21) ^ (b[2] + (1 << 20));
    }

    const std::vector<BoundaryElement>& elems_;
    double cell_;
    std::unordered_map<long long, std::vector<std::size_t>> buckets_;
};

}  // namespace

BoundaryClassification classify_boundary(const BoundaryGeometry& geometry, double r_class) {
    if (!(r_class > 0.0)) throw Error(ErrorCode::invalid_argument, "classification radius must be positive");
    BoundaryClassification out;
    out.geometry = geometry;
    out.classification_radius = r_class;
    auto& elems = out.geometry.elements;
    const std::size_t n = elems.size();
    out.labels.assign(n, BoundaryLabel::one_phase);
    if (n == 0) return out;
    const PointHash hash(elems, r_class);
    std::vector<double> nearest(n, INFINITY);
    std::vector<int> partner(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        hash.near(elems[i].midpoint, 2.0 * r_class, [&](std::size_t j, double dist) {
            if (elems[j].phase_i == elems[i].phase_i) return;
            if (dist < nearest[i] || (dist == nearest[i] && elems[j].phase_i < partner[i])) {
                nearest[i] = dist;
                partner[i] = elems[j].phase_i;
            }
        });
        if (nearest[i] <= r_class) out.labels[i] = BoundaryLabel::two_phase;
        else if (nearest[i] <= 2.0 * r_class) out.labels[i] = BoundaryLabel::branch;
    }
    // A branch element must see both kinds within r_class; otherwise it joins
    // the kind it does see. Only the provisional one/two labels are consulted.
    const std::vector<BoundaryLabel> provisional = out.labels;
    for (std::size_t i = 0; i < n; ++i) {
        if (provisional[i] != BoundaryLabel::branch) continue;
        bool sees_one = false, sees_two = false;
        hash.near(elems[i].midpoint, r_class, [&](std::size_t j, double) {
            sees_one |= provisional[j] == BoundaryLabel::one_phase;
            sees_two |= provisional[j] == BoundaryLabel::two_phase;
        });
        if (!(sees_one && sees_two)) out.labels[i] = sees_two ? BoundaryLabel::two_phase : BoundaryLabel::one_phase;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (out.labels[i] == BoundaryLabel::two_phase) elems[i].phase_j = partner[i];
    return out;
}

BoundaryClassification classify_boundary(const PhaseSolution& solution, double r_class) {
    if (r_class < 0.0) r_class = 3.0 * solution.fields.at(0).grid().spacing();
    return classify_boundary(extract_phase_boundaries(solution), r_class);
}

std::vector<Point> junction_scan(const std::vector<ScalarField>& phases, double r_scan, double tau) {
    if (phases.size() < 3) throw Error(ErrorCode::invalid_argument, "junction_scan needs at least three phases");
    if (!(r_scan > 0.0)) throw Error(ErrorCode::invalid_argument, "scan radius must be positive");
    for (std::size_t i = 1; i < phases.size(); ++i) require_same_grid(phases[0], phases[i], "junction_scan");
    const Grid& g = phases[0].grid();
    const int d = g.dim();
    const double h = g.spacing();
    const int reach = static_cast<int>(std::floor(r_scan / h + 1e-9));
    std::vector<Index3> ball;
    for (int a = -reach; a <= reach; ++a)
        for (int b = -reach; b <= reach; ++b)
            for (int c = (d == 3 ? -reach : 0); c <= (d == 3 ? reach : 0); ++c)
                if ((a * a + b * b + c * c) * h * h <= r_scan * r_scan * (1 + 1e-12)) ball.push_back({a, b, c});
    const std::size_t n = g.node_count();
    const Index3 nodes = g.nodes();
    std::vector<unsigned char> hits(n, 0);
    std::vector<char> mark(n);
    for (const auto& u : phases) {
        std::fill(mark.begin(), mark.end(), 0);
        for (std::size_t idx = 0; idx < n; ++idx) {
            if (!(u[idx] > tau)) continue;
            const Index3 p = g.unravel(idx);
            for (const auto& o : ball) {
                const Index3 q{p[0] + o[0], p[1] + o[1], p[2] + o[2]};
                if (q[0] < 0 || q[1] < 0 || q[2] < 0 || q[0] >= nodes[0] || q[1] >= nodes[1] || q[2] >= nodes[2])
                    continue;
                mark[g.index(q)] = 1;
            }
        }
        for (std::size_t idx = 0; idx < n; ++idx)
            if (mark[idx] && hits[idx] < 255) ++hits[idx];
    }
    std::vector<Point> out;
    for (std::size_t idx = 0; idx < n; ++idx)
        if (hits[idx] >= 3) out.push_back(g.node(idx));
    return out;
}

std::vector<Point> junction_scan(const PhaseSolution& solution, double r_scan) {
    const std::vector<ScalarField> phases = solution.phases();
    if (r_scan < 0.0) r_scan = 4.0 * phases.at(0).grid().spacing();
    return junction_scan(phases, r_scan, solution.support_tau);
}

}  // namespace qsurf

namespace qsurf {

std::size_t support_violations(const ScalarField& phase, const ScalarField& barrier, double tau, int halo_cells) {
    require_same_grid(phase, barrier, "support_violations");
    if (halo_cells < 0) throw Error(ErrorCode::invalid_argument, "halo_cells must be nonnegative");
    const Grid& g = phase.grid();
    const Index3 nodes = g.nodes();
    const int d = g.dim();
    // dilate the barrier support one axis at a time (separable Chebyshev ball)
    std::vector<char> mask(barrier.size());
    for (std::size_t i = 0; i < barrier.size(); ++i) mask[i] = barrier[i] > tau;
    const Index3 st = g.strides();
    for (int a = 0; a < d; ++a) {
        std::vector<char> next(mask.size(), 0);
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask[i]) continue;
            const int p = g.unravel(i)[a];
            for (int s = -halo_cells; s <= halo_cells; ++s) {
                const int q = p + s;
                if (q < 0 || q >= nodes[a]) continue;
                next[i + static_cast<std::ptrdiff_t>(s) * st[a]] = 1;
            }
        }
        mask.swap(next);
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < phase.size(); ++i) count += phase[i] > tau && !mask[i];
    return count;
}

}  // namespace qsurf
