#include "qsurf/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "qsurf/error.hpp"
#include "qsurf/kernel.hpp"

namespace qsurf {

void SolveOptions::validate() const {
    if (max_outer_iters < 1) throw Error(ErrorCode::invalid_argument, "max_outer_iters must be at least 1");
    for (std::size_t i = 0; i < regularization_schedule.size(); ++i) {
        if (!(regularization_schedule[i] > 0.0))
            throw Error(ErrorCode::invalid_argument, "regularization schedule entries must be positive");
        if (i > 0 && !(regularization_schedule[i] < regularization_schedule[i - 1]))
            throw Error(ErrorCode::invalid_argument, "regularization schedule must be strictly decreasing");
    }
    if (descent_step < 0.0) throw Error(ErrorCode::invalid_argument, "descent_step must be positive (or 0 for auto)");
    if (!(energy_tol > 0.0)) throw Error(ErrorCode::invalid_argument, "energy_tol must be positive");
    if (!regularization_schedule.empty() && support_tau >= 0.0 && regularization_schedule.back() > 10.0 * support_tau)
        throw Error(ErrorCode::invalid_argument, "last regularization width must not exceed 10 * support_tau");
    if (seed_mode == SeedMode::custom && custom_seed.empty())
        throw Error(ErrorCode::invalid_argument, "seed_mode custom needs custom_seed fields");
}

std::vector<ScalarField> PhaseSolution::phases() const {
    if (kind == SolutionKind::two_phase) return {positive_part(fields.at(0)), negative_part(fields.at(0))};
    return fields;
}

std::size_t PhaseSolution::phase_count() const { return kind == SolutionKind::two_phase ? 2 : fields.size(); }

ScalarField BarrierPair::lower_field() const {
    ScalarField u = lower.fields.at(0);
    for (double& v : u.values()) v = -v;
    return u;
}

std::vector<double> default_schedule(const Grid& grid, double g_scale) {
    const double base = g_scale * grid.spacing();
    return {4.0 * base, 2.0 * base, base, 0.5 * base};
}

std::vector<ScalarField> segregation_project(const std::vector<ScalarField>& u) {
    std::vector<ScalarField> out = u;
    if (u.empty()) return out;
    for (std::size_t i = 1; i < u.size(); ++i) require_same_grid(u[0], u[i], "segregation_project");
    const std::size_t n = u[0].size();
    for (std::size_t node = 0; node < n; ++node) {
        double first = -INFINITY, second = -INFINITY;
        for (const auto& f : u) {
            const double v = f[node];
            if (v > first) {
                second = first;
                first = v;
            } else if (v > second) {
                second = v;
            }
        }
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double v = u[i][node];
            const double other = (v == first) ? second : first;
            out[i][node] = std::max(v - other, 0.0);
        }
    }
    return out;
}

namespace {

// Stopping tolerance for the warm-up stages; only the last stage uses energy_tol.
constexpr double kWarmStageTol = 1e-6;

double smooth_step(double t) { return t >= 1.0 ? 1.0 : t * t * (3.0 - 2.0 * t); }
double smooth_step_slope(double t) { return t >= 1.0 ? 0.0 : 6.0 * t * (1.0 - t); }

// Discrete signed problem
//   E(v) = es Σ_edges [(Δv+)² + (Δv-)²] - Σ fp v+ - Σ fm v- + Σ g2w β(|v|)
// over lo <= v <= hi. One-phase, two-phase and multi-phase pair steps are all
// instances of it.
struct Problem {
    Grid grid;
    std::vector<double> fp, fm, g2w, lo, hi, wsum;
    double es = 1.0;
    double max_g2w = 0.0;
    double max_wsum = 0.0;

    std::size_t size() const { return fp.size(); }
};

Problem make_problem(const Grid& grid, const ScalarField* f1, const ScalarField* f2, const ScalarField& g) {
    Problem P;
    P.grid = grid;
    const std::size_t n = grid.node_count();
    const std::vector<double> w = grid.node_weights();
    P.fp.assign(n, 0.0);
    P.fm.assign(n, 0.0);
    P.g2w.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (f1) P.fp[i] = 2.0 * (*f1)[i] * w[i];
        if (f2) P.fm[i] = 2.0 * (*f2)[i] * w[i];
        P.g2w[i] = g[i] * g[i] * w[i];
        P.max_g2w = std::max(P.max_g2w, P.g2w[i]);
    }
    P.lo.assign(n, 0.0);
    P.hi.assign(n, INFINITY);
    P.wsum.assign(n, 0.0);
    for_each_edge(grid, [&](std::size_t a, std::size_t b) {
        P.wsum[a] += 1.0;
        P.wsum[b] += 1.0;
    });
    P.max_wsum = *std::max_element(P.wsum.begin(), P.wsum.end());
    P.es = std::pow(grid.spacing(), grid.dim() - 2);
    return P;
}

struct Terms {
    double dirichlet = 0.0, source = 0.0, penalty = 0.0;
    double total() const { return dirichlet + source + penalty; }
};

struct Scratch {
    std::vector<double> sp, sm;
    explicit Scratch(std::size_t n) : sp(n), sm(n) {}
};

// Neighbour sums of the positive and negative parts over counted edges.
double neighbour_sums(const Problem& P, const std::vector<double>& v, Scratch& s) {
    std::fill(s.sp.begin(), s.sp.end(), 0.0);
    std::fill(s.sm.begin(), s.sm.end(), 0.0);
    double d = 0.0;
    for_each_edge(P.grid, [&](std::size_t a, std::size_t b) {
        const double pa = v[a] > 0.0 ? v[a] : 0.0, pb = v[b] > 0.0 ? v[b] : 0.0;
        const double ma = v[a] < 0.0 ? -v[a] : 0.0, mb = v[b] < 0.0 ? -v[b] : 0.0;
        d += (pa - pb) * (pa - pb) + (ma - mb) * (ma - mb);
        s.sp[a] += pb;
        s.sp[b] += pa;
        s.sm[a] += mb;
        s.sm[b] += ma;
    });
    return d * P.es;
}

double dirichlet_only(const Problem& P, const std::vector<double>& v) {
    double d = 0.0;
    for_each_edge(P.grid, [&](std::size_t a, std::size_t b) {
        const double pa = v[a] > 0.0 ? v[a] : 0.0, pb = v[b] > 0.0 ? v[b] : 0.0;
        const double ma = v[a] < 0.0 ? -v[a] : 0.0, mb = v[b] < 0.0 ? -v[b] : 0.0;
        d += (pa - pb) * (pa - pb) + (ma - mb) * (ma - mb);
    });
    return d * P.es;
}

// eps > 0 selects the smoothed indicator, eps == 0 the exact χ{|v| > tau}.
Terms evaluate(const Problem& P, const std::vector<double>& v, double eps, double tau, std::vector<double>* grad,
               Scratch& s) {
    Terms t;
    t.dirichlet = grad ? neighbour_sums(P, v, s) : dirichlet_only(P, v);
    const double inv_eps = eps > 0.0 ? 1.0 / eps : 0.0;
    double src = 0.0, pen = 0.0;
    const std::size_t n = P.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = v[i];
        const double m = std::abs(x);
        if (x > 0.0) src += P.fp[i] * x;
        else if (x < 0.0) src += P.fm[i] * m;
        if (eps > 0.0) {
            if (m > 0.0) pen += P.g2w[i] * smooth_step(m * inv_eps);
        } else if (m > tau) {
            pen += P.g2w[i];
        }
        if (!grad) continue;
        double gi;
        if (x > 0.0) {
            gi = 2.0 * P.es * (P.wsum[i] * x - s.sp[i]) - P.fp[i] + P.g2w[i] * smooth_step_slope(x * inv_eps) * inv_eps;
        } else if (x < 0.0) {
            gi = -(2.0 * P.es * (P.wsum[i] * m - s.sm[i]) - P.fm[i] + P.g2w[i] * smooth_step_slope(m * inv_eps) * inv_eps);
        } else {
            // one-sided derivatives at the kink; pick the steeper descent direction
            const double right = -2.0 * P.es * s.sp[i] - P.fp[i];
            const double left = 2.0 * P.es * s.sm[i] + P.fm[i];
            const double up = right < 0.0 ? -right : 0.0;
            const double down = left > 0.0 ? left : 0.0;
            gi = up > down ? right : (down > up ? left : 0.0);
        }
        (*grad)[i] = gi;
    }
    t.source = -src;
    t.penalty = pen;
    return t;
}

void project(const Problem& P, std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], P.lo[i], P.hi[i]);
}

struct StageStats {
    int iterations = 0;
    bool converged = false;
    Terms terms;
};

struct Log {
    std::vector<IterationRecord>* rows = nullptr;
    int offset = 0;
    void add(int iter, double eps, const Terms& t) {
        if (!rows) return;
        rows->push_back({offset + iter, eps, t.total(), t.dirichlet, t.source, t.penalty});
    }
};

// Monotone accelerated projected gradient with backtracking and adaptive restart.
StageStats run_stage(const Problem& P, std::vector<double>& x, double eps, double tau, const SolveOptions& opts,
                     int max_iters, Log log, double tol) {
    const std::size_t n = x.size();
    project(P, x);
    Scratch s(n);
    std::vector<double> y = x, xprev = x, gy(n), z(n);
    StageStats st;
    Terms tx = evaluate(P, x, eps, tau, nullptr, s);
    double Ex = tx.total();
    double L = opts.descent_step > 0.0 ? 1.0 / opts.descent_step
                                       : 4.0 * P.es * P.max_wsum + 6.0 * P.max_g2w / (eps * eps);
    double t = 1.0;
    constexpr int window = 40;
    std::vector<double> history{Ex};
    bool restarted = true;
    for (int it = 1; it <= max_iters; ++it) {
        const double Ey = evaluate(P, y, eps, tau, &gy, s).total();
        Terms tz;
        double Ez = 0.0;
        for (int bt = 0;; ++bt) {
            double lin = 0.0, quad = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double zi = std::clamp(y[i] - gy[i] / L, P.lo[i], P.hi[i]);
                const double d = zi - y[i];
                z[i] = zi;
                lin += gy[i] * d;
                quad += d * d;
            }
            tz = evaluate(P, z, eps, tau, nullptr, s);
            Ez = tz.total();
            if (Ez <= Ey + lin + 0.5 * L * quad + 1e-12 * (std::abs(Ey) + 1.0) || bt >= 40) break;
            L *= 2.0;
        }
        st.iterations = it;
        double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (Ez < Ex) {
            xprev.swap(x);
            x = z;
            Ex = Ez;
            tx = tz;
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += gy[i] * (x[i] - xprev[i]);
            if (dot > 0.0) {
                tn = 1.0;
                y = x;
                restarted = true;
            } else {
                const double mom = (t - 1.0) / tn;
                for (std::size_t i = 0; i < n; ++i) y[i] = std::clamp(x[i] + mom * (x[i] - xprev[i]), P.lo[i], P.hi[i]);
                restarted = false;
            }
        } else {
            if (restarted) {
                // a plain projected step from the current iterate made no progress: stationary
                log.add(it, eps, tx);
                st.converged = true;
                break;
            }
            tn = 1.0;
            y = x;
            restarted = true;
        }
        t = tn;
        if (opts.log_iterations) log.add(it, eps, tx);
        history.push_back(Ex);
        if (it >= window) {
            const double drop = history[it - window] - Ex;
            if (drop <= tol * std::max(std::abs(Ex), 1e-300)) {
                st.converged = true;
                break;
            }
        }
    }
    st.terms = tx;
    return st;
}

// ---------------------------------------------------------------- hard phase

double removal_gain(const Problem& P, const std::vector<double>& v, const Scratch& s, std::size_t i, double tau) {
    const double x = v[i];
    if (x > 0.0)
        return P.es * (2.0 * x * s.sp[i] - P.wsum[i] * x * x) + P.fp[i] * x - (x > tau ? P.g2w[i] : 0.0);
    if (x < 0.0) {
        const double m = -x;
        return P.es * (2.0 * m * s.sm[i] - P.wsum[i] * m * m) + P.fm[i] * m - (m > tau ? P.g2w[i] : 0.0);
    }
    return 0.0;
}

// Best exact-energy change from switching a zero node on with one sign.
// The change for magnitude x is a x² - b x + g2w χ{x > tau}.
double addition_gain(const Problem& P, const Scratch& s, std::size_t i, double tau, double& value) {
    const double a = P.es * P.wsum[i];
    value = 0.0;
    if (a <= 0.0) return 0.0;
    double best = 0.0;
    const double bp = 2.0 * P.es * s.sp[i] + P.fp[i];
    const double bm = 2.0 * P.es * s.sm[i] + P.fm[i];
    const double xp = std::min(bp / (2.0 * a), P.hi[i]);
    const double xm = std::min(bm / (2.0 * a), -P.lo[i]);
    if (xp > tau) {
        const double gp = a * xp * xp - bp * xp + P.g2w[i];
        if (gp < best) {
            best = gp;
            value = xp;
        }
    }
    if (xm > tau) {
        const double gm = a * xm * xm - bm * xm + P.g2w[i];
        if (gm < best) {
            best = gm;
            value = -xm;
        }
    }
    return best;
}

// Applies an independent set of single-node moves (removal of a nonzero node or
// switching on a zero one) that each lower the exact energy. A move is taken
// only if it beats every improving neighbour, so no two chosen nodes share an
// edge and the gains add up exactly.
int local_move_round(const Problem& P, std::vector<double>& v, double tau, Scratch& s) {
    neighbour_sums(P, v, s);
    const std::size_t n = v.size();
    std::vector<double> gain(n, 0.0), target(n, 0.0);
    std::vector<char> pick(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (v[i] != 0.0) {
            gain[i] = removal_gain(P, v, s, i, tau);
        } else if (s.sp[i] > 0.0 || s.sm[i] > 0.0) {
            gain[i] = addition_gain(P, s, i, tau, target[i]);
        }
        // ignore round-off sized improvements so the rounds terminate
        pick[i] = gain[i] < -1e-14 * (P.g2w[i] + 1e-300);
    }
    for_each_edge(P.grid, [&](std::size_t a, std::size_t b) {
        if (!pick[a] && !pick[b]) return;
        if (gain[a] < 0.0 && gain[b] < 0.0) {
            if (gain[a] < gain[b] || (gain[a] == gain[b] && a < b)) pick[b] = 0;
            else pick[a] = 0;
        }
    });
    int count = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (pick[i]) {
            v[i] = target[i];
            ++count;
        }
    return count;
}

// Conjugate gradients for (2 es Lap_S) x = b with x = 0 off S.
void solve_on_support(const Problem& P, const std::vector<char>& in, const std::vector<double>& b,
                      std::vector<double>& x) {
    const std::size_t n = x.size();
    auto apply = [&](const std::vector<double>& p, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        for_each_edge(P.grid, [&](std::size_t a, std::size_t c) {
            const double d = p[a] - p[c];
            out[a] += d;
            out[c] -= d;
        });
        for (std::size_t i = 0; i < n; ++i) out[i] = in[i] ? 2.0 * P.es * out[i] : 0.0;
    };
    for (std::size_t i = 0; i < n; ++i)
        if (!in[i]) x[i] = 0.0;
    std::vector<double> r(n), p(n), q(n);
    apply(x, q);
    double bnorm = 0.0, rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = in[i] ? b[i] - q[i] : 0.0;
        p[i] = r[i];
        rr += r[i] * r[i];
        if (in[i]) bnorm += b[i] * b[i];
    }
    if (bnorm == 0.0) bnorm = 1.0;
    const int max_it = 4 * static_cast<int>(std::sqrt(static_cast<double>(n))) + 4000;
    for (int it = 0; it < max_it && rr > 1e-22 * bnorm; ++it) {
        apply(p, q);
        double pq = 0.0;
        for (std::size_t i = 0; i < n; ++i) pq += p[i] * q[i];
        if (pq <= 0.0) break;
        const double alpha = rr / pq;
        double rr_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            rr_new += r[i] * r[i];
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
}

// Minimizes the exact energy with the sign pattern {v > tau}, {v < -tau} frozen.
bool relax_on_support(const Problem& P, std::vector<double>& v, double tau, double& energy) {
    const std::size_t n = v.size();
    std::vector<char> in_p(n), in_m(n);
    std::vector<double> xp(n), xm(n);
    for (std::size_t i = 0; i < n; ++i) {
        in_p[i] = v[i] > tau;
        in_m[i] = v[i] < -tau;
        xp[i] = in_p[i] ? v[i] : 0.0;
        xm[i] = in_m[i] ? -v[i] : 0.0;
    }
    solve_on_support(P, in_p, P.fp, xp);
    solve_on_support(P, in_m, P.fm, xm);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::clamp(xp[i] - xm[i], P.lo[i], P.hi[i]);
    Scratch s(n);
    const double e = evaluate(P, w, 0.0, tau, nullptr, s).total();
    if (e < energy) {
        v.swap(w);
        energy = e;
        return true;
    }
    return false;
}

// Tries whole batches of boundary moves followed by a relax. Single-node gains
// hold the neighbours fixed, which undervalues growth; a batch with a relax
// sees the neighbours respond. Returns true if the energy dropped.
bool batch_search(const Problem& P, std::vector<double>& v, double tau, double& energy, Scratch& s) {
    const std::size_t n = v.size();
    neighbour_sums(P, v, s);
    std::vector<std::pair<double, std::size_t>> grow, shrink;
    for (std::size_t i = 0; i < n; ++i) {
        if (v[i] == 0.0) {
            if (s.sp[i] > 0.0 || s.sm[i] > 0.0) {
                double target = 0.0;
                addition_gain(P, s, i, tau, target);
                const double a = P.es * P.wsum[i];
                if (target == 0.0 || a <= 0.0) continue;
                const double x = std::abs(target);
                const double b = target > 0.0 ? 2.0 * P.es * s.sp[i] + P.fp[i] : 2.0 * P.es * s.sm[i] + P.fm[i];
                grow.emplace_back(a * x * x - b * x + P.g2w[i], i);
            }
        } else {
            bool edge_node = false;
            for_each_neighbour(P.grid, i, [&](std::size_t j) { edge_node |= v[j] == 0.0; });
            if (edge_node) shrink.emplace_back(removal_gain(P, v, s, i, tau), i);
        }
    }
    std::sort(grow.begin(), grow.end());
    std::sort(shrink.begin(), shrink.end());
    bool improved = false;
    std::vector<double> best;
    double best_e = energy;
    auto trial = [&](const std::vector<std::pair<double, std::size_t>>& list, std::size_t count, bool adding) {
        if (count == 0) return;
        std::vector<double> w = v;
        Scratch t(n);
        if (adding) {
            neighbour_sums(P, v, t);
            for (std::size_t k = 0; k < count; ++k) {
                double target = 0.0;
                addition_gain(P, t, list[k].second, tau, target);
                w[list[k].second] = target;
            }
        } else {
            for (std::size_t k = 0; k < count; ++k) w[list[k].second] = 0.0;
        }
        double e = evaluate(P, w, 0.0, tau, nullptr, t).total();
        relax_on_support(P, w, tau, e);
        if (e < best_e) {
            best_e = e;
            best = std::move(w);
        }
    };
    for (double frac : {0.1, 0.35, 1.0}) {
        trial(grow, static_cast<std::size_t>(std::ceil(frac * grow.size())), true);
        trial(shrink, static_cast<std::size_t>(std::ceil(frac * shrink.size())), false);
    }
    if (!best.empty()) {
        v.swap(best);
        energy = best_e;
        improved = true;
    }
    return improved;
}

int hard_phase(const Problem& P, std::vector<double>& v, double tau, Log log, int iter0) {
    Scratch s(v.size());
    double energy = evaluate(P, v, 0.0, tau, nullptr, s).total();
    int rounds = 0;
    for (int cycle = 0; cycle < 40; ++cycle) {
        int moves = 0;
        for (int k; rounds < 4000 && (k = local_move_round(P, v, tau, s)) > 0;) {
            moves += k;
            ++rounds;
        }
        energy = evaluate(P, v, 0.0, tau, nullptr, s).total();
        const double start = energy;
        relax_on_support(P, v, tau, energy);
        batch_search(P, v, tau, energy, s);
        const bool moved = start - energy > 1e-11 * std::abs(energy);
        ++rounds;
        log.add(iter0 + rounds, 0.0, evaluate(P, v, 0.0, tau, nullptr, s));
        if (!moved && moves == 0) break;
    }
    return rounds;
}

// ---------------------------------------------------------------- seeds

double frame_max(const Grid& g, const std::vector<double>& u, int cells) {
    double m = -INFINITY;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Index3 p = g.unravel(i);
        bool near = false;
        for (int a = 0; a < g.dim(); ++a) near |= p[a] < cells || p[a] > g.cells()[a] - cells;
        if (near) m = std::max(m, u[i]);
    }
    return m;
}

// Best level k for the one-signed seed s*(U - k)+ under the exact energy.
std::vector<double> truncated_seed(const Problem& P, const std::vector<double>& U, double sign, double tau,
                                   double& best_level) {
    const std::size_t n = U.size();
    std::vector<double> su(n);
    for (std::size_t i = 0; i < n; ++i) su[i] = sign * U[i];
    const double top = *std::max_element(su.begin(), su.end());
    const double floor_level = frame_max(P.grid, su, 5);
    std::vector<double> best(n, 0.0), trial(n);
    best_level = top;
    if (!(top > floor_level)) return best;
    Scratch s(n);
    double best_e = 0.0;
    constexpr int candidates = 48;
    for (int j = 0; j < candidates; ++j) {
        const double k = floor_level + (top - floor_level) * j / candidates;
        for (std::size_t i = 0; i < n; ++i) trial[i] = sign * std::max(su[i] - k, 0.0);
        project(P, trial);
        const double e = evaluate(P, trial, 0.0, tau, nullptr, s).total();
        if (e < best_e) {
            best_e = e;
            best = trial;
            best_level = k;
        }
    }
    return best;
}

void require_interior_source(const ScalarField& f, const char* what) {
    const Grid& g = f.grid();
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == 0.0) continue;
        const Index3 p = g.unravel(i);
        for (int a = 0; a < g.dim(); ++a)
            if (p[a] == 0 || p[a] == g.cells()[a])
                throw Error(ErrorCode::support_escapes_box, std::string(what) + ": source touches the box boundary");
    }
}

void require_support_margin(const Grid& g, const std::vector<double>& v, double tau) {
    constexpr int margin = 4;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) <= tau) continue;
        const Index3 p = g.unravel(i);
        for (int a = 0; a < g.dim(); ++a)
            if (p[a] < margin || p[a] > g.cells()[a] - margin)
                throw Error(ErrorCode::box_too_small,
                            "solution support comes within 4 cells of the box boundary; enlarge the box");
    }
}

std::vector<std::string> condition_warnings(const std::vector<const ScalarField*>& fs, const ScalarField& g) {
    std::vector<std::string> out;
    double gmin = INFINITY;
    bool any_negative_source = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
        bool outside = true;
        for (const ScalarField* f : fs)
            if (f && (*f)[i] != 0.0) outside = false;
        if (outside) gmin = std::min(gmin, g[i]);
        for (const ScalarField* f : fs)
            if (f && (*f)[i] < 0.0) any_negative_source = true;
    }
    if (!(gmin > 0.0))
        out.push_back("g is not bounded below by a positive constant outside the source supports; existence conditions "
                      "are not verified on this box");
    if (any_negative_source) out.push_back("source density takes negative values; solutions may be non-unique");
    return out;
}

double g_scale(const ScalarField& g) {
    double m = 0.0;
    for (double v : g.values()) m = std::max(m, std::abs(v));
    return m > 0.0 ? m : 1.0;
}

struct Continuation {
    std::vector<double> schedule;
    double tau = 0.0;
};

Continuation continuation_for(const Grid& grid, const ScalarField& g, const SolveOptions& opts) {
    Continuation c;
    c.schedule = opts.regularization_schedule.empty() ? default_schedule(grid, g_scale(g)) : opts.regularization_schedule;
    c.tau = opts.support_tau >= 0.0 ? opts.support_tau : c.schedule.back() / 10.0;
    if (c.schedule.back() > 10.0 * c.tau)
        throw Error(ErrorCode::invalid_argument, "last regularization width must not exceed 10 * support_tau");
    return c;
}

struct SignedRun {
    std::vector<double> v;
    std::vector<IterationRecord> log;
    int iterations = 0;
    bool converged = false;
};

SignedRun run_continuation(const Problem& P, std::vector<double> seed, const Continuation& c,
                           const SolveOptions& opts) {
    SignedRun run;
    run.v = std::move(seed);
    project(P, run.v);
    Log log{&run.log, 0};
    for (std::size_t k = 0; k < c.schedule.size(); ++k) {
        log.offset = run.iterations;
        const bool last = k + 1 == c.schedule.size();
        const double tol = last ? opts.energy_tol : std::max(opts.energy_tol, kWarmStageTol);
        const StageStats st = run_stage(P, run.v, c.schedule[k], c.tau, opts, opts.max_outer_iters, log, tol);
        run.iterations += st.iterations;
        if (k + 1 == c.schedule.size() && !st.converged) {
            std::ostringstream msg;
            msg << "energy still decreasing after " << opts.max_outer_iters << " iterations at eps=" << c.schedule[k];
            throw Error(ErrorCode::non_convergence, msg.str());
        }
    }
    log.offset = 0;
    run.iterations += hard_phase(P, run.v, c.tau, log, run.iterations);
    run.converged = true;
    require_support_margin(P.grid, run.v, c.tau);
    return run;
}

}  // namespace

ScalarField newtonian_potential(const ScalarField& density, int coarse_nodes_per_axis) {
    const Grid& g = density.grid();
    const int d = g.dim();
    if (coarse_nodes_per_axis <= 0) coarse_nodes_per_axis = d == 2 ? 97 : 33;
    if (coarse_nodes_per_axis < 2) throw Error(ErrorCode::invalid_argument, "coarse lattice needs two nodes per axis");

    // Coarse lattice per axis, mirror symmetric about the box center, with the
    // fine-to-coarse multilinear weights of every fine node.
    std::array<std::vector<int>, 3> coarse;
    std::array<std::vector<std::pair<int, double>>, 3> loc;
    for (int a = 0; a < 3; ++a) {
        const int nodes = g.nodes()[a];
        loc[a].assign(nodes, {0, 0.0});
        if (a >= d) {
            coarse[a] = {0};
            continue;
        }
        const int cells = g.cells()[a];
        const int segments = std::min(cells, coarse_nodes_per_axis - 1);
        std::vector<int>& c = coarse[a];
        c.assign(segments + 1, 0);
        for (int i = 0; 2 * i <= segments; ++i) {
            c[i] = static_cast<int>(std::floor(static_cast<double>(i) * cells / segments + 0.5 - 1e-9));
            c[segments - i] = cells - c[i];
        }
        for (int i = 0; i < nodes; ++i) {
            int seg = static_cast<int>(std::upper_bound(c.begin(), c.end(), i) - c.begin()) - 1;
            seg = std::clamp(seg, 0, segments - 1);
            loc[a][i] = {seg, static_cast<double>(i - c[seg]) / (c[seg + 1] - c[seg])};
        }
    }
    const std::array<std::size_t, 3> cn{coarse[0].size(), coarse[1].size(), coarse[2].size()};
    auto cidx = [&](std::size_t i, std::size_t j, std::size_t k) { return (i * cn[1] + j) * cn[2] + k; };
    auto for_each_corner = [&](const Index3& p, auto&& fn) {
        const auto [i0, ti] = loc[0][p[0]];
        const auto [j0, tj] = loc[1][p[1]];
        const auto [k0, tk] = loc[2][p[2]];
        for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj)
                for (int dk = 0; dk < (d == 3 ? 2 : 1); ++dk) {
                    const double w = (di ? ti : 1 - ti) * (dj ? tj : 1 - tj) * (d == 3 ? (dk ? tk : 1 - tk) : 1.0);
                    if (w != 0.0) fn(cidx(i0 + di, j0 + dj, k0 + dk), w);
                }
    };

    std::vector<double> mass(cn[0] * cn[1] * cn[2], 0.0);
    for (std::size_t n = 0; n < density.size(); ++n) {
        if (density[n] == 0.0) continue;
        const Index3 p = g.unravel(n);
        const double m = density[n] * g.node_weight(p);
        for_each_corner(p, [&](std::size_t c, double w) { mass[c] += w * m; });
    }
    std::vector<std::pair<Point, double>> sources;
    for (std::size_t i = 0; i < cn[0]; ++i)
        for (std::size_t j = 0; j < cn[1]; ++j)
            for (std::size_t k = 0; k < cn[2]; ++k) {
                const double m = mass[cidx(i, j, k)];
                if (m != 0.0) sources.emplace_back(g.node(coarse[0][i], coarse[1][j], coarse[2][k]), m);
            }
    int widest = 1;
    for (int a = 0; a < d; ++a)
        for (std::size_t i = 1; i < coarse[a].size(); ++i) widest = std::max(widest, coarse[a][i] - coarse[a][i - 1]);
    const double rmin = 0.5 * widest * g.spacing();
    std::vector<double> pot(mass.size(), 0.0);
    for (std::size_t i = 0; i < cn[0]; ++i)
        for (std::size_t j = 0; j < cn[1]; ++j)
            for (std::size_t k = 0; k < cn[2]; ++k) {
                const Point x = g.node(coarse[0][i], coarse[1][j], coarse[2][k]);
                double s = 0.0;
                for (const auto& [y, m] : sources) {
                    const double r = std::hypot(x[0] - y[0], x[1] - y[1], x[2] - y[2]);
                    s += m * newtonian_radial(std::max(r, rmin), d);
                }
                pot[cidx(i, j, k)] = s;
            }

    ScalarField out(g);
    for (std::size_t n = 0; n < out.size(); ++n) {
        double v = 0.0;
        for_each_corner(g.unravel(n), [&](std::size_t c, double w) { v += w * pot[c]; });
        out[n] = v;
    }
    return out;
}

namespace {

PhaseSolution finish_signed(const Problem& P, SignedRun run, SolutionKind kind, const ScalarField& f1,
                            const ScalarField* f2, const ScalarField& g, double tau) {
    PhaseSolution sol;
    sol.kind = kind;
    ScalarField u(P.grid, std::move(run.v));
    if (kind == SolutionKind::one_phase) {
        for (double& x : u.values()) x = std::max(x, 0.0);
        sol.energy = one_phase_energy(u, f1, g, tau);
    } else {
        sol.energy = two_phase_energy(u, f1, *f2, g, tau);
    }
    sol.fields.push_back(std::move(u));
    sol.log = std::move(run.log);
    sol.iterations_used = run.iterations;
    sol.converged = run.converged;
    sol.support_tau = tau;
    return sol;
}

}  // namespace

PhaseSolution minimize_one_phase(const ScalarField& f, const ScalarField& g, const SolveOptions& opts) {
    opts.validate();
    require_same_grid(f, g, "minimize_one_phase");
    require_interior_source(f, "minimize_one_phase");
    const Grid& grid = f.grid();
    const Continuation c = continuation_for(grid, g, opts);
    Problem P = make_problem(grid, &f, nullptr, g);

    std::vector<double> seed(grid.node_count(), 0.0);
    std::string provenance = "zero";
    if (opts.seed_mode == SeedMode::custom) {
        require_same_grid(f, opts.custom_seed.at(0), "custom seed");
        seed = opts.custom_seed.at(0).values();
        provenance = "custom";
    } else if (opts.seed_mode == SeedMode::potential) {
        const ScalarField U = newtonian_potential(f);
        double level = 0.0;
        seed = truncated_seed(P, U.values(), 1.0, c.tau, level);
        std::ostringstream s;
        s << "truncated Newtonian potential (level " << level << ")";
        provenance = s.str();
    }
    PhaseSolution sol = finish_signed(P, run_continuation(P, std::move(seed), c, opts), SolutionKind::one_phase, f,
                                      nullptr, g, c.tau);
    sol.seed_provenance = provenance;
    sol.warnings = condition_warnings({&f}, g);
    return sol;
}

BarrierPair barrier_pair(const ScalarField& f1, const ScalarField& f2, const ScalarField& g, const SolveOptions& opts) {
    SolveOptions one = opts;
    one.custom_seed.clear();
    if (one.seed_mode == SeedMode::custom) one.seed_mode = SeedMode::potential;
    return BarrierPair{minimize_one_phase(f1, g, one), minimize_one_phase(f2, g, one)};
}

PhaseSolution minimize_two_phase(const ScalarField& f1, const ScalarField& f2, const ScalarField& g,
                                 const SolveOptions& opts) {
    opts.validate();
    require_same_grid(f1, f2, "minimize_two_phase");
    require_same_grid(f1, g, "minimize_two_phase");
    const Grid& grid = f1.grid();
    const Continuation c = continuation_for(grid, g, opts);
    BarrierPair barriers = barrier_pair(f1, f2, g, opts);
    ScalarField upper = barriers.upper_field();
    ScalarField lower = barriers.lower_field();

    auto attach = [&](PhaseSolution& sol) {
        sol.kind = SolutionKind::two_phase;
        sol.barrier_upper = upper;
        sol.barrier_lower = lower;
        sol.energy = two_phase_energy(sol.fields.at(0), f1, f2, g, c.tau);
        sol.support_tau = c.tau;
        sol.warnings = condition_warnings({&f1, &f2}, g);
    };
    // With one barrier identically zero the admissible set reduces to the
    // one-phase problem, whose minimizer is the other barrier.
    const bool no_lower = lower.max_abs() == 0.0;
    const bool no_upper = upper.max_abs() == 0.0;
    if (no_lower || no_upper) {
        PhaseSolution sol = no_lower ? barriers.upper : barriers.lower;
        if (!no_lower) sol.fields[0] = lower;
        sol.seed_provenance = "one-phase reduction (" + std::string(no_lower ? "negative" : "positive") +
                              " barrier vanishes)";
        attach(sol);
        return sol;
    }

    Problem P = make_problem(grid, &f1, &f2, g);
    P.lo = lower.values();
    P.hi = upper.values();

    std::vector<double> seed(grid.node_count(), 0.0);
    std::string provenance = "zero";
    if (opts.seed_mode == SeedMode::custom) {
        require_same_grid(f1, opts.custom_seed.at(0), "custom seed");
        seed = opts.custom_seed.at(0).values();
        provenance = "custom";
    } else if (opts.seed_mode == SeedMode::potential) {
        ScalarField signed_density(grid);
        for (std::size_t i = 0; i < grid.node_count(); ++i) signed_density[i] = f1[i] - f2[i];
        const ScalarField U = newtonian_potential(signed_density);
        double kp = 0.0, km = 0.0;
        const std::vector<double> sp = truncated_seed(P, U.values(), 1.0, c.tau, kp);
        const std::vector<double> sm = truncated_seed(P, U.values(), -1.0, c.tau, km);
        for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = sp[i] + sm[i];
        std::ostringstream s;
        s << "truncated signed Newtonian potential (levels " << kp << ", " << -km << ")";
        provenance = s.str();
    }
    PhaseSolution sol =
        finish_signed(P, run_continuation(P, std::move(seed), c, opts), SolutionKind::two_phase, f1, &f2, g, c.tau);
    sol.seed_provenance = provenance;
    sol.iterations_used += barriers.upper.iterations_used + barriers.lower.iterations_used;
    attach(sol);
    return sol;
}

namespace {

// Multi-phase energy with the smoothed (eps > 0) or exact indicator.
double multi_energy(const std::vector<Problem>& single, const std::vector<std::vector<double>>& u, double eps,
                    double tau, Terms* parts = nullptr) {
    Terms sum;
    for (std::size_t i = 0; i < u.size(); ++i) {
        Scratch s(u[i].size());
        const Terms t = evaluate(single[i], u[i], eps, tau, nullptr, s);
        sum.dirichlet += t.dirichlet;
        sum.source += t.source;
        sum.penalty += t.penalty;
    }
    if (parts) *parts = sum;
    return sum.total();
}

}  // namespace

PhaseSolution minimize_multi_phase(const std::vector<ScalarField>& fs, const ScalarField& g, const SolveOptions& opts) {
    opts.validate();
    if (fs.empty()) throw Error(ErrorCode::length_mismatch, "minimize_multi_phase needs at least one phase");
    if (fs.size() == 1) return minimize_one_phase(fs[0], g, opts);
    for (const auto& f : fs) require_same_grid(f, g, "minimize_multi_phase");
    const Grid& grid = g.grid();
    const std::size_t m = fs.size();
    const std::size_t n = grid.node_count();
    const Continuation c = continuation_for(grid, g, opts);

    SolveOptions one = opts;
    one.custom_seed.clear();
    if (one.seed_mode == SeedMode::custom) one.seed_mode = SeedMode::potential;
    std::vector<ScalarField> barriers;
    int iterations = 0;
    for (const auto& f : fs) {
        PhaseSolution b = minimize_one_phase(f, g, one);
        iterations += b.iterations_used;
        barriers.push_back(b.fields[0]);
    }

    std::vector<Problem> single;
    for (std::size_t i = 0; i < m; ++i) single.push_back(make_problem(grid, &fs[i], nullptr, g));

    std::vector<ScalarField> start =
        opts.seed_mode == SeedMode::custom ? segregation_project(opts.custom_seed) : segregation_project(barriers);
    if (start.size() != m) throw Error(ErrorCode::length_mismatch, "custom seed needs one field per phase");
    std::vector<std::vector<double>> u(m);
    for (std::size_t i = 0; i < m; ++i) {
        u[i] = start[i].values();
        for (double& x : u[i]) x = std::max(x, 0.0);
    }
    const std::vector<std::vector<double>> initial = u;

    // The energy is a sum of one-phase energies, so barriers with pairwise
    // disjoint supports are already a minimizer over the segregated set.
    bool disjoint_barriers = opts.seed_mode != SeedMode::custom;
    for (std::size_t k = 0; k < n && disjoint_barriers; ++k) {
        int owners = 0;
        for (std::size_t i = 0; i < m; ++i) owners += barriers[i][k] > 0.0;
        disjoint_barriers = owners <= 1;
    }

    std::vector<IterationRecord> log_rows;
    Log log{&log_rows, 0};
    auto record = [&](double eps) {
        Terms t;
        multi_energy(single, u, eps, c.tau, &t);
        log.add(iterations, eps, t);
    };

    // Pair step: v = u_i - u_j solves the two-phase problem with the other phases frozen.
    auto pair_step = [&](std::size_t i, std::size_t j, double eps, double tol) {
        Problem P = make_problem(grid, &fs[i], &fs[j], g);
        for (std::size_t k = 0; k < n; ++k) {
            bool blocked = false;
            for (std::size_t q = 0; q < m; ++q)
                if (q != i && q != j && u[q][k] > 0.0) blocked = true;
            P.lo[k] = blocked ? 0.0 : -INFINITY;
            P.hi[k] = blocked ? 0.0 : INFINITY;
        }
        std::vector<double> v(n);
        for (std::size_t k = 0; k < n; ++k) v[k] = u[i][k] - u[j][k];
        Scratch s(n);
        const double before = evaluate(P, v, eps, c.tau, nullptr, s).total();
        std::vector<double> trial = v;
        SolveOptions inner = opts;
        inner.log_iterations = false;
        const StageStats st = run_stage(P, trial, eps, c.tau, inner, opts.max_outer_iters, Log{}, tol);
        iterations += st.iterations;
        if (st.terms.total() > before) return false;   // exact non-increase required
        for (std::size_t k = 0; k < n; ++k) {
            u[i][k] = std::max(trial[k], 0.0);
            u[j][k] = std::max(-trial[k], 0.0);
        }
        return st.converged;
    };

    for (std::size_t stage = 0; stage < c.schedule.size() && !disjoint_barriers; ++stage) {
        const double eps = c.schedule[stage];
        const double tol =
            stage + 1 == c.schedule.size() ? opts.energy_tol : std::max(opts.energy_tol, kWarmStageTol);
        bool stage_converged = false;
        for (int sweep = 0; sweep < 50; ++sweep) {
            const double before = multi_energy(single, u, eps, c.tau);
            bool all_converged = true;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = i + 1; j < m; ++j) all_converged &= pair_step(i, j, eps, tol);
            std::vector<ScalarField> fields;
            for (std::size_t i = 0; i < m; ++i) fields.emplace_back(grid, u[i]);
            fields = segregation_project(fields);
            for (std::size_t i = 0; i < m; ++i) u[i] = fields[i].values();
            const double after = multi_energy(single, u, eps, c.tau);
            record(eps);
            if (all_converged && before - after <= tol * std::max(std::abs(after), 1e-300)) {
                stage_converged = true;
                break;
            }
        }
        if (stage + 1 == c.schedule.size() && !stage_converged)
            throw Error(ErrorCode::non_convergence, "multi-phase sweeps did not settle in the final stage");
    }

    // Hard phase per component: with the other phases frozen each one is a
    // one-phase problem whose upper bound vanishes where another phase lives.
    if (!disjoint_barriers) {
        for (std::size_t i = 0; i < m; ++i) {
            Problem Pi = single[i];
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t q = 0; q < m; ++q)
                    if (q != i && u[q][k] > 0.0) Pi.hi[k] = 0.0;
            iterations += hard_phase(Pi, u[i], c.tau, Log{}, 0);
        }
        if (multi_energy(single, initial, 0.0, c.tau) < multi_energy(single, u, 0.0, c.tau)) u = initial;
        // A phase whose barrier avoids every other phase can take the barrier,
        // which is the one-phase minimizer of its own term.
        for (std::size_t i = 0; i < m; ++i) {
            bool free = true;
            for (std::size_t k = 0; k < n && free; ++k)
                if (barriers[i][k] > 0.0)
                    for (std::size_t q = 0; q < m; ++q)
                        if (q != i && u[q][k] > 0.0) free = false;
            if (!free) continue;
            Scratch sc(n);
            const std::vector<double>& v = barriers[i].values();
            if (evaluate(single[i], v, 0.0, c.tau, nullptr, sc).total() < evaluate(single[i], u[i], 0.0, c.tau, nullptr, sc).total())
                u[i] = v;
        }
    }
    for (std::size_t i = 0; i < m; ++i) require_support_margin(grid, u[i], c.tau);
    record(0.0);

    PhaseSolution sol;
    sol.kind = SolutionKind::multi_phase;
    for (std::size_t i = 0; i < m; ++i) sol.fields.emplace_back(grid, u[i]);
    sol.energy = multi_phase_energy(sol.fields, fs, g, c.tau);
    sol.barriers = barriers;
    sol.log = std::move(log_rows);
    sol.iterations_used = iterations;
    sol.converged = true;
    sol.support_tau = c.tau;
    sol.seed_provenance = opts.seed_mode == SeedMode::custom ? "custom (segregated)"
                          : disjoint_barriers           ? "one-phase barriers (pairwise disjoint supports)"
                                                        : "segregated one-phase barriers";
    std::vector<const ScalarField*> fp;
    for (const auto& f : fs) fp.push_back(&f);
    sol.warnings = condition_warnings(fp, g);
    return sol;
}

PhaseSolution select_extremal(const ScalarField& f, const ScalarField& g, Extremal which, const SolveOptions& opts) {
    opts.validate();
    require_same_grid(f, g, "select_extremal");
    const Grid& grid = f.grid();
    const std::size_t n = grid.node_count();
    const Continuation c = continuation_for(grid, g, opts);
    Problem P = make_problem(grid, &f, nullptr, g);
    const ScalarField U = newtonian_potential(f);
    double level = 0.0;
    const std::vector<double> base = truncated_seed(P, U.values(), 1.0, c.tau, level);

    std::vector<std::pair<std::string, ScalarField>> family;
    if (which == Extremal::largest) {
        // widest admissible truncation, scaled up until the smoothed energy rises
        const double floor_level = frame_max(grid, U.values(), 5);
        std::vector<double> wide(n);
        for (std::size_t i = 0; i < n; ++i) wide[i] = std::max(U[i] - floor_level, 0.0);
        Scratch s(n);
        const double eps0 = c.schedule.front();
        double scale = 1.0;
        double prev = evaluate(P, wide, eps0, c.tau, nullptr, s).total();
        for (int k = 0; k < 30; ++k) {
            std::vector<double> t(n);
            for (std::size_t i = 0; i < n; ++i) t[i] = wide[i] * scale * 1.25;
            const double e = evaluate(P, t, eps0, c.tau, nullptr, s).total();
            scale *= 1.25;
            if (e > prev) break;
            prev = e;
        }
        for (double mult : {1.0, 1.5, 2.0}) {
            ScalarField seed(grid);
            for (std::size_t i = 0; i < n; ++i) seed[i] = wide[i] * scale * mult;
            family.emplace_back("scaled potential x" + std::to_string(scale * mult), seed);
        }
    } else {
        family.emplace_back("zero", ScalarField(grid));
        for (double mult : {0.5, 1.0}) {
            ScalarField seed(grid);
            for (std::size_t i = 0; i < n; ++i) seed[i] = f[i] > 0.0 ? mult * base[i] : 0.0;
            family.emplace_back("potential on source support x" + std::to_string(mult), seed);
        }
    }

    std::vector<PhaseSolution> results;
    for (const auto& [name, seed] : family) {
        SolveOptions o = opts;
        o.seed_mode = SeedMode::custom;
        o.custom_seed = {seed};
        PhaseSolution r = minimize_one_phase(f, g, o);
        r.seed_provenance = name;
        results.push_back(std::move(r));
    }
    const double sgn = which == Extremal::largest ? 1.0 : -1.0;
    for (std::size_t a = 0; a < results.size(); ++a) {
        bool dominates = true;
        for (std::size_t b = 0; b < results.size() && dominates; ++b) {
            if (a == b) continue;
            const auto& ua = results[a].fields[0];
            const auto& ub = results[b].fields[0];
            for (std::size_t i = 0; i < n; ++i)
                if (sgn * (ua[i] - ub[i]) < -1e-8) {
                    dominates = false;
                    break;
                }
        }
        if (dominates) {
            PhaseSolution out = results[a];
            out.extremal = which == Extremal::largest ? "largest" : "smallest";
            out.extremal_is_heuristic = true;
            out.warnings.push_back("extremal selection is a three-seed heuristic, not a certified extremal minimizer");
            return out;
        }
    }
    throw Error(ErrorCode::family_disagreement, "no converged iterate dominates the seed family pointwise");
}

}  // namespace qsurf
