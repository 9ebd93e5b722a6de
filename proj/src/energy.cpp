#include "qsurf/energy.hpp"

#include <algorithm>
#include <cmath>

#include "qsurf/error.hpp"

namespace qsurf {

double default_tau(const ScalarField& u) { return 1e-8 * u.max_abs(); }

double default_tau(const std::vector<ScalarField>& fields) {
    double m = 0.0;
    for (const auto& f : fields) m = std::max(m, f.max_abs());
    return 1e-8 * m;
}

namespace {

void finish(EnergyBreakdown& e, double tau) {
    e.total = e.dirichlet + e.source_plus + e.source_minus + e.perimeter_penalty;
    e.tau = tau;
}

void check_tau(double tau) {
    if (!(tau >= 0.0)) throw Error(ErrorCode::invalid_argument, "support tolerance must be nonnegative");
}

// Accumulates the one-phase terms of a nonnegative-valued field given by `value(n)`.
template <class Value>
void one_phase_terms(const Grid& g, Value&& value, const ScalarField& f, const ScalarField& gfield, double tau,
                     double& dirichlet, double& source, double& penalty) {
    double d = 0.0;
    for_each_edge(g, [&](std::size_t a, std::size_t b) {
        const double diff = value(b) - value(a);
        d += diff * diff;
    });
    dirichlet = d * std::pow(g.spacing(), g.dim() - 2);
    double s = 0.0, p = 0.0;
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        const double w = g.node_weight(g.unravel(n));
        const double v = value(n);
        s += f[n] * v * w;
        if (v > tau) p += gfield[n] * gfield[n] * w;
    }
    source = -2.0 * s;
    penalty = p;
}

}  // namespace

EnergyBreakdown one_phase_energy(const ScalarField& u, const ScalarField& f, const ScalarField& g, double tau) {
    check_tau(tau);
    require_same_grid(u, f, "one_phase_energy");
    require_same_grid(u, g, "one_phase_energy");
    if (u.min() < -tau) throw Error(ErrorCode::negativity, "one-phase field has values below -tau");
    EnergyBreakdown e;
    one_phase_terms(u.grid(), [&](std::size_t n) { return u[n]; }, f, g, tau, e.dirichlet, e.source_plus,
                    e.perimeter_penalty);
    finish(e, tau);
    return e;
}

EnergyBreakdown two_phase_energy(const ScalarField& u, const ScalarField& f1, const ScalarField& f2,
                                 const ScalarField& g, double tau) {
    check_tau(tau);
    require_same_grid(u, f1, "two_phase_energy");
    require_same_grid(u, f2, "two_phase_energy");
    require_same_grid(u, g, "two_phase_energy");
    EnergyBreakdown e;
    double dp, dm, pp, pm;
    one_phase_terms(u.grid(), [&](std::size_t n) { return std::max(u[n], 0.0); }, f1, g, tau, dp, e.source_plus, pp);
    one_phase_terms(u.grid(), [&](std::size_t n) { return std::max(-u[n], 0.0); }, f2, g, tau, dm, e.source_minus, pm);
    e.dirichlet = dp + dm;
    e.perimeter_penalty = pp + pm;
    finish(e, tau);
    return e;
}

EnergyBreakdown multi_phase_energy(const std::vector<ScalarField>& u, const std::vector<ScalarField>& f,
                                   const ScalarField& g, double tau) {
    check_tau(tau);
    if (u.size() != f.size() || u.empty())
        throw Error(ErrorCode::length_mismatch, "multi_phase_energy needs as many sources as phases (and at least one)");
    EnergyBreakdown e;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const EnergyBreakdown ei = one_phase_energy(u[i], f[i], g, tau);
        e.dirichlet += ei.dirichlet;
        e.source_plus += ei.source_plus;
        e.perimeter_penalty += ei.perimeter_penalty;
    }
    finish(e, tau);
    return e;
}

double energy_split_check(const ScalarField& u, const ScalarField& f1, const ScalarField& f2, const ScalarField& g,
                          double tau) {
    const EnergyBreakdown j = two_phase_energy(u, f1, f2, g, tau);
    const EnergyBreakdown jp = one_phase_energy(positive_part(u), f1, g, tau);
    const EnergyBreakdown jm = one_phase_energy(negative_part(u), f2, g, tau);
    return std::abs(j.total - jp.total - jm.total);
}

double comparison_inequality_check(const ScalarField& u1, const ScalarField& u2, const ScalarField& f1,
                                   const ScalarField& f2, const ScalarField& g, const ScalarField& f1t,
                                   const ScalarField& f2t, const ScalarField& gt, double tau) {
    require_same_grid(u1, u2, "comparison_inequality_check");
    for (const ScalarField* x : {&f1, &f2, &g, &f1t, &f2t, &gt}) require_same_grid(u1, *x, "comparison_inequality_check");
    for (std::size_t n = 0; n < u1.size(); ++n) {
        if (f1[n] > f1t[n]) throw Error(ErrorCode::ordering_violation, "f1 > f1~ at node " + std::to_string(n));
        if (f2[n] < f2t[n]) throw Error(ErrorCode::ordering_violation, "f2 < f2~ at node " + std::to_string(n));
        if (g[n] < gt[n]) throw Error(ErrorCode::ordering_violation, "g < g~ at node " + std::to_string(n));
    }
    ScalarField lo(u1.grid()), hi(u1.grid());
    for (std::size_t n = 0; n < u1.size(); ++n) {
        lo[n] = std::min(u1[n], u2[n]);
        hi[n] = std::max(u1[n], u2[n]);
    }
    const double before = two_phase_energy(u1, f1, f2, g, tau).total + two_phase_energy(u2, f1t, f2t, gt, tau).total;
    const double after = two_phase_energy(lo, f1, f2, g, tau).total + two_phase_energy(hi, f1t, f2t, gt, tau).total;
    return before - after;
}

}  // namespace qsurf
