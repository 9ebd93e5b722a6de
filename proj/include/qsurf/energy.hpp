#pragma once

#include <vector>

#include "qsurf/grid.hpp"

namespace qsurf {

struct EnergyBreakdown {
    double dirichlet = 0.0;
    double source_plus = 0.0;    // -2 ∫ f1 u+
    double source_minus = 0.0;   // -2 ∫ f2 u-   (f2 is the density of the negative phase)
    double perimeter_penalty = 0.0;
    double total = 0.0;
    double tau = 0.0;
};

// Default support tolerance: 1e-8 * max|u| over all given fields.
double default_tau(const ScalarField& u);
double default_tau(const std::vector<ScalarField>& fields);

// ∫|∇u|² - 2∫f u + ∫g² χ{u > tau}.  Throws negativity if min u < -tau.
EnergyBreakdown one_phase_energy(const ScalarField& u, const ScalarField& f, const ScalarField& g, double tau);

// D(u+) + D(u-) - 2∫f1 u+ - 2∫f2 u- + ∫g² χ{|u| > tau}.
//
// The Dirichlet term is split by sign so that the value equals
// one_phase_energy(u+, f1) + one_phase_energy(u-, f2) node by node.
EnergyBreakdown two_phase_energy(const ScalarField& u, const ScalarField& f1, const ScalarField& f2,
                                 const ScalarField& g, double tau);

EnergyBreakdown multi_phase_energy(const std::vector<ScalarField>& u, const std::vector<ScalarField>& f,
                                   const ScalarField& g, double tau);

double energy_split_check(const ScalarField& u, const ScalarField& f1, const ScalarField& f2, const ScalarField& g,
                          double tau);

// slack = [J(u1) + J~(u2)] - [J(min) + J~(max)], where J uses (f1, f2, g) and J~ uses (f1t, f2t, gt).
// Requires f1 <= f1t, f2 >= f2t and g >= gt nodewise. The inequality slack >= 0
// is guaranteed when g == gt wherever u1 or u2 is negative; a strictly larger g
// on the negative phase can make it fail.
double comparison_inequality_check(const ScalarField& u1, const ScalarField& u2, const ScalarField& f1,
                                   const ScalarField& f2, const ScalarField& g, const ScalarField& f1t,
                                   const ScalarField& f2t, const ScalarField& gt, double tau);

}  // namespace qsurf
