#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsurf/energy.hpp"
#include "qsurf/grid.hpp"

namespace qsurf {

enum class SeedMode { potential, zero, custom };

struct SolveOptions {
    int max_outer_iters = 20000;                 // per continuation stage
    std::vector<double> regularization_schedule; // smoothing widths ε (field units); empty = automatic
    double descent_step = 0.0;                   // 0 = automatic (inverse Lipschitz bound)
    double energy_tol = 1e-10;
    double support_tau = -1.0;                   // < 0 = automatic (last ε / 10)
    SeedMode seed_mode = SeedMode::potential;
    std::vector<ScalarField> custom_seed;        // one field per unknown (seed_mode == custom)
    bool log_iterations = true;

    void validate() const;
};

struct IterationRecord {
    int iter = 0;
    double epsilon = 0.0;   // 0 marks the exact (hard) functional
    double total = 0.0;
    double dirichlet = 0.0;
    double source = 0.0;
    double penalty = 0.0;
};

enum class SolutionKind { one_phase, two_phase, multi_phase };

struct PhaseSolution {
    SolutionKind kind = SolutionKind::one_phase;
    // one_phase: [u >= 0]; two_phase: [signed u]; multi_phase: [u_1, ..., u_m]
    std::vector<ScalarField> fields;
    EnergyBreakdown energy;
    int iterations_used = 0;
    bool converged = false;
    std::optional<ScalarField> barrier_upper;   // U¹
    std::optional<ScalarField> barrier_lower;   // u¹
    std::vector<ScalarField> barriers;          // multi-phase one-phase barriers v_i
    std::vector<IterationRecord> log;
    std::vector<std::string> warnings;
    std::string seed_provenance;
    std::string extremal;                        // "", "largest" or "smallest"
    bool extremal_is_heuristic = false;
    double support_tau = 0.0;

    // Nonnegative phase fields: [u] / [u+, u-] / [u_1..u_m].
    std::vector<ScalarField> phases() const;
    std::size_t phase_count() const;
};

// Automatic continuation schedule for a grid and a typical gradient scale g.
std::vector<double> default_schedule(const Grid& grid, double g_scale);

PhaseSolution minimize_one_phase(const ScalarField& f, const ScalarField& g, const SolveOptions& opts = {});

struct BarrierPair {
    PhaseSolution upper;   // U¹ >= 0, solves the one-phase problem for f1
    PhaseSolution lower;   // one-phase solve for f2; u¹ = -lower.fields[0]
    ScalarField upper_field() const { return upper.fields.at(0); }
    ScalarField lower_field() const;
};

BarrierPair barrier_pair(const ScalarField& f1, const ScalarField& f2, const ScalarField& g,
                         const SolveOptions& opts = {});

// f1 and f2 are the (nonnegative) densities of the positive and negative phase.
PhaseSolution minimize_two_phase(const ScalarField& f1, const ScalarField& f2, const ScalarField& g,
                                 const SolveOptions& opts = {});

PhaseSolution minimize_multi_phase(const std::vector<ScalarField>& fs, const ScalarField& g,
                                   const SolveOptions& opts = {});

std::vector<ScalarField> segregation_project(const std::vector<ScalarField>& u);

enum class Extremal { largest, smallest };

PhaseSolution select_extremal(const ScalarField& f, const ScalarField& g, Extremal which,
                              const SolveOptions& opts = {});

// Truncated Newtonian potential of a density, computed by direct summation on
// a coarse sub-lattice and interpolated back to the grid.
ScalarField newtonian_potential(const ScalarField& density, int coarse_nodes_per_axis = 0);

}  // namespace qsurf
