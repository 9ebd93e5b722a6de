#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "qsurf/energy.hpp"
#include "qsurf/geometry.hpp"
#include "qsurf/minimize.hpp"
#include "qsurf/quadrature.hpp"
#include "qsurf/reference.hpp"

namespace qsurf {

using json = nlohmann::json;

json point_json(const Point& p, int dim);

json to_json(const EnergyBreakdown& e);
json to_json(const QIReport& report);
json to_json(const ProbeReport& report);
json to_json(const SakaiReport& report, int dim);
json to_json(const RadialSolution& s);
json to_json(const AnnulusConstruction& a);
json to_json(const ConeProfile& c, bool with_table = true);
json to_json(const SakaiRadii& s);
json to_json(const WindowResidual& w);
// Everything about a solve except the fields themselves.
json solution_summary(const PhaseSolution& s);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

// iter, epsilon, total, dirichlet, source, penalty
void write_iteration_log_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& log);
// midpoint, normal, weight, phase_i, phase_j, label (labels may be empty)
void write_boundary_csv(const std::filesystem::path& path, const BoundaryGeometry& geometry,
                        const std::vector<BoundaryLabel>& labels = {});
// test_id, kind, label, phase_i, phase_j, lhs_contour, lhs_green, rhs, residual_contour, residual_green, scale, collar
void write_qi_csv(const std::filesystem::path& path, const QIReport& report);

}  // namespace qsurf
