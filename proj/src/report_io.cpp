#include "qsurf/report_io.hpp"

#include <cstdio>
#include <fstream>

#include "qsurf/error.hpp"

namespace qsurf {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* kind_name(SolutionKind k) {
    switch (k) {
        case SolutionKind::one_phase: return "one_phase";
        case SolutionKind::two_phase: return "two_phase";
        case SolutionKind::multi_phase: return "multi_phase";
    }
    return "?";
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    return os;
}

}  // namespace

json point_json(const Point& p, int dim) {
    json j = json::array();
    for (int a = 0; a < dim; ++a) j.push_back(p[a]);
    return j;
}

json to_json(const EnergyBreakdown& e) {
    return {{"dirichlet", e.dirichlet},       {"source_plus", e.source_plus}, {"source_minus", e.source_minus},
            {"perimeter_penalty", e.perimeter_penalty}, {"total", e.total},   {"tau", e.tau}};
}

json to_json(const QIReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"test_id", r.test_id},
                        {"kind", r.kind},
                        {"label", r.label},
                        {"phase_i", r.phase_i},
                        {"phase_j", r.phase_j},
                        {"lhs_contour", r.lhs_contour},
                        {"lhs_green", r.lhs_green},
                        {"rhs", r.rhs_measure},
                        {"residual_contour", r.residual_contour},
                        {"residual_green", r.residual_green},
                        {"scale", r.scale},
                        {"collar_contribution", r.collar_contribution}});
    return {{"rows", rows},
            {"max_relative_contour", report.max_relative_contour()},
            {"max_relative_green", report.max_relative_green()},
            {"max_route_disagreement", report.max_route_disagreement()},
            {"warnings", report.warnings}};
}

json to_json(const ProbeReport& report) {
    json extras = json::object();
    for (const auto& [k, v] : report.extras) extras[k] = v;
    return {{"probe", report.probe},         {"center", point_json(report.center, 3)},
            {"radii", report.radii},         {"values", report.values},
            {"verdict", verdict_name(report.verdict)}, {"threshold", report.threshold},
            {"extras", extras},              {"warnings", report.warnings}};
}

json to_json(const SakaiReport& report, int dim) {
    json points = json::array();
    for (const auto& p : report.points) points.push_back(point_json(p, dim));
    return {{"threshold", report.threshold},
            {"points", points},
            {"best_values", report.best_values},
            {"radii", report.radii},
            {"worst_by_radius", report.worst_by_radius},
            {"pass", report.pass}};
}

json to_json(const RadialSolution& s) {
    json pieces = json::array();
    for (const auto& p : s.pieces) pieces.push_back({{"r_lo", p.r_lo}, {"r_hi", p.r_hi}, {"a", p.a}, {"b", p.b}});
    json shells = json::array();
    for (const auto& sh : s.shells) shells.push_back({{"radius", sh.radius}, {"density", sh.density}});
    return {{"dim", s.dim},
            {"basis", s.dim == 2 ? "a + b log r" : "a + b r^(2-N)"},
            {"breakpoints", s.breakpoints()},
            {"pieces", pieces},
            {"shells", shells},
            {"boundary_radii", s.boundary_radii},
            {"boundary_gradients", s.boundary_gradients},
            {"continuity_residual", s.continuity_residual()},
            {"jump_residual", s.jump_residual()},
            {"boundary_residual", s.boundary_residual()},
            {"notes", s.notes}};
}

json to_json(const AnnulusConstruction& a) {
    return {{"outer_radius", a.outer_radius},
            {"inverted_radius", a.inverted_radius},
            {"inverted_gradient", a.inverted_gradient},
            {"one_phase", to_json(a.one_phase)},
            {"two_phase", to_json(a.two_phase)}};
}

json to_json(const ConeProfile& c, bool with_table) {
    json j = {{"theta0_radians", c.theta0},          {"theta0_degrees", c.theta0_degrees},
              {"f_at_theta0", c.f_at_theta0},        {"fprime_theta0", c.fprime_theta0},
              {"fprime_half_pi", c.fprime_half_pi},  {"ode_residual", c.ode_residual},
              {"samples", c.theta.size()}};
    if (with_table) {
        j["theta"] = c.theta;
        j["f"] = c.f;
    }
    return j;
}

json to_json(const SakaiRadii& s) {
    return {{"r", s.r}, {"sigma", s.sigma}, {"r_bound", s.r_bound}, {"below_bound", s.below_bound}};
}

json to_json(const WindowResidual& w) {
    return {{"surface", w.surface},
            {"correction", w.correction},
            {"residual", w.residual},
            {"scale", w.scale},
            {"relative", w.relative()}};
}

json solution_summary(const PhaseSolution& s) {
    return {{"kind", kind_name(s.kind)},
            {"phase_count", s.phase_count()},
            {"energy", to_json(s.energy)},
            {"iterations_used", s.iterations_used},
            {"converged", s.converged},
            {"support_tau", s.support_tau},
            {"seed_provenance", s.seed_provenance},
            {"extremal", s.extremal},
            {"extremal_is_heuristic", s.extremal_is_heuristic},
            {"warnings", s.warnings}};
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto os = open_out(path);
    os << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::missing_input, "cannot read " + path.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
    }
}

void write_iteration_log_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& log) {
    auto os = open_out(path);
    os << "iter,epsilon,total,dirichlet,source,penalty\n";
    for (const auto& r : log)
        os << r.iter << ',' << num(r.epsilon) << ',' << num(r.total) << ',' << num(r.dirichlet) << ','
           << num(r.source) << ',' << num(r.penalty) << '\n';
}

void write_boundary_csv(const std::filesystem::path& path, const BoundaryGeometry& geometry,
                        const std::vector<BoundaryLabel>& labels) {
    auto os = open_out(path);
    const bool three = geometry.dim == 3;
    os << (three ? "mx,my,mz,nx,ny,nz" : "mx,my,nx,ny") << ",weight,phase_i,phase_j,label\n";
    for (std::size_t i = 0; i < geometry.elements.size(); ++i) {
        const auto& e = geometry.elements[i];
        for (int a = 0; a < geometry.dim; ++a) os << num(e.midpoint[a]) << ',';
        for (int a = 0; a < geometry.dim; ++a) os << num(e.normal[a]) << ',';
        os << num(e.weight) << ',' << e.phase_i << ',' << e.phase_j << ','
           << (i < labels.size() ? boundary_label_name(labels[i]) : "") << '\n';
    }
}

void write_qi_csv(const std::filesystem::path& path, const QIReport& report) {
    auto os = open_out(path);
    os << "test_id,kind,label,phase_i,phase_j,lhs_contour,lhs_green,rhs,residual_contour,residual_green,scale,"
          "collar_contribution\n";
    for (const auto& r : report.rows) {
        std::string label = r.label;
        for (char& c : label)
            if (c == ',' || c == '"') c = ' ';
        os << r.test_id << ',' << r.kind << ',' << label << ',' << r.phase_i << ',' << r.phase_j << ','
           << num(r.lhs_contour) << ',' << num(r.lhs_green) << ',' << num(r.rhs_measure) << ','
           << num(r.residual_contour) << ',' << num(r.residual_green) << ',' << num(r.scale) << ','
           << num(r.collar_contribution) << '\n';
    }
}

}  // namespace qsurf
