#include "qsurf/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iostream>

#include "qsurf/error.hpp"
#include "qsurf/geometry.hpp"
#include "qsurf/minimize.hpp"
#include "qsurf/quadrature.hpp"
#include "qsurf/reference.hpp"
#include "qsurf/report_io.hpp"

namespace qsurf {

namespace fs = std::filesystem;

namespace {

constexpr double kConeTheta0Degrees = 33.534;

std::string verdict_of(bool pass) { return pass ? "pass" : "fail"; }

struct Context {
    const ExperimentConfig& cfg;
    fs::path out;
    RunResult& result;

    void artifact(const fs::path& p) {
        result.artifacts.push_back(fs::relative(p, out).generic_string());
        std::sort(result.artifacts.begin(), result.artifacts.end());
        result.artifacts.erase(std::unique(result.artifacts.begin(), result.artifacts.end()), result.artifacts.end());
    }
    void save(const std::string& name, const json& j) {
        write_json(out / name, j);
        artifact(out / name);
    }
    void save_field(const std::string& stem, const ScalarField& f) {
        const fs::path header = out / (stem + ".json");
        write_field(f, header);
        artifact(header);
        artifact(raw_path_for(header));
    }
    void check(const std::string& name, bool pass, double value, double threshold, std::string detail = {}) {
        result.checks.push_back({name, verdict_of(pass), value, threshold, std::move(detail)});
    }
    void check_indeterminate(const std::string& name, double value, std::string detail) {
        result.checks.push_back({name, "indeterminate", value, 0.0, std::move(detail)});
    }
    const CheckConfig* enabled(const std::string& name) const {
        for (const auto& c : cfg.checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

// Densities in the order of PhaseSolution::phases().
std::vector<ScalarField> densities(const ExperimentConfig& cfg, const Grid& grid) {
    std::vector<ScalarField> out;
    switch (cfg.problem) {
        case ProblemKind::one_phase: out.push_back(rasterize_measure(cfg.measure_for(1, 1), grid)); break;
        case ProblemKind::two_phase:
            out.push_back(rasterize_measure(cfg.measure_for(1, 1), grid));
            out.push_back(cfg.phase_count() == 2 ? rasterize_measure(cfg.measure_for(2, 1), grid)
                                                 : rasterize_measure(cfg.measure_for(1, -1), grid));
            break;
        case ProblemKind::multi_phase:
            for (int i = 1; i <= cfg.phase_count(); ++i) out.push_back(rasterize_measure(cfg.measure_for(i, 1), grid));
            break;
    }
    return out;
}

std::vector<std::string> field_stems(const PhaseSolution& s) {
    if (s.kind != SolutionKind::multi_phase) return {"u"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.fields.size(); ++i) out.push_back("u_" + std::to_string(i + 1));
    return out;
}

SolutionKind solution_kind(ProblemKind k) {
    switch (k) {
        case ProblemKind::one_phase: return SolutionKind::one_phase;
        case ProblemKind::two_phase: return SolutionKind::two_phase;
        case ProblemKind::multi_phase: return SolutionKind::multi_phase;
    }
    return SolutionKind::one_phase;
}

// Nonnegative barrier per phase, aligned with phases().
std::vector<ScalarField> phase_barriers(const PhaseSolution& s) {
    std::vector<ScalarField> out;
    if (s.kind == SolutionKind::two_phase && s.barrier_upper && s.barrier_lower) {
        out.push_back(positive_part(*s.barrier_upper));
        out.push_back(negative_part(*s.barrier_lower));
    } else if (s.kind == SolutionKind::multi_phase) {
        out = s.barriers;
    }
    return out;
}

void write_solution(Context& ctx, const PhaseSolution& sol) {
    const auto stems = field_stems(sol);
    for (std::size_t i = 0; i < sol.fields.size(); ++i) ctx.save_field(stems[i], sol.fields[i]);
    if (sol.barrier_upper) ctx.save_field("barrier_upper", *sol.barrier_upper);
    if (sol.barrier_lower) ctx.save_field("barrier_lower", *sol.barrier_lower);
    for (std::size_t i = 0; i < sol.barriers.size(); ++i) ctx.save_field("barrier_" + std::to_string(i + 1), sol.barriers[i]);
    ctx.save("energy.json", to_json(sol.energy));
    write_iteration_log_csv(ctx.out / "energy_log.csv", sol.log);
    ctx.artifact(ctx.out / "energy_log.csv");
    json summary = solution_summary(sol);
    summary["fields"] = stems;
    ctx.save("solution.json", summary);
}

PhaseSolution load_solution(Context& ctx) {
    const fs::path path = ctx.out / "solution.json";
    if (!fs::exists(path))
        throw Error(ErrorCode::missing_input, "no solve artifacts in " + ctx.out.string() + " (run 'solve' first)");
    const json summary = read_json(path);
    PhaseSolution sol;
    const std::string kind = summary.at("kind").get<std::string>();
    sol.kind = kind == "two_phase" ? SolutionKind::two_phase
               : kind == "multi_phase" ? SolutionKind::multi_phase : SolutionKind::one_phase;
    if (sol.kind != solution_kind(ctx.cfg.problem))
        throw Error(ErrorCode::validation_error, "stored solution is " + kind + " but the config asks for " +
                                                     problem_kind_name(ctx.cfg.problem));
    sol.support_tau = summary.at("support_tau").get<double>();
    const Grid grid = ctx.cfg.grid();
    for (const auto& stem : summary.at("fields")) {
        const fs::path header = ctx.out / (stem.get<std::string>() + ".json");
        if (!fs::exists(header)) throw Error(ErrorCode::missing_input, "missing field " + header.string());
        ScalarField f = read_field(header);
        if (!(f.grid() == grid)) throw Error(ErrorCode::validation_error, header.string() + " is not on the config grid");
        sol.fields.push_back(std::move(f));
    }
    auto optional_field = [&](const std::string& stem) -> std::optional<ScalarField> {
        const fs::path header = ctx.out / (stem + ".json");
        if (!fs::exists(header)) return std::nullopt;
        return read_field(header);
    };
    sol.barrier_upper = optional_field("barrier_upper");
    sol.barrier_lower = optional_field("barrier_lower");
    for (std::size_t i = 1;; ++i) {
        auto b = optional_field("barrier_" + std::to_string(i));
        if (!b) break;
        sol.barriers.push_back(std::move(*b));
    }
    return sol;
}

void stage_solve(Context& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const Grid grid = cfg.grid();
    if (cfg.measures.empty()) throw Error(ErrorCode::validation_error, "solve needs at least one measure");
    const ScalarField g = cfg.g_on(grid);
    const auto f = densities(cfg, grid);
    PhaseSolution sol;
    switch (cfg.problem) {
        case ProblemKind::one_phase:
            if (cfg.extremal.empty()) sol = minimize_one_phase(f[0], g, cfg.solve);
            else
                sol = select_extremal(f[0], g, cfg.extremal == "largest" ? Extremal::largest : Extremal::smallest,
                                      cfg.solve);
            break;
        case ProblemKind::two_phase: sol = minimize_two_phase(f[0], f[1], g, cfg.solve); break;
        case ProblemKind::multi_phase: sol = minimize_multi_phase(f, g, cfg.solve); break;
    }
    write_solution(ctx, sol);
    const BoundaryClassification cls = classify_boundary(sol);
    write_boundary_csv(ctx.out / "boundary.csv", cls.geometry, cls.labels);
    ctx.artifact(ctx.out / "boundary.csv");

    if (const CheckConfig* c = ctx.enabled("support_inclusion")) {
        const int halo = static_cast<int>(c->number("halo_cells", 1));
        const auto phases = sol.phases();
        const auto barriers = phase_barriers(sol);
        if (barriers.size() != phases.size()) {
            ctx.check_indeterminate("support_inclusion", 0.0, "no barriers for a one-phase solve");
        } else {
            std::size_t bad = 0;
            for (std::size_t i = 0; i < phases.size(); ++i)
                bad += support_violations(phases[i], barriers[i], sol.support_tau, halo);
            ctx.check("support_inclusion", bad == 0, static_cast<double>(bad), 0.0,
                      "nodes outside the barrier support dilated by " + std::to_string(halo) + " cell(s)");
        }
    }
}

Point param_point(const CheckConfig& c, const std::string& key, int dim, const Point& fallback = {}) {
    if (!c.params.contains(key)) return fallback;
    const auto v = c.numbers(key);
    if (static_cast<int>(v.size()) != dim)
        throw Error(ErrorCode::validation_error, "check " + c.name + ": '" + key + "' needs " + std::to_string(dim) +
                                                     " coordinates");
    Point p{};
    for (int a = 0; a < dim; ++a) p[a] = v[a];
    return p;
}

const ScalarField& phase_field(const std::vector<ScalarField>& phases, const CheckConfig& c) {
    const int i = static_cast<int>(c.number("phase", 1));
    if (i < 1 || i > static_cast<int>(phases.size()))
        throw Error(ErrorCode::validation_error, "check " + c.name + ": phase " + std::to_string(i) + " does not exist");
    return phases[i - 1];
}

void stage_classify(Context& ctx) {
    const PhaseSolution sol = load_solution(ctx);
    const Grid& grid = sol.fields.at(0).grid();
    const BoundaryClassification cls = classify_boundary(sol);
    write_boundary_csv(ctx.out / "boundary.csv", cls.geometry, cls.labels);
    ctx.artifact(ctx.out / "boundary.csv");
    json counts = {{"one_phase", cls.count(BoundaryLabel::one_phase)},
                   {"two_phase", cls.count(BoundaryLabel::two_phase)},
                   {"branch", cls.count(BoundaryLabel::branch)}};
    json report = {{"classification_radius", cls.classification_radius},
                   {"extraction_level", cls.geometry.extraction_level},
                   {"element_count", cls.geometry.elements.size()},
                   {"total_weight", cls.geometry.total_weight()},
                   {"counts", counts}};

    if (const CheckConfig* c = ctx.enabled("junction_scan")) {
        if (sol.phase_count() < 3) {
            ctx.check_indeterminate("junction_scan", 0.0, "fewer than three phases");
        } else {
            const double r = c->number("radius", -1.0);
            const auto hits = junction_scan(sol, r);
            json pts = json::array();
            for (const auto& p : hits) pts.push_back(point_json(p, grid.dim()));
            report["junction_points"] = pts;
            ctx.check("junction_scan", hits.empty(), static_cast<double>(hits.size()), 0.0,
                      "nodes whose ball meets three or more phases");
        }
    }
    if (const CheckConfig* c = ctx.enabled("antisymmetry")) {
        const Point n = param_point(*c, "normal", grid.dim(), Point{1.0, 0.0, 0.0});
        const double offset = c->number("offset", 0.0);
        const double thr = c->number("threshold", 1e-4);
        const ScalarField& u = sol.fields.at(0);
        const double dev = reflect_deviation(u, n, offset, sol.kind == SolutionKind::two_phase);
        const double rel = u.max_abs() > 0.0 ? dev / u.max_abs() : 0.0;
        report["antisymmetry_deviation"] = rel;
        ctx.check("antisymmetry", rel <= thr, rel, thr, "max reflection deviation relative to max|u|");
    }
    if (const CheckConfig* c = ctx.enabled("asphericity")) {
        const int phase = static_cast<int>(c->number("phase", 0));
        const double thr = c->number("threshold", 2.0 * grid.spacing());
        Point center{};
        if (c->params.contains("center")) center = param_point(*c, "center", grid.dim());
        else if (!ctx.cfg.measures.empty()) center = ctx.cfg.measures.front().center;
        const double a = support_asphericity(cls.geometry, center, phase);
        report["asphericity"] = a;
        ctx.check("asphericity", a <= thr, a, thr, "max - min boundary distance from the center");
    }
    ctx.save("classification.json", report);
}

void stage_probes(Context& ctx) {
    const PhaseSolution sol = load_solution(ctx);
    const auto phases = sol.phases();
    const Grid& grid = phases.at(0).grid();
    const int d = grid.dim();
    const double h = grid.spacing();
    json reports = json::array();

    if (const CheckConfig* c = ctx.enabled("nondegeneracy")) {
        const auto radii = c->numbers("radii", {8 * h, 4 * h, 2 * h});
        ProbeReport r = nondegeneracy_probe(phase_field(phases, *c), param_point(*c, "point", d), radii,
                                            c->number("d_min", 0.0), c->number("l", 0.0), c->number("m_hat", 0.0));
        reports.push_back(to_json(r));
        const double lo = r.values.empty() ? 0.0 : *std::min_element(r.values.begin(), r.values.end());
        ctx.check("nondegeneracy", r.verdict == Verdict::pass, lo, r.threshold, "min over radii of average / r");
    }
    if (const CheckConfig* c = ctx.enabled("density_ratio")) {
        const double v = density_ratio(phase_field(phases, *c), param_point(*c, "point", d), c->number("radius", 4 * h),
                                       sol.support_tau);
        reports.push_back({{"probe", "density_ratio"}, {"value", v}});
        if (c->params.contains("min")) ctx.check("density_ratio", v >= c->number("min", 0.0), v, c->number("min", 0.0));
        else ctx.check_indeterminate("density_ratio", v, "no lower bound configured");
    }
    if (const CheckConfig* c = ctx.enabled("cjk")) {
        if (phases.size() < 3) {
            ctx.check_indeterminate("cjk", 0.0, "fewer than three phases");
        } else {
            const auto radii = c->numbers("radii", {16 * h, 8 * h, 4 * h});
            const double eps = c->number("epsilon", 0.1);
            const double factor = c->number("factor", std::pow(2.0, 3.0 * eps));
            const double r_max = *std::max_element(radii.begin(), radii.end());
            std::vector<Point> samples;
            if (c->params.contains("point")) {
                samples.push_back(param_point(*c, "point", d));
            } else {
                const BoundaryClassification cls = classify_boundary(sol);
                for (std::size_t i = 0; i < cls.labels.size(); ++i)
                    if (cls.labels[i] == BoundaryLabel::two_phase) samples.push_back(cls.geometry.elements[i].midpoint);
            }
            double worst = 0.0;
            std::size_t used = 0, skipped = 0;
            for (const Point& x : samples) {
                if (grid.distance_to_boundary(x) < r_max) {
                    ++skipped;
                    continue;
                }
                double prev = -1.0;
                for (double r : radii) {
                    const double v = cjk_product(phases[0], phases[1], phases[2], x, r, eps, sol.support_tau, r_max).product;
                    if (prev > 0.0) worst = std::max(worst, v / prev);
                    else if (prev == 0.0 && v > 0.0) worst = INFINITY;
                    prev = v;
                }
                ++used;
            }
            reports.push_back({{"probe", "cjk"},
                               {"radii", radii},
                               {"samples", used},
                               {"skipped_near_edge", skipped},
                               {"max_step_ratio", worst}});
            if (used == 0) ctx.check_indeterminate("cjk", 0.0, "no sample point with the largest ball inside the grid");
            else
                ctx.check("cjk", worst <= factor, worst, factor,
                          "largest growth of the product as r halves, over " + std::to_string(used) + " samples");
        }
    }
    if (const CheckConfig* c = ctx.enabled("lipschitz")) {
        const double v = lipschitz_quotient(phase_field(phases, *c), param_point(*c, "point", d), c->number("radius", 8 * h));
        reports.push_back({{"probe", "lipschitz"}, {"value", v}});
        if (c->params.contains("max")) ctx.check("lipschitz", v <= c->number("max", 0.0), v, c->number("max", 0.0));
        else ctx.check_indeterminate("lipschitz", v, "no upper bound configured");
    }
    if (const CheckConfig* c = ctx.enabled("poincare")) {
        const double v = poincare_ratio(sol.fields.at(0), param_point(*c, "point", d), c->number("radius", 8 * h),
                                        sol.support_tau);
        reports.push_back({{"probe", "poincare"}, {"value", v}});
        ctx.check_indeterminate("poincare", v, "ratio reported without a bound");
    }
    if (const CheckConfig* c = ctx.enabled("aux_weighted_bound")) {
        ProbeReport r = aux_weighted_bound_check(phase_field(phases, *c), param_point(*c, "point", d),
                                                 c->number("radius", 1.0));
        reports.push_back(to_json(r));
        ctx.check_indeterminate("aux_weighted_bound", r.values.at(0), "ratio reported without a bound");
    }
    if (const CheckConfig* c = ctx.enabled("boundary_gradient")) {
        const ScalarField g = ctx.cfg.g_on(grid);
        const int phase = static_cast<int>(c->number("phase", 0));
        const auto geo = extract_phase_boundaries(sol);
        double worst = 0.0;
        std::size_t samples = 0;
        for (std::size_t i = 0; i < phases.size(); ++i) {
            if (phase != 0 && static_cast<int>(i) + 1 != phase) continue;
            const GradientStats st = boundary_gradient_stats(phases[i], geo, g, static_cast<int>(i) + 1);
            worst = std::max(worst, std::abs(st.mean_ratio - 1.0));
            samples += st.samples;
            reports.push_back({{"probe", "boundary_gradient"},
                               {"phase", i + 1},
                               {"mean_ratio", st.mean_ratio},
                               {"max_deviation", st.max_deviation},
                               {"samples", st.samples}});
        }
        const double thr = c->number("threshold", 0.1);
        ctx.check("boundary_gradient", samples > 0 && worst <= thr, worst, thr, "| mean |grad u| / g - 1 |");
    }
    ctx.save("probes.json", reports);
}

void stage_verify_qi(Context& ctx) {
    const PhaseSolution sol = load_solution(ctx);
    const Grid& grid = sol.fields.at(0).grid();
    const ScalarField g = ctx.cfg.g_on(grid);
    const auto f = densities(ctx.cfg, grid);
    const CheckConfig* c = ctx.enabled("qi");
    const int degree = c ? static_cast<int>(c->number("max_degree", 2)) : 2;
    const int kernels = c ? static_cast<int>(c->number("kernels", 8)) : 8;
    const auto tests = harmonic_test_set(grid.dim(), support_box(sol), degree, kernels);
    const QIReport report = qi_residual(sol, f, g, tests);
    ctx.save("qi.json", to_json(report));
    write_qi_csv(ctx.out / "qi.csv", report);
    ctx.artifact(ctx.out / "qi.csv");
    if (c) {
        const double thr = c->number("threshold", 0.05), dis = c->number("disagreement", 0.05);
        const double worst = std::max(report.max_relative_contour(), report.max_relative_green());
        ctx.check("qi", worst <= thr && report.max_route_disagreement() <= dis, worst, thr,
                  "route disagreement " + std::to_string(report.max_route_disagreement()));
    }
}

void stage_sakai(Context& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const Grid grid = cfg.grid();
    const double h = grid.spacing();
    const CheckConfig* c = ctx.enabled("sakai");
    const double c_bound = c ? c->number("c_bound", 1.0) : 1.0;
    const auto radii = c ? c->numbers("radii", {16 * h, 8 * h, 4 * h, 2 * h}) : std::vector<double>{16 * h, 8 * h, 4 * h, 2 * h};
    json out = json::array();
    bool all = true;
    double worst = INFINITY;
    for (int phase = 1; phase <= cfg.phase_count(); ++phase)
        for (int sign : {1, -1}) {
            const MeasureSpec m = cfg.measure_for(phase, sign);
            if (m.empty()) continue;
            const SakaiReport r = sakai_check(m, grid, c_bound, radii);
            json j = to_json(r, grid.dim());
            j["phase"] = phase;
            j["sign"] = sign;
            out.push_back(j);
            all = all && r.pass;
            for (double v : r.best_values) worst = std::min(worst, v);
        }
    ctx.save("sakai.json", {{"c_bound", c_bound}, {"threshold", sakai_threshold(grid.dim(), c_bound)}, {"measures", out}});
    if (c)
        ctx.check("sakai", all && !out.empty(), std::isfinite(worst) ? worst : 0.0, sakai_threshold(grid.dim(), c_bound),
                  "smallest concentration over support points");
}

void stage_reference(Context& ctx) {
    const ReferenceConfig& rc = ctx.cfg.reference;

    const AnnulusConstruction an = annular_construction(rc.shell_radius, rc.shell_density, rc.inner_radius, 3);
    ctx.save("annulus.json", to_json(an));
    const double ann_res = std::max({an.one_phase.continuity_residual(), an.one_phase.jump_residual(),
                                     an.two_phase.continuity_residual(), an.two_phase.jump_residual()});
    ctx.check("reference.annulus", ann_res <= 1e-12, ann_res, 1e-12, "continuity and flux-jump residuals");

    const ConeProfile cone = ac_cone(rc.cone_resolution);
    ctx.save("cone.json", to_json(cone));
    const double dtheta = std::abs(cone.theta0_degrees - kConeTheta0Degrees);
    ctx.check("reference.cone_theta0", dtheta <= 1e-3, cone.theta0_degrees, kConeTheta0Degrees, "degrees, tolerance 0.001");
    const double ode = std::max(cone.ode_residual, std::abs(cone.fprime_half_pi));
    ctx.check("reference.cone_ode", ode <= 1e-8, ode, 1e-8, "ODE residual and f'(pi/2)");

    const SakaiRadii sr = sakai_radius_identity(rc.sakai_R, rc.sakai_M, rc.sakai_l0, rc.sakai_dim);
    ctx.save("sakai_radii.json", to_json(sr));
    const double srel = std::abs(sr.sigma - rc.sakai_R) / rc.sakai_R;
    ctx.check("reference.sigma_identity", srel <= 1e-12, srel, 1e-12, "|sigma - R| / R");

    const double w = rc.null_qs_window;
    const TestFunction one = TestFunction::constant_one();
    json members = json::array();
    double worst = 0.0;
    auto add = [&](const std::string& name, const WindowResidual& r, bool minimizer) {
        members.push_back({{"member", name}, {"minimizer", minimizer}, {"residual", to_json(r)}});
        worst = std::max(worst, std::abs(r.relative()));
    };
    const Point wc{0.1, -0.2, 0.15};
    add("plus", null_qs_window_residual(two_plane(TwoPlaneKind::plus), one, wc, w), true);
    add("minus", null_qs_window_residual(two_plane(TwoPlaneKind::minus), one, wc, w), true);
    add("gap", null_qs_window_residual(two_plane(TwoPlaneKind::gap, 3, 0.5 * w), one, wc, w), true);
    add("linear_1", null_qs_window_residual(two_plane(TwoPlaneKind::linear, 3, 1.0), one, wc, w), true);
    const TwoPlane weak = two_plane(TwoPlaneKind::linear, 3, 0.5);
    add("linear_0.5", null_qs_window_residual(weak, one, wc, w), weak.minimizer);
    add("exterior_ball", null_qs_window_residual(exterior_ball_null(0.5 * w), one, w), true);
    add("ac_cone", null_qs_window_residual(cone, one, w), true);
    ctx.save("null_qs.json", {{"window_radius", w}, {"members", members}});
    ctx.check("reference.null_qs", worst <= 1e-3, worst, 1e-3, "largest windowed residual / scale");
    ctx.check("reference.linear_slope_flag", !weak.minimizer, weak.minimizer ? 1.0 : 0.0, 0.0,
              "slope 0.5 must not be flagged as a minimizer");

    // the radial Dirac solution for a single positive atom, when the config has one
    const auto& ms = ctx.cfg.measures;
    if (ctx.cfg.has_grid && ms.size() == 1 && ms[0].kind == MeasureEntry::Kind::atom && ms[0].sign == 1 &&
        ctx.cfg.g_field.empty())
        ctx.save("radial.json", to_json(radial_one_phase(ms[0].mass, ctx.cfg.g_constant, ctx.cfg.dim)));
}

json manifest_json(const std::string& sub, const ExperimentConfig& cfg, const RunOptions& opt, const RunResult& res,
                   double seconds, const std::string& started) {
    json checks = json::array();
    for (const auto& c : res.checks)
        checks.push_back({{"name", c.name},
                          {"verdict", c.verdict},
                          {"value", c.value},
                          {"threshold", c.threshold},
                          {"detail", c.detail}});
    json m = {{"tool", "qsurf"},
              {"subcommand", sub},
              {"status", res.error.empty() ? "ok" : "failed"},
              {"config_hash", cfg.hash},
              {"config", cfg.canonical},
              {"threads", opt.threads},
              {"checks", checks},
              {"artifacts", res.artifacts},
              {"versions",
               {{"qsurf", kVersion},
                {"compiler", __VERSION__},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
              {"timing", {{"started_utc", started}, {"wall_seconds", seconds}}}};
    if (!res.error.empty()) m["error"] = res.error;
    return m;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> list = {"solve", "verify-qi", "classify", "probes", "reference", "sakai", "all"};
    return list;
}

RunResult run(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& options) {
    RunResult result;
    const fs::path out = options.out_dir ? *options.out_dir : config.output_dir;
    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = utc_now();
    Context ctx{config, out, result};
    try {
        if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
            throw Error(ErrorCode::invalid_argument, "unknown subcommand '" + subcommand + "'");
        if (options.threads < 1) throw Error(ErrorCode::invalid_argument, "threads must be at least 1");
        fs::create_directories(out);
        if (subcommand == "solve" || subcommand == "all") stage_solve(ctx);
        if (subcommand == "classify" || subcommand == "all") stage_classify(ctx);
        if (subcommand == "probes" || subcommand == "all") stage_probes(ctx);
        if (subcommand == "verify-qi" || subcommand == "all") stage_verify_qi(ctx);
        if (subcommand == "sakai" || subcommand == "all") stage_sakai(ctx);
        if (subcommand == "reference" || subcommand == "all") stage_reference(ctx);
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        fs::create_directories(out);
        write_json(out / "manifest.json", manifest_json(subcommand, config, options, result, seconds, started));
    } catch (const std::exception& e) {
        if (result.error.empty()) result.error = e.what();
    }
    if (!result.error.empty()) result.exit_code = 1;
    else if (std::any_of(result.checks.begin(), result.checks.end(), [](auto& c) { return c.verdict == "fail"; }))
        result.exit_code = 2;
    return result;
}

int cli_main(int argc, char** argv) {
    CLI::App app{"qsurf: quadrature surfaces and free boundaries on uniform grids"};
    std::string sub, config_path, out_dir;
    std::vector<std::string> overrides;
    int threads = 0;
    app.add_option("subcommand", sub, "solve | verify-qi | classify | probes | reference | sakai | all")
        ->required()
        ->check(CLI::IsMember(subcommands()));
    app.add_option("--config", config_path, "experiment configuration (JSON)");
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_option("--threads", threads, "worker threads (default: QSURF_THREADS or 1)");
    app.add_option("--override", overrides, "key.path=value applied before validation")->take_all();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    RunOptions opts;
    if (!out_dir.empty()) opts.out_dir = out_dir;
    ExperimentConfig cfg;
    try {
        if (threads == 0) {
            const char* env = std::getenv("QSURF_THREADS");
            threads = 1;
            if (env && *env) {
                char* end = nullptr;
                const long v = std::strtol(env, &end, 10);
                if (*end != '\0' || v < 1) throw Error(ErrorCode::invalid_argument, "QSURF_THREADS must be a positive integer");
                threads = static_cast<int>(v);
            }
        }
        opts.threads = threads;
        if (config_path.empty()) {
            if (sub != "reference")
                throw Error(ErrorCode::missing_input, "--config is required for '" + sub + "'");
            json doc = json::object();
            for (const auto& o : overrides) apply_override(doc, o);
            cfg = config_from_json(doc);
        } else {
            cfg = parse_config(config_path, overrides);
        }
    } catch (const std::exception& e) {
        std::cerr << "qsurf: " << e.what() << '\n';
        if (opts.out_dir) {
            RunResult failed;
            failed.error = e.what();
            try {
                fs::create_directories(*opts.out_dir);
                write_json(*opts.out_dir / "manifest.json", manifest_json(sub, cfg, opts, failed, 0.0, utc_now()));
            } catch (const std::exception&) {
            }
        }
        return 1;
    }

    const RunResult res = run(sub, cfg, opts);
    for (const auto& c : res.checks)
        std::cout << c.name << ": " << c.verdict << " (value " << c.value << ", threshold " << c.threshold << ")\n";
    if (!res.error.empty()) std::cerr << "qsurf: " << res.error << '\n';
    return res.exit_code;
}

}  // namespace qsurf
