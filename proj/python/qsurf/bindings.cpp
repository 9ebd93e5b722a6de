#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "qsurf/app.hpp"
#include "qsurf/energy.hpp"
#include "qsurf/error.hpp"
#include "qsurf/geometry.hpp"
#include "qsurf/minimize.hpp"
#include "qsurf/quadrature.hpp"
#include "qsurf/reference.hpp"

namespace py = pybind11;
using namespace qsurf;

namespace {

Point to_point(const std::vector<double>& v) {
    if (v.size() > 3) throw Error(ErrorCode::invalid_argument, "points have at most three coordinates");
    Point p{};
    for (std::size_t a = 0; a < v.size(); ++a) p[a] = v[a];
    return p;
}

std::vector<py::ssize_t> node_shape(const Grid& g) {
    std::vector<py::ssize_t> shape;
    for (int a = 0; a < g.dim(); ++a) shape.push_back(g.nodes()[a]);
    return shape;
}

py::array_t<double> field_array(const ScalarField& f) {
    py::array_t<double> out(node_shape(f.grid()));
    std::copy(f.values().begin(), f.values().end(), out.mutable_data());
    return out;
}

ScalarField field_from_array(const Grid& g, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    if (static_cast<std::size_t>(a.size()) != g.node_count())
        throw Error(ErrorCode::length_mismatch, "array has " + std::to_string(a.size()) + " values, the grid has " +
                                                    std::to_string(g.node_count()) + " nodes");
    return ScalarField(g, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict boundary_dict(const BoundaryGeometry& geo) {
    const py::ssize_t n = static_cast<py::ssize_t>(geo.elements.size());
    py::array_t<double> mid({n, static_cast<py::ssize_t>(geo.dim)}), nrm({n, static_cast<py::ssize_t>(geo.dim)});
    py::array_t<double> w(n);
    py::array_t<int> pi(n), pj(n);
    auto m = mid.mutable_unchecked<2>();
    auto q = nrm.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i) {
        const auto& e = geo.elements[i];
        for (int a = 0; a < geo.dim; ++a) {
            m(i, a) = e.midpoint[a];
            q(i, a) = e.normal[a];
        }
        w.mutable_at(i) = e.weight;
        pi.mutable_at(i) = e.phase_i;
        pj.mutable_at(i) = e.phase_j;
    }
    py::dict d;
    d["midpoints"] = mid;
    d["normals"] = nrm;
    d["weights"] = w;
    d["phase_i"] = pi;
    d["phase_j"] = pj;
    d["level"] = geo.extraction_level;
    return d;
}

py::dict energy_dict(const EnergyBreakdown& e) {
    py::dict d;
    d["dirichlet"] = e.dirichlet;
    d["source_plus"] = e.source_plus;
    d["source_minus"] = e.source_minus;
    d["perimeter_penalty"] = e.perimeter_penalty;
    d["total"] = e.total;
    d["tau"] = e.tau;
    return d;
}

}  // namespace

PYBIND11_MODULE(_qsurf, m) {
    m.doc() = "Grid solvers and checks for one-, two- and multi-phase quadrature surfaces";
    m.attr("__version__") = kVersion;

    static py::exception<Error> error_type(m, "QsurfError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object code = py::str(error_code_name(e.code()));
            py::object exc = py::handle(error_type)(e.what());
            exc.attr("code") = code;
            py::set_error(error_type, exc);
        }
    });

    py::class_<Grid>(m, "Grid")
        .def(py::init([](int dim, const std::vector<double>& origin, double h, const std::vector<int>& cells) {
                 return build_grid(dim, origin, h, cells);
             }),
             py::arg("dim"), py::arg("origin"), py::arg("h"), py::arg("cells"))
        .def_property_readonly("dim", &Grid::dim)
        .def_property_readonly("h", &Grid::spacing)
        .def_property_readonly("shape", [](const Grid& g) { return node_shape(g); })
        .def_property_readonly("node_count", &Grid::node_count)
        .def("node", [](const Grid& g, std::size_t n) { return g.node(n); })
        .def("__repr__", [](const Grid& g) {
            return "<Grid dim=" + std::to_string(g.dim()) + " h=" + std::to_string(g.spacing()) + " nodes=" +
                   std::to_string(g.node_count()) + ">";
        });

    py::class_<ScalarField>(m, "ScalarField")
        .def(py::init(&field_from_array), py::arg("grid"), py::arg("values"))
        .def_static("constant", &ScalarField::constant, py::arg("grid"), py::arg("value"))
        .def_property_readonly("grid", &ScalarField::grid)
        .def("to_numpy", &field_array)
        .def("max_abs", &ScalarField::max_abs)
        .def("__len__", &ScalarField::size);

    py::class_<Atom>(m, "Atom")
        .def(py::init([](const std::vector<double>& c, double mass, double mollifier, int sign) {
                 return Atom{to_point(c), mass, mollifier, sign};
             }),
             py::arg("center"), py::arg("mass"), py::arg("mollifier_radius") = 0.25, py::arg("sign") = 1)
        .def_readwrite("mass", &Atom::mass)
        .def_readwrite("mollifier_radius", &Atom::mollifier_radius);

    py::class_<Shell>(m, "Shell")
        .def(py::init([](const std::vector<double>& c, double radius, double density, double mollifier, int sign) {
                 return Shell{to_point(c), radius, density, mollifier, sign};
             }),
             py::arg("center"), py::arg("radius"), py::arg("surface_density"), py::arg("mollifier_radius") = 0.125,
             py::arg("sign") = 1);

    py::class_<MeasureSpec>(m, "Measure")
        .def(py::init([](std::vector<Atom> atoms, std::vector<Shell> shells) {
                 MeasureSpec s;
                 s.atoms = std::move(atoms);
                 s.shells = std::move(shells);
                 return s;
             }),
             py::arg("atoms") = std::vector<Atom>{}, py::arg("shells") = std::vector<Shell>{})
        .def("total_mass", &MeasureSpec::total_mass, py::arg("dim"))
        .def("rasterize", &rasterize_measure, py::arg("grid"));

    py::class_<SolveOptions>(m, "SolveOptions")
        .def(py::init<>())
        .def_readwrite("max_outer_iters", &SolveOptions::max_outer_iters)
        .def_readwrite("regularization_schedule", &SolveOptions::regularization_schedule)
        .def_readwrite("energy_tol", &SolveOptions::energy_tol)
        .def_readwrite("support_tau", &SolveOptions::support_tau)
        .def_readwrite("log_iterations", &SolveOptions::log_iterations);

    py::class_<PhaseSolution>(m, "PhaseSolution")
        .def_property_readonly("kind",
                               [](const PhaseSolution& s) {
                                   return s.kind == SolutionKind::one_phase   ? "one_phase"
                                          : s.kind == SolutionKind::two_phase ? "two_phase"
                                                                              : "multi_phase";
                               })
        .def_property_readonly("fields", [](const PhaseSolution& s) {
            py::list out;
            for (const auto& f : s.fields) out.append(field_array(f));
            return out;
        })
        .def_property_readonly("energy", [](const PhaseSolution& s) { return energy_dict(s.energy); })
        .def_readonly("support_tau", &PhaseSolution::support_tau)
        .def_readonly("converged", &PhaseSolution::converged)
        .def_readonly("iterations_used", &PhaseSolution::iterations_used)
        .def_readonly("warnings", &PhaseSolution::warnings)
        .def("boundary", [](const PhaseSolution& s) { return boundary_dict(extract_phase_boundaries(s)); })
        .def("junctions", [](const PhaseSolution& s, double r) { return junction_scan(s, r); }, py::arg("r_scan") = -1.0);

    py::call_guard<py::gil_scoped_release> nogil;
    m.def("minimize_one_phase", &minimize_one_phase, py::arg("f"), py::arg("g"), py::arg("options") = SolveOptions{},
          nogil);
    m.def("minimize_two_phase", &minimize_two_phase, py::arg("f1"), py::arg("f2"), py::arg("g"),
          py::arg("options") = SolveOptions{}, nogil);
    m.def("minimize_multi_phase", &minimize_multi_phase, py::arg("f"), py::arg("g"), py::arg("options") = SolveOptions{},
          nogil);

    m.def("one_phase_energy", [](const ScalarField& u, const ScalarField& f, const ScalarField& g, double tau) {
        return energy_dict(one_phase_energy(u, f, g, tau));
    }, py::arg("u"), py::arg("f"), py::arg("g"), py::arg("tau") = 0.0);
    m.def("two_phase_energy", [](const ScalarField& u, const ScalarField& f1, const ScalarField& f2,
                                 const ScalarField& g, double tau) {
        return energy_dict(two_phase_energy(u, f1, f2, g, tau));
    }, py::arg("u"), py::arg("f1"), py::arg("f2"), py::arg("g"), py::arg("tau") = 0.0);
    m.def("energy_split_check", &energy_split_check, py::arg("u"), py::arg("f1"), py::arg("f2"), py::arg("g"),
          py::arg("tau") = 0.0);

    m.def("extract_contour", [](const ScalarField& u, double level, int sign) {
        return boundary_dict(extract_contour(u, level, sign));
    }, py::arg("u"), py::arg("level"), py::arg("sign") = 1);

    m.def("qi_residual", [](const PhaseSolution& s, const std::vector<MeasureSpec>& measures, const ScalarField& g,
                            int max_degree, int kernels) {
        const auto tests = harmonic_test_set(g.grid().dim(), support_box(s), max_degree, kernels);
        const QIReport r = qi_residual(s, measures, g, tests);
        py::dict d;
        d["max_relative_contour"] = r.max_relative_contour();
        d["max_relative_green"] = r.max_relative_green();
        d["max_route_disagreement"] = r.max_route_disagreement();
        d["rows"] = r.rows.size();
        d["warnings"] = r.warnings;
        return d;
    }, py::arg("solution"), py::arg("measures"), py::arg("g"), py::arg("max_degree") = 2, py::arg("kernels") = 8);

    m.def("sakai_threshold", &sakai_threshold, py::arg("dim"), py::arg("c_bound") = 1.0);
    m.def("sakai_check", [](const MeasureSpec& measure, const Grid& grid, double c_bound, const std::vector<double>& radii) {
        const SakaiReport r = sakai_check(measure, grid, c_bound, radii);
        py::dict d;
        d["threshold"] = r.threshold;
        d["best_values"] = r.best_values;
        d["worst_by_radius"] = r.worst_by_radius;
        d["pass"] = r.pass;
        return d;
    }, py::arg("measure"), py::arg("grid"), py::arg("c_bound"), py::arg("radii"));

    py::module_ ref = m.def_submodule("reference", "closed-form solutions");
    ref.def("ac_cone", [](int resolution) {
        const ConeProfile c = ac_cone(resolution);
        py::dict d;
        d["theta0"] = c.theta0;
        d["theta0_degrees"] = c.theta0_degrees;
        d["ode_residual"] = c.ode_residual;
        d["fprime_half_pi"] = c.fprime_half_pi;
        return d;
    }, py::arg("resolution") = 1024);
    ref.def("annular_construction", [](double s, double rho, double r_in) {
        const AnnulusConstruction a = annular_construction(s, rho, r_in, 3);
        py::dict d;
        d["outer_radius"] = a.outer_radius;
        d["inverted_radius"] = a.inverted_radius;
        d["continuity_residual"] = std::max(a.one_phase.continuity_residual(), a.two_phase.continuity_residual());
        d["jump_residual"] = std::max(a.one_phase.jump_residual(), a.two_phase.jump_residual());
        return d;
    }, py::arg("shell_radius") = 2.0, py::arg("shell_density") = 3.0, py::arg("inner_radius") = 1.0);
    ref.def("radial_one_phase", [](double mass, double g0, int dim) {
        const RadialSolution r = radial_one_phase(mass, g0, dim);
        return r.boundary_radii.at(0);
    }, py::arg("mass"), py::arg("g0"), py::arg("dim"), "support radius of the Dirac solution");
    ref.def("sakai_radius_identity", [](double R, double M, double l0, int dim) {
        const SakaiRadii s = sakai_radius_identity(R, M, l0, dim);
        return py::make_tuple(s.r, s.sigma);
    }, py::arg("R"), py::arg("M"), py::arg("l0"), py::arg("dim"));
    ref.def("two_plane_is_minimizer", [](double slope) {
        return two_plane(TwoPlaneKind::linear, 3, slope).minimizer;
    }, py::arg("slope"));

    m.def("run", [](const std::string& sub, const std::optional<std::filesystem::path>& config, const std::filesystem::path& out,
                    const std::vector<std::string>& overrides) {
        ExperimentConfig cfg;
        if (config) {
            cfg = parse_config(*config, overrides);
        } else {
            nlohmann::json doc = nlohmann::json::object();
            for (const auto& o : overrides) apply_override(doc, o);
            cfg = config_from_json(doc);
        }
        RunOptions opt;
        opt.out_dir = out;
        RunResult r;
        {
            py::gil_scoped_release release;
            r = run(sub, cfg, opt);
        }
        py::list checks;
        for (const auto& c : r.checks) {
            py::dict d;
            d["name"] = c.name;
            d["verdict"] = c.verdict;
            d["value"] = c.value;
            d["threshold"] = c.threshold;
            checks.append(d);
        }
        py::dict d;
        d["exit_code"] = r.exit_code;
        d["checks"] = checks;
        d["artifacts"] = r.artifacts;
        d["error"] = r.error;
        return d;
    }, py::arg("subcommand"), py::arg("config") = py::none(), py::arg("out") = std::filesystem::path{"qsurf_out"},
       py::arg("overrides") = std::vector<std::string>{});
}
