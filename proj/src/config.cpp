#include "qsurf/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qsurf/error.hpp"

namespace qsurf {

using nlohmann::json;

namespace {

const std::map<std::string, std::set<std::string>>& check_params() {
    static const std::map<std::string, std::set<std::string>> table = {
        {"support_inclusion", {"halo_cells"}},
        {"qi", {"threshold", "disagreement", "max_degree", "kernels"}},
        {"junction_scan", {"radius"}},
        {"antisymmetry", {"normal", "offset", "threshold"}},
        {"asphericity", {"center", "phase", "threshold"}},
        {"nondegeneracy", {"point", "radii", "d_min", "phase", "l", "m_hat"}},
        {"density_ratio", {"point", "radius", "min", "phase"}},
        {"cjk", {"point", "radii", "epsilon", "factor"}},
        {"lipschitz", {"point", "radius", "max", "phase"}},
        {"poincare", {"point", "radius", "phase"}},
        {"aux_weighted_bound", {"point", "radius", "phase"}},
        {"boundary_gradient", {"threshold", "phase"}},
        {"sakai", {"c_bound", "radii"}},
    };
    return table;
}

// Walks a JSON object, records which keys were consumed and collects every
// violation instead of stopping at the first one.
class Reader {
public:
    Reader(const json& obj, std::string path, std::vector<std::string>& errors)
        : obj_(obj), path_(std::move(path)), errors_(errors) {
        if (!obj_.is_object()) errors_.push_back(where() + " must be an object");
    }

    bool has(const std::string& key) {
        used_.insert(key);
        return obj_.is_object() && obj_.contains(key);
    }

    template <class T>
    std::optional<T> get(const std::string& key, bool required = false) {
        if (!has(key)) {
            if (required) errors_.push_back("missing key '" + sub(key) + "'");
            return std::nullopt;
        }
        try {
            return obj_.at(key).get<T>();
        } catch (const json::exception&) {
            errors_.push_back("key '" + sub(key) + "' has the wrong type");
            return std::nullopt;
        }
    }

    const json& raw(const std::string& key) { return obj_.at(key); }

    void error(const std::string& key, const std::string& msg) { errors_.push_back("'" + sub(key) + "': " + msg); }

    void finish() {
        if (!obj_.is_object()) return;
        for (const auto& [k, v] : obj_.items())
            if (!used_.count(k)) errors_.push_back("unknown key '" + sub(k) + "'");
    }

    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string where() const { return path_.empty() ? "document" : "'" + path_ + "'"; }

    const json& obj_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> used_;
};

Point read_point(Reader& r, const std::string& key, int dim, bool required) {
    Point p{};
    auto v = r.get<std::vector<double>>(key, required);
    if (!v) return p;
    if (static_cast<int>(v->size()) != dim) {
        r.error(key, "needs " + std::to_string(dim) + " coordinates");
        return p;
    }
    for (int a = 0; a < dim; ++a) p[a] = (*v)[a];
    return p;
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

const char* problem_kind_name(ProblemKind k) {
    switch (k) {
        case ProblemKind::one_phase: return "one_phase";
        case ProblemKind::two_phase: return "two_phase";
        case ProblemKind::multi_phase: return "multi_phase";
    }
    return "?";
}

double CheckConfig::number(const std::string& key, double fallback) const {
    return params.contains(key) ? params.at(key).get<double>() : fallback;
}

std::vector<double> CheckConfig::numbers(const std::string& key, std::vector<double> fallback) const {
    return params.contains(key) ? params.at(key).get<std::vector<double>>() : fallback;
}

Grid ExperimentConfig::grid() const {
    if (!has_grid) throw Error(ErrorCode::validation_error, "the configuration has no grid block");
    return build_grid(dim, std::span<const double>(origin.data(), dim), h, std::span<const int>(cells.data(), dim));
}

int ExperimentConfig::phase_count() const {
    int m = 1;
    for (const auto& e : measures) m = std::max(m, e.phase);
    return m;
}

MeasureSpec ExperimentConfig::measure_for(int phase, int sign) const {
    MeasureSpec spec;
    for (const auto& e : measures) {
        if (e.phase != phase || e.sign != sign) continue;
        if (e.kind == MeasureEntry::Kind::atom) {
            Atom a;
            a.center = e.center;
            a.mass = e.mass;
            if (e.mollifier_radius > 0.0) a.mollifier_radius = e.mollifier_radius;
            spec.atoms.push_back(a);
        } else {
            Shell s;
            s.center = e.center;
            s.radius = e.radius;
            s.surface_density = e.surface_density;
            if (e.mollifier_radius > 0.0) s.mollifier_radius = e.mollifier_radius;
            spec.shells.push_back(s);
        }
    }
    return spec;
}

ScalarField ExperimentConfig::g_on(const Grid& grid) const {
    if (g_field.empty()) return ScalarField::constant(grid, g_constant);
    ScalarField g = read_field(g_field);
    if (!(g.grid() == grid)) throw Error(ErrorCode::validation_error, "g field grid differs from the config grid");
    return g;
}

bool ExperimentConfig::check_enabled(const std::string& name) const {
    return std::any_of(checks.begin(), checks.end(), [&](const CheckConfig& c) { return c.name == name; });
}

ExperimentConfig config_from_json(json doc, const std::filesystem::path& base_dir) {
    std::vector<std::string> errors;
    ExperimentConfig cfg;
    Reader top(doc, "", errors);

    if (top.has("grid")) {
        Reader g(top.raw("grid"), "grid", errors);
        cfg.has_grid = true;
        if (auto d = g.get<int>("dim", true)) {
            if (*d != 2 && *d != 3) g.error("dim", "must be 2 or 3");
            else cfg.dim = *d;
        }
        cfg.origin = read_point(g, "origin", cfg.dim, true);
        if (auto h = g.get<double>("h", true)) {
            if (!(*h > 0.0)) g.error("h", "must be positive");
            cfg.h = *h;
        }
        if (auto c = g.get<std::vector<int>>("cells", true)) {
            if (static_cast<int>(c->size()) != cfg.dim) g.error("cells", "needs one entry per axis");
            for (std::size_t a = 0; a < c->size() && a < 3; ++a) {
                if ((*c)[a] < 2) g.error("cells", "every axis needs at least 2 cells");
                cfg.cells[a] = (*c)[a];
            }
        }
        g.finish();
    }

    if (top.has("measures")) {
        const json& list = top.raw("measures");
        if (!list.is_array()) errors.push_back("'measures' must be a list");
        for (std::size_t i = 0; list.is_array() && i < list.size(); ++i) {
            Reader m(list[i], "measures[" + std::to_string(i) + "]", errors);
            MeasureEntry e;
            const std::string kind = m.get<std::string>("kind", true).value_or("atom");
            if (kind == "atom") e.kind = MeasureEntry::Kind::atom;
            else if (kind == "shell") e.kind = MeasureEntry::Kind::shell;
            else m.error("kind", "must be 'atom' or 'shell'");
            e.phase = m.get<int>("phase").value_or(1);
            if (e.phase < 1) m.error("phase", "phase indices start at 1");
            e.sign = m.get<int>("sign").value_or(1);
            if (e.sign != 1 && e.sign != -1) m.error("sign", "must be 1 or -1");
            e.center = read_point(m, "center", cfg.dim, true);
            e.mollifier_radius = m.get<double>("mollifier_radius").value_or(-1.0);
            if (e.kind == MeasureEntry::Kind::atom) {
                e.mass = m.get<double>("mass", true).value_or(0.0);
                if (!(e.mass > 0.0)) m.error("mass", "must be positive");
            } else {
                e.radius = m.get<double>("radius", true).value_or(0.0);
                e.surface_density = m.get<double>("surface_density", true).value_or(0.0);
                if (!(e.radius > 0.0)) m.error("radius", "must be positive");
                if (!(e.surface_density > 0.0)) m.error("surface_density", "must be positive");
            }
            m.finish();
            cfg.measures.push_back(e);
        }
    }
    {
        std::set<int> phases;
        for (const auto& e : cfg.measures) phases.insert(e.phase);
        int expect = 1;
        for (int p : phases) {
            if (p != expect) {
                errors.push_back("phase indices must be contiguous from 1 (found " + std::to_string(p) + ")");
                break;
            }
            ++expect;
        }
    }

    if (top.has("g")) {
        Reader g(top.raw("g"), "g", errors);
        const bool has_c = g.has("constant"), has_f = g.has("field");
        if (has_c == has_f) errors.push_back("'g' needs exactly one of 'constant' or 'field'");
        if (auto c = g.get<double>("constant")) {
            if (!(*c > 0.0)) g.error("constant", "must be positive");
            cfg.g_constant = *c;
        }
        if (auto f = g.get<std::string>("field")) {
            std::filesystem::path p = *f;
            if (p.is_relative()) p = base_dir / p;
            if (!std::filesystem::exists(p)) g.error("field", "file " + p.string() + " does not exist");
            cfg.g_field = p;
        }
        g.finish();
    }

    const int m = cfg.phase_count();
    const bool negative = std::any_of(cfg.measures.begin(), cfg.measures.end(), [](auto& e) { return e.sign < 0; });
    cfg.problem = m >= 2 ? ProblemKind::multi_phase : negative ? ProblemKind::two_phase : ProblemKind::one_phase;
    if (auto p = top.get<std::string>("problem")) {
        if (*p == "one_phase") cfg.problem = ProblemKind::one_phase;
        else if (*p == "two_phase") cfg.problem = ProblemKind::two_phase;
        else if (*p == "multi_phase") cfg.problem = ProblemKind::multi_phase;
        else top.error("problem", "must be one_phase, two_phase or multi_phase");
    }
    if (cfg.problem == ProblemKind::one_phase && (m > 1 || negative))
        errors.push_back("one_phase problems take positive measures of phase 1 only");
    if (cfg.problem == ProblemKind::two_phase && m > 2)
        errors.push_back("two_phase problems take at most two phase indices");
    if (cfg.problem == ProblemKind::two_phase && m == 2 && negative)
        errors.push_back("two_phase with phase indices 1 and 2 takes positive signs (phase 2 is the negative phase)");
    if (cfg.problem == ProblemKind::multi_phase && negative)
        errors.push_back("multi_phase measures must have sign 1");

    if (top.has("solve")) {
        Reader s(top.raw("solve"), "solve", errors);
        SolveOptions& o = cfg.solve;
        o.max_outer_iters = s.get<int>("max_outer_iters").value_or(o.max_outer_iters);
        o.regularization_schedule = s.get<std::vector<double>>("regularization_schedule").value_or(std::vector<double>{});
        o.descent_step = s.get<double>("descent_step").value_or(o.descent_step);
        o.energy_tol = s.get<double>("energy_tol").value_or(o.energy_tol);
        o.support_tau = s.get<double>("support_tau").value_or(o.support_tau);
        o.log_iterations = s.get<bool>("log_iterations").value_or(o.log_iterations);
        if (auto seed = s.get<std::string>("seed_mode")) {
            if (*seed == "potential") o.seed_mode = SeedMode::potential;
            else if (*seed == "zero") o.seed_mode = SeedMode::zero;
            else s.error("seed_mode", "must be 'potential' or 'zero'");
        }
        try {
            o.validate();
        } catch (const Error& e) {
            errors.push_back(std::string("solve: ") + e.what());
        }
        s.finish();
    }

    if (auto e = top.get<std::string>("extremal")) {
        if (*e != "largest" && *e != "smallest") top.error("extremal", "must be 'largest' or 'smallest'");
        else if (cfg.problem != ProblemKind::one_phase) top.error("extremal", "applies to one_phase problems only");
        cfg.extremal = *e;
    }

    if (top.has("checks")) {
        const json& list = top.raw("checks");
        if (!list.is_array()) errors.push_back("'checks' must be a list");
        std::set<std::string> seen;
        for (std::size_t i = 0; list.is_array() && i < list.size(); ++i) {
            const std::string path = "checks[" + std::to_string(i) + "]";
            if (!list[i].is_object() || !list[i].contains("name") || !list[i]["name"].is_string()) {
                errors.push_back("'" + path + "' needs a string 'name'");
                continue;
            }
            CheckConfig c;
            c.name = list[i]["name"].get<std::string>();
            auto it = check_params().find(c.name);
            if (it == check_params().end()) {
                errors.push_back("'" + path + "': unknown check '" + c.name + "'");
                continue;
            }
            if (!seen.insert(c.name).second) errors.push_back("'" + path + "': check '" + c.name + "' listed twice");
            for (const auto& [k, v] : list[i].items()) {
                if (k == "name") continue;
                if (!it->second.count(k)) errors.push_back("unknown key '" + path + "." + k + "'");
                else if (!v.is_number() && !v.is_array()) errors.push_back("'" + path + "." + k + "' must be numeric");
                else c.params[k] = v;
            }
            cfg.checks.push_back(c);
        }
    }

    if (top.has("reference")) {
        Reader r(top.raw("reference"), "reference", errors);
        ReferenceConfig& rc = cfg.reference;
        if (r.has("annulus")) {
            Reader a(r.raw("annulus"), "reference.annulus", errors);
            rc.shell_radius = a.get<double>("shell_radius").value_or(rc.shell_radius);
            rc.shell_density = a.get<double>("shell_density").value_or(rc.shell_density);
            rc.inner_radius = a.get<double>("inner_radius").value_or(rc.inner_radius);
            a.finish();
        }
        rc.cone_resolution = r.get<int>("cone_resolution").value_or(rc.cone_resolution);
        if (rc.cone_resolution < 256) r.error("cone_resolution", "must be at least 256");
        if (r.has("sakai_radii")) {
            Reader s(r.raw("sakai_radii"), "reference.sakai_radii", errors);
            rc.sakai_R = s.get<double>("R").value_or(rc.sakai_R);
            rc.sakai_M = s.get<double>("M").value_or(rc.sakai_M);
            rc.sakai_l0 = s.get<double>("l0").value_or(rc.sakai_l0);
            rc.sakai_dim = s.get<int>("dim").value_or(rc.sakai_dim);
            s.finish();
        }
        rc.null_qs_window = r.get<double>("null_qs_window").value_or(rc.null_qs_window);
        if (!(rc.null_qs_window > 0.0)) r.error("null_qs_window", "must be positive");
        r.finish();
    }

    if (auto out = top.get<std::string>("output")) cfg.output_dir = *out;
    top.finish();

    if (!errors.empty()) {
        std::string msg = std::to_string(errors.size()) + " problem(s) in configuration:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw Error(ErrorCode::validation_error, msg);
    }
    cfg.canonical = std::move(doc);
    cfg.hash = sha256_hex(cfg.canonical.dump());
    return cfg;
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw Error(ErrorCode::parse_error, "override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    std::string pointer;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw Error(ErrorCode::parse_error, "override key '" + key + "' has an empty component");
        pointer += "/" + part;
    }
    try {
        doc[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, "override '" + key + "': " + e.what());
    }
}

ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::missing_input, "config file " + path.string() + " not found");
    std::stringstream buf;
    buf << is.rdbuf();
    const std::string text = buf.str();
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw Error(ErrorCode::parse_error,
                    path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
    for (const auto& o : overrides) apply_override(doc, o);
    return config_from_json(std::move(doc), path.parent_path().empty() ? "." : path.parent_path());
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr))
        throw Error(ErrorCode::io_error, "SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

}  // namespace qsurf
