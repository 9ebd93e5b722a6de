#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsurf/grid.hpp"
#include "qsurf/minimize.hpp"

namespace qsurf {

struct MeasureEntry {
    enum class Kind { atom, shell };
    Kind kind = Kind::atom;
    int phase = 1;
    int sign = 1;
    Point center{};
    double mass = 0.0;              // atom
    double radius = 0.0;            // shell
    double surface_density = 0.0;   // shell
    double mollifier_radius = -1.0; // < 0: the Atom/Shell default
};

struct CheckConfig {
    std::string name;
    nlohmann::json params = nlohmann::json::object();   // everything except "name"

    double number(const std::string& key, double fallback) const;
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback = {}) const;
};

struct ReferenceConfig {
    double shell_radius = 2.0;
    double shell_density = 3.0;
    double inner_radius = 1.0;
    int cone_resolution = 1024;
    double sakai_R = 2.0;
    double sakai_M = 10.0;
    double sakai_l0 = 1.0;
    int sakai_dim = 3;
    double null_qs_window = 2.0;
};

enum class ProblemKind { one_phase, two_phase, multi_phase };
const char* problem_kind_name(ProblemKind k);

struct ExperimentConfig {
    bool has_grid = false;
    int dim = 2;
    Point origin{};
    double h = 0.0;
    Index3 cells{0, 0, 0};

    std::vector<MeasureEntry> measures;
    double g_constant = 1.0;
    std::filesystem::path g_field;   // empty: constant
    ProblemKind problem = ProblemKind::one_phase;
    SolveOptions solve;
    std::string extremal;            // "", "largest" or "smallest"
    std::vector<CheckConfig> checks;
    ReferenceConfig reference;
    std::filesystem::path output_dir = "qsurf_out";

    nlohmann::json canonical;        // the validated document after overrides
    std::string hash;                // SHA-256 of canonical.dump()

    Grid grid() const;
    // Highest phase index (1 for one- and two-phase problems with signs).
    int phase_count() const;
    // Measures of `phase` with the given sign, as a nonnegative MeasureSpec.
    MeasureSpec measure_for(int phase, int sign) const;
    ScalarField g_on(const Grid& grid) const;
    bool check_enabled(const std::string& name) const;
};

// Parses and validates; unknown keys and every other violation are reported together.
ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
ExperimentConfig config_from_json(nlohmann::json doc, const std::filesystem::path& base_dir = ".");

// `key.path=value`; array elements by index (measures.0.mass=2). The value is
// read as JSON when possible and as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

std::string sha256_hex(const std::string& data);

}  // namespace qsurf
