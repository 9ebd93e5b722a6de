#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "qsurf/app.hpp"
#include "qsurf/config.hpp"
#include "qsurf/error.hpp"
#include "qsurf/report_io.hpp"

using namespace qsurf;
namespace fs = std::filesystem;

namespace {

json minimal_doc() {
    return json::parse(R"({
      "grid": {"dim": 2, "origin": [-1, -1], "h": 0.0625, "cells": [32, 32]},
      "measures": [{"kind": "atom", "center": [0, 0], "mass": 1.5707963267948966, "mollifier_radius": 0.125}],
      "checks": [{"name": "qi"}]
    })");
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qsurf_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("sha256 of known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("a minimal config parses with defaults") {
    const ExperimentConfig cfg = config_from_json(minimal_doc());
    CHECK(cfg.has_grid);
    CHECK(cfg.dim == 2);
    CHECK(cfg.problem == ProblemKind::one_phase);
    CHECK(cfg.g_constant == 1.0);
    CHECK(cfg.check_enabled("qi"));
    CHECK_FALSE(cfg.check_enabled("sakai"));
    CHECK(cfg.grid().node_count() == 33 * 33);
    CHECK(cfg.hash.size() == 64);
    CHECK(cfg.hash == config_from_json(minimal_doc()).hash);
}

TEST_CASE("problem kind follows the measures") {
    json doc = minimal_doc();
    doc["measures"].push_back({{"kind", "atom"}, {"sign", -1}, {"center", {0.5, 0}}, {"mass", 1.0}});
    CHECK(config_from_json(doc).problem == ProblemKind::two_phase);
    doc = minimal_doc();
    doc["measures"].push_back({{"kind", "atom"}, {"phase", 2}, {"center", {0.5, 0}}, {"mass", 1.0}});
    doc["measures"].push_back({{"kind", "atom"}, {"phase", 3}, {"center", {-0.5, 0}}, {"mass", 1.0}});
    const ExperimentConfig cfg = config_from_json(doc);
    CHECK(cfg.problem == ProblemKind::multi_phase);
    CHECK(cfg.phase_count() == 3);
    CHECK(cfg.measure_for(2, 1).atoms.size() == 1);
    doc["problem"] = "one_phase";
    CHECK_THROWS_AS(config_from_json(doc), Error);
}

TEST_CASE("validation reports every problem at once") {
    json doc = minimal_doc();
    doc["grid"]["h"] = -1.0;
    doc["grid"]["spacing"] = 1.0;
    doc["checks"].push_back({{"name", "nonsense"}});
    try {
        config_from_json(doc);
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::validation_error);
        const std::string msg = e.what();
        CHECK(msg.find("grid.spacing") != std::string::npos);
        CHECK(msg.find("'grid.h'") != std::string::npos);
        CHECK(msg.find("nonsense") != std::string::npos);
    }
}

TEST_CASE("overrides address nested keys and array elements") {
    json doc = minimal_doc();
    apply_override(doc, "measures.0.mass=2.5");
    apply_override(doc, "grid.cells=[16,16]");
    apply_override(doc, "extremal=largest");
    CHECK(doc["measures"][0]["mass"] == 2.5);
    CHECK(doc["grid"]["cells"][1] == 16);
    CHECK(doc["extremal"] == "largest");
    CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), Error);
}

TEST_CASE("parse_config reads files and reports parse errors") {
    const fs::path dir = scratch("parse");
    CHECK_THROWS_AS(parse_config(dir / "missing.json"), Error);
    {
        std::ofstream(dir / "bad.json") << "{\n  \"grid\": ,\n}";
    }
    try {
        parse_config(dir / "bad.json");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse_error);
    }
    {
        std::ofstream(dir / "ok.json") << minimal_doc().dump();
    }
    const ExperimentConfig cfg = parse_config(dir / "ok.json", {"output=\"elsewhere\""});
    CHECK(cfg.output_dir == fs::path("elsewhere"));
    fs::remove_all(dir);
}

TEST_CASE("reference subcommand writes its artifacts and a manifest") {
    const fs::path dir = scratch("reference");
    RunOptions opt;
    opt.out_dir = dir;
    const RunResult r = run("reference", config_from_json(json::object()), opt);
    CHECK(r.exit_code == 0);
    CHECK(r.error.empty());
    for (const char* f : {"annulus.json", "cone.json", "sakai_radii.json", "null_qs.json"}) {
        CHECK(fs::exists(dir / f));
        CHECK(std::find(r.artifacts.begin(), r.artifacts.end(), f) != r.artifacts.end());
    }
    const json m = read_json(dir / "manifest.json");
    CHECK(m["status"] == "ok");
    CHECK(m["subcommand"] == "reference");
    for (const auto& c : m["checks"]) CHECK(c["verdict"] == "pass");
    fs::remove_all(dir);
}

TEST_CASE("stages that need a solve fail cleanly without one") {
    const fs::path dir = scratch("nosolve");
    RunOptions opt;
    opt.out_dir = dir;
    const RunResult r = run("verify-qi", config_from_json(minimal_doc()), opt);
    CHECK(r.exit_code == 1);
    CHECK(r.error.find("missing-input") != std::string::npos);
    CHECK(read_json(dir / "manifest.json")["status"] == "failed");
    CHECK(run("bogus", config_from_json(minimal_doc()), opt).exit_code == 1);
    fs::remove_all(dir);
}

TEST_CASE("solve then verify-qi on a small radial problem") {
    const fs::path dir = scratch("solve");
    RunOptions opt;
    opt.out_dir = dir;
    const ExperimentConfig cfg = config_from_json(minimal_doc());
    const RunResult s = run("solve", cfg, opt);
    REQUIRE(s.exit_code == 0);
    for (const char* f : {"u.json", "u.raw", "energy.json", "energy_log.csv", "solution.json", "boundary.csv"})
        CHECK(fs::exists(dir / f));
    const RunResult q = run("verify-qi", cfg, opt);
    CHECK(q.exit_code == 0);
    REQUIRE(q.checks.size() == 1);
    CHECK(q.checks[0].verdict == "pass");
    CHECK(fs::exists(dir / "qi.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cli_main exit codes") {
    const fs::path dir = scratch("cli");
    std::string prog = "qsurf", sub = "reference", out = "--out", path = dir.string();
    char* ok[] = {prog.data(), sub.data(), out.data(), path.data()};
    CHECK(cli_main(4, ok) == 0);
    std::string bogus = "frobnicate";
    char* bad[] = {prog.data(), bogus.data()};
    CHECK(cli_main(2, bad) == 1);
    std::string solve = "solve";
    char* noconfig[] = {prog.data(), solve.data()};
    CHECK(cli_main(2, noconfig) == 1);
    fs::remove_all(dir);
}
