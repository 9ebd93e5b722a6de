import json
import math

import numpy as np
import pytest

import qsurf


def square_grid(half, h):
    n = round(2 * half / h)
    return qsurf.Grid(2, [-half, -half], h, [n, n])


def test_version_and_exports():
    assert qsurf.__version__ == "1.0.0"
    assert "minimize_one_phase" in qsurf.__all__


def test_field_roundtrip_through_numpy():
    g = square_grid(1.0, 0.125)
    a = np.arange(g.node_count, dtype=float).reshape(g.shape)
    f = qsurf.ScalarField(g, a)
    assert np.array_equal(f.to_numpy(), a)
    with pytest.raises(qsurf.QsurfError) as err:
        qsurf.ScalarField(g, np.zeros(3))
    assert err.value.code == "length-mismatch"


def test_rasterized_atom_keeps_its_mass():
    g = square_grid(1.0, 1 / 32)
    m = qsurf.Measure(atoms=[qsurf.Atom([0.0, 0.0], 2.0, 0.25)])
    f = m.rasterize(g).to_numpy()
    assert f.sum() * g.h**2 == pytest.approx(2.0, rel=1e-3)


def test_small_radial_solve():
    h = 1 / 32
    g = square_grid(1.25, h)
    f = qsurf.Measure(atoms=[qsurf.Atom([0.0, 0.0], math.pi, 0.125)]).rasterize(g)
    one = qsurf.ScalarField.constant(g, 1.0)
    sol = qsurf.minimize_one_phase(f, one)
    assert sol.kind == "one_phase"
    u = sol.fields[0]
    assert u.min() >= 0.0
    area = (u > sol.support_tau).sum() * h * h
    assert abs(math.sqrt(area / math.pi) - 0.5) <= 2 * h
    b = sol.boundary()
    r = np.linalg.norm(b["midpoints"], axis=1)
    assert np.all(np.abs(r - 0.5) <= 2 * h)
    qi = qsurf.qi_residual(sol, [qsurf.Measure(atoms=[qsurf.Atom([0.0, 0.0], math.pi, 0.125)])], one)
    assert qi["max_relative_contour"] <= 0.05


def test_energy_split():
    g = square_grid(1.0, 0.125)
    rng = np.random.default_rng(1)
    make = lambda lo, hi: qsurf.ScalarField(g, rng.uniform(lo, hi, g.shape))
    assert abs(qsurf.energy_split_check(make(-1, 1), make(0, 1), make(0, 1), make(0.5, 1.5))) <= 1e-10


def test_reference_values():
    cone = qsurf.reference.ac_cone()
    assert abs(cone["theta0_degrees"] - 33.534) <= 1e-3
    ann = qsurf.reference.annular_construction()
    assert ann["outer_radius"] == 3.0
    assert ann["inverted_radius"] == pytest.approx(1 / 3, abs=1e-15)
    assert qsurf.reference.radial_one_phase(4 * math.pi, 1.0, 2) == pytest.approx(2.0)
    r, sigma = qsurf.reference.sakai_radius_identity(2.0, 10.0, 1.0, 3)
    assert sigma == pytest.approx(2.0, rel=1e-12)
    assert not qsurf.reference.two_plane_is_minimizer(0.5)
    assert qsurf.sakai_threshold(2) == 24.0
    assert qsurf.sakai_threshold(3) == 216.0


def test_run_reference_subcommand(tmp_path):
    res = qsurf.run("reference", out=tmp_path)
    assert res["exit_code"] == 0
    assert all(c["verdict"] == "pass" for c in res["checks"])
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert "cone.json" in manifest["artifacts"]


def test_config_errors_raise(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"grid": {"dim": 2, "h": 0.1, "cells": [10, 10], "origin": [0, 0], "extra": 1}}))
    with pytest.raises(qsurf.QsurfError, match="unknown key 'grid.extra'"):
        qsurf.run("solve", config=cfg, out=tmp_path / "out")
