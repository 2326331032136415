import csv
import io
import json
import math

import pytest

import mbnav


def test_viscosity_limits():
    m = mbnav.CarreauModel()
    assert mbnav.apparent_viscosity(m, 0.0) == pytest.approx(0.056)
    assert mbnav.apparent_viscosity(m, 1.0) == pytest.approx(0.0270977, rel=1e-5)


def test_profile_and_flux():
    assert mbnav.inlet_profile(1.0, 0.5e-3, 1e-3) == pytest.approx(0.770526, rel=1e-6)
    n = 0.89
    assert mbnav.profile_flux(0.45, 1e-3) == pytest.approx(0.45 * math.pi * 1e-6 * (n + 1) / (3 * n + 1))


def test_geometry_and_entrances():
    g = mbnav.make_geometry("ACA")
    assert g.d_main == pytest.approx(2e-3)
    ys = [p[1] for p in mbnav.entrance_positions(g, 0.25e-3)]
    assert ys == pytest.approx([0.75e-3, 0.375e-3, 0.0, -0.375e-3, -0.75e-3])
    d, normal = g.wall_distance(5e-3, 0.5e-3, 0.0)
    assert d == pytest.approx(0.5e-3)
    assert normal[1] == pytest.approx(-1.0)


def test_robot_timescales():
    r = mbnav.Microrobot()
    assert mbnav.relaxation_time(r, 0.00345) == pytest.approx(0.020934, rel=1e-4)
    assert mbnav.settling_velocity(r, 1060.0, 0.00345) == pytest.approx(0.1635, rel=1e-4)


def test_reference_trajectory():
    out = mbnav.simulate(record_path=True)
    assert out["outcome"] == "desired"
    g1, g2, g3 = (r["mean"] for r in out["regions"])
    assert g2 > g1 and g2 > g3
    assert out["min_clearance"] > -1e-12
    t, pos, vel, grad, region, hit = out["path"][0]
    assert t == 0.0 and region == 1


def test_config_errors():
    with pytest.raises(mbnav.ConfigError):
        mbnav.simulate({"d_um": 2500})
    with pytest.raises(mbnav.ConfigError):
        mbnav.simulate({"colour": "red"})


def test_small_sweep_and_fit():
    levels = mbnav.DesignLevels()
    levels.diameters = [100e-6, 250e-6, 500e-6]
    levels.arteries = ["ACA"]
    levels.velocities = [0.45]
    levels.entrances = [3]
    levels.upstream_k = [2]
    levels.downstream_k = [1, 2]
    assert levels.size() == 6
    text = mbnav.sweep_csv(levels)
    rows = list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))
    assert len(rows) == 6
    assert all(r["outcome"] == "desired" for r in rows)
    assert mbnav.sweep_csv(levels, workers=2) == text
    fit = json.loads(mbnav.fit_results_csv(text))
    assert fit["basis"] == "inv"
    assert len(fit["diameters_um"]) == 3


def test_boxplot_and_quadratic():
    s = mbnav.boxplot_stats([1, 2, 3, 4, 100])
    assert s.median == 3 and s.outliers == [100]
    c = mbnav.fit_quadratic([0, 1, 2, 3], [2, 9, 24, 47])
    assert c == pytest.approx([2, 3, 4])


def test_table_sizes():
    assert mbnav.table2_levels().size() == 6000
    assert mbnav.table4_levels().size() == 6000


def test_oracles_pass():
    assert all(passed for _, passed, _, _ in mbnav.validate())
