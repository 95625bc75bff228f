import math

import numpy as np
import pytest

from nutrifront import io as nio
from nutrifront.core import ModelParams, q_of_v
from nutrifront.estimates import all_estimates
from nutrifront.ode import integrate_point, limit_profile
from nutrifront.pde import SchemeConfig, simulate
from nutrifront.scenarios import (PRESETS, grid_for, load_initial_data, make_preset,
                                  read_two_column_csv)
from nutrifront.waves import WaveSetup, solve_profile_bvp


@pytest.fixture
def params():
    return ModelParams(eps=0.1, x_min=-2, x_max=2, n_cells=41, t_end=0.2)


@pytest.mark.parametrize("name", PRESETS)
def test_presets_build(name, params):
    init = make_preset(name, params)
    assert init.v0.values.shape == (41,)


def test_wave_preset_far_fields(params):
    init = make_preset("wave", params)
    v = init.v0.values
    assert q_of_v(v[0], 1.0) == pytest.approx(q_of_v(v[-1], 1.0), rel=1e-12)


def test_unknown_preset(params):
    with pytest.raises(ValueError):
        make_preset("gauss", params)


def test_grid_for():
    assert grid_for(0.1, -10, 10) == 801
    assert grid_for(0.05, -20, 20, per_eps=4) == 3201


def test_csv_loading(tmp_path, params):
    vpath = tmp_path / "v0.csv"
    vpath.write_text("# nutrient\nx,v0\n-2,0.5\n0,0.5\n0.0001,2\n2,2\n")
    upath = tmp_path / "u0.csv"
    upath.write_text("x,u0\n-2,1\n2,1\n")
    x, v = read_two_column_csv(vpath)
    assert x.tolist() == [-2, 0, 0.0001, 2]
    init = load_initial_data(params, vpath, upath)
    np.testing.assert_allclose(init.phi0.values, 0.0, atol=1e-15)
    assert init.v0.values[-1] == 2.0
    bad = tmp_path / "bad.csv"
    bad.write_text("x,u0\n-2,0\n2,1\n")
    with pytest.raises(ValueError):
        load_initial_data(params, vpath, bad)


def test_csv_roundtrip_exact(tmp_path):
    vals = [math.pi, 1 / 3, 1e-300, -2.5e17]
    path = nio.write_csv(tmp_path / "a.csv", ("a",), [(v,) for v in vals], {"k": "v"})
    header, cols = nio.read_csv(path)
    assert header == {"k": "v"}
    assert cols["a"].tolist() == vals


def test_writers(tmp_path, params):
    init = make_preset("step", params)
    rec = simulate(params, init, SchemeConfig(snapshot_times=(0.1, 0.2)))
    traj = integrate_point(params, 1.0, 2.0, rel_tol=1e-8)
    prof = solve_profile_bvp(WaveSetup.from_v_plus(2.0, 1.0, 0.1))
    nio.write_trajectory(tmp_path / "t.csv", traj)
    nio.write_limit_profile(tmp_path / "l.csv", limit_profile(init))
    nio.write_snapshot(tmp_path / "s.csv", rec, 1)
    nio.write_step_log(tmp_path / "g.csv", rec)
    nio.write_estimates(tmp_path / "e.csv", all_estimates(rec, init))
    nio.write_wave_profile(tmp_path / "w.csv", prof)
    nio.write_speed_scan(tmp_path / "p.csv", [(2.0, 1e-13, True)])
    heads = {name: (tmp_path / name).read_text().splitlines() for name in
             ("t.csv", "l.csv", "s.csv", "g.csv", "e.csv", "w.csv", "p.csv")}
    first_data = {k: next(l for l in v if not l.startswith("#")) for k, v in heads.items()}
    assert first_data == {
        "t.csv": "t,u,v,phi,invariant_drift",
        "l.csv": "x,tau,v_lower,v_upper,weight",
        "s.csv": "x,u,v,w,phi",
        "g.csv": "t,dt,min_v,max_u,drift",
        "e.csv": "estimate_name,eps,value,fitted_constant,pass",
        "w.csv": "y,w,v,residual",
        "p.csv": "sigma,residual_norm,monotone_flag",
    }
    _, snap = nio.read_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(snap["v"], rec.v[1])
    _, wave = nio.read_csv(tmp_path / "w.csv")
    assert np.max(np.abs(wave["residual"])) <= 1e-9
