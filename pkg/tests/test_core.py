import math

import numpy as np
import pytest

from nutrifront.core import (DomainError, Field, Grid1D, InitialData, ModelParams, NoRootError,
                             branch_arrays, branch_roots, branch_roots_bisect, d1, d2,
                             phi_potential, phi_potential_closed, q_of_v, qtilde_min,
                             qtilde_of_w, qtilde_prime, validate_initial_data)
from nutrifront.scenarios import constant_data, step_data

# Frozen from a 40-digit mpmath root solve (independent of the package).
W_MINUS_E1 = -1.4937535303760876
V_MINUS_Q2 = 0.40637573995995991
LN_2_OVER_V_MINUS = 1.5936242600400401


def test_q_of_v_values():
    assert q_of_v(1.0, 1.0) == 1.0
    assert q_of_v(2.0, 1.0) == pytest.approx(1.306853, abs=1e-6)
    assert q_of_v(2.0, 1.0) == pytest.approx(qtilde_of_w(math.log(2.0), 1.0), rel=1e-15)


def test_q_of_v_minimum_at_mu():
    mu = 1.7
    qmin = mu - mu * math.log(mu)
    assert q_of_v(mu, mu) == pytest.approx(qmin, rel=1e-15)
    v = np.linspace(0.05, 10, 2001)
    assert np.all(q_of_v(v, mu) >= qmin - 1e-15)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_q_of_v_rejects_nonpositive(bad):
    with pytest.raises(DomainError):
        q_of_v(bad, 1.0)


def test_qtilde_values():
    assert qtilde_of_w(0.0, 1.0) == 1.0
    assert qtilde_of_w(1.0, 1.0) == pytest.approx(1.718282, abs=1e-6)
    mu = 3.0
    assert qtilde_of_w(math.log(mu), mu) == pytest.approx(qtilde_min(mu), rel=1e-15)
    with pytest.raises(OverflowError):
        qtilde_of_w(1000.0, 1.0)


def test_qtilde_prime_values():
    assert qtilde_prime(math.log(2.5), 2.5) == pytest.approx(0.0, abs=1e-15)
    assert qtilde_prime(math.log(2.0), 1.0) == pytest.approx(1.0, rel=1e-15)
    assert qtilde_prime(1.0, 1.0) == pytest.approx(math.e - 1, rel=1e-15)


def test_branch_roots_degenerate():
    br = branch_roots(1.0, 1.0)
    assert br.w_minus == pytest.approx(0.0, abs=1e-7)
    assert br.w_plus == pytest.approx(0.0, abs=1e-7)


def test_branch_roots_e_minus_one():
    br = branch_roots(math.e - 1, 1.0)
    assert br.w_minus == pytest.approx(W_MINUS_E1, abs=1e-13)
    assert br.w_plus == pytest.approx(1.0, abs=1e-13)
    ob = branch_roots_bisect(math.e - 1, 1.0)
    assert abs(ob.w_minus - br.w_minus) < 1e-12


def test_branch_roots_two_minus_ln2():
    br = branch_roots(2 - math.log(2), 1.0)
    assert br.v_minus == pytest.approx(V_MINUS_Q2, rel=1e-12)
    assert br.w_plus == pytest.approx(math.log(2), abs=1e-13)


def test_branch_roots_below_minimum():
    with pytest.raises(NoRootError):
        branch_roots(0.5, 1.0)


def test_branch_arrays_match_scalar():
    w0 = np.array([-0.7, 0.0, 0.4, 1.2])
    lo, hi = branch_arrays(w0, 1.0)
    for a, b, w in zip(lo, hi, w0):
        br = branch_roots(qtilde_of_w(w, 1.0), 1.0)
        assert a == pytest.approx(br.w_minus, abs=1e-12)
        assert b == pytest.approx(br.w_plus, abs=1e-12)


def _midpoint_oracle(w, w0, mu, n=10**6):
    lm = math.log(mu)
    a, b = sorted((lm, w))
    s = a + (np.arange(n) + 0.5) * (b - a) / n
    val = np.sum(np.abs(qtilde_of_w(w0, mu) - qtilde_of_w(s, mu))) * (b - a) / n
    return val if w >= lm else -val


def test_phi_potential_zero_at_ln_mu():
    assert phi_potential(math.log(2.0), 0.3, 2.0) == 0.0


def test_phi_potential_against_midpoint_rule():
    assert phi_potential(1.0, 1.0, 1.0) == pytest.approx(_midpoint_oracle(1.0, 1.0, 1.0), abs=1e-8)
    # crosses the upper branch root, so the kink matters
    assert phi_potential(1.5, 0.5, 1.0) == pytest.approx(_midpoint_oracle(1.5, 0.5, 1.0), abs=1e-8)
    assert phi_potential(-2.0, 0.5, 1.0) == pytest.approx(_midpoint_oracle(-2.0, 0.5, 1.0), abs=1e-8)


def test_phi_potential_closed_matches_quadrature():
    ws = np.linspace(-3, 2, 23)
    closed = phi_potential_closed(ws, 0.6, 1.3)
    quad = [phi_potential(w, 0.6, 1.3) for w in ws]
    np.testing.assert_allclose(closed, quad, atol=1e-9)


def test_phi_potential_monotone():
    ws = np.linspace(-4, 3, 200)
    vals = phi_potential_closed(ws, 0.8, 1.0)
    assert np.all(np.diff(vals) >= -1e-12)


def test_finite_differences_exact_on_quadratics():
    g = Grid1D.uniform(0.0, 1.0, 11)
    f = 3 * g.nodes**2 - g.nodes
    np.testing.assert_allclose(d1(f, g.dx), 6 * g.nodes - 1, atol=1e-12)
    np.testing.assert_allclose(d2(f, g.dx), 6.0, atol=1e-9)


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(eps=0.0)
    with pytest.raises(ValueError):
        ModelParams(eps=0.1, x_min=1.0, x_max=0.0)
    p = ModelParams(eps=0.1, n_cells=11, x_min=0, x_max=1)
    assert p.grid.dx == pytest.approx(0.1)


def test_field_rejects_nonfinite():
    g = Grid1D.uniform(0, 1, 3)
    with pytest.raises(ValueError):
        Field(g, np.array([0.0, np.nan, 1.0]))


def test_initial_data_from_u_roundtrip():
    p = ModelParams(eps=0.2, n_cells=5, x_min=0, x_max=1)
    g = p.grid
    u0 = Field(g, np.full(5, 0.3))
    init = InitialData.from_u(u0, Field(g, np.full(5, 2.0)), 0.2, 1.0)
    np.testing.assert_allclose(init.u0.values, 0.3, rtol=1e-14)
    assert init.branch0[0].w_plus == pytest.approx(math.log(2.0), abs=1e-13)


def test_validate_step_datum():
    p = ModelParams(eps=0.1, x_min=-5, x_max=5, n_cells=401)
    rep = validate_initial_data(step_data(p), p)
    assert rep.all_passed
    assert rep["v_m"].value == 0.5
    assert rep["v_M"].value == 2.0


def test_validate_no_sign_change():
    p = ModelParams(eps=0.1, x_min=-5, x_max=5, n_cells=101)
    rep = validate_initial_data(constant_data(p, u0=1.0, v0=2.0), p)
    assert not rep["sign_change"].passed
    assert not rep.all_passed


def test_validate_unit_mass():
    # u0 = exp(-|x|/eps)/(2 eps) has unit mass.
    eps = 0.1
    p = ModelParams(eps=eps, x_min=-5, x_max=5, n_cells=4001)
    x = p.grid.nodes
    phi0 = -np.abs(x) - eps * math.log(2 * eps)
    init = InitialData(eps, 1.0, Field(p.grid, phi0), Field(p.grid, np.where(x > 0, 2.0, 0.5)))
    rep = validate_initial_data(init, p, thresholds={"mass_u0": 1.01})
    assert rep["mass_u0"].value == pytest.approx(1.0, abs=1e-3)
    assert rep["mass_u0"].passed
