import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from nutrifront.core import (Field, Grid1D, branch_roots, branch_roots_bisect, q_of_v,
                             qtilde_min, qtilde_of_w)
from nutrifront.limits import lp_distance
from nutrifront.waves import dispersion_roots, minimal_speed

mus = st.floats(0.05, 20.0)


@given(mu=mus, gap=st.floats(1e-6, 30.0))
def test_branch_roots_bracket_ln_mu_and_solve(mu, gap):
    q = qtilde_min(mu) + gap
    br = branch_roots(q, mu)
    lm = math.log(mu)
    assert br.w_minus <= lm <= br.w_plus
    for w in (br.w_minus, br.w_plus):
        assert abs(qtilde_of_w(w, mu) - q) <= 1e-9 * max(1.0, abs(q))


@given(mu=mus, g1=st.floats(1e-4, 10.0), g2=st.floats(1e-4, 10.0))
def test_branch_roots_monotone_in_level(mu, g1, g2):
    lo, hi = sorted((g1, g2))
    a = branch_roots(qtilde_min(mu) + lo, mu)
    b = branch_roots(qtilde_min(mu) + hi, mu)
    assert b.w_minus <= a.w_minus + 1e-12
    assert b.w_plus >= a.w_plus - 1e-12


@given(v=st.floats(1e-6, 1e6), mu=mus)
def test_q_and_qtilde_agree(v, mu):
    assert math.isclose(q_of_v(v, mu), qtilde_of_w(math.log(v), mu), rel_tol=1e-12, abs_tol=1e-9)


def test_newton_matches_bisection_on_seeded_levels():
    rng = np.random.default_rng(20240501)
    mus_ = rng.uniform(0.1, 10.0, 1000)
    gaps = 10.0 ** rng.uniform(-6, 1.5, 1000)
    worst = 0.0
    for mu, gap in zip(mus_, gaps):
        q = qtilde_min(mu) + gap
        a, b = branch_roots(q, mu), branch_roots_bisect(q, mu)
        worst = max(worst, abs(a.w_minus - b.w_minus), abs(a.w_plus - b.w_plus))
    assert worst <= 1e-12


def test_near_degenerate_levels_within_conditioning():
    # roots move like sqrt(gap) here; agreement is limited by eps |q| / Q~'(w)
    rng = np.random.default_rng(7)
    for mu, gap in zip(rng.uniform(0.1, 10.0, 300), 10.0 ** rng.uniform(-12, -6, 300)):
        q = qtilde_min(mu) + gap
        a, b = branch_roots(q, mu), branch_roots_bisect(q, mu)
        bound = 64 * np.finfo(float).eps * max(1.0, abs(q)) / math.sqrt(2 * mu * gap)
        assert abs(a.w_minus - b.w_minus) <= bound
        assert abs(a.w_plus - b.w_plus) <= bound


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, 3.5]))
def test_lp_triangle_inequality(seed, p):
    rng = np.random.default_rng(seed)
    g = Grid1D.uniform(-1, 1, 51)
    a, b, c = (Field(g, rng.normal(size=51)) for _ in range(3))
    assert lp_distance(a, c, p) <= lp_distance(a, b, p) + lp_distance(b, c, p) + 1e-12


@given(sigma=st.floats(0.01, 50.0), w=st.floats(-5.0, 3.0), mu=mus)
def test_dispersion_vieta(sigma, w, mu):
    r = dispersion_roots(sigma, w, mu)
    c = math.exp(w) - mu
    s = r.roots[0] + r.roots[1]
    prod = r.roots[0] * r.roots[1]
    assert abs(s + sigma) <= 1e-12 * max(1.0, sigma)
    # the double-root flag tolerates a discriminant up to 1e-12
    assert abs(prod - c) <= 1e-12 * max(1.0, sigma * sigma, abs(c)) + (1e-12 if r.double_root else 0)


@given(w_plus=st.floats(0.0, 5.0), mu=st.floats(0.1, 5.0))
def test_minimal_speed_squared(w_plus, mu):
    w = max(w_plus, math.log(mu))
    s = minimal_speed(w, mu)
    assert math.isclose(s * s, 4 * (math.exp(w) - mu), rel_tol=1e-12, abs_tol=1e-12)
