"""
Diffusion-free dynamics, one spatial node at a time.

The pointwise system is integrated in Hopf-Cole variables (phi = eps ln u,
w = ln v) with an adaptive implicit midpoint rule.  Every accepted step is
projected back onto the level set of the first integral

    eps u + Q(v) = K,

so conservation holds to round-off while u may be far below the smallest
representable double (u0 = exp(-|x|/eps) with eps = 1e-3).  The scalar
reduction v' = -v (K - Q(v)) / eps is kept as ``method="reduced"`` for
cross-validation when eps*u0 is resolvable against K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (Field, InitialData, ModelParams, branch_roots, q_of_v,
                   qtilde_of_w)


class IntegratorFailure(RuntimeError):
    pass


class DegenerateDatum(ValueError):
    pass


# Largest phi/eps fed to exp(); beyond this u is not physical anyway.
_EXP_CAP = 700.0


@dataclass(frozen=True)
class PointTrajectory:
    times: np.ndarray
    u_values: np.ndarray
    v_values: np.ndarray
    phi_values: np.ndarray
    k_constant: float
    eps: float
    mu: float

    @property
    def w_values(self) -> np.ndarray:
        return np.log(self.v_values)

    @property
    def invariant_drift(self) -> np.ndarray:
        return np.abs(self.eps * self.u_values + q_of_v(self.v_values, self.mu) - self.k_constant)

    def max_relative_drift(self) -> float:
        return float(self.invariant_drift.max() / (1.0 + abs(self.k_constant)))

    def crossing_time(self, level: float | None = None) -> float:
        """First time v falls to ``level`` (default mu), linearly interpolated."""
        level = self.mu if level is None else level
        return first_crossing(self.times, self.v_values, level)

    def accumulated_mass(self) -> float:
        """Trapezoid of u over the adaptive time mesh."""
        return float(np.trapezoid(self.u_values, self.times))


def first_crossing(times, values, level) -> float:
    below = np.nonzero(values <= level)[0]
    if below.size == 0:
        return math.inf
    j = below[0]
    if j == 0:
        return float(times[0])
    v0, v1 = values[j - 1], values[j]
    t0, t1 = times[j - 1], times[j]
    if v0 == v1:
        return float(t1)
    return float(t0 + (v0 - level) * (t1 - t0) / (v0 - v1))


def _midpoint_step(y, h, eps, mu, newton_tol=1e-14):
    # Newton on y1 - y - h f((y + y1)/2) = 0 for f = (e^w - mu, -e^{phi/eps}),
    # with the 2x2 Jacobian solved in closed form.
    p0, w0 = y
    p1 = p0 + h * (math.exp(min(w0, _EXP_CAP)) - mu)
    w1 = w0 - h * math.exp(min(p0 / eps, _EXP_CAP))
    for _ in range(50):
        pm, wm = 0.5 * (p0 + p1), 0.5 * (w0 + w1)
        ev = math.exp(min(wm, _EXP_CAP))
        u = math.exp(min(pm / eps, _EXP_CAP))
        r1 = p1 - p0 - h * (ev - mu)
        r2 = w1 - w0 + h * u
        # J = [[1, -h ev/2], [h u/(2 eps), 1]]
        a12 = -0.5 * h * ev
        a21 = 0.5 * h * u / eps
        det = 1.0 - a12 * a21
        dp = (r1 - a12 * r2) / det
        dw = (r2 - a21 * r1) / det
        p1 -= dp
        w1 -= dw
        if not (math.isfinite(p1) and math.isfinite(w1)):
            return None
        if abs(dp) <= newton_tol * (1 + abs(p1)) and abs(dw) <= newton_tol * (1 + abs(w1)):
            return np.array([p1, w1])
    return None


def _project(y, K, eps, mu):
    # Orthogonal projection onto {eps exp(phi/eps) + Q~(w) = K}.
    phi, w = y
    for _ in range(8):
        u = math.exp(min(phi / eps, _EXP_CAP))
        G = eps * u + math.exp(w) - mu * w - K
        gp, gw = u, math.exp(w) - mu
        n2 = gp * gp + gw * gw
        if n2 == 0.0 or abs(G) <= 1e-16 * (1.0 + abs(K)):
            break
        phi -= G * gp / n2
        w -= G * gw / n2
    return np.array([phi, w])


def integrate_point(params: ModelParams, u0: float | None, v0: float,
                    t_end: float | None = None, rel_tol: float = 1e-8,
                    phi0: float | None = None, method: str = "hopf_cole",
                    h_max: float | None = None) -> PointTrajectory:
    """Integrate u' = u (v - mu)/eps, v' = -u v at a single node.

    Give the cell density either as ``u0`` or, when it underflows, as
    ``phi0 = eps ln u0``.
    """
    eps, mu = params.eps, params.mu
    t_end = params.t_end if t_end is None else t_end
    if not 0 < rel_tol <= 1e-4:
        raise ValueError("rel_tol must lie in (0, 1e-4]")
    if v0 <= 0:
        raise ValueError("v0 must be positive")
    if phi0 is None:
        if u0 is None or u0 <= 0:
            raise ValueError("u0 must be positive")
        phi0 = eps * math.log(u0)
    u_init = math.exp(min(phi0 / eps, _EXP_CAP))
    K = eps * u_init + q_of_v(v0, mu)
    if method == "reduced":
        return _integrate_reduced(eps, mu, u_init, v0, K, t_end, rel_tol)
    if method != "hopf_cole":
        raise ValueError(f"unknown method {method!r}")

    h_max = t_end / 20.0 if h_max is None else h_max
    y = np.array([phi0, math.log(v0)])
    t = 0.0
    h = min(eps / 10.0, h_max)
    ts, ys = [0.0], [y.copy()]
    while t < t_end:
        # While u carries mass, phi may move by at most 5% of eps per step so
        # that trapezoid sums of u on this mesh stay accurate.
        rate = max(abs(math.exp(y[1]) - mu), 1e-300)
        phi_sig = eps * math.log(rel_tol / t_end)
        phi_hi = max(y[0], y[0] + h * (math.exp(y[1]) - mu))
        if phi_hi > phi_sig:
            h = min(h, max(0.05 * eps, phi_sig - y[0]) / rate)
        h = min(h, t_end - t)
        full = _midpoint_step(y, h, eps, mu)
        half = _midpoint_step(y, 0.5 * h, eps, mu)
        two = _midpoint_step(half, 0.5 * h, eps, mu) if half is not None else None
        if full is None or two is None:
            h *= 0.25
            if h < 1e-14:
                raise IntegratorFailure(f"step size underflow at t={t:.6g}")
            continue
        err_vec = np.abs(two - full) / 3.0
        # phi error is measured relative to eps since u = exp(phi/eps).
        err = max(err_vec[0] / eps, err_vec[1]) / rel_tol
        if err <= 1.0:
            t += h
            y = _project(two + (two - full) / 3.0, K, eps, mu)
            ts.append(t)
            ys.append(y.copy())
        fac = 2.0 if err == 0 else min(2.0, max(0.2, 0.9 * err ** (-1.0 / 3.0)))
        h = min(h * fac, h_max)
        if h < 1e-14:
            raise IntegratorFailure(f"step size underflow at t={t:.6g}")
    ys = np.array(ys)
    phi = ys[:, 0]
    v = np.exp(ys[:, 1])
    u = np.exp(np.minimum(phi / eps, _EXP_CAP))
    return PointTrajectory(np.array(ts), u, v, phi, K, eps, mu)


def _integrate_reduced(eps, mu, u_init, v0, K, t_end, rel_tol):
    # Scalar route: v' = -v (K - Q(v))/eps, u reconstructed from K.
    def f(v):
        return -v * (K - (v - mu * math.log(v))) / eps

    def fp(v):
        return -(K - (v - mu * math.log(v))) / eps + v * (1 - mu / v) / eps

    def step(v, h):
        v1 = v + h * f(v)
        if v1 <= 0:
            v1 = 0.5 * v
        for _ in range(50):
            vm = 0.5 * (v + v1)
            r = v1 - v - h * f(vm)
            d = r / (1 - 0.5 * h * fp(vm))
            v1 -= d
            if v1 <= 0:
                return None
            if abs(d) <= 1e-15 * v1:
                return v1
        return None

    t, v, h = 0.0, v0, eps / 10.0
    h_max = t_end / 20.0
    ts, vs = [0.0], [v0]
    while t < t_end:
        h = min(h, t_end - t)
        full = step(v, h)
        half = step(v, 0.5 * h)
        two = step(half, 0.5 * h) if half is not None else None
        if full is None or two is None:
            h *= 0.25
            if h < 1e-14:
                raise IntegratorFailure(f"step size underflow at t={t:.6g}")
            continue
        err = abs(two - full) / 3.0 / (rel_tol * max(1.0, abs(two)))
        if err <= 1.0:
            t += h
            v = two
            ts.append(t)
            vs.append(v)
        h = min(h * (2.0 if err == 0 else min(2.0, max(0.2, 0.9 * err ** (-1 / 3)))), h_max)
    vs = np.array(vs)
    u = (K - q_of_v(vs, mu)) / eps
    tol = 10 * rel_tol * (1 + abs(K)) / eps
    if np.any(u < -tol):
        raise IntegratorFailure("reconstructed u is negative beyond tolerance")
    u = np.maximum(u, 0.0)
    with np.errstate(divide="ignore"):
        phi = eps * np.log(u)
    return PointTrajectory(np.array(ts), u, vs, phi, K, eps, mu)


# ---------------------------------------------------------------------------
# Exact eps -> 0 limit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitProfile:
    tau: np.ndarray
    v_lower: Field
    v_upper: Field
    weight: Field

    @property
    def grid(self):
        return self.weight.grid


def limit_jump_time(phi0: float, v0_upper: float, mu: float) -> float:
    """Jump time -phi0 / (v0 - mu); +inf where the nutrient is below mu."""
    if phi0 > 0:
        raise ValueError("phi0 must be non-positive")
    if v0_upper == mu:
        raise DegenerateDatum("v0 equals mu: jump time undefined")
    if v0_upper < mu:
        return math.inf
    if phi0 == 0:
        return 0.0
    return -phi0 / (v0_upper - mu)


def limit_profile(init: InitialData, mu: float | None = None) -> LimitProfile:
    mu = init.mu if mu is None else mu
    g = init.grid
    v0 = init.v0.values
    lower = np.empty_like(v0)
    upper = np.empty_like(v0)
    tau = np.empty_like(v0)
    for i, (phi, v) in enumerate(zip(init.phi0.values, v0)):
        br = branch_roots(q_of_v(v, mu), mu)
        lower[i], upper[i] = br.v_minus, br.v_plus
        tau[i] = limit_jump_time(min(phi, 0.0), v, mu)
    weight = np.log(upper) - np.log(lower)
    return LimitProfile(tau, Field(g, lower), Field(g, upper), Field(g, weight))


def phi_limit(t: float, i: int, profile: LimitProfile, init: InitialData) -> float:
    """Piecewise-linear limit of phi at node ``i``."""
    mu = init.mu
    phi0 = init.phi0.values[i]
    v0 = init.v0.values[i]
    if v0 < mu:
        return phi0 + t * (v0 - mu)
    tau = profile.tau[i]
    vp, vm = profile.v_upper.values[i], profile.v_lower.values[i]
    if t <= tau:
        return phi0 + t * (vp - mu)
    return phi0 + tau * (vp - mu) + (t - tau) * (vm - mu)


def equilibrium_lower_root(K: float, mu: float) -> float:
    """Long-time state: lower root of Q(v) = K."""
    return branch_roots(K, mu).v_minus


__all__ = [
    "PointTrajectory", "LimitProfile", "IntegratorFailure", "DegenerateDatum",
    "integrate_point", "limit_jump_time", "limit_profile", "phi_limit",
    "first_crossing", "equilibrium_lower_root", "qtilde_of_w",
]
