"""
Travelling waves of the nutrient equation in log variables.

Profiles solve  -sigma eps w' - eps^2 w'' = Q~(w) - A  with w -> w_- < ln(mu)
behind the front and w -> w_+ > ln(mu) ahead of it.  Also: the minimal
speed, the linearised dispersion relation, the limiting Eikonal slopes and
front-speed measurement on simulated records.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import spsolve

from .core import DomainError, branch_roots, qtilde_of_w, qtilde_prime


class WindowError(ValueError):
    """A snapshot in the fitting window has no mu-crossing of v."""


def minimal_speed(w_plus: float, mu: float) -> float:
    """2 sqrt(Q~'(w_plus)) = 2 sqrt(v_plus - mu)."""
    if w_plus < math.log(mu):
        raise DomainError("w_plus must be at least ln(mu)")
    return 2.0 * math.sqrt(max(qtilde_prime(w_plus, mu), 0.0))


@dataclass(frozen=True)
class DispersionRoots:
    roots: tuple
    double_root: bool
    oscillatory: bool

    @property
    def real_roots(self) -> tuple:
        return tuple(r.real for r in self.roots)


def dispersion_roots(sigma: float, w_state: float, mu: float) -> DispersionRoots:
    """Roots of lambda^2 + sigma lambda + Q~'(w_state) = 0.

    Exponents of perturbations exp(lambda y / eps) about a far-field state.
    """
    c = qtilde_prime(w_state, mu)
    disc = sigma * sigma - 4.0 * c
    if abs(disc) <= 1e-12:
        r = -0.5 * sigma
        return DispersionRoots((complex(r), complex(r)), True, False)
    s = cmath.sqrt(disc)
    r1, r2 = (-sigma - s) / 2.0, (-sigma + s) / 2.0
    return DispersionRoots((r1, r2), False, disc < 0)


CONVENTIONS = ("comoving", "as_printed")


def eikonal_wave_phi(sigma: float, v_minus: float, v_plus: float, mu: float,
                     convention: str = "comoving") -> tuple[float, float]:
    """Slopes (p_minus, p_plus) of the limiting phi(y) = p y on each side.

    ``comoving``: phi(x - sigma t) substituted into phi_t = phi_x^2 + v - mu,
    i.e. -sigma p = p^2 + v - mu.  Gives p_minus > 0, p_plus < 0 and phi <= 0
    on both sides; at the minimal speed p_plus = -sigma/2.

    ``as_printed``: sigma p = p^2 + v - mu.  p_minus is the positive root and
    p_plus = sigma/2 at the minimal speed, so phi > 0 for y > 0 there.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    if sigma < minimal_speed(math.log(v_plus), mu) - 1e-12:
        raise ValueError("sigma below the minimal speed: no real slope ahead of the front")
    sgn = -1.0 if convention == "comoving" else 1.0
    # Roots of p^2 - sgn*sigma p + (v - mu) = 0.
    disc_p = max(sigma * sigma - 4.0 * (v_plus - mu), 0.0)
    disc_m = sigma * sigma - 4.0 * (v_minus - mu)
    # Ahead: the slower-decaying root; behind: the positive root.
    p_plus = sgn * (sigma - math.sqrt(disc_p)) / 2.0
    p_minus = (sgn * sigma + math.sqrt(disc_m)) / 2.0
    return p_minus, p_plus


@dataclass(frozen=True)
class WaveSetup:
    w_minus: float
    w_plus: float
    mu: float
    sigma: float
    eps: float
    L: float
    A: float

    def __post_init__(self):
        lm = math.log(self.mu)
        if not self.w_minus < lm < self.w_plus:
            raise ValueError("need w_minus < ln(mu) < w_plus")
        if abs(qtilde_of_w(self.w_minus, self.mu) - qtilde_of_w(self.w_plus, self.mu)) > 1e-12 * max(1.0, abs(self.A)):
            raise ValueError("far-field states must share the same Q~ level")

    @classmethod
    def from_v_plus(cls, v_plus: float, mu: float, eps: float, sigma: float | None = None,
                    L: float | None = None) -> "WaveSetup":
        w_plus = math.log(v_plus)
        br = branch_roots(qtilde_of_w(w_plus, mu), mu)
        sigma = minimal_speed(w_plus, mu) if sigma is None else sigma
        if L is None:
            L = 20.0 * eps / min_admissible_rate(sigma, br.w_minus, w_plus, mu)
        return cls(br.w_minus, w_plus, mu, sigma, eps, L, br.q_level)


def _far_field_rates(sigma, w_minus, w_plus, mu):
    behind = max(r.real for r in dispersion_roots(sigma, w_minus, mu).roots)
    ahead_roots = dispersion_roots(sigma, w_plus, mu)
    ahead = max(r.real for r in ahead_roots.roots)
    return behind, ahead


def min_admissible_rate(sigma, w_minus, w_plus, mu) -> float:
    behind, ahead = _far_field_rates(sigma, w_minus, w_plus, mu)
    return min(abs(behind), abs(ahead))


@dataclass
class WaveProfile:
    y_nodes: np.ndarray
    w_values: np.ndarray
    residual_norm: float
    pinned_at: str
    converged: bool
    monotone: bool
    iterations: int
    setup: WaveSetup
    gap: np.ndarray
    right_robin_residual: float = math.nan

    @property
    def v_values(self) -> np.ndarray:
        return np.exp(self.w_values)

    def residual_field(self) -> np.ndarray:
        """Pointwise discrete ODE residual (zero at the two closing rows)."""
        s = self.setup
        h = self.y_nodes[1] - self.y_nodes[0]
        g = self.gap
        r = np.zeros_like(g)
        r[1:-1] = (s.eps**2 * (g[2:] - 2 * g[1:-1] + g[:-2]) / h**2
                   + s.sigma * s.eps * (g[2:] - g[:-2]) / (2 * h)
                   - math.exp(s.w_plus) * np.expm1(-g[1:-1]) - s.mu * g[1:-1])
        return r

    def tail_decay_rate(self, fraction: float = 0.25, algebraic: bool | None = None) -> float:
        """Decay exponent of w_+ - w (in units of 1/eps) over the last
        ``fraction`` of [-L, L].

        At a double root the tail is (a + b y) exp(lambda y / eps), whose plain
        log-slope is biased by about eps/y.  With ``algebraic`` (default: on
        exactly when the far-field root is double) the fit is
        ln(gap) = a + lambda y / eps + k ln(y).
        """
        s = self.setup
        if algebraic is None:
            algebraic = dispersion_roots(s.sigma, s.w_plus, s.mu).double_root
        m = (self.y_nodes >= s.L * (1.0 - 2.0 * fraction)) & (self.gap > 0)
        y = self.y_nodes[m] / s.eps
        cols = [y, np.ones_like(y)] + ([np.log(y)] if algebraic else [])
        coef = np.linalg.lstsq(np.column_stack(cols), np.log(self.gap[m]), rcond=None)[0]
        return float(coef[0])


def solve_profile_bvp(setup: WaveSetup, h: float | None = None, max_iter: int = 100,
                      tol: float = 1e-9) -> WaveProfile:
    """Newton collocation with centered differences on [-L, L].

    The unknown is the gap g = w_+ - w, so the exponentially small tail ahead
    of the front keeps full relative precision.  Closing conditions: Robin
    g' = (lambda_-/eps)(g - g_-) at y = -L with the unstable exponent of the
    rear state, and the pin w(0) = ln(mu).  Ahead of the front both exponents
    decay, so no condition is imposed at y = +L; the Robin mismatch there is
    reported as ``right_robin_residual``.
    """
    s = setup
    eps, sigma, mu = s.eps, s.sigma, s.mu
    h = eps / 20.0 if h is None else h
    n = int(round(2 * s.L / h))
    if n % 2:
        n += 1
    y = np.linspace(-s.L, s.L, n + 1)
    h = y[1] - y[0]
    j0 = n // 2
    v_plus = math.exp(s.w_plus)
    g_minus = s.w_plus - s.w_minus
    lam_behind, lam_ahead = _far_field_rates(sigma, s.w_minus, s.w_plus, mu)

    w_guess = s.w_minus + (s.w_plus - s.w_minus) * 0.5 * (1.0 + np.tanh(y * sigma / (4.0 * eps)))
    g = s.w_plus - w_guess

    a = eps**2 / h**2
    b = sigma * eps / (2.0 * h)
    rows = np.arange(1, n)

    def residual(g):
        F = np.empty(n + 1)
        # eps^2 g'' + sigma eps g' - [Q~(w_+ - g) - Q~(w_+)] = 0
        react = v_plus * np.expm1(-g[1:-1]) + mu * g[1:-1]
        F[1:n] = (a * (g[2:] - 2 * g[1:-1] + g[:-2]) + b * (g[2:] - g[:-2]) - react)
        F[0] = (g[1] - g[0]) / h - (lam_behind / eps) * (0.5 * (g[0] + g[1]) - g_minus)
        F[n] = g[j0] - (s.w_plus - math.log(mu))
        return F

    def jacobian(g):
        dreact = -v_plus * np.exp(-g[1:-1]) + mu
        r = np.concatenate([rows, rows, rows, [0, 0, n]])
        c = np.concatenate([rows - 1, rows, rows + 1, [0, 1, j0]])
        vals = np.concatenate([
            np.full(n - 1, a - b), -2 * a - dreact, np.full(n - 1, a + b),
            [-1.0 / h - 0.5 * lam_behind / eps, 1.0 / h - 0.5 * lam_behind / eps, 1.0],
        ])
        return csc_matrix((vals, (r, c)), shape=(n + 1, n + 1))

    F = residual(g)
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        dg = spsolve(jacobian(g), F)
        # Damped step keeps the gap positive-ish during early iterations.
        step = 1.0
        while step > 1e-4:
            g_new = g - step * dg
            F_new = residual(g_new)
            if np.all(np.isfinite(F_new)) and np.max(np.abs(F_new)) < (1 - 1e-4 * step) * np.max(np.abs(F)) + 1e-15:
                break
            step *= 0.5
        g, F = g_new, F_new
        if np.max(np.abs(F)) <= tol * 1e-3:
            converged = True
            break
    res = float(np.max(np.abs(F)))
    converged = converged or res <= tol
    w = s.w_plus - g
    slack = 1e-9 * max(1.0, abs(s.w_plus))
    monotone = bool(np.all(np.diff(w) >= -slack))
    right_robin = float((g[-1] - g[-2]) / h - (lam_ahead / eps) * 0.5 * (g[-1] + g[-2]))
    return WaveProfile(y, w, res, f"w(0) = ln(mu) at node {j0}", converged, monotone, it,
                       setup, g, right_robin)


def front_positions(record, mu: float | None = None) -> np.ndarray:
    """Rightmost upward mu-crossing of v in every snapshot (nan if none)."""
    mu = record.mu if mu is None else mu
    x, dx = record.x, record.grid.dx
    out = np.full(record.times.size, np.nan)
    for k, v in enumerate(record.v):
        idx = np.nonzero((v[:-1] < mu) & (v[1:] >= mu))[0]
        if idx.size:
            i = idx[-1]
            out[k] = x[i] + (mu - v[i]) / (v[i + 1] - v[i]) * dx
    return out


@dataclass(frozen=True)
class SpeedFit:
    speed: float
    intercept: float
    residual: float
    times: np.ndarray
    positions: np.ndarray


def empirical_front_speed(record, mu: float | None = None, t_window=None) -> SpeedFit:
    """Least-squares slope of the front position over ``t_window``."""
    t = record.times
    lo, hi = (t[0], t[-1]) if t_window is None else t_window
    m = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    X = front_positions(record, mu)[m]
    if m.sum() < 2:
        raise WindowError("fewer than two snapshots in the window")
    if np.any(np.isnan(X)):
        raise WindowError("v has no mu-crossing in some snapshot of the window")
    coef = np.polyfit(t[m], X, 1)
    resid = float(np.max(np.abs(np.polyval(coef, t[m]) - X)))
    return SpeedFit(float(coef[0]), float(coef[1]), resid, t[m], X)
