"""
Algebraic backbone of the cell/nutrient model.

Potentials, branch inversion, the compactness functional and the grid/field
containers shared by every other module.

- q_of_v / qtilde_of_w / qtilde_prime : the nutrient potential and its log form.
- branch_roots                        : the two roots of Q~(w) = q around ln(mu).
- phi_potential                       : Phi(x, w), by adaptive quadrature.
- phi_potential_closed                : same quantity, vectorised closed form.
- validate_initial_data               : numeric report on the initial-data assumptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate


class DomainError(ValueError):
    """Argument outside the domain of a potential."""


class NoRootError(ValueError):
    """Level below the minimum of Q~: no branch roots exist."""


# Degenerate-level tolerance for the double root at ln(mu).
DEGENERATE_TOL = 1e-13
ROOT_RTOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    eps: float
    mu: float = 1.0
    x_min: float = -10.0
    x_max: float = 10.0
    n_cells: int = 801
    t_end: float = 1.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be smaller than x_max")
        if self.n_cells < 3:
            raise ValueError("n_cells must be at least 3")

    @property
    def grid(self) -> "Grid1D":
        return Grid1D.uniform(self.x_min, self.x_max, self.n_cells)


@dataclass(frozen=True)
class Grid1D:
    nodes: np.ndarray
    dx: float

    @classmethod
    def uniform(cls, x_min: float, x_max: float, n: int) -> "Grid1D":
        nodes = np.linspace(x_min, x_max, n)
        nodes.setflags(write=False)
        return cls(nodes=nodes, dx=(x_max - x_min) / (n - 1))

    @property
    def size(self) -> int:
        return self.nodes.size

    def __eq__(self, other):
        if not isinstance(other, Grid1D):
            return NotImplemented
        return self.dx == other.dx and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash((self.nodes.size, float(self.nodes[0]), self.dx))


@dataclass(frozen=True, eq=False)
class Field:
    """Scalar function sampled on the nodes of a grid."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.nodes.shape:
            raise ValueError(
                f"field has {vals.size} values for {self.grid.size} nodes"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes


@dataclass(frozen=True)
class BranchPair:
    w_minus: float
    w_plus: float
    q_level: float

    @property
    def v_minus(self) -> float:
        return math.exp(self.w_minus)

    @property
    def v_plus(self) -> float:
        return math.exp(self.w_plus)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

def q_of_v(v, mu):
    """Q(v) = v - mu ln v, defined for v > 0."""
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr <= 0):
        raise DomainError("Q(v) requires v > 0")
    out = v_arr - mu * np.log(v_arr)
    return float(out) if out.ndim == 0 else out


def qtilde_of_w(w, mu):
    """Q~(w) = exp(w) - mu w, i.e. Q evaluated at v = exp(w)."""
    w_arr = np.asarray(w, dtype=float)
    with np.errstate(over="raise"):
        try:
            out = np.exp(w_arr) - mu * w_arr
        except FloatingPointError as exc:
            raise OverflowError("exp(w) overflows in Q~(w)") from exc
    return float(out) if out.ndim == 0 else out


def qtilde_prime(w, mu):
    w_arr = np.asarray(w, dtype=float)
    out = np.exp(w_arr) - mu
    return float(out) if out.ndim == 0 else out


def qtilde_min(mu: float) -> float:
    """Global minimum of Q~, attained at w = ln(mu)."""
    return mu - mu * math.log(mu)


# ---------------------------------------------------------------------------
# Branch inversion
# ---------------------------------------------------------------------------

def _newton_bisect(q, mu, lo, hi, increasing):
    # Q~ is strictly monotone on [lo, hi]; keep the bracket and fall back to
    # bisection whenever a Newton step leaves it.
    sign = 1.0 if increasing else -1.0
    w = 0.5 * (lo + hi)
    for _ in range(200):
        g = math.exp(w) - mu * w - q
        if g == 0.0:
            return w
        if sign * g > 0:
            hi = w
        else:
            lo = w
        d = math.exp(w) - mu
        w_new = w - g / d if d != 0.0 else 0.5 * (lo + hi)
        if not lo < w_new < hi:
            w_new = 0.5 * (lo + hi)
        # stop on the step, not the residual: Q~' is tiny near ln(mu)
        if abs(w_new - w) <= 2 * np.finfo(float).eps * max(1.0, abs(w)) or \
                hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(w)):
            return w_new
        w = w_new
    return w


def branch_roots(q_level: float, mu: float) -> BranchPair:
    """Roots w- <= ln(mu) <= w+ of Q~(w) = q_level.

    Bracketed Newton with bisection fallback on each monotone side of Q~.
    """
    if not mu > 0:
        raise DomainError("mu must be positive")
    lm = math.log(mu)
    qmin = qtilde_min(mu)
    excess = q_level - qmin
    if excess < -DEGENERATE_TOL * max(1.0, abs(qmin)):
        raise NoRootError(f"level {q_level!r} is below min Q~ = {qmin!r}")
    if excess <= DEGENERATE_TOL:
        return BranchPair(lm, lm, q_level)

    lo = lm - 60.0 / mu
    while qtilde_of_w(lo, mu) < q_level:
        lo = lm - 2.0 * (lm - lo)
    hi = lm + 60.0
    while hi - lm > 1.0 and qtilde_of_w(lm + 0.5 * (hi - lm), mu) > q_level:
        hi = lm + 0.5 * (hi - lm)
    w_minus = _newton_bisect(q_level, mu, lo, lm, increasing=False)
    w_plus = _newton_bisect(q_level, mu, lm, hi, increasing=True)
    return BranchPair(w_minus, w_plus, q_level)


def branch_roots_bisect(q_level: float, mu: float, tol: float = 1e-15) -> BranchPair:
    """Plain bisection, kept as an independent check on branch_roots."""
    lm = math.log(mu)
    if q_level <= qtilde_min(mu):
        return BranchPair(lm, lm, q_level)

    def bisect(lo, hi, increasing):
        for _ in range(400):
            mid = 0.5 * (lo + hi)
            g = qtilde_of_w(mid, mu) - q_level
            if (g > 0) == increasing:
                hi = mid
            else:
                lo = mid
            if hi - lo <= tol * max(1.0, abs(mid)):
                break
        return 0.5 * (lo + hi)

    lo = lm - 60.0 / mu
    while qtilde_of_w(lo, mu) < q_level:
        lo -= 60.0 / mu
    hi = lm + 1.0
    while qtilde_of_w(hi, mu) < q_level:
        hi += 1.0
    return BranchPair(bisect(lo, lm, False), bisect(lm, hi, True), q_level)


def branch_arrays(w0, mu):
    """Vectorised branch pair for every node of a w0 array."""
    w0 = np.asarray(w0, dtype=float)
    lower = np.empty_like(w0)
    upper = np.empty_like(w0)
    for i, wi in enumerate(w0.flat):
        b = branch_roots(qtilde_of_w(wi, mu), mu)
        lower.flat[i] = b.w_minus
        upper.flat[i] = b.w_plus
    return lower, upper


# ---------------------------------------------------------------------------
# Compactness functional
# ---------------------------------------------------------------------------

def phi_potential(w: float, w0_node: float, mu: float) -> float:
    """Phi(x, w) = int_{ln mu}^{w} |Q~(w0(x)) - Q~(s)| ds by adaptive quadrature."""
    lm = math.log(mu)
    if w == lm:
        return 0.0
    q0 = qtilde_of_w(w0_node, mu)
    br = branch_roots(q0, mu)
    a, b = sorted((lm, w))
    kinks = [r for r in (br.w_minus, br.w_plus) if a < r < b]
    val, _ = integrate.quad(
        lambda s: abs(q0 - (math.exp(s) - mu * s)),
        a, b, points=kinks or None, epsabs=1e-10, epsrel=1e-12, limit=200,
    )
    return val if w > lm else -val


def _signed_primitive(s, q0, mu):
    # Antiderivative of q0 - Q~(s).
    return q0 * s - np.exp(s) + 0.5 * mu * s * s


def phi_potential_closed(w, w0, mu):
    """Vectorised closed form of phi_potential.

    The integrand q0 - Q~(s) is non-negative between the branch roots of q0
    and non-positive outside, so the absolute value integrates piecewise.
    """
    w = np.asarray(w, dtype=float)
    w0 = np.broadcast_to(np.asarray(w0, dtype=float), w.shape)
    lm = math.log(mu)
    q0 = qtilde_of_w(w0, mu)
    lower, upper = branch_arrays(w0, mu)
    F = lambda s: _signed_primitive(s, q0, mu)  # noqa: E731

    # Upward from ln(mu): positive part up to the upper root, negative beyond.
    up_in = F(np.minimum(w, upper)) - F(lm)
    up_out = -(F(np.maximum(w, upper)) - F(upper))
    up = up_in + up_out
    # Downward: same with the lower root, integral taken with reversed sign.
    dn_in = F(lm) - F(np.maximum(w, lower))
    dn_out = -(F(lower) - F(np.minimum(w, lower)))
    dn = -(dn_in + dn_out)
    return np.where(w >= lm, up, dn)


# ---------------------------------------------------------------------------
# Finite differences on the uniform grid
# ---------------------------------------------------------------------------

def d1(values: np.ndarray, dx: float) -> np.ndarray:
    """Centered first derivative, one-sided second order at the ends."""
    return np.gradient(values, dx, edge_order=2)


def d2(values: np.ndarray, dx: float) -> np.ndarray:
    """Centered second derivative, one-sided second order at the ends."""
    f = np.asarray(values, dtype=float)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dx**2
    if f.size >= 4:
        out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / dx**2
        out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / dx**2
    else:
        out[0] = out[1]
        out[-1] = out[-2]
    return out


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InitialData:
    """Initial cell density and nutrient, with Hopf-Cole and log forms.

    ``phi0`` is the primary representation of the cell density: u0 may
    underflow for small eps while phi0 = eps ln u0 stays O(1).
    """

    eps: float
    mu: float
    phi0: Field
    v0: Field
    w0: Field = field(init=False)
    w0_minus: np.ndarray = field(init=False, repr=False)
    w0_plus: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if np.any(self.v0.values <= 0):
            raise ValueError("v0 must be strictly positive")
        if self.phi0.grid != self.v0.grid:
            raise ValueError("phi0 and v0 must live on the same grid")
        w0 = Field(self.v0.grid, np.log(self.v0.values))
        object.__setattr__(self, "w0", w0)
        lo, hi = branch_arrays(w0.values, self.mu)
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "w0_minus", lo)
        object.__setattr__(self, "w0_plus", hi)

    @classmethod
    def from_u(cls, u0: Field, v0: Field, eps: float, mu: float) -> "InitialData":
        if np.any(u0.values <= 0):
            raise ValueError("u0 must be strictly positive")
        return cls(eps, mu, Field(u0.grid, eps * np.log(u0.values)), v0)

    @property
    def grid(self) -> Grid1D:
        return self.v0.grid

    @property
    def u0(self) -> Field:
        return Field(self.grid, np.exp(self.phi0.values / self.eps))

    @property
    def branch0(self) -> list[BranchPair]:
        q = qtilde_of_w(self.w0.values, self.mu)
        return [BranchPair(a, b, qi) for a, b, qi in zip(self.w0_minus, self.w0_plus, q)]


@dataclass
class ValidationEntry:
    name: str
    value: float
    threshold: float | None
    passed: bool
    note: str = ""


@dataclass
class ValidationReport:
    entries: list[ValidationEntry]

    def __getitem__(self, name: str) -> ValidationEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def names(self) -> list[str]:
        return [e.name for e in self.entries]


DEFAULT_THRESHOLDS = {
    "sup_eps_u0": 10.0,
    "mass_u0": 10.0,
    "eps_d2_phi0": 1e3,
    "lip_phi0": 10.0,
    "phi0_linear_lower": 10.0,
    "eps_d2_lnv0": 1e3,
    "lnv0_c1": 1e3,
    "eps_d2_gap_plus_u0": 1e3,
}


def validate_initial_data(init: InitialData, params: ModelParams,
                          thresholds: dict | None = None) -> ValidationReport:
    """Evaluate each initial-data assumption on the grid.

    Failures are recorded in the report, never raised.  Thresholds play the
    role of the unspecified constants C; defaults are generous and meant to
    be overridden.
    """
    th = dict(DEFAULT_THRESHOLDS)
    if thresholds:
        th.update(thresholds)
    eps, mu = params.eps, params.mu
    g = init.grid
    x, dx = g.nodes, g.dx
    v0 = init.v0.values
    w0 = init.w0.values
    phi0 = init.phi0.values
    u0 = np.exp(phi0 / eps)
    entries: list[ValidationEntry] = []

    def bound(name, value, note=""):
        entries.append(ValidationEntry(name, float(value), th[name], bool(value <= th[name]), note))

    v_m, v_M = float(v0.min()), float(v0.max())
    entries.append(ValidationEntry("v_m", v_m, None, v_m > 0))
    entries.append(ValidationEntry("v_M", v_M, None, np.isfinite(v_M)))
    entries.append(ValidationEntry(
        "sign_change", v_M - v_m, None, v_m < mu < v_M, "v_m < mu < v_M"))
    q0 = q_of_v(v0, mu)
    Q_M = float(np.max(q0 + eps * u0))
    Q_m = float(np.min(q0))
    entries.append(ValidationEntry("Q_M", Q_M, None, np.isfinite(Q_M)))
    entries.append(ValidationEntry(
        "Q_m_margin", Q_m - q_of_v(mu, mu), 0.0, Q_m > q_of_v(mu, mu), "min Q(v0) - Q(mu) > 0"))

    bound("sup_eps_u0", np.max(eps * u0))
    mass = np.trapezoid(u0, x)
    bound("mass_u0", mass, "int u0 dx")
    entries.append(ValidationEntry("rho0", float(mass), None, True, "recorded only"))
    bound("eps_d2_phi0", np.max(eps * d2(phi0, dx)))
    bound("lip_phi0", np.max(np.abs(d1(phi0, dx))))
    bound("phi0_linear_lower", np.max(-phi0 / (1.0 + np.abs(x))),
          "smallest C with phi0 >= -C(1+|x|)")
    bound("eps_d2_lnv0", np.max(eps * np.abs(d2(w0, dx))))
    bound("lnv0_c1", np.max(np.abs(d1(w0, dx)) + np.abs(w0)))
    bound("eps_d2_gap_plus_u0",
          np.max(eps * d2(w0 - init.w0_minus, dx) + u0))
    entries.append(ValidationEntry("min_w0", float(w0.min()), None, True,
                                   "reported, positivity not asserted"))
    return ValidationReport(entries)
