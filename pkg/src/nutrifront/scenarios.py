"""Named initial-data presets and CSV loading."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .core import Field, Grid1D, InitialData, ModelParams, branch_roots, q_of_v

PRESETS = ("step", "smooth", "wave", "constant")


def step_data(params: ModelParams, v_left: float = 0.5, v_right: float = 2.0,
              slope: float = 1.0) -> InitialData:
    """v0 = v_left for x <= 0, v_right for x > 0; u0 = exp(-slope |x| / eps)."""
    g = params.grid
    x = g.nodes
    v0 = np.where(x > 0, v_right, v_left)
    return InitialData(params.eps, params.mu, Field(g, -slope * np.abs(x)), Field(g, v0))


def smooth_data(params: ModelParams, v_left: float = 0.5, v_right: float = 2.0,
                width: float = 0.5, slope: float = 1.0) -> InitialData:
    g = params.grid
    x = g.nodes
    v0 = v_left + 0.5 * (v_right - v_left) * (1.0 + np.tanh(x / width))
    return InitialData(params.eps, params.mu, Field(g, -slope * np.abs(x)), Field(g, v0))


def wave_data(params: ModelParams, v_plus: float = 2.0, slope: float = 1.0) -> InitialData:
    """Far fields of a travelling wave: lower root of Q(v_plus) behind, v_plus ahead."""
    v_minus = branch_roots(q_of_v(v_plus, params.mu), params.mu).v_minus
    return step_data(params, v_left=v_minus, v_right=v_plus, slope=slope)


def constant_data(params: ModelParams, u0: float = 1.0, v0: float = 2.0) -> InitialData:
    g = params.grid
    n = g.size
    return InitialData(params.eps, params.mu,
                       Field(g, np.full(n, params.eps * math.log(u0))),
                       Field(g, np.full(n, v0)))


def make_preset(name: str, params: ModelParams, **kw) -> InitialData:
    builders = {"step": step_data, "smooth": smooth_data, "wave": wave_data,
                "constant": constant_data}
    if name not in builders:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return builders[name](params, **kw)


def read_two_column_csv(path) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError:
                continue  # header line
    return np.array(xs), np.array(ys)


def load_initial_data(params: ModelParams, v0_csv, u0_csv=None, preset_u: str | None = None,
                      slope: float = 1.0) -> InitialData:
    """Nutrient from a two-column CSV (x, v0); cells from CSV (x, u0) or the
    ``exp(-slope |x| / eps)`` preset.  Data are interpolated onto the params grid."""
    g = params.grid
    x, v = read_two_column_csv(Path(v0_csv))
    v0 = np.interp(g.nodes, x, v)
    if u0_csv is not None:
        xu, u = read_two_column_csv(Path(u0_csv))
        if np.any(u <= 0):
            raise ValueError("u0 must be strictly positive")
        phi0 = params.eps * np.interp(g.nodes, xu, np.log(u))
    else:
        phi0 = -slope * np.abs(g.nodes)
    return InitialData(params.eps, params.mu, Field(g, phi0), Field(g, v0))


def grid_for(eps: float, x_min: float, x_max: float, per_eps: float = 4.0) -> int:
    """Node count giving dx = eps / per_eps (default dx = eps/4)."""
    return int(math.ceil((x_max - x_min) * per_eps / eps)) + 1


__all__ = ["step_data", "smooth_data", "wave_data", "constant_data", "make_preset",
           "load_initial_data", "grid_for", "Grid1D", "PRESETS"]
