"""CSV writers.  Every file starts with ``# key=value`` comment lines; floats
are written with 17 significant digits so that round trips are exact."""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path

import numpy as np


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def csv_text(columns, rows, header: dict | None = None) -> str:
    buf = _io.StringIO()
    for k, v in (header or {}).items():
        buf.write(f"# {k}={v}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        wr.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def write_csv(path, columns, rows, header: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(csv_text(columns, rows, header))
    return path


def read_csv(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Inverse of :func:`write_csv` for all-numeric tables."""
    header, cols, data = {}, None, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                header[k] = v
                continue
            row = next(csv.reader([line]))
            if cols is None:
                cols = row
            else:
                data.append([float(x) for x in row])
    arr = np.array(data, dtype=float).reshape(-1, len(cols))
    return header, {c: arr[:, i] for i, c in enumerate(cols)}


def write_trajectory(path, traj, header=None) -> Path:
    drift = traj.invariant_drift
    rows = zip(traj.times, traj.u_values, traj.v_values, traj.phi_values, drift)
    h = {"eps": traj.eps, "mu": traj.mu, "K": _fmt(traj.k_constant)}
    h.update(header or {})
    return write_csv(path, ("t", "u", "v", "phi", "invariant_drift"), rows, h)


def write_limit_profile(path, profile, header=None) -> Path:
    x = profile.grid.nodes
    rows = zip(x, profile.tau, profile.v_lower.values, profile.v_upper.values,
               profile.weight.values)
    return write_csv(path, ("x", "tau", "v_lower", "v_upper", "weight"), rows, header)


def write_snapshot(path, record, k: int, header=None) -> Path:
    h = {"t": _fmt(record.times[k]), "eps": record.eps, "mu": record.mu}
    h.update(header or {})
    rows = zip(record.x, record.u[k], record.v[k], record.w[k], record.phi[k])
    return write_csv(path, ("x", "u", "v", "w", "phi"), rows, h)


def write_step_log(path, record, header=None) -> Path:
    lg = record.step_log
    cols = ("t", "dt", "min_v", "max_u", "drift")
    return write_csv(path, cols, zip(*(lg[c] for c in cols)), header)


def write_estimates(path, reports, header=None) -> Path:
    rows = [(r.name, r.eps, r.value, r.fitted_constant, r.passed) for r in reports]
    return write_csv(path, ("estimate_name", "eps", "value", "fitted_constant", "pass"),
                     rows, header)


def write_wave_profile(path, profile, header=None) -> Path:
    s = profile.setup
    h = {"sigma": _fmt(s.sigma), "eps": s.eps, "mu": s.mu, "w_minus": _fmt(s.w_minus),
         "w_plus": _fmt(s.w_plus), "residual_norm": _fmt(profile.residual_norm),
         "pinned": profile.pinned_at}
    h.update(header or {})
    rows = zip(profile.y_nodes, profile.w_values, profile.v_values, profile.residual_field())
    return write_csv(path, ("y", "w", "v", "residual"), rows, h)


def write_speed_scan(path, scan, header=None) -> Path:
    """``scan``: iterable of (sigma, residual_norm, monotone_flag)."""
    return write_csv(path, ("sigma", "residual_norm", "monotone_flag"), scan, header)

