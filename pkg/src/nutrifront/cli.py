"""
Command-line entry point.

    nutrifront <subcommand> [--config FILE] [--key value ...]

The config file is INI-style (``[section]`` headers, ``key = value``
lines).  Keys are unique across sections, and any key can be overridden on
the command line as ``--key value`` (dashes and underscores are
interchangeable).  Results go to a fresh directory below ``$NUTRIFRONT_OUT``
(default ``./nutrifront_runs``) together with ``manifest.json``.

Exit status: 0 success, 1 numerical failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as nio
from .core import (DomainError, InitialData, ModelParams, NoRootError,
                   validate_initial_data)
from .estimates import all_estimates, summary_text
from .limits import SweepScenario, epsilon_sweep
from .ode import DegenerateDatum, IntegratorFailure, integrate_point, limit_jump_time, limit_profile
from .pde import (DivergenceError, SchemeConfig, SolutionRecord, StiffnessFailure,
                  invariant_drift, simulate)
from .scenarios import PRESETS, grid_for, load_initial_data, make_preset
from .waves import (WaveSetup, WindowError, empirical_front_speed, minimal_speed,
                    solve_profile_bvp)

ENV_OUT = "NUTRIFRONT_OUT"

# section -> key -> (default, type, help)
SCHEMA: dict[str, dict[str, tuple]] = {
    "model": {
        "eps": (0.1, float, "diffusion/scaling parameter"),
        "mu": (1.0, float, "nutrient threshold"),
    },
    "grid": {
        "x_min": (-10.0, float, "left end of the domain"),
        "x_max": (10.0, float, "right end of the domain"),
        "per_eps": (4.0, float, "grid nodes per unit eps (dx = eps/per_eps)"),
        "n_cells": (0, int, "explicit node count; 0 derives it from per_eps"),
    },
    "data": {
        "preset": ("step", str, f"initial-data preset ({', '.join(PRESETS)})"),
        "v_left": (0.5, float, "nutrient level left of x = 0"),
        "v_right": (2.0, float, "nutrient level right of x = 0"),
        "slope": (1.0, float, "phi0 = -slope |x|"),
        "width": (0.5, float, "transition width of the smooth preset"),
        "v0_csv": ("", str, "two-column CSV (x, v0); overrides the preset"),
        "u0_csv": ("", str, "two-column CSV (x, u0); used with v0_csv"),
    },
    "scheme": {
        "t_end": (3.0, float, "final time"),
        "n_snapshots": (60, int, "number of snapshot intervals"),
        "dt_initial": (0.01, float, "largest time step"),
        "cfl_safety": (0.5, float, "step-size safety factor"),
        "variable_set": ("hopf_cole", str, "hopf_cole or direct"),
        "bc_phi": ("linear_extrapolation", str, "neumann or linear_extrapolation"),
        "snapshot_every": (10, int, "write every k-th snapshot as CSV"),
    },
    "ode": {
        "ode_t_end": (3.0, float, "final time of the pointwise runs"),
        "ode_points": ("0.5,1,2", str, "comma-separated x positions"),
        "rel_tol": (1e-8, float, "integrator tolerance"),
    },
    "analysis": {
        "R": (5.0, float, "half-width of the analysis window"),
        "theta": (0.25, float, "Sobolev exponent"),
        "t_probe": (1.3, float, "time of the Lp comparison"),
        "eps_list": ("0.1,0.05,0.025", str, "comma-separated eps values of the sweep"),
        "workers": (1, int, "parallel sweep rows (1 = sequential)"),
        "record": ("", str, "saved record (.npz) for the estimates subcommand"),
    },
    "wave": {
        "v_plus": (2.0, float, "nutrient level ahead of the front"),
        "v_minus": (0.5, float, "nutrient level behind the front in the simulation"),
        "sigma": (0.0, float, "BVP speed; 0 selects the minimal speed"),
        "sigma_scan": ("2,2.5,3,4", str, "speeds for the BVP scan"),
        "wave_eps": (0.05, float, "eps of the wave BVP and simulation"),
        "wave_half_width": (20.0, float, "simulation domain is [-w, w]"),
        "wave_t_end": (8.0, float, "simulation end time"),
        "wave_t_start": (2.0, float, "start of the speed-fit window"),
    },
    "figure1": {
        "fig_eps": (0.05, float, "eps of the figure run"),
        "fig_half_width": (20.0, float, "domain is [-w, w]"),
        "fig_times": ("2,4,6,8", str, "snapshot times"),
    },
}

KEYS = {k: (sec, *entry) for sec, entries in SCHEMA.items() for k, entry in entries.items()}

SECTIONS = {
    "validate": ("model", "grid", "data"),
    "ode": ("model", "grid", "data", "ode"),
    "pde": ("model", "grid", "data", "scheme"),
    "estimates": ("model", "grid", "data", "analysis"),
    "sweep": ("model", "grid", "data", "scheme", "analysis"),
    "wave": ("model", "wave"),
    "figure1": ("model", "data", "figure1"),
}

HELP = {
    "validate": "check the initial-data assumptions and write a report",
    "ode": "pointwise (x-frozen) runs and the limit profile",
    "pde": "full reaction-diffusion run",
    "estimates": "evaluate the a-priori bounds on a saved record",
    "sweep": "eps sweep and convergence table",
    "wave": "travelling-wave BVP, speed scan and measured front speed",
    "figure1": "u spike and v front snapshots of a step datum",
}

NUMERICAL_ERRORS = (IntegratorFailure, StiffnessFailure, DivergenceError, NoRootError,
                    DomainError, DegenerateDatum, WindowError, FloatingPointError,
                    OverflowError, np.linalg.LinAlgError)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(s) for s in str(text).split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nutrifront", description=__doc__.split("\n\n")[1],
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", required=True)
    for name, sections in SECTIONS.items():
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        p.add_argument("--config", default=None, help="INI config file (default: none)")
        for sec in sections:
            grp = p.add_argument_group(f"[{sec}]")
            for key, (default, typ, text) in SCHEMA[sec].items():
                flags = {f"--{key}", f"--{key.replace('_', '-')}"}
                grp.add_argument(*sorted(flags), dest=key, type=typ, default=None,
                                 metavar=typ.__name__.upper(),
                                 help=f"{text} (default: {default!r})")
        if name == "sweep":
            p.add_argument("--parallel", action="store_true",
                           help="run sweep rows concurrently (default: off)")
    return parser


def resolve_config(subcommand: str, config_path: str | None, overrides: dict) -> dict:
    """Defaults < config file < command-line overrides, restricted to the
    sections the subcommand uses."""
    cfg = {k: entry[0] for sec in SECTIONS[subcommand] for k, entry in SCHEMA[sec].items()}
    if config_path:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        if not cp.read(config_path):
            raise UsageError(f"cannot read config file {config_path}")
        for sec in cp.sections():
            for key, raw in cp.items(sec):
                if key not in KEYS:
                    raise UsageError(f"unknown config key {key!r} in [{sec}]")
                if KEYS[key][0] != sec:
                    raise UsageError(f"key {key!r} belongs in [{KEYS[key][0]}], not [{sec}]")
                if key in cfg:
                    try:
                        cfg[key] = KEYS[key][2](raw)
                    except ValueError as exc:
                        raise UsageError(f"bad value for {key}: {raw!r}") from exc
    for key, val in overrides.items():
        if val is not None and key in cfg:
            cfg[key] = val
    return cfg


def config_hash(subcommand: str, cfg: dict) -> str:
    blob = json.dumps({"subcommand": subcommand, "config": cfg}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# shared builders
# ---------------------------------------------------------------------------

def _params(cfg: dict, eps: float | None = None, t_end: float | None = None) -> ModelParams:
    eps = cfg["eps"] if eps is None else eps
    n = cfg.get("n_cells", 0) or grid_for(eps, cfg["x_min"], cfg["x_max"], cfg["per_eps"])
    return ModelParams(eps=eps, mu=cfg["mu"], x_min=cfg["x_min"], x_max=cfg["x_max"],
                       n_cells=n, t_end=cfg.get("t_end", 1.0) if t_end is None else t_end)


def _preset_args(cfg: dict) -> dict:
    name = cfg["preset"]
    if name == "step":
        return {"v_left": cfg["v_left"], "v_right": cfg["v_right"], "slope": cfg["slope"]}
    if name == "smooth":
        return {"v_left": cfg["v_left"], "v_right": cfg["v_right"], "slope": cfg["slope"],
                "width": cfg["width"]}
    if name == "wave":
        return {"v_plus": cfg["v_right"], "slope": cfg["slope"]}
    if name == "constant":
        return {"v0": cfg["v_right"]}
    raise UsageError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def _initial_data(cfg: dict, params: ModelParams) -> InitialData:
    if cfg.get("v0_csv"):
        return load_initial_data(params, cfg["v0_csv"], cfg.get("u0_csv") or None,
                                 slope=cfg["slope"])
    return make_preset(cfg["preset"], params, **_preset_args(cfg))


def _scheme(cfg: dict, t_end: float | None = None) -> SchemeConfig:
    t_end = cfg["t_end"] if t_end is None else t_end
    return SchemeConfig.uniform_snapshots(t_end, cfg["n_snapshots"],
                                          dt_initial=cfg["dt_initial"],
                                          cfl_safety=cfg["cfl_safety"],
                                          variable_set=cfg["variable_set"],
                                          bc_phi=cfg["bc_phi"])


class RunDir:
    """Output directory that tracks every file it hands out."""

    def __init__(self, root: Path, subcommand: str, digest: str):
        stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S")
        base = root / f"{subcommand}-{stamp}-{digest[:8]}"
        path, k = base, 1
        while path.exists():
            path = Path(f"{base}-{k}")
            k += 1
        path.mkdir(parents=True)
        self.path = path
        self.files: list[str] = []

    def file(self, name: str) -> Path:
        self.files.append(name)
        return self.path / name


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(cfg, out: RunDir, head: dict) -> None:
    params = _params(cfg)
    report = validate_initial_data(_initial_data(cfg, params), params)
    rows = [(e.name, e.value, "" if e.threshold is None else e.threshold, e.passed, e.note)
            for e in report.entries]
    nio.write_csv(out.file("validation.csv"), ("name", "value", "threshold", "pass", "note"),
                  rows, {**head, "all_passed": report.all_passed})


def cmd_ode(cfg, out: RunDir, head: dict) -> None:
    params = _params(cfg, t_end=cfg["ode_t_end"])
    init = _initial_data(cfg, params)
    prof = limit_profile(init)
    nio.write_limit_profile(out.file("limit_profile.csv"), prof, head)
    x = init.grid.nodes
    summary = []
    for xp in _floats(cfg["ode_points"]):
        i = int(np.argmin(np.abs(x - xp)))
        phi0, v0 = float(init.phi0.values[i]), float(init.v0.values[i])
        traj = integrate_point(params, None, v0, cfg["ode_t_end"], cfg["rel_tol"], phi0=phi0)
        nio.write_trajectory(out.file(f"trajectory_x{x[i]:+.6g}.csv"), traj, head)
        tau = limit_jump_time(min(phi0, 0.0), v0, cfg["mu"]) if v0 != cfg["mu"] else math.nan
        summary.append((x[i], phi0, v0, tau, traj.crossing_time(), traj.accumulated_mass(),
                        traj.max_relative_drift()))
    nio.write_csv(out.file("ode_summary.csv"),
                  ("x", "phi0", "v0", "tau_limit", "crossing_time", "accumulated_mass",
                   "max_relative_drift"), summary, head)


def cmd_pde(cfg, out: RunDir, head: dict) -> None:
    params = _params(cfg)
    init = _initial_data(cfg, params)
    rec = simulate(params, init, _scheme(cfg))
    rec.save(out.file("record.npz"))
    nio.write_step_log(out.file("step_log.csv"), rec, head)
    drift = invariant_drift(rec, init)
    nio.write_csv(out.file("invariant_drift.csv"), ("t", "drift"), zip(rec.times, drift), head)
    every = max(1, cfg["snapshot_every"])
    ks = sorted(set(range(0, rec.times.size, every)) | {rec.times.size - 1})
    for k in ks:
        nio.write_snapshot(out.file(f"snapshot_{k:04d}.csv"), rec, k, head)


def cmd_estimates(cfg, out: RunDir, head: dict) -> None:
    if not cfg["record"]:
        raise UsageError("estimates needs --record PATH (a record.npz from the pde subcommand)")
    rec = SolutionRecord.load(cfg["record"])
    params = ModelParams(eps=rec.eps, mu=rec.mu, x_min=float(rec.x[0]), x_max=float(rec.x[-1]),
                         n_cells=rec.x.size, t_end=float(rec.times[-1]))
    init = _initial_data(cfg, params)
    reports = all_estimates(rec, init, R=cfg["R"])
    nio.write_estimates(out.file("estimates.csv"), reports, head)
    out.file("estimates.txt").write_text(summary_text(reports) + "\n")


def cmd_sweep(cfg, out: RunDir, head: dict, parallel: bool = False) -> None:
    scen = SweepScenario(name=cfg["preset"], preset=cfg["preset"],
                         preset_args=tuple(sorted(_preset_args(cfg).items())),
                         mu=cfg["mu"], x_min=cfg["x_min"], x_max=cfg["x_max"],
                         t_end=cfg["t_end"], per_eps=cfg["per_eps"],
                         n_snapshots=cfg["n_snapshots"], cfl_safety=cfg["cfl_safety"],
                         dt_initial=cfg["dt_initial"], R=cfg["R"], theta=cfg["theta"],
                         t_probe=cfg["t_probe"])
    workers = cfg["workers"] if parallel else 1
    table = epsilon_sweep(scen, _floats(cfg["eps_list"]), workers=workers)
    text = "".join(f"# {k}={v}\n" for k, v in head.items()) + table.to_csv()
    out.file("convergence.csv").write_text(text)


def cmd_wave(cfg, out: RunDir, head: dict) -> None:
    mu, eps = cfg["mu"], cfg["wave_eps"]
    sigma_star = minimal_speed(math.log(cfg["v_plus"]), mu)
    sigma = cfg["sigma"] or sigma_star
    prof = solve_profile_bvp(WaveSetup.from_v_plus(cfg["v_plus"], mu, eps, sigma=sigma))
    nio.write_wave_profile(out.file("wave_profile.csv"), prof, head)
    scan = []
    for s in _floats(cfg["sigma_scan"]):
        p = solve_profile_bvp(WaveSetup.from_v_plus(cfg["v_plus"], mu, eps, sigma=s))
        scan.append((s, p.residual_norm, p.monotone))
    nio.write_speed_scan(out.file("speed_scan.csv"), scan, head)

    hw = cfg["wave_half_width"]
    params = ModelParams(eps=eps, mu=mu, x_min=-hw, x_max=hw,
                         n_cells=grid_for(eps, -hw, hw), t_end=cfg["wave_t_end"])
    init = make_preset("step", params, v_left=cfg["v_minus"], v_right=cfg["v_plus"])
    rec = simulate(params, init, SchemeConfig.uniform_snapshots(cfg["wave_t_end"], 80))
    fit = empirical_front_speed(rec, mu, (cfg["wave_t_start"], cfg["wave_t_end"]))
    nio.write_csv(out.file("speed.csv"),
                  ("sigma_star", "empirical_speed", "relative_error", "fit_residual",
                   "bvp_residual", "bvp_decay_rate"),
                  [(sigma_star, fit.speed, abs(fit.speed - sigma_star) / sigma_star,
                    fit.residual, prof.residual_norm, prof.tail_decay_rate())], head)
    nio.write_csv(out.file("front_positions.csv"), ("t", "X"), zip(fit.times, fit.positions), head)


def cmd_figure1(cfg, out: RunDir, head: dict) -> None:
    eps, hw = cfg["fig_eps"], cfg["fig_half_width"]
    times = _floats(cfg["fig_times"])
    params = ModelParams(eps=eps, mu=cfg["mu"], x_min=-hw, x_max=hw,
                         n_cells=grid_for(eps, -hw, hw), t_end=max(times))
    init = make_preset(cfg["preset"], params, **_preset_args(cfg))
    rec = simulate(params, init, SchemeConfig(snapshot_times=tuple([0.0] + times)))
    cols = ["x"] + [f"t={t:g}" for t in times]
    for name, arr in (("u", rec.u), ("v", rec.v)):
        nio.write_csv(out.file(f"figure1_{name}.csv"), cols,
                      zip(rec.x, *(arr[k] for k in range(1, len(times) + 1))), head)


COMMANDS = {"validate": cmd_validate, "ode": cmd_ode, "pde": cmd_pde,
            "estimates": cmd_estimates, "sweep": cmd_sweep, "wave": cmd_wave,
            "figure1": cmd_figure1}


def run(subcommand: str, config_path: str | None = None, overrides: dict | None = None,
        out_root: str | os.PathLike | None = None, parallel: bool = False) -> tuple[int, Path | None]:
    """Run one subcommand; returns (exit status, output directory)."""
    if subcommand not in COMMANDS:
        print(f"nutrifront: unknown subcommand {subcommand!r}", file=sys.stderr)
        return 2, None
    try:
        cfg = resolve_config(subcommand, config_path, overrides or {})
        digest = config_hash(subcommand, cfg)
    except UsageError as exc:
        print(f"nutrifront: {exc}", file=sys.stderr)
        return 2, None
    root = Path(out_root or os.environ.get(ENV_OUT) or "nutrifront_runs")
    out = RunDir(root, subcommand, digest)
    head = {"subcommand": subcommand, "config_sha256": digest}
    status, message = 0, "ok"
    try:
        if subcommand == "sweep":
            cmd_sweep(cfg, out, head, parallel)
        else:
            COMMANDS[subcommand](cfg, out, head)
    except UsageError as exc:
        status, message = 2, str(exc)
    except NUMERICAL_ERRORS as exc:
        status = 1
        message = f"numerical failure in {type(exc).__module__} ({type(exc).__name__}): {exc}"
    except ValueError as exc:
        status, message = 2, f"invalid configuration: {exc}"
    if status:
        print(f"nutrifront: {message}", file=sys.stderr)

    inputs = {}
    for key in ("v0_csv", "u0_csv", "record"):
        if cfg.get(key):
            p = Path(cfg[key])
            inputs[key] = {"path": str(p), "sha256": _sha256(p) if p.exists() else None}
    if config_path:
        inputs["config"] = {"path": str(config_path), "sha256": _sha256(Path(config_path))}
    files = [{"name": f, "sha256": _sha256(out.path / f)} for f in out.files
             if (out.path / f).exists()]
    manifest = {"subcommand": subcommand, "status": status, "message": message,
                "created": _dt.datetime.now().isoformat(timespec="seconds"),
                "config_sha256": digest, "config": cfg, "inputs": inputs, "files": files,
                "version": __version__}
    (out.path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(out.path)
    return status, out.path


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on usage errors
    ns = vars(args)
    sub = ns.pop("subcommand")
    config_path = ns.pop("config")
    parallel = ns.pop("parallel", False)
    status, _ = run(sub, config_path, ns, parallel=parallel)
    return status


if __name__ == "__main__":
    sys.exit(main())
