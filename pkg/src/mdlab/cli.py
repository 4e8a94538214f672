"""Command line entry point: ``mdlab <mode> --config <path> [--strict] [--resume <ckpt>]``.

Every mode writes ``manifest.json`` (config echo, versions, timing) plus
mode-specific CSV/JSON reports into the configured output directory.
``MDLAB_THREADS`` sets the FFT thread count.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import platform
import sys
import time

import numpy as np
import scipy

from . import __version__, kernels
from .config import ConfigError, RunConfig, load_config, parse_config
from .dirac import identity_suite
from .evolution import SCHEMA_VERSION, IntegratorConfig, SimulationError, run
from .grid import FOURIER, Field, FourierGrid
from .resonance import full_scan, phase_approximation_scan
from .scattering import (PhaseAccumulator, PhaseCorrectionTable, SnapshotRecorder, drift_report,
                         new_phase_table, norm_D)
from .state import (DataRecipe, charge, constraint_residuals, load_checkpoint, lorenz_residual,
                    make_initial_data, save_checkpoint)
from .vector_fields import check_commutators, interior_state_width, smooth_test_spinor

logger = logging.getLogger("mdlab")

MODES = ("simulate", "resonance-scan", "scattering-diagnose", "identity-check")
ALGEBRA_THRESHOLD = 1e-12
PHASE_CONSTANT_MAX = 1.1
CHARGE_DRIFT_MAX = 1e-6
LORENZ_MAX = 1e-5


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    return o


def write_json(path, payload) -> None:
    body = {"schema_version": SCHEMA_VERSION}
    body.update(_jsonable(payload))
    with open(path, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)


def write_csv(path, rows, columns=None) -> None:
    columns = columns or list(dict.fromkeys(k for r in rows for k in r))
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        w.writerows(rows)


def versions() -> dict:
    return {"mdlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version(), "kernel_backend": kernels.BACKEND}


# ---------------------------------------------------------------------------
# modes


def _diagnostics(q0):
    def obs(st, i):
        q = charge(st)
        c1, c2 = constraint_residuals(st)
        return {"charge": q, "charge_drift": abs(q - q0) / q0 if q0 > 0 else 0.0,
                "lorenz_residual": lorenz_residual(st), "constraint_1": c1, "constraint_2": c2}
    return obs


def _start_state(cfg: RunConfig, resume):
    if resume:
        state, extra = load_checkpoint(resume)
        if state.grid != cfg.grid:
            raise ConfigError(f"checkpoint grid {state.grid.descriptor()} differs from config")
        q0 = float(extra["charge0"]) if "charge0" in extra else charge(state)
        return state, extra, q0
    state = make_initial_data(cfg.grid, cfg.recipe)
    return state, {}, charge(state)


def mode_simulate(cfg: RunConfig, out: str, resume=None) -> dict:
    state, _, q0 = _start_state(cfg, resume)
    r = cfg["run"]
    ckdir = os.path.join(out, "checkpoints")
    rep = run(state, cfg.integrator, r["T"], observers=[_diagnostics(q0)], stride=r["stride"],
              csv_path=os.path.join(out, "diagnostics.csv"), checkpoint_every=r["checkpoint_every"],
              checkpoint_dir=ckdir, checkpoint_extra=lambda: {"charge0": q0})
    os.makedirs(ckdir, exist_ok=True)
    save_checkpoint(os.path.join(ckdir, "final.npz"), rep.state, {"charge0": q0})
    drift = float(rep.column("charge_drift").max())
    lor = float(rep.column("lorenz_residual").max())
    summary = {"t_final": rep.state.t, "steps": rep.steps, "dt": cfg.integrator.resolved_dt(cfg.grid),
               "max_charge_drift": drift, "max_lorenz_residual": lor, "flags": rep.flags,
               "checks": {"charge_drift": drift <= CHARGE_DRIFT_MAX, "lorenz_residual": lor <= LORENZ_MAX}}
    write_json(os.path.join(out, "summary.json"), summary)
    return summary


def mode_resonance(cfg: RunConfig, out: str, resume=None) -> dict:
    scan = full_scan(cfg.sample_spec)
    r = cfg["resonance"]
    phase = phase_approximation_scan(r["phase_samples"], seed=cfg["run"]["seed"], mass=cfg["grid"]["mass"])
    write_csv(os.path.join(out, "bounds.csv"), scan["bounds"])
    checks = {"bounds_positive": all(b["min_ratio"] > 0 for b in scan["bounds"]),
              "classification": all(c["consistent"] for c in scan["classification"]),
              "phase_approximation": phase["max_constant"] <= PHASE_CONSTANT_MAX}
    summary = {"bounds": scan["bounds"], "classification": scan["classification"],
               "phase_approximation": phase, "checks": checks}
    write_json(os.path.join(out, "resonance.json"), summary)
    return {"checks": checks, "min_ratio": min(b["min_ratio"] for b in scan["bounds"]),
            "phase_constant": phase["max_constant"]}


def mode_scattering(cfg: RunConfig, out: str, resume=None) -> dict:
    s = cfg["scattering"]
    times = list(s["times"])
    T = times[-1]
    if T > cfg.horizon and not cfg["run"]["allow_past_horizon"]:
        raise ConfigError(f"scattering.times: last time {T:g} exceeds the horizon {cfg.horizon:.4g}; "
                          "set run.allow_past_horizon = true to override", key="scattering.times")
    state, extra, q0 = _start_state(cfg, resume)
    if resume and "pc_flat" in extra:
        table = PhaseCorrectionTable.from_arrays(state.grid, extra)
    else:
        table = new_phase_table(cfg.grid, s["xi_max"], cfg.constants)
    acc = PhaseAccumulator(table)
    acc.start(state)
    rec = SnapshotRecorder([t for t in times if t >= state.t - 1e-9], table)
    rec.start(state)
    r = cfg["run"]
    rep = run(state, cfg.integrator, T, observers=[_diagnostics(q0)], stride=r["stride"],
              csv_path=os.path.join(out, "diagnostics.csv"), step_hooks=[acc, rec],
              checkpoint_every=r["checkpoint_every"], checkpoint_dir=os.path.join(out, "checkpoints"),
              checkpoint_extra=lambda: dict(table.to_arrays(), charge0=q0))
    snaps = rec.snapshots
    drifts, rows = [], []
    keys = sorted(snaps)
    for i, t1 in enumerate(keys):
        for t2 in keys[i + 1:]:
            d = drift_report(snaps, t1, t2, cfg.modes)
            drifts.append(d)
            rows.append({"t1": d["t1"], "t2": d["t2"], "uncorrected": d["uncorrected"],
                         "corrected": d["corrected"], "ratio": d["ratio"],
                         "max_mode_ratio": d["max_mode_ratio"], "maxwell_total": d["maxwell_total"]})
    norms = []
    for t in keys:
        sn = snaps[t]
        for th in (1, -1):
            norms.append({"t": sn.t, "theta": th, "norm_D": norm_D(Field(sn.phi[th], sn.grid, FOURIER)).value})
    if rows:
        write_csv(os.path.join(out, "drift.csv"), rows)
    summary = {"snapshot_times": [snaps[t].t for t in keys], "drift": drifts, "profile_norms": norms,
               "constants": cfg.constants.as_dict(), "flags": rep.flags, "steps": rep.steps}
    write_json(os.path.join(out, "scattering.json"), summary)
    return {"pairs": rows, "flags": rep.flags}


def mode_identity(cfg: RunConfig, out: str, resume=None) -> dict:
    seed = cfg["run"]["seed"]
    idc = cfg["identity"]
    rows = []
    for name, val in identity_suite(seed=seed, mass=cfg["grid"]["mass"]).items():
        rows.append({"family": "algebra", "name": name, "residual": val, "threshold": ALGEBRA_THRESHOLD,
                     "passed": val <= ALGEBRA_THRESHOLD})
    g = FourierGrid(cfg["grid"]["n"], idc["L"], cfg["grid"]["mass"])
    recipe = DataRecipe(amplitude=idc["amplitude"], width=interior_state_width(g), seed=seed)
    state = make_initial_data(g, recipe)
    if idc["t"] > 0:
        state = run(state, IntegratorConfig(), idc["t"]).state
    rep = check_commutators(smooth_test_spinor(g, seed), state)
    for name, val in rep.residuals.items():
        thr = rep.thresholds[name.split("[")[0]]
        rows.append({"family": name.split("[")[0], "name": name, "residual": val, "threshold": thr,
                     "passed": val <= thr})
    write_csv(os.path.join(out, "identity.csv"), rows,
              ["family", "name", "residual", "threshold", "passed"])
    checks = {"all_below_thresholds": all(r["passed"] for r in rows)}
    summary = {"grid": g.descriptor(), "state_time": state.t, "rows": rows,
               "boundary_fraction": rep.boundary_fraction, "checks": checks}
    write_json(os.path.join(out, "identity.json"), summary)
    return {"checks": checks, "worst": rep.worst()}


RUNNERS = {"simulate": mode_simulate, "resonance-scan": mode_resonance,
           "scattering-diagnose": mode_scattering, "identity-check": mode_identity}


def run_mode(cfg: RunConfig, mode: str, strict: bool = False, resume=None, output_dir=None) -> int:
    """Run ``mode``; returns the process exit status."""
    if mode not in RUNNERS:
        raise ValueError(f"mode must be one of {MODES}")
    out = output_dir or cfg["run"]["output_dir"]
    os.makedirs(out, exist_ok=True)
    start = time.perf_counter()
    status, error, result = 0, None, {}
    try:
        result = RUNNERS[mode](cfg, out, resume)
    except SimulationError as e:
        status, error = 3, str(e)
        if e.snapshot is not None:
            save_checkpoint(os.path.join(out, "last_finite.npz"), e.snapshot)
    checks = result.get("checks", {})
    failed = [k for k, v in checks.items() if not v]
    if strict and failed and status == 0:
        status = 1
    manifest = {"mode": mode, "config": cfg.as_dict(), "config_source": cfg.source, "versions": versions(),
                "wall_time_s": time.perf_counter() - start, "resume": resume, "strict": strict,
                "exit_status": status, "failed_checks": failed, "error": error,
                "outputs": sorted(os.listdir(out))}
    write_json(os.path.join(out, "manifest.json"), manifest)
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdlab", description="Massive Maxwell-Dirac simulator and diagnostics")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", help="config file (omit for all defaults)")
    p.add_argument("--strict", action="store_true", help="nonzero exit if any invariant check fails")
    p.add_argument("--resume", metavar="CKPT", help="continue from a checkpoint file")
    p.add_argument("--output-dir", help="override run.output_dir")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else parse_config("", None)
        status = run_mode(cfg, args.mode, args.strict, args.resume, args.output_dir)
    except ConfigError as e:
        print(f"mdlab: config error: {e}", file=sys.stderr)
        return 2
    print(f"mdlab {args.mode}: exit {status}")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
