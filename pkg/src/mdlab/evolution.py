"""Time stepping for the coupled system.

In Fourier variables the system reads

    d/dt psi_hat  = -i H(xi) psi_hat + i N_hat,      N = A_mu alpha^mu psi,
    d/dt A_hat    = Adot_hat,
    d/dt Adot_hat = -|xi|^2 A_hat + J_hat,           J_mu = <psi, alpha_mu psi>.

The linear flow is applied exactly: ``exp(-i h H)`` on the spinor and the
rotation ``[[cos h|xi|, sin(h|xi|)/|xi|], [-|xi| sin h|xi|, cos h|xi|]]`` on
``(A_hat, Adot_hat)``, which is ``exp(+-i h |xi|)`` on the two half waves
and the exact ``[[1, h], [0, 1]]`` drift on the zero-mode register.
"""
from __future__ import annotations

import csv
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .dirac import free_dirac_hat
from .grid import FourierGrid, fftn, ifftn
from .state import MDState, save_checkpoint, source_hat

logger = logging.getLogger(__name__)

SCHEMES = ("ifrk4", "strang2")
COUPLINGS = ("full", "off", "no-backreaction")


class SimulationError(RuntimeError):
    """Non-finite values appeared; ``snapshot`` is the last finite state."""

    def __init__(self, msg, snapshot: Optional[MDState] = None):
        super().__init__(msg)
        self.snapshot = snapshot


def default_dt(grid: FourierGrid) -> float:
    """``0.1 * 2 pi / <xi_max>`` with ``xi_max = pi n / L``."""
    return 0.1 * 2.0 * np.pi / math.sqrt(grid.mass ** 2 + grid.xi_max ** 2)


@dataclass
class IntegratorConfig:
    dt: Optional[float] = None
    scheme: str = "ifrk4"
    dealias: bool = True
    coupling: str = "full"
    horizon: Optional[float] = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"coupling must be one of {COUPLINGS}, got {self.coupling!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")

    def resolved_dt(self, grid: FourierGrid) -> float:
        dt = default_dt(grid) if self.dt is None else self.dt
        if dt > 0.5 * np.pi / grid.xi_max:
            logger.warning("dt=%.3g exceeds the accuracy threshold %.3g", dt, 0.5 * np.pi / grid.xi_max)
        return dt


# ---------------------------------------------------------------------------
# nonlinear terms


def _mask(grid, cfg):
    return grid.dealias_mask if cfg is None or cfg.dealias else None


def dirac_source_hat(psi_hat, A_hat, grid, mask=None) -> np.ndarray:
    psi = ifftn(psi_hat).reshape(4, -1)
    A = ifftn(A_hat).real.reshape(4, -1)
    out = fftn(kernels.dirac_source(np.ascontiguousarray(psi), np.ascontiguousarray(A)).reshape((4,) + grid.shape))
    return out if mask is None else np.where(mask, out, 0)


def nonlinearity_dirac(state: MDState, dealias: bool = True) -> np.ndarray:
    """Fourier coefficients of ``A_mu alpha^mu psi`` (dealiased by default)."""
    g = state.grid
    return dirac_source_hat(state.psi_hat, state.A_hat, g, g.dealias_mask if dealias else None)


def nonlinearity_wave(state: MDState) -> dict:
    """Wave forcing split into ``|D|^(-1/2) J`` on nonzero modes and the
    mean current routed to the zero-mode register."""
    g = state.grid
    J = source_hat(state.psi_hat, g)
    half = g.abs_xi_inv_sqrt * J
    return {"half": half, "zero": J[:, 0, 0, 0] / g.n ** 3, "J_hat": J}


# ---------------------------------------------------------------------------
# propagators


class _Linear:
    """Cached exact linear propagators for one step size."""

    def __init__(self, grid: FourierGrid, h: float):
        self.grid, self.h = grid, h
        w = grid.abs_xi
        self.c = np.cos(h * w)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.s = np.where(w > 0, np.sin(h * w) / np.where(w > 0, w, 1), h)
        self.ws = -w * np.sin(h * w)

    def __call__(self, u):
        psi, A, Ad = u
        return (free_dirac_hat(psi, self.grid, self.h),
                self.c * A + self.s * Ad,
                self.ws * A + self.c * Ad)


def _rhs(u, grid, cfg):
    psi, A, Ad = u
    if cfg.coupling == "off":
        z = np.zeros_like(psi)
        return z, np.zeros_like(A), np.zeros_like(Ad)
    mask = _mask(grid, cfg)
    N = 1j * dirac_source_hat(psi, A, grid, mask)
    if cfg.coupling == "no-backreaction":
        J = np.zeros_like(Ad)
    else:
        J = fftn(kernels.current(np.ascontiguousarray(ifftn(psi).reshape(4, -1))).reshape(Ad.shape))
        if mask is not None:
            J = np.where(mask, J, 0)
    return N, np.zeros_like(A), J


def _axpy(a, x, y):
    return tuple(xi + a * yi for xi, yi in zip(x, y))


_PROP_CACHE: dict = {}


def _propagator(grid, h):
    key = (grid, float(h))
    p = _PROP_CACHE.get(key)
    if p is None:
        if len(_PROP_CACHE) > 8:
            _PROP_CACHE.clear()
        p = _PROP_CACHE[key] = _Linear(grid, h)
    return p


def _ifrk4(u, h, grid, cfg):
    E2 = _propagator(grid, h / 2)
    E1 = _propagator(grid, h)
    k1 = _rhs(u, grid, cfg)
    Eu = E2(u)
    k2 = _rhs(E2(_axpy(h / 2, u, k1)), grid, cfg)
    k3 = _rhs(_axpy(h / 2, Eu, k2), grid, cfg)
    k4 = _rhs(_axpy(h, E1(u), E2(k3)), grid, cfg)
    mid = E2(tuple(a + b for a, b in zip(k2, k3)))
    out = E1(_axpy(h / 6, u, k1))
    out = _axpy(h / 3, out, mid)
    return _axpy(h / 6, out, k4)


def _nonlinear_flow(u, h, grid, cfg):
    """Exact pointwise ``psi -> exp(i h A_mu alpha^mu) psi`` at frozen ``A``,
    wrapped in two half kicks ``Adot += h/2 J``."""
    psi, A, Ad = u
    if cfg.coupling == "off":
        return u
    mask = _mask(grid, cfg)

    def kick(psi_hat, Ad):
        if cfg.coupling == "no-backreaction":
            return Ad
        J = fftn(kernels.current(np.ascontiguousarray(ifftn(psi_hat).reshape(4, -1))).reshape(Ad.shape))
        if mask is not None:
            J = np.where(mask, J, 0)
        return Ad + 0.5 * h * J

    Ad = kick(psi, Ad)
    p = ifftn(psi)
    a = ifftn(A).real
    amag = np.sqrt(a[1] ** 2 + a[2] ** 2 + a[3] ** 2)
    c = np.cos(h * amag)
    with np.errstate(divide="ignore", invalid="ignore"):
        sinc = np.where(amag > 0, np.sin(h * amag) / np.where(amag > 0, amag, 1), h)
    rot = kernels.dirac_source(np.ascontiguousarray(p.reshape(4, -1)),
                               np.ascontiguousarray(np.concatenate([np.zeros((1,) + a.shape[1:]), a[1:]]).reshape(4, -1)))
    rot = rot.reshape(p.shape)
    p = np.exp(1j * h * a[0]) * (c * p + 1j * sinc * rot)
    psi = fftn(p)
    if mask is not None:
        psi = np.where(mask, psi, 0)
    Ad = kick(psi, Ad)
    return psi, A, Ad


def _strang2(u, h, grid, cfg):
    E2 = _propagator(grid, h / 2)
    return E2(_nonlinear_flow(E2(u), h, grid, cfg))


def step(state: MDState, cfg: IntegratorConfig, dt: Optional[float] = None) -> MDState:
    """Advance one step; ``dt`` overrides ``cfg`` (negative values step back)."""
    g = state.grid
    h = cfg.resolved_dt(g) if dt is None else dt
    u = (state.psi_hat, state.A_hat, state.Adot_hat)
    if cfg.scheme == "ifrk4":
        psi, A, Ad = _ifrk4(u, h, g, cfg)
    else:
        psi, A, Ad = _strang2(u, h, g, cfg)
    for arr in (psi, A, Ad):
        if not np.all(np.isfinite(arr)):
            raise SimulationError(f"non-finite values at t={state.t + h:.6g}", snapshot=state)
    flags = dict(state.flags)
    t = state.t + h
    if cfg.horizon is not None and t > cfg.horizon + 1e-12:
        flags["past_horizon"] = True
    return MDState(t, g, psi, A, Ad, flags)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class RunReport:
    rows: list = field(default_factory=list)
    state: Optional[MDState] = None
    steps: int = 0
    wall_time: float = 0.0
    flags: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([r[name] for r in self.rows if name in r])


Observer = Callable[[MDState, int], Optional[dict]]

# leading comment line of every CSV the package writes
SCHEMA_VERSION = "1"


def _write_csv(path, rows):
    if not path or not rows:
        return
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)


def run(state0: MDState, cfg: IntegratorConfig, T: float, observers: Sequence[Observer] = (),
        stride: int = 10, csv_path: Optional[str] = None, step_hooks: Sequence[Callable] = (),
        checkpoint_every: int = 0, checkpoint_dir: Optional[str] = None,
        checkpoint_extra: Optional[Callable[[], dict]] = None) -> RunReport:
    """Step from ``state0.t`` to ``T``.

    ``observers`` return dicts of named diagnostics and run every ``stride``
    steps and at the end.  ``step_hooks(prev, new)`` run after every step.
    Steps are uniform except a shortened last step landing on ``T``.
    """
    g = state0.grid
    dt = cfg.resolved_dt(g)
    t0 = state0.t
    n_full = int(math.floor((T - t0) / dt + 1e-9))
    rem = (T - t0) - n_full * dt
    n_steps = n_full + (1 if rem > 1e-9 * dt else 0)
    report = RunReport()
    start = time.perf_counter()

    def observe(st, i):
        row = {"t": st.t, "step": i}
        for obs in observers:
            d = obs(st, i)
            if d:
                row.update(d)
        report.rows.append(row)

    st = state0
    done = 0
    try:
        observe(st, 0)
        for i in range(1, n_steps + 1):
            h = dt if i <= n_full else rem
            new = step(st, cfg, h)
            new.t = t0 + dt * i if i <= n_full else T
            for hook in step_hooks:
                hook(st, new)
            st = new
            done = i
            if i % stride == 0 or i == n_steps:
                observe(st, i)
            if checkpoint_every and checkpoint_dir and i % checkpoint_every == 0:
                os.makedirs(checkpoint_dir, exist_ok=True)
                extra = checkpoint_extra() if checkpoint_extra else None
                save_checkpoint(os.path.join(checkpoint_dir, f"ckpt_{i:06d}.npz"), st, extra)
    finally:
        report.state = st
        report.steps = done
        report.wall_time = time.perf_counter() - start
        report.flags = dict(st.flags)
        _write_csv(csv_path, report.rows)
    return report
