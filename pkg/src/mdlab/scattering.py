"""Profiles, the modified-scattering phase, scattering norms and drift metrics.

The phase correction is stored as the real scalar

    b_th(t, xi) = int_0^t [ P_{<=K(s)} A_0 + th xi . P_{<=K(s)} A_vec / <xi> ](s, th s xi / <xi>) ds,

which is the eigenvalue of ``Pi_th(xi) alpha^mu c_mu`` on the range of
``Pi_th(xi)``.  The corrected profile is ``Psi_th = exp(-i b_th) phi_th``.

Fourier-side norms use the continuum scale ``dV * f_hat``; the L^2_xi
measure is ``(2 pi / L)^3`` per mode, so ``||g_hat||_{L^2_xi} = (2 pi)^{3/2}
||g||_{L^2_x}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .grid import (ContractError, Field, FourierGrid, FOURIER, DEFAULT_MODE_BUDGET, boundary_fraction,
                   eval_lowpass_at_points, fftn, lowpass_table)
from .littlewood_paley import qjk_norms, rho_k
from .state import HalfWaveView, MDState


@dataclass(frozen=True)
class PaperConstants:
    N: tuple = (70, 30, 20, 10)
    H: tuple = (1, 10, 210, 410)
    delta: float = 1e-10
    zeta_factor: float = 1050.0
    delta_bar_factor: float = 410.0
    zeta_override: Optional[float] = None

    @property
    def zeta(self) -> float:
        return self.zeta_factor * self.delta if self.zeta_override is None else self.zeta_override

    @property
    def delta_bar(self) -> float:
        return self.delta_bar_factor * self.delta

    def overrides(self) -> dict:
        """Fields differing from the defaults."""
        base = PaperConstants()
        return {k: getattr(self, k) for k in self.__dataclass_fields__ if getattr(self, k) != getattr(base, k)}

    def as_dict(self) -> dict:
        return {"N": list(self.N), "H": list(self.H), "delta": self.delta, "zeta": self.zeta,
                "delta_bar": self.delta_bar, "overrides": self.overrides()}


DEFAULT_CONSTANTS = PaperConstants()
_K_TOL = 1e-12


def cutoff_K(s: float, zeta: float = DEFAULT_CONSTANTS.zeta) -> int:
    """Largest integer ``K`` with ``2^K <= <s>^(-2/3 - 2 zeta)``.

    Exponents within ``1e-12`` of an integer count as that integer.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    x = -(2.0 / 3.0 + 2.0 * zeta) * math.log2(math.sqrt(1.0 + s * s))
    return int(math.floor(x + _K_TOL))


def _jb(r):
    return np.sqrt(1.0 + np.asarray(r, dtype=np.float64) ** 2)


# ---------------------------------------------------------------------------
# phase correction


@dataclass
class PhaseCorrectionTable:
    """Accumulated phases on a symmetric set of modes.

    ``b[th]`` are full ``(n, n, n)`` real arrays, zero off the selection.
    ``wrapped[th]`` marks modes whose ray point left the box at some time.
    """

    grid: FourierGrid
    flat_index: np.ndarray
    mirror: np.ndarray
    b: dict
    wrapped: dict
    times: list = field(default_factory=list)
    Ks: list = field(default_factory=list)
    last: Optional[np.ndarray] = None
    zeta: float = DEFAULT_CONSTANTS.zeta
    budget: int = DEFAULT_MODE_BUDGET

    @property
    def t(self) -> Optional[float]:
        return self.times[-1] if self.times else None

    @property
    def xi_sel(self) -> np.ndarray:
        return self.grid.xi_vec.reshape(3, -1)[:, self.flat_index]

    def copy(self) -> "PhaseCorrectionTable":
        return replace(self, b={k: v.copy() for k, v in self.b.items()},
                       wrapped={k: v.copy() for k, v in self.wrapped.items()},
                       times=list(self.times), Ks=list(self.Ks),
                       last=None if self.last is None else self.last.copy())

    def to_arrays(self) -> dict:
        """Arrays sufficient to restore the table (checkpoint payload)."""
        return {"pc_b_plus": self.b[1], "pc_b_minus": self.b[-1], "pc_wrap_plus": self.wrapped[1],
                "pc_wrap_minus": self.wrapped[-1], "pc_times": np.array(self.times),
                "pc_Ks": np.array(self.Ks, dtype=np.int64), "pc_flat": self.flat_index,
                "pc_last": np.zeros(0) if self.last is None else self.last,
                "pc_zeta": np.array(self.zeta)}

    @classmethod
    def from_arrays(cls, grid: FourierGrid, a: dict, budget: int = DEFAULT_MODE_BUDGET):
        flat = a["pc_flat"]
        last = a["pc_last"]
        return cls(grid, flat, _mirror_of(grid, flat), {1: a["pc_b_plus"].copy(), -1: a["pc_b_minus"].copy()},
                   {1: a["pc_wrap_plus"].copy(), -1: a["pc_wrap_minus"].copy()},
                   [float(x) for x in a["pc_times"]], [int(k) for k in a["pc_Ks"]],
                   None if last.size == 0 else last.copy(), float(a["pc_zeta"]), budget)


def _mirror_of(grid, flat):
    """Position in ``flat`` of the mode ``-xi`` for every selected ``xi``."""
    m = np.stack(np.unravel_index(flat, grid.shape))
    neg = np.ravel_multi_index(tuple((-m) % grid.n), grid.shape)
    pos = {int(f): i for i, f in enumerate(flat)}
    try:
        return np.array([pos[int(f)] for f in neg], dtype=np.int64)
    except KeyError:
        raise ContractError("mode selection must be symmetric under xi -> -xi")


def select_modes(grid: FourierGrid, xi_max: Optional[float] = None) -> np.ndarray:
    """Flat indices of the dealiased band, optionally with ``|xi| <= xi_max``."""
    sel = grid.dealias_mask.copy()
    if xi_max is not None:
        sel &= grid.abs_xi <= xi_max
    return np.flatnonzero(sel.ravel())


def new_phase_table(grid: FourierGrid, xi_max: Optional[float] = None,
                    constants: PaperConstants = DEFAULT_CONSTANTS,
                    budget: int = DEFAULT_MODE_BUDGET) -> PhaseCorrectionTable:
    flat = select_modes(grid, xi_max)
    z = np.zeros(grid.shape)
    w = np.zeros(grid.shape, dtype=bool)
    return PhaseCorrectionTable(grid, flat, _mirror_of(grid, flat), {1: z, -1: z.copy()},
                                {1: w, -1: w.copy()}, zeta=constants.zeta, budget=budget)


def phase_integrand(table: PhaseCorrectionTable, A_hat: np.ndarray, s: float):
    """``(f_plus, wrapped_plus, K)`` for the selected modes at time ``s``.

    ``f_minus(xi) = f_plus(-xi)`` because the minus ray through ``xi`` is the
    plus ray through ``-xi``; callers use ``table.mirror`` for it.
    """
    g = table.grid
    K = cutoff_K(s, table.zeta)
    xi = table.xi_sel
    jap = np.sqrt(g.mass ** 2 + np.sum(xi ** 2, axis=0))
    tab = lowpass_table(g, K, table.budget)
    if s == 0.0:
        vals, wr = eval_lowpass_at_points(A_hat, g, K, np.zeros((1, 3)), table=tab)
        vals = np.repeat(vals, xi.shape[1], axis=-1)
        wr = np.zeros(xi.shape[1], dtype=bool)
    else:
        pts = (s * xi / jap).T
        vals, wr = eval_lowpass_at_points(A_hat, g, K, pts, table=tab)
    vals = vals.real
    f = vals[0] + np.sum(xi * vals[1:], axis=0) / jap
    return f, wr, K


def accumulate_phase(table: PhaseCorrectionTable, state: MDState) -> PhaseCorrectionTable:
    """Advance ``table`` to ``state.t`` with one trapezoid step (in place)."""
    f, wr, K = phase_integrand(table, state.A_hat, state.t)
    idx = table.flat_index
    if table.times:
        h = state.t - table.times[-1]
        if h < 0:
            raise ContractError("phase table times must be nondecreasing")
        inc = 0.5 * h * (table.last + f)
        bp = table.b[1].reshape(-1)
        bm = table.b[-1].reshape(-1)
        bp[idx] += inc
        bm[idx] += inc[table.mirror]
    table.wrapped[1].reshape(-1)[idx] |= wr
    table.wrapped[-1].reshape(-1)[idx] |= wr[table.mirror]
    table.last = f
    table.times.append(float(state.t))
    table.Ks.append(K)
    return table


class PhaseAccumulator:
    """Step hook keeping a phase table synchronized with a trajectory."""

    def __init__(self, table: PhaseCorrectionTable):
        self.table = table

    def start(self, state: MDState):
        if not self.table.times:
            accumulate_phase(self.table, state)

    def __call__(self, prev: MDState, new: MDState):
        if not self.table.times:
            accumulate_phase(self.table, prev)
        accumulate_phase(self.table, new)


def profile(state: MDState, theta: int) -> np.ndarray:
    """``phi_th = exp(th i t <D>) Pi_th psi`` (fourier-side coefficients)."""
    view = HalfWaveView.of(state)
    return view.phi[theta]


def corrected_profile(state: MDState, table: PhaseCorrectionTable, theta: int) -> Field:
    if table.t is None or abs(table.t - state.t) > 1e-9 * max(1.0, abs(state.t)):
        raise ContractError(f"phase table at t={table.t} is not synchronized with state t={state.t}")
    phi = profile(state, theta)
    return Field(np.exp(-1j * table.b[theta]) * phi, state.grid, FOURIER)


# ---------------------------------------------------------------------------
# norms


def _spinor_abs(a):
    """Pointwise Euclidean magnitude over leading component axes."""
    if a.ndim == 3:
        return np.abs(a)
    return np.sqrt(np.sum(np.abs(a) ** 2, axis=tuple(range(a.ndim - 3))))


@dataclass
class NormReport:
    value: float
    k_range: tuple
    shells: dict

    @property
    def argmax_k(self):
        return max(self.shells, key=lambda k: self.shells[k]["total"]) if self.shells else None


def norm_D(phi: Field) -> NormReport:
    """``sup_k <2^k>^20 2^((1/2-1/100)k) ||rho_k phi_hat||_inf
    + <2^k>^38 2^(-(1-1/100)k) ||P_k phi||_2`` over the dyadic range."""
    if not phi.is_fourier:
        raise ContractError("norm_D needs fourier-side input")
    g = phi.grid
    k_min, k_max = g.dyadic_range
    mag = _spinor_abs(phi.data)
    shells = {}
    for k in range(k_min, k_max + 1):
        w = rho_k(g.abs_xi, k)
        linf = float(np.max(w * mag)) * g.dV
        l2 = g.norm_hat(w * mag)
        a = _jb(2.0 ** k) ** 20 * 2.0 ** ((0.5 - 0.01) * k) * linf
        b = _jb(2.0 ** k) ** 38 * 2.0 ** (-(1 - 0.01) * k) * l2
        shells[k] = {"linf": linf, "l2": l2, "total": float(a + b)}
    value = max(s["total"] for s in shells.values()) if shells else 0.0
    return NormReport(value, (k_min, k_max), shells)


def norm_M(V: Field, constants: PaperConstants = DEFAULT_CONSTANTS) -> NormReport:
    """``sup_k <2^k>^25 2^((1 + 5 H(2) delta)k) sum_{j in U_k} 2^j ||Q_jk V||_2``."""
    g = V.grid
    k_min, k_max = g.dyadic_range
    expo = 1.0 + 5.0 * constants.H[2] * constants.delta
    shells = {}
    for k in range(k_min, k_max + 1):
        qn = qjk_norms(V, k)
        s = sum(2.0 ** j * v for j, v in qn.items())
        shells[k] = {"qjk": qn, "sum": s, "total": float(_jb(2.0 ** k) ** 25 * 2.0 ** (expo * k) * s)}
    value = max(s["total"] for s in shells.values()) if shells else 0.0
    return NormReport(value, (k_min, k_max), shells)


def xi_derivative_hat(f: Field, l: int) -> np.ndarray:
    """Unscaled coefficients of ``d_{xi_l} f_hat``, i.e. of ``-i x_l f``.

    ``l`` is 1-based.  Faithful only when ``f`` vanishes near the faces.
    """
    p = f.physical().data
    return fftn(-1j * f.grid.x[l - 1] * p)


def xi_derivative_norm(f: Field, l: int) -> float:
    """``||d_{xi_l} f_hat||_{L^2_xi}`` with the continuum measure."""
    return (2 * np.pi) ** 1.5 * f.grid.norm_hat(xi_derivative_hat(f, l))


@dataclass
class WeightedEnergyReport:
    value: float
    shells: dict
    boundary_fraction: float
    flag_boundary: bool


def weighted_energy(f: Field, n: int, kind: str = "dirac",
                    constants: PaperConstants = DEFAULT_CONSTANTS, margin: Optional[float] = None) -> WeightedEnergyReport:
    """``sup_k max_l <2^k>^N(n+1) * w_k ||rho_k d_{xi_l} f_hat||_{L^2_xi}``.

    ``w_k = <2^k>`` for ``kind='dirac'`` profiles and ``2^(k/2)`` for
    ``kind='maxwell'``.  ``n`` ranges over 0..2.
    """
    if kind not in ("dirac", "maxwell"):
        raise ValueError("kind must be 'dirac' or 'maxwell'")
    if not 0 <= n <= 2:
        raise ValueError("n must be in 0..2")
    g = f.grid
    margin = g.L / 8 if margin is None else margin
    bf = boundary_fraction(f.physical().data, g, margin)
    k_min, k_max = g.dyadic_range
    ders = [xi_derivative_hat(f, l) for l in (1, 2, 3)]
    shells = {}
    for k in range(k_min, k_max + 1):
        w = rho_k(g.abs_xi, k)
        l2 = max((2 * np.pi) ** 1.5 * g.norm_hat(w * d) for d in ders)
        wk = _jb(2.0 ** k) if kind == "dirac" else 2.0 ** (k / 2)
        shells[k] = float(_jb(2.0 ** k) ** constants.N[n + 1] * wk * l2)
    value = max(shells.values()) if shells else 0.0
    return WeightedEnergyReport(value, shells, bf, bf > 1e-10)


# ---------------------------------------------------------------------------
# drift


@dataclass
class ScatteringSnapshot:
    t: float
    grid: FourierGrid
    phi: dict
    b: dict
    wrapped: dict
    V: dict


def snapshot(state: MDState, table: Optional[PhaseCorrectionTable] = None) -> ScatteringSnapshot:
    view = HalfWaveView.of(state)
    g = state.grid
    if table is not None:
        if table.t is None or abs(table.t - state.t) > 1e-9 * max(1.0, abs(state.t)):
            raise ContractError("phase table is not synchronized with the state")
        b = {s: table.b[s].copy() for s in (1, -1)}
        wr = {s: table.wrapped[s].copy() for s in (1, -1)}
    else:
        b = {s: np.zeros(g.shape) for s in (1, -1)}
        wr = {s: np.zeros(g.shape, dtype=bool) for s in (1, -1)}
    return ScatteringSnapshot(state.t, g, {s: view.phi[s].copy() for s in (1, -1)}, b, wr,
                              {s: view.V[s].copy() for s in (1, -1)})


class SnapshotRecorder:
    """Step hook storing snapshots at requested times.

    Register it after the phase accumulator so the table is current.  A
    requested time is captured by the first state with ``t >= time``.
    """

    def __init__(self, times, table: Optional[PhaseCorrectionTable] = None):
        self.pending = sorted(times)
        self.table = table
        self.snapshots: dict = {}

    def start(self, state: MDState):
        self._capture(state)

    def _capture(self, st):
        while self.pending and st.t >= self.pending[0] - 1e-9:
            self.snapshots[self.pending.pop(0)] = snapshot(st, self.table)

    def __call__(self, prev: MDState, new: MDState):
        self._capture(new)


@dataclass
class ModesSpec:
    k_lo: int = -3
    k_hi: int = 2
    top: int = 10


def drift_report(snapshots: dict, t1: float, t2: float, modes: ModesSpec = ModesSpec()) -> dict:
    """Drift metrics between the snapshots at ``t1`` and ``t2``.

    (a) ``max_k ||rho_k (phi(t2) - phi(t1))||_inf``, (b) the same for the
    corrected profiles, (c) per-mode modulus and argument drift on the
    ``top`` largest modes, (d) Maxwell drift ``sum_j 2^j ||Q_jk (V(t2) -
    V(t1))||_2`` per shell.  Modes whose ray point left the box are
    excluded from (a)-(c).  Sup norms use the continuum scale.
    """
    if t1 > t2:
        raise ContractError("drift_report needs t1 <= t2")
    s1, s2 = snapshots[t1], snapshots[t2]
    g = s1.grid
    shells = list(range(modes.k_lo, modes.k_hi + 1))
    weights = {k: rho_k(g.abs_xi, k) for k in shells}
    support = sum(weights.values()) > 0
    unc, cor = {}, {}
    cand = []
    for th in (1, -1):
        ok = support & ~s1.wrapped[th] & ~s2.wrapped[th]
        p1, p2 = s1.phi[th], s2.phi[th]
        c1 = np.exp(-1j * s1.b[th]) * p1
        c2 = np.exp(-1j * s2.b[th]) * p2
        du = _spinor_abs(p2 - p1) * g.dV
        dc = _spinor_abs(c2 - c1) * g.dV
        for k in shells:
            w = weights[k] * ok
            unc[(th, k)] = float(np.max(w * du))
            cor[(th, k)] = float(np.max(w * dc))
        amp1 = _spinor_abs(p1) * g.dV
        amp2 = _spinor_abs(p2) * g.dV
        inner = np.sum(np.conj(p1) * p2, axis=0)
        arg = np.abs(np.angle(inner))
        for i in np.flatnonzero(ok.ravel()):
            cand.append((amp1.flat[i], th, i, abs(amp2.flat[i] - amp1.flat[i]), arg.flat[i]))
    cand.sort(key=lambda c: -c[0])
    top = []
    for amp, th, i, dmod, darg in cand[:modes.top]:
        idx = np.unravel_index(i, g.shape)
        top.append({"theta": th, "xi": [float(g.xi1d[j]) for j in idx], "amplitude": float(amp),
                    "modulus_drift": float(dmod), "argument_drift": float(darg),
                    "ratio": float(dmod / (darg * amp)) if darg * amp > 0 else float("inf")})
    maxwell = {}
    dV = {th: Field(s2.V[th] - s1.V[th], g, FOURIER) for th in (1, -1)}
    for k in shells:
        tot = 0.0
        for th in (1, -1):
            qn = qjk_norms(dV[th], k)
            tot += sum(2.0 ** j * v for j, v in qn.items())
        maxwell[k] = tot
    a = max(unc.values())
    b = max(cor.values())
    return {
        "t1": s1.t, "t2": s2.t, "shells": shells,
        "uncorrected": a, "corrected": b, "ratio": b / a if a > 0 else 0.0,
        "uncorrected_by_shell": {f"{th:+d},{k}": v for (th, k), v in unc.items()},
        "corrected_by_shell": {f"{th:+d},{k}": v for (th, k), v in cor.items()},
        "top_modes": top,
        "max_mode_ratio": max((m["ratio"] for m in top), default=0.0),
        "maxwell_by_shell": maxwell,
        "maxwell_total": float(sum(maxwell.values())),
    }
