"""Coupled field state, half-wave views, constraints and checkpoints.

The state stores unscaled Fourier coefficients:

* ``psi_hat``  ``(4, n, n, n)`` complex spinor,
* ``A_hat``, ``Adot_hat``  ``(4, n, n, n)`` potentials ``A_mu`` (lower index)
  and their time derivatives, Hermitian-symmetric because ``A`` is real.

The zero-frequency coefficients ``A_hat[:, 0, 0, 0]`` and
``Adot_hat[:, 0, 0, 0]`` form the zero-mode register.  They obey
``d^2/dt^2 a = mean source`` exactly and are excluded from the half-wave
split and from gauge diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .dirac import project_hat
from .grid import ContractError, Field, FourierGrid, FOURIER, PHYSICAL, fftn, ifftn

CHECKPOINT_VERSION = "mdlab-ckpt-1"
RESIDUAL_FLOOR = 1e-300


@dataclass
class MDState:
    t: float
    grid: FourierGrid
    psi_hat: np.ndarray
    A_hat: np.ndarray
    Adot_hat: np.ndarray
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (4,) + self.grid.shape
        for name in ("psi_hat", "A_hat", "Adot_hat"):
            a = getattr(self, name)
            if a.shape != shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {shape}")

    @classmethod
    def vacuum(cls, grid: FourierGrid, t: float = 0.0) -> "MDState":
        z = np.zeros((4,) + grid.shape, dtype=np.complex128)
        return cls(t, grid, z.copy(), z.copy(), z.copy())

    def copy(self, **changes) -> "MDState":
        base = dict(t=self.t, grid=self.grid, psi_hat=self.psi_hat.copy(),
                    A_hat=self.A_hat.copy(), Adot_hat=self.Adot_hat.copy(),
                    flags=dict(self.flags))
        base.update(changes)
        return MDState(**base)

    @property
    def psi(self) -> np.ndarray:
        return ifftn(self.psi_hat)

    @property
    def A(self) -> np.ndarray:
        return ifftn(self.A_hat).real

    @property
    def Adot(self) -> np.ndarray:
        return ifftn(self.Adot_hat).real

    @property
    def zero_registers(self):
        """``(A_hat(0), Adot_hat(0))``, each a length-4 complex vector."""
        return self.A_hat[:, 0, 0, 0].copy(), self.Adot_hat[:, 0, 0, 0].copy()

    def spinor_field(self) -> Field:
        return Field(self.psi_hat, self.grid, FOURIER)

    def reality_defect(self) -> float:
        """Largest imaginary part of ``A`` or ``Adot`` relative to their size."""
        out = 0.0
        for a in (self.A_hat, self.Adot_hat):
            p = ifftn(a)
            scale = max(np.abs(p).max(), RESIDUAL_FLOOR)
            out = max(out, float(np.abs(p.imag).max() / scale))
        return out


# ---------------------------------------------------------------------------
# pointwise currents


def current_physical(psi: np.ndarray) -> np.ndarray:
    """``J_mu = <psi, alpha_mu psi>`` on physical-side ``(4, ...)`` data."""
    shape = psi.shape[1:]
    flat = np.ascontiguousarray(psi.reshape(4, -1))
    return kernels.current(flat).reshape((4,) + shape)


def current(psi: Field) -> Field:
    """Physical-side ``(4, n, n, n)`` real current of a spinor field."""
    p = psi.physical()
    return Field(current_physical(p.data), p.grid, PHYSICAL)


def charge(state: MDState) -> float:
    """``||psi||_2`` with the cell-volume convention."""
    return state.grid.norm_hat(state.psi_hat)


# ---------------------------------------------------------------------------
# half-wave view


@dataclass
class HalfWaveView:
    """Derived quantities at ``state.t``; all arrays are fourier-side.

    ``W[s]``, ``V[s]`` for ``s = +1, -1`` hold ``(4, n, n, n)`` arrays with
    the zero mode removed.  ``psi_theta[s]`` is ``Pi_s psi`` and ``phi[s]``
    its profile.
    """

    t: float
    grid: FourierGrid
    W: dict
    V: dict
    psi_theta: dict
    phi: dict
    zero: tuple

    @classmethod
    def of(cls, state: MDState) -> "HalfWaveView":
        g, t = state.grid, state.t
        absxi = g.abs_xi
        inv = g.abs_xi_inv
        sq = np.sqrt(absxi)
        W, V, pt, ph = {}, {}, {}, {}
        for s in (+1, -1):
            a_s = 0.5 * (state.A_hat - 1j * s * inv * state.Adot_hat)
            a_s[:, 0, 0, 0] = 0
            W[s] = sq * a_s
            V[s] = np.exp(-1j * s * t * absxi) * W[s]
            pt[s] = project_hat(state.psi_hat, g, s)
            ph[s] = np.exp(1j * s * t * g.japanese) * pt[s]
        return cls(t, g, W, V, pt, ph, state.zero_registers)

    def half_potential(self, s: int) -> np.ndarray:
        """``A_{mu, s} = |D|^(-1/2) W_s``."""
        return self.grid.abs_xi_inv_sqrt * self.W[s]

    def reconstruct(self):
        """``(A_hat, Adot_hat, psi_hat)`` rebuilt from the view."""
        g = self.grid
        Ap, Am = self.half_potential(+1), self.half_potential(-1)
        A = Ap + Am
        Adot = 1j * g.abs_xi * (Ap - Am)
        A[:, 0, 0, 0] = self.zero[0]
        Adot[:, 0, 0, 0] = self.zero[1]
        return A, Adot, self.psi_theta[+1] + self.psi_theta[-1]


# ---------------------------------------------------------------------------
# gauge constraint


def lorenz_divergence_hat(state: MDState) -> np.ndarray:
    """Fourier coefficients of ``-Adot_0 + d_j A_j`` on nonzero modes."""
    xi = state.grid.xi
    div = sum(1j * xi[j] * state.A_hat[j + 1] for j in range(3))
    out = -state.Adot_hat[0] + div
    out[0, 0, 0] = 0
    return out, div


def lorenz_residual(state: MDState, floor: float = 1e-30) -> float:
    """``||d^mu A_mu|| / max(||Adot_0|| + ||div A||, floor)`` on nonzero modes."""
    g = state.grid
    res, div = lorenz_divergence_hat(state)
    a0 = state.Adot_hat[0].copy()
    a0[0, 0, 0] = 0
    den = g.norm_hat(a0) + g.norm_hat(div)
    return g.norm_hat(res) / max(den, floor)


def source_hat(psi_hat: np.ndarray, grid: FourierGrid) -> np.ndarray:
    """Dealiased Fourier coefficients of the current of ``psi_hat``."""
    J = fftn(current_physical(ifftn(psi_hat)))
    return np.where(grid.dealias_mask, J, 0)


def constraint_residuals(state: MDState) -> tuple[float, float]:
    """Absolute residuals of ``adot_0 = d_j a_j`` and
    ``d_j adot_j = Lap a_0 + J_0`` on nonzero modes."""
    g = state.grid
    xi = g.xi
    r1, _ = lorenz_divergence_hat(state)
    J0 = source_hat(state.psi_hat, g)[0]
    r2 = (sum(1j * xi[j] * state.Adot_hat[j + 1] for j in range(3))
          + g.abs_xi ** 2 * state.A_hat[0] - J0)
    r2[0, 0, 0] = 0
    return g.norm_hat(r1), g.norm_hat(r2)


def project_constraints(state: MDState) -> MDState:
    """Enforce both gauge-propagation constraints at ``state.t``.

    ``Adot_0`` is set to ``d_j A_j`` and ``A_0`` to the Poisson solution of
    ``Lap A_0 = d_j Adot_j - J_0`` on nonzero modes; the zero modes supplied
    by the caller are kept.
    """
    g = state.grid
    xi = g.xi
    out = state.copy()
    J0 = source_hat(state.psi_hat, g)[0]
    div = sum(1j * xi[j] * state.A_hat[j + 1] for j in range(3))
    divdot = sum(1j * xi[j] * state.Adot_hat[j + 1] for j in range(3))
    z_a, z_adot = state.A_hat[0, 0, 0, 0], state.Adot_hat[0, 0, 0, 0]
    out.Adot_hat[0] = div
    out.A_hat[0] = (J0 - divdot) * g.abs_xi_inv ** 2
    out.A_hat[0, 0, 0, 0] = z_a
    out.Adot_hat[0, 0, 0, 0] = z_adot
    return out


# ---------------------------------------------------------------------------
# initial data


@dataclass
class DataRecipe:
    """Gaussian-enveloped data.

    ``psi0 = amplitude * spinor * exp(-|x - center|^2 / (2 width^2)) * exp(i k.x)``
    and free gauge parts ``a_j = gauge_amplitude * e_j * exp(-|x|^2 / (2
    gauge_width^2))`` with a unit direction ``e`` drawn from ``seed``.
    Explicit ``a_free`` / ``adot_free`` arrays (physical, ``(4, n, n, n)``)
    override the Gaussian gauge parts.
    """

    amplitude: float = 0.01
    width: float = 3.5
    momentum: tuple = (0.0, 0.0, 0.0)
    center: tuple = (0.0, 0.0, 0.0)
    spinor: Optional[tuple] = None
    gauge_amplitude: Optional[float] = None
    gauge_width: Optional[float] = None
    seed: int = 0
    a_free: Optional[np.ndarray] = None
    adot_free: Optional[np.ndarray] = None

    @property
    def data_radius(self) -> float:
        """Radius outside which the data is below ~2e-3 of its peak."""
        w = max(self.width, self.gauge_width or self.width)
        return 2.5 * w + float(np.linalg.norm(self.center))

    def spinor_vector(self) -> np.ndarray:
        if self.spinor is not None:
            s = np.asarray(self.spinor, dtype=np.complex128)
        else:
            rng = np.random.default_rng(self.seed)
            s = rng.normal(size=4) + 1j * rng.normal(size=4)
        return s / np.linalg.norm(s)

    def gauge_direction(self) -> np.ndarray:
        rng = np.random.default_rng([self.seed, 1])
        e = rng.normal(size=3)
        return e / np.linalg.norm(e)


def _real_field(a, name):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        scale = max(np.abs(a).max(), RESIDUAL_FLOOR)
        if np.abs(a.imag).max() > 1e-12 * scale:
            raise ContractError(f"{name} is not real (Fourier data not Hermitian-symmetric)")
        a = a.real
    return a.astype(np.float64)


def gaussian(grid: FourierGrid, width: float, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    x = grid.x
    r2 = sum((x[j] - center[j]) ** 2 for j in range(3))
    return np.exp(-r2 / (2.0 * width ** 2))


def make_initial_data(grid: FourierGrid, recipe: DataRecipe = DataRecipe(), t: float = 0.0) -> MDState:
    """Build a dealiased state satisfying both gauge constraints."""
    mask = grid.dealias_mask
    env = gaussian(grid, recipe.width, recipe.center)
    x = grid.x
    carrier = np.exp(1j * sum(recipe.momentum[j] * x[j] for j in range(3)))
    s = recipe.spinor_vector()
    psi = recipe.amplitude * s[:, None, None, None] * (env * carrier)[None]
    psi_hat = np.where(mask, fftn(psi), 0)

    if recipe.a_free is not None:
        a = _real_field(recipe.a_free, "a_free")
    else:
        ga = recipe.amplitude if recipe.gauge_amplitude is None else recipe.gauge_amplitude
        gw = recipe.width if recipe.gauge_width is None else recipe.gauge_width
        a = np.zeros((4,) + grid.shape)
        a[1:] = ga * recipe.gauge_direction()[:, None, None, None] * gaussian(grid, gw)[None]
    adot = (np.zeros_like(a) if recipe.adot_free is None
            else _real_field(recipe.adot_free, "adot_free"))
    A_hat = np.where(mask, fftn(a), 0)
    Adot_hat = np.where(mask, fftn(adot), 0)
    st = MDState(t, grid, psi_hat, A_hat, Adot_hat)
    return project_constraints(st)


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, state: MDState, extra: Optional[dict] = None) -> None:
    """Write an ``.npz`` container; arrays are stored verbatim."""
    payload = {
        "version": np.array(CHECKPOINT_VERSION),
        "grid": np.array([state.grid.n, state.grid.L, state.grid.mass], dtype=np.float64),
        "t": np.array(state.t, dtype=np.float64),
        "psi_hat": state.psi_hat,
        "A_hat": state.A_hat,
        "Adot_hat": state.Adot_hat,
    }
    for k, v in (extra or {}).items():
        payload["extra_" + k] = np.asarray(v)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path):
    """Return ``(state, extra)`` from a file written by ``save_checkpoint``."""
    with np.load(path, allow_pickle=False) as z:
        version = str(z["version"])
        if version != CHECKPOINT_VERSION:
            raise ContractError(f"unsupported checkpoint version {version!r}")
        n, L, mass = z["grid"]
        grid = FourierGrid(int(n), float(L), float(mass))
        state = MDState(float(z["t"]), grid, z["psi_hat"].copy(), z["A_hat"].copy(), z["Adot_hat"].copy())
        extra = {k[6:]: z[k].copy() for k in z.files if k.startswith("extra_")}
    return state, extra


def state_distance(a: MDState, b: MDState) -> float:
    """Max relative coefficient difference across all three arrays."""
    out = 0.0
    for x, y in ((a.psi_hat, b.psi_hat), (a.A_hat, b.A_hat), (a.Adot_hat, b.Adot_hat)):
        scale = max(np.abs(x).max(), np.abs(y).max(), RESIDUAL_FLOOR)
        out = max(out, float(np.abs(x - y).max() / scale))
    return out


__all__ = [
    "MDState", "HalfWaveView", "DataRecipe", "current", "current_physical", "source_hat", "charge",
    "lorenz_residual", "constraint_residuals", "project_constraints", "make_initial_data",
    "save_checkpoint", "load_checkpoint", "state_distance", "gaussian", "CHECKPOINT_VERSION",
]
