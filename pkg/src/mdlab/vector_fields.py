"""Rotation and boost vector fields and the identities they satisfy.

``Omega_jk = x_j d_k - x_k d_j`` and ``Gamma_j = t d_j + x_j d_t``.  Spatial
derivatives are spectral; multiplication by ``x_j`` happens on the physical
side in box-centred coordinates, which is faithful only while the field is
negligible near the box faces.  Every operation therefore reports the share
of ``||f||^2`` within ``L/8`` of the boundary.

Axis labels are 1-based throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .dirac import apply_alpha, apply_hamiltonian, project_hat
from .evolution import nonlinearity_dirac
from .grid import Field, FourierGrid, FOURIER, PHYSICAL, boundary_fraction, fftn, ifftn
from .state import MDState, source_hat

ROTATIONS = ((2, 3), (3, 1), (1, 2))
KINDS = ("d0", "d1", "d2", "d3", "O23", "O31", "O12", "G1", "G2", "G3")
THRESHOLDS = {
    "rotation": 1e-8,
    "boost": 1e-6,
    "weight_dirac": 1e-6,
    "weight_wave": 1e-6,
    "rotation_japanese": 1e-10,
}


def support_margin(grid: FourierGrid) -> float:
    return grid.L / 8.0


def _bf(f_phys, grid):
    return boundary_fraction(f_phys, grid, support_margin(grid))


def _d_hat(f_hat, grid, j):
    return 1j * grid.xi[j - 1] * f_hat


def _x(f_phys, grid, j):
    return grid.x[j - 1] * f_phys


def _rel(diff, ref, grid):
    den = grid.norm(ref) if ref is not None else 0.0
    num = grid.norm(diff)
    return num / den if den > 0 else num


def _rotation_phys(f_hat, grid, j, k):
    dk = ifftn(_d_hat(f_hat, grid, k))
    dj = ifftn(_d_hat(f_hat, grid, j))
    return _x(dk, grid, j) - _x(dj, grid, k)


def _check_pair(jk):
    j, k = jk
    if j == k or not {j, k} <= {1, 2, 3}:
        raise ValueError(f"rotation needs two distinct axes in 1..3, got {jk!r}")
    return j, k


# ---------------------------------------------------------------------------
# single vector fields


def apply_rotation(f: Field, jk) -> Field:
    """``Omega_jk f``, physical-side; ``flags['boundary_fraction']`` is set."""
    j, k = _check_pair(jk)
    g = f.grid
    out = _rotation_phys(f.fourier().data, g, j, k)
    return Field(out, g, PHYSICAL, {"boundary_fraction": _bf(f.physical().data, g)})


def dt_psi_hat(state: MDState, dealias: bool = True) -> np.ndarray:
    """On-shell ``d_t psi = -i H psi + i A_mu alpha^mu psi`` (fourier-side)."""
    g = state.grid
    out = -1j * apply_hamiltonian(g.xi, state.psi_hat, g.mass)
    if np.any(state.A_hat):
        out = out + 1j * nonlinearity_dirac(state, dealias)
    return out


@dataclass
class BoostResult:
    psi: Field
    A: Field
    boundary_fraction: float


def apply_boost(state: MDState, j: int) -> BoostResult:
    """``Gamma_j psi`` and ``Gamma_j A_mu`` with on-shell time derivatives."""
    if j not in (1, 2, 3):
        raise ValueError(f"boost axis must be 1, 2 or 3, got {j!r}")
    g, t = state.grid, state.t
    psi = t * ifftn(_d_hat(state.psi_hat, g, j)) + _x(ifftn(dt_psi_hat(state)), g, j)
    A = t * ifftn(_d_hat(state.A_hat, g, j)).real + _x(ifftn(state.Adot_hat).real, g, j)
    bf = max(_bf(state.psi, g), _bf(ifftn(state.Adot_hat), g))
    return BoostResult(Field(psi, g, PHYSICAL), Field(A, g, PHYSICAL), bf)


# ---------------------------------------------------------------------------
# compositions on free Klein-Gordon pairs


@dataclass(frozen=True)
class VectorFieldTag:
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown vector field {self.kind!r}; expected one of {KINDS}")


def compositions(order: int) -> list:
    """All words of length ``order`` over the vector-field alphabet."""
    if not 0 <= order <= 3:
        raise ValueError("compositions are provided up to order 3")
    return [tuple(VectorFieldTag(k) for k in w) for w in product(KINDS, repeat=order)]


def _apply_tag(kind, F, Ft, grid, t, mass):
    """One field applied to a free solution ``(F, d_t F)`` given fourier-side.

    Every component solves ``d_t^2 F = (Lap - m^2) F``, which the vector
    fields preserve, so the pair determines the result and its time derivative.
    """
    Ftt = -(grid.abs_xi ** 2 + mass ** 2) * F
    if kind == "d0":
        return Ft, Ftt
    ax = int(kind[1:]) if kind[0] == "d" else None
    if ax is not None:
        return _d_hat(F, grid, ax), _d_hat(Ft, grid, ax)
    if kind[0] == "O":
        j, k = int(kind[1]), int(kind[2])
        return (fftn(_rotation_phys(F, grid, j, k)), fftn(_rotation_phys(Ft, grid, j, k)))
    j = int(kind[1])
    G = t * _d_hat(F, grid, j) + fftn(_x(ifftn(Ft), grid, j))
    Gt = _d_hat(F, grid, j) + t * _d_hat(Ft, grid, j) + fftn(_x(ifftn(Ftt), grid, j))
    return G, Gt


def apply_composition(F_hat, Ft_hat, grid: FourierGrid, t: float, word: Sequence,
                      mass: Optional[float] = None):
    """Apply ``X_1 X_2 ... X_n`` (rightmost first) to a free solution.

    ``F_hat`` and ``Ft_hat`` are fourier-side values of the field and its
    time derivative at time ``t``; ``mass`` defaults to the grid mass (use 0
    for the wave equation).  Returns the pair for the composed field.
    """
    mass = grid.mass if mass is None else mass
    F, Ft = F_hat, Ft_hat
    for tag in reversed(list(word)):
        kind = tag.kind if isinstance(tag, VectorFieldTag) else VectorFieldTag(tag).kind
        F, Ft = _apply_tag(kind, F, Ft, grid, t, mass)
    return F, Ft


# ---------------------------------------------------------------------------
# commutator and weight identities


def _rotation_symbol_hat(psi_hat, grid, theta, j, k):
    """``theta (i/2) (alpha_j d_k - alpha_k d_j) / <D>`` applied per mode."""
    xi = grid.xi
    s = xi[k - 1] * apply_alpha(j, psi_hat) - xi[j - 1] * apply_alpha(k, psi_hat)
    return -0.5 * theta * s / grid.japanese


def _boost_symbol_hat(g_hat, grid, theta, j):
    """``theta (i/2) (alpha_j / <D> + i ((alpha.D) d_j + m beta d_j) / <D>^3)``."""
    jap = grid.japanese
    h = apply_hamiltonian(grid.xi, g_hat, grid.mass)
    return 0.5j * theta * (apply_alpha(j, g_hat) / jap - grid.xi[j - 1] * h / jap ** 3)


def rotation_commutator_residual(psi_hat, grid, theta, jk) -> float:
    """Two-path residual of ``[Omega_jk, Pi_theta] psi`` against its symbol."""
    j, k = _check_pair(jk)
    lhs = (_rotation_phys(project_hat(psi_hat, grid, theta), grid, j, k)
           - ifftn(project_hat(fftn(_rotation_phys(psi_hat, grid, j, k)), grid, theta)))
    rhs = ifftn(_rotation_symbol_hat(psi_hat, grid, theta, j, k))
    return _rel(lhs - rhs, ifftn(psi_hat), grid)


def boost_commutator_residual(psi_hat, dt_hat, grid, theta, j) -> float:
    """Two-path residual of ``[Gamma_j, Pi_theta] psi`` against its symbol.

    ``t d_j`` commutes with ``Pi_theta``, leaving
    ``x_j Pi (d_t psi) - Pi (x_j d_t psi)``: one physical and one spectral
    multiplication.  Normalised by ``||d_t psi||``.
    """
    lhs = (_x(ifftn(project_hat(dt_hat, grid, theta)), grid, j)
           - ifftn(project_hat(fftn(_x(ifftn(dt_hat), grid, j)), grid, theta)))
    rhs = ifftn(_boost_symbol_hat(dt_hat, grid, theta, j))
    return _rel(lhs - rhs, ifftn(dt_hat), grid)


def rotation_japanese_residual(psi_hat, grid, jk) -> float:
    """``||[Omega_jk, <D>] psi|| / ||<D> psi||``."""
    j, k = _check_pair(jk)
    jap = grid.japanese
    a = _rotation_phys(jap * psi_hat, grid, j, k)
    b = ifftn(jap * fftn(_rotation_phys(psi_hat, grid, j, k)))
    return _rel(a - b, ifftn(jap * psi_hat), grid)


def dirac_weight_residual(state: MDState, theta: int, j: int) -> float:
    """Compare ``Gamma_j psi_theta`` with
    ``-theta i e^{-theta i t <D>} x_j (<D> phi_theta) + i x_j Pi_theta(N)``.

    The left side is ``t d_j psi_theta + x_j d_t psi_theta`` with the
    on-shell time derivative.
    """
    g, t = state.grid, state.t
    jap = g.japanese
    pt = project_hat(state.psi_hat, g, theta)
    N = nonlinearity_dirac(state) if np.any(state.A_hat) else np.zeros_like(pt)
    PN = project_hat(N, g, theta)
    dt_pt = -1j * theta * jap * pt + 1j * PN
    lhs = t * ifftn(_d_hat(pt, g, j)) + _x(ifftn(dt_pt), g, j)
    phi = np.exp(1j * theta * t * jap) * pt
    inner = fftn(_x(ifftn(jap * phi), g, j))
    rhs = ifftn(-1j * theta * np.exp(-1j * theta * t * jap) * inner) + 1j * _x(ifftn(PN), g, j)
    return _rel(lhs - rhs, lhs, g)


def wave_test_profile(grid: FourierGrid, width: Optional[float] = None,
                      momentum: Optional[float] = None, power: int = 2,
                      components: int = 4, seed: int = 0) -> np.ndarray:
    """Fourier-side ``(-Lap)^power`` of a modulated Gaussian packet, with
    random complex component weights.

    The packet moves its spectrum away from ``xi = 0`` and the power makes
    it vanish there, so ``|D|`` images stay spatially localized as
    multiplication by ``x_j`` on a torus requires.  Defaults scale with the
    box: ``width = L / 12.7`` and ``|momentum| = 0.4 xi_max`` along (1,1,1).
    """
    width = grid.L / 12.7 if width is None else width
    momentum = 0.4 * grid.xi_max if momentum is None else momentum
    rng = np.random.default_rng(seed)
    c = rng.normal(size=components) + 1j * rng.normal(size=components)
    x = grid.x
    packet = (np.exp(-sum(xx ** 2 for xx in x) / (2.0 * width ** 2))
              * np.exp(1j * momentum * sum(x) / np.sqrt(3.0)))
    base = grid.abs_xi ** (2 * power) * fftn(packet)
    return c[:, None, None, None] * base[None]


def smooth_test_spinor(grid: FourierGrid, seed: int = 0, width: Optional[float] = None) -> Field:
    """Gaussian spinor with random components, fourier-side and unmasked.

    The default width ``L / (2 sqrt(pi n / 2))`` balances the spatial tail
    at the box faces against the spectral tail at the Nyquist frequency.
    """
    width = grid.L / (2.0 * np.sqrt(np.pi * grid.n / 2.0)) if width is None else width
    rng = np.random.default_rng(seed)
    s = rng.normal(size=4) + 1j * rng.normal(size=4)
    env = np.exp(-sum(xx ** 2 for xx in grid.x) / (2.0 * width ** 2))
    return Field(fftn(s[:, None, None, None] * env[None]), grid, FOURIER)


def interior_state_width(grid: FourierGrid) -> float:
    """Data width balancing the spatial tail against the 2/3-rule edge."""
    return grid.L / (2.0 * np.sqrt(np.pi * grid.n / 3.0))


def wave_weight_residual(V_hat, J_hat, grid: FourierGrid, t: float, theta: int, j: int) -> float:
    """Compare ``Gamma_j W`` computed as
    ``x_j (theta i |D| W - theta i/2 |D|^{-1/2} J) + t d_j W`` with
    ``theta i e^{theta i t |D|} x_j (|D| V) - theta i/2 x_j |D|^{-1/2} J``
    where ``W = e^{theta i t |D|} V``.
    """
    w = grid.abs_xi
    W = np.exp(1j * theta * t * w) * V_hat
    src = 0.5j * theta * ifftn(grid.abs_xi_inv_sqrt * J_hat)
    lhs = _x(ifftn(1j * theta * w * W) - src, grid, j) + t * ifftn(_d_hat(W, grid, j))
    inner = fftn(_x(ifftn(w * V_hat), grid, j))
    rhs = ifftn(1j * theta * np.exp(1j * theta * t * w) * inner) - _x(src, grid, j)
    return _rel(lhs - rhs, lhs, grid)


def random_test_spinor(grid: FourierGrid, width: float = 3.0, seed: int = 0,
                       lumps: int = 3, max_momentum: float = 0.5) -> Field:
    """Sum of modulated Gaussian lumps near the origin with random spinors,
    restricted to the dealiased band."""
    rng = np.random.default_rng(seed)
    x = grid.x
    psi = np.zeros((4,) + grid.shape, dtype=np.complex128)
    for _ in range(lumps):
        c = rng.uniform(-1.0, 1.0, 3)
        k = rng.uniform(-max_momentum, max_momentum, 3)
        s = rng.normal(size=4) + 1j * rng.normal(size=4)
        env = np.exp(-sum((x[i] - c[i]) ** 2 for i in range(3)) / (2.0 * width ** 2))
        psi += s[:, None, None, None] * (env * np.exp(1j * sum(k[i] * x[i] for i in range(3))))[None]
    f = np.where(grid.dealias_mask, fftn(psi), 0)
    return Field(f, grid, FOURIER)


@dataclass
class CommutatorReport:
    residuals: dict = field(default_factory=dict)
    boundary_fraction: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=lambda: dict(THRESHOLDS))

    def worst(self) -> dict:
        out = {}
        for key, val in self.residuals.items():
            fam = key.split("[")[0]
            out[fam] = max(out.get(fam, 0.0), val)
        return out

    @property
    def passed(self) -> bool:
        return all(v <= self.thresholds[k] for k, v in self.worst().items())

    def as_dict(self) -> dict:
        return {"residuals": dict(self.residuals), "worst": self.worst(),
                "boundary_fraction": dict(self.boundary_fraction),
                "thresholds": dict(self.thresholds), "passed": self.passed}


def check_commutators(psi: Field, state: Optional[MDState] = None,
                      wave_profile: Optional[np.ndarray] = None) -> CommutatorReport:
    """Residuals of the first-order commutator and weight identities.

    ``psi`` feeds the rotation and boost commutators with the free on-shell
    ``d_t psi = -i H psi``.  ``state`` (a coupled state) feeds the Dirac
    weight identity and supplies the current for the wave identity; the
    wave identity runs on ``wave_profile`` (default ``wave_test_profile``)
    at time ``state.t``.
    """
    g = psi.grid
    p_hat = psi.fourier().data
    rep = CommutatorReport()
    rep.boundary_fraction["psi"] = _bf(psi.physical().data, g)
    dt_hat = -1j * apply_hamiltonian(g.xi, p_hat, g.mass)
    for theta in (+1, -1):
        for jk in ROTATIONS:
            rep.residuals[f"rotation[{theta:+d},{jk[0]}{jk[1]}]"] = rotation_commutator_residual(p_hat, g, theta, jk)
        for j in (1, 2, 3):
            rep.residuals[f"boost[{theta:+d},{j}]"] = boost_commutator_residual(p_hat, dt_hat, g, theta, j)
    for jk in ROTATIONS:
        rep.residuals[f"rotation_japanese[{jk[0]}{jk[1]}]"] = rotation_japanese_residual(p_hat, g, jk)
    if state is not None:
        rep.boundary_fraction["state_psi"] = _bf(state.psi, g)
        J = source_hat(state.psi_hat, g)
        V = wave_test_profile(g) if wave_profile is None else wave_profile
        rep.boundary_fraction["wave_profile"] = _bf(ifftn(V), g)
        for theta in (+1, -1):
            for j in (1, 2, 3):
                rep.residuals[f"weight_dirac[{theta:+d},{j}]"] = dirac_weight_residual(state, theta, j)
                rep.residuals[f"weight_wave[{theta:+d},{j}]"] = wave_weight_residual(V, J, g, state.t, theta, j)
    return rep
