"""Dyadic frequency shells and phase-space localization.

The bump is the mollified step

    rho(r) = s(2 - r),   s(u) = e^{-1/u} / (e^{-1/u} + e^{-1/(1-u)}),

clamped to 0 for ``u <= 0`` and 1 for ``u >= 1``; so ``rho = 1`` on
``|xi| <= 1`` and ``rho = 0`` on ``|xi| >= 2``.  Shells are
``rho_k(r) = rho(r / 2^k) - rho(r / 2^(k-1))``.
"""
from __future__ import annotations

import numpy as np

from .grid import ContractError, Field, FourierGrid, FOURIER, PHYSICAL


def smooth_step(u):
    u = np.asarray(u, dtype=np.float64)
    out = np.where(u >= 1.0, 1.0, 0.0)
    mid = (u > 0.0) & (u < 1.0)
    if np.any(mid):
        um = u[mid]
        a = np.exp(-1.0 / um)
        b = np.exp(-1.0 / (1.0 - um))
        out = out.astype(np.float64)
        out[mid] = a / (a + b)
    return out


def rho(r):
    return smooth_step(2.0 - np.asarray(r, dtype=np.float64))


def rho_le(r, k):
    """``rho_{<=k}(r) = rho(r / 2^k)``."""
    return rho(np.asarray(r) / 2.0 ** k)


def rho_gt(r, k):
    return 1.0 - rho_le(r, k)


def rho_k(r, k):
    r = np.asarray(r)
    return rho(r / 2.0 ** k) - rho(r / 2.0 ** (k - 1))


def rho_tilde(r, k):
    """Widened shell ``rho_{[k-2, k+2]}``."""
    r = np.asarray(r)
    return rho(r / 2.0 ** (k + 2)) - rho(r / 2.0 ** (k - 3))


def in_dyadic_range(grid: FourierGrid, k: int) -> bool:
    k_min, k_max = grid.dyadic_range
    return k_min <= k <= k_max


def _project(f: Field, weights, flag_range=None) -> Field:
    side = f.side
    g = f.fourier()
    out = Field(g.data * weights, f.grid, FOURIER).to_side(side)
    if flag_range is not None:
        out.flags["out_of_range"] = flag_range
    return out


def project_shell(f: Field, k: int) -> Field:
    """``P_k f`` on the same side as the input.

    A shell outside the grid's dyadic range gives the zero field with
    ``flags['out_of_range'] = True``.
    """
    if not in_dyadic_range(f.grid, k):
        return Field(np.zeros_like(f.data), f.grid, f.side, {"out_of_range": True})
    return _project(f, rho_k(f.grid.abs_xi, k), False)


def project_le(f: Field, k: int) -> Field:
    return _project(f, rho_le(f.grid.abs_xi, k))


def project_gt(f: Field, k: int) -> Field:
    return _project(f, rho_gt(f.grid.abs_xi, k))


def project_tilde(f: Field, k: int) -> Field:
    return _project(f, rho_tilde(f.grid.abs_xi, k))


def shell_tables(grid: FourierGrid) -> dict:
    """``{k: rho_k(|xi|)}`` over the dyadic range, plus the zero-mode remainder
    under key ``'low'`` (``rho_{<= k_min - 1}``)."""
    k_min, k_max = grid.dyadic_range
    tabs = {k: rho_k(grid.abs_xi, k) for k in range(k_min, k_max + 1)}
    tabs["low"] = rho_le(grid.abs_xi, k_min - 1)
    return tabs


# ---------------------------------------------------------------------------
# phase-space localization


def u_set(grid: FourierGrid, k: int) -> list[int]:
    """Spatial scales ``j`` paired with shell ``k``: ``j >= -min(k, 0)``,
    truncated where the cutoffs stop changing on the box."""
    j0 = -min(k, 0)
    j_max = grid.spatial_range
    return [j0] + list(range(j0 + 1, j_max + 1))


def spatial_cutoff(grid: FourierGrid, j: int, k: int) -> np.ndarray:
    """``rho-bar_j^{(k)}(x)`` with ``|x|`` the distance to the box centre."""
    j0 = -min(k, 0)
    if j < j0:
        raise ContractError(f"j={j} is not in U_k for k={k}")
    r = grid.abs_x
    if j == j0:
        # k <= 0: rho_{<= -k};  k >= 1: rho_{<= 0}
        return rho_le(r, j0)
    return rho_k(r, j)


def localize_qjk(f: Field, j: int, k: int) -> Field:
    """``Q_{jk} f = rho-bar_j^{(k)} P_k f``, returned physical-side."""
    cut = spatial_cutoff(f.grid, j, k)
    pk = project_shell(f, k).physical()
    return Field(cut * pk.data, f.grid, PHYSICAL)


def qjk_norms(f: Field, k: int) -> dict[int, float]:
    """``{j: ||Q_{jk} f||_2}`` for every ``j`` in the truncated ``U_k``."""
    grid = f.grid
    pk = project_shell(f, k).physical().data
    return {j: grid.norm(spatial_cutoff(grid, j, k) * pk) for j in u_set(grid, k)}
