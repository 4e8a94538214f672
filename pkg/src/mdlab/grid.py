"""Periodic box geometry, transforms and Fourier multipliers.

Conventions (the only place they are defined):

* Physical coordinates are box-centred and stored in FFT order,
  ``x_i = L * fftfreq(n)[i]`` in ``[-L/2, L/2)``, so the origin sits at
  index 0 and ``fft`` phases match ``exp(-i xi . x)`` directly.
* The forward transform is unscaled, the inverse carries ``1/n^3``.
* ``continuum_hat(f_hat) = dV * f_hat`` approximates the Fourier transform
  on R^3, ``int exp(-i x . xi) f(x) dx``; L^infty_xi and L^2_xi norms are
  taken of this quantity.
* Physical L^2 norms include the cell volume, ``(sum |f|^2 dV)^(1/2)``,
  so Parseval reads ``||f||^2 = dV / n^3 * sum |f_hat|^2``.
"""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

from . import kernels

PHYSICAL = "physical"
FOURIER = "fourier"

_WORKERS = int(os.environ.get("MDLAB_THREADS", "1"))


class ContractError(ValueError):
    """An operation was called on input violating its precondition."""


class BudgetError(RuntimeError):
    """A requested evaluation would exceed the configured mode budget."""


def fftn(a):
    return sfft.fftn(a, axes=(-3, -2, -1), workers=_WORKERS)


def ifftn(a):
    return sfft.ifftn(a, axes=(-3, -2, -1), workers=_WORKERS)


@dataclass(frozen=True)
class FourierGrid:
    """Cubic periodic box ``[-L/2, L/2)^3`` with ``n`` points per axis."""

    n: int = 32
    L: float = 40.0
    mass: float = 1.0

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise ValueError(f"n_per_axis must be an even integer >= 4, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got {self.L}")
        if self.mass < 0:
            raise ValueError(f"mass must be nonnegative, got {self.mass}")

    @property
    def shape(self):
        return (self.n, self.n, self.n)

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def dV(self) -> float:
        return self.dx ** 3

    @property
    def k0(self) -> float:
        """Dual lattice spacing."""
        return 2.0 * np.pi / self.L

    @property
    def xi_max(self) -> float:
        """Largest per-axis frequency magnitude, ``pi n / L``."""
        return np.pi * self.n / self.L

    @cached_property
    def m1d(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, 1.0 / self.n).astype(np.int64)

    @cached_property
    def x1d(self) -> np.ndarray:
        return self.L * np.fft.fftfreq(self.n)

    @cached_property
    def xi1d(self) -> np.ndarray:
        return self.k0 * self.m1d

    @cached_property
    def x(self):
        """Box-centred coordinates, a tuple of three broadcastable arrays."""
        return np.meshgrid(self.x1d, self.x1d, self.x1d, indexing="ij", sparse=True)

    @cached_property
    def xi(self):
        return np.meshgrid(self.xi1d, self.xi1d, self.xi1d, indexing="ij", sparse=True)

    @cached_property
    def xi_vec(self) -> np.ndarray:
        """Dense ``(3, n, n, n)`` array of lattice frequencies."""
        return np.stack(np.broadcast_arrays(*self.xi))

    @cached_property
    def x_vec(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(*self.x))

    @cached_property
    def abs_xi(self) -> np.ndarray:
        x1, x2, x3 = self.xi
        return np.sqrt(x1 ** 2 + x2 ** 2 + x3 ** 2)

    @cached_property
    def abs_x(self) -> np.ndarray:
        x1, x2, x3 = self.x
        return np.sqrt(x1 ** 2 + x2 ** 2 + x3 ** 2)

    @cached_property
    def japanese(self) -> np.ndarray:
        """``<xi> = (m^2 + |xi|^2)^(1/2)``."""
        return np.sqrt(self.mass ** 2 + self.abs_xi ** 2)

    @cached_property
    def abs_xi_inv_sqrt(self) -> np.ndarray:
        """``|xi|^(-1/2)`` with the zero mode annihilated."""
        return symbol_on_lattice(self, lambda a: a ** -0.5, self.abs_xi)

    @cached_property
    def abs_xi_inv(self) -> np.ndarray:
        return symbol_on_lattice(self, lambda a: 1.0 / a, self.abs_xi)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        m = np.abs(self.m1d) <= self.n / 3
        return m[:, None, None] & m[None, :, None] & m[None, None, :]

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on every mode whose index has a component equal to ``-n/2``."""
        m = self.m1d == -self.n // 2
        return m[:, None, None] | m[None, :, None] | m[None, None, :]

    @property
    def dyadic_range(self):
        """``(k_min, k_max)`` such that shells k_min..k_max plus the zero mode
        tile every lattice frequency."""
        k_min = int(np.floor(np.log2(self.k0)))
        k_max = int(np.ceil(np.log2(np.sqrt(3.0) * self.xi_max)))
        return k_min, k_max

    @property
    def spatial_range(self):
        """``j_max`` such that ``rho(x / 2^j_max) = 1`` on the whole box."""
        return int(np.ceil(np.log2(np.sqrt(3.0) * self.L / 2)))

    def continuum_hat(self, f_hat):
        return self.dV * f_hat

    def norm(self, f_phys) -> float:
        """Physical L^2 norm (all leading component axes summed)."""
        return float(np.sqrt(np.sum(np.abs(f_phys) ** 2) * self.dV))

    def norm_hat(self, f_hat) -> float:
        """The same norm computed from unscaled Fourier coefficients."""
        return float(np.sqrt(np.sum(np.abs(f_hat) ** 2) * self.dV / self.n ** 3))

    def horizon(self, data_radius: float) -> float:
        """Last time at which a unit-speed front from ``data_radius`` stays inside."""
        return self.L / 2 - data_radius

    def descriptor(self) -> dict:
        return {"n": self.n, "L": self.L, "mass": self.mass}


def symbol_on_lattice(grid: FourierGrid, fn: Callable, *args) -> np.ndarray:
    """Evaluate a symbol, replacing a non-finite zero-mode value by 0."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s = np.asarray(fn(*args))
    s = np.array(np.broadcast_to(s, grid.shape) if s.ndim < 3 else s)
    z = s[..., 0, 0, 0]
    if not np.all(np.isfinite(z)):
        s[..., 0, 0, 0] = np.where(np.isfinite(z), z, 0)
    if not np.all(np.isfinite(s)):
        raise ContractError("symbol is not finite on all nonzero lattice points")
    return s


@dataclass
class Field:
    """Scalar ``(n, n, n)`` or multi-component ``(c, n, n, n)`` grid data.

    ``side`` records whether ``data`` holds physical values or unscaled
    Fourier coefficients.  ``flags`` carries non-fatal conditions such as
    an out-of-range shell request.
    """

    data: np.ndarray
    grid: FourierGrid
    side: str = PHYSICAL
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.side not in (PHYSICAL, FOURIER):
            raise ValueError(f"unknown side {self.side!r}")
        if self.data.shape[-3:] != self.grid.shape:
            raise ValueError(f"data shape {self.data.shape} does not match grid {self.grid.shape}")

    @property
    def is_fourier(self) -> bool:
        return self.side == FOURIER

    def fourier(self) -> "Field":
        if self.is_fourier:
            return self
        return Field(fftn(self.data), self.grid, FOURIER)

    def physical(self) -> "Field":
        if not self.is_fourier:
            return self
        return Field(ifftn(self.data), self.grid, PHYSICAL)

    def to_side(self, side: str) -> "Field":
        return self.fourier() if side == FOURIER else self.physical()

    def norm(self) -> float:
        if self.is_fourier:
            return self.grid.norm_hat(self.data)
        return self.grid.norm(self.data)

    def __add__(self, other: "Field") -> "Field":
        other = other.to_side(self.side)
        return Field(self.data + other.data, self.grid, self.side)

    def __sub__(self, other: "Field") -> "Field":
        other = other.to_side(self.side)
        return Field(self.data - other.data, self.grid, self.side)

    def __mul__(self, c) -> "Field":
        return Field(self.data * c, self.grid, self.side)

    __rmul__ = __mul__


Symbol = Union[np.ndarray, Callable]


def apply_multiplier(f: Field, m: Symbol) -> Field:
    """Multiply every Fourier coefficient of ``f`` by ``m(xi)``.

    ``m`` is either an array on the lattice or a callable taking the three
    sparse frequency arrays.  A zero-mode value that is not finite (singular
    symbols such as ``|xi|^(-1/2)``) annihilates the zero mode.
    """
    if not f.is_fourier:
        raise ContractError("apply_multiplier needs fourier-side input")
    if callable(m):
        m = symbol_on_lattice(f.grid, m, *f.grid.xi)
    else:
        m = symbol_on_lattice(f.grid, lambda a: a, m)
    return Field(f.data * m, f.grid, f.side)


def dealias(f: Field) -> Field:
    """2/3 rule: zero every coefficient with some ``|m_j| > n/3``."""
    if not f.is_fourier:
        raise ContractError("dealias needs fourier-side input")
    return Field(np.where(f.grid.dealias_mask, f.data, 0), f.grid, f.side)


def boundary_fraction(f_phys: np.ndarray, grid: FourierGrid, margin: float) -> float:
    """Share of ``||f||^2`` within ``margin`` of the box faces."""
    x1, x2, x3 = grid.x
    edge = grid.L / 2 - margin
    near = (np.abs(x1) > edge) | (np.abs(x2) > edge) | (np.abs(x3) > edge)
    w = np.abs(f_phys) ** 2
    if w.ndim > 3:
        w = w.reshape((-1,) + grid.shape).sum(axis=0)
    tot = w.sum()
    return float(np.where(near, w, 0).sum() / tot) if tot > 0 else 0.0


def wrap_points(grid: FourierGrid, points):
    """Map points into ``[-L/2, L/2)^3``; returns ``(wrapped, was_wrapped)``."""
    p = np.asarray(points, dtype=np.float64)
    w = (p + grid.L / 2) % grid.L - grid.L / 2
    return w, np.any(np.abs(w - p) > 1e-12 * grid.L, axis=-1)


@dataclass
class LowpassTable:
    """Retained modes of ``P_{<=K}`` in a form the point kernel consumes."""

    K: int
    modes: np.ndarray  # (M, 3) int64 lattice indices
    flat_index: np.ndarray  # (M,) indices into the raveled grid
    weights: np.ndarray  # (M,) rho_{<=K}(eta)


DEFAULT_MODE_BUDGET = 200_000


def lowpass_table(grid: FourierGrid, K: int, budget: int = DEFAULT_MODE_BUDGET) -> LowpassTable:
    from .littlewood_paley import rho_le

    r = float(2.0 ** (K + 1))
    # only modes with |eta| < 2^(K+1) can have rho_{<=K} > 0
    mcut = int(np.ceil(r / grid.k0))
    m1 = grid.m1d[np.abs(grid.m1d) <= mcut]
    est = len(m1) ** 3
    if est > 8 * budget:
        raise BudgetError(f"K={K} retains ~{est} candidate modes (budget {budget})")
    mm = np.stack(np.meshgrid(m1, m1, m1, indexing="ij"), axis=-1).reshape(-1, 3)
    w = rho_le(grid.k0 * np.linalg.norm(mm, axis=1), K)
    keep = w > 0
    mm, w = mm[keep], w[keep]
    if len(w) > budget:
        raise BudgetError(f"K={K} retains {len(w)} modes, budget is {budget}")
    idx = np.ravel_multi_index(tuple((mm % grid.n).T), grid.shape)
    return LowpassTable(K, mm.astype(np.int64), idx, w)


def eval_lowpass_at_points(f_hat: np.ndarray, grid: FourierGrid, K: int, points,
                           budget: int = DEFAULT_MODE_BUDGET, table: LowpassTable | None = None):
    """Exact trigonometric evaluation of ``P_{<=K} f`` at arbitrary points.

    ``f_hat`` may carry leading component axes, ``(..., n, n, n)``.
    Returns ``(values, wrapped)`` where ``values`` has shape
    ``f_hat.shape[:-3] + (P,)``.
    """
    if table is None:
        table = lowpass_table(grid, K, budget)
    pts, wrapped = wrap_points(grid, np.atleast_2d(points))
    lead = f_hat.shape[:-3]
    flat = f_hat.reshape((-1, grid.n ** 3))
    coeffs = flat[:, table.flat_index] * (table.weights / grid.n ** 3)
    vals = kernels.lowpass_eval(pts, table.modes, coeffs, grid.k0)
    return vals.reshape(lead + (pts.shape[0],)), wrapped


def eval_lowpass_at_point(f: Field, K: int, point, budget: int = DEFAULT_MODE_BUDGET):
    """Value of ``(P_{<=K} f)(x*)`` for a scalar fourier-side field.

    Points outside the box are wrapped; a ``RuntimeWarning`` flags it.
    """
    if not f.is_fourier:
        raise ContractError("eval_lowpass_at_point needs fourier-side input")
    vals, wrapped = eval_lowpass_at_points(f.data, f.grid, K, np.atleast_2d(point), budget)
    if wrapped[0]:
        warnings.warn("evaluation point wrapped into the periodic box", RuntimeWarning)
    return complex(vals.reshape(-1)[0])
