"""Pauli-Dirac matrices, the projections ``Pi_theta(xi)`` and their identities.

Explicit representation (``sigma_j`` the Pauli matrices)::

    alpha^j = [[0, sigma_j], [sigma_j, 0]],   beta = diag(1, 1, -1, -1),
    alpha^0 = I_4,   alpha_mu = eta_{mu nu} alpha^nu,  eta = diag(-1, 1, 1, 1).

Spinor arrays put the component axis first: ``(4, ...)``.
"""
from __future__ import annotations

import numpy as np

from .grid import Field, FOURIER

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)
I2 = np.eye(2, dtype=np.complex128)
I4 = np.eye(4, dtype=np.complex128)
Z2 = np.zeros((2, 2), dtype=np.complex128)

ALPHA = np.array([np.block([[Z2, s], [s, Z2]]) for s in SIGMA])  # alpha^1..3
BETA = np.block([[I2, Z2], [Z2, -I2]])
ALPHA_UP = np.concatenate([I4[None], ALPHA])  # alpha^mu, mu = 0..3
METRIC = np.diag([-1.0, 1.0, 1.0, 1.0])
ALPHA_DOWN = np.einsum("mn,nab->mab", METRIC, ALPHA_UP)  # alpha_mu


def _check_mass(mass):
    if not mass > 0:
        raise ValueError("only the massive system (m > 0) is supported")


def japanese(xi, mass=1.0):
    xi = np.asarray(xi, dtype=np.float64)
    return np.sqrt(mass ** 2 + np.sum(xi ** 2, axis=-1))


def projector_at(xi, theta: int, mass: float = 1.0) -> np.ndarray:
    """``Pi_theta(xi) = (I + theta (alpha.xi + m beta) / <xi>) / 2``.

    ``xi`` may be a single 3-vector or a stack ``(..., 3)``; the result has
    shape ``(..., 4, 4)``.
    """
    _check_mass(mass)
    xi = np.asarray(xi, dtype=np.float64)
    h = np.einsum("...j,jab->...ab", xi, ALPHA) + mass * BETA
    return 0.5 * (I4 + theta * h / japanese(xi, mass)[..., None, None])


def clifford_residual() -> float:
    """Max entry error of the anticommutation relations (exact in this basis)."""
    err = 0.0
    for j in range(3):
        for k in range(3):
            ac = ALPHA[j] @ ALPHA[k] + ALPHA[k] @ ALPHA[j]
            err = max(err, np.abs(ac - 2.0 * (j == k) * I4).max())
        err = max(err, np.abs(ALPHA[j] @ BETA + BETA @ ALPHA[j]).max())
    err = max(err, np.abs(BETA @ BETA - I4).max())
    for m in (*ALPHA, BETA):
        err = max(err, np.abs(m - m.conj().T).max())
    return float(err)


def projector_residuals(xi, mass: float = 1.0) -> dict:
    """Max entrywise residual of each projector identity over a stack of xi."""
    pp = projector_at(xi, +1, mass)
    pm = projector_at(xi, -1, mass)
    herm = lambda a: np.swapaxes(a.conj(), -1, -2)
    return {
        "sum": float(np.abs(pp + pm - I4).max()),
        "orthogonal": float(np.abs(pp @ pm).max()),
        "idempotent_plus": float(np.abs(pp @ pp - pp).max()),
        "idempotent_minus": float(np.abs(pm @ pm - pm).max()),
        "hermitian": float(max(np.abs(pp - herm(pp)).max(), np.abs(pm - herm(pm)).max())),
        "trace": float(np.abs(np.trace(pp, axis1=-2, axis2=-1) - 2).max()),
    }


def riesz_commutation_residual(xi, j: int, theta: int, mass: float = 1.0):
    """Frobenius norm of ``alpha^j Pi_theta - Pi_{-theta} alpha^j - theta xi_j/<xi> I``.

    ``j`` is 1-based.  Works on stacks of ``xi``.
    """
    xi = np.asarray(xi, dtype=np.float64)
    a = ALPHA[j - 1]
    lhs = a @ projector_at(xi, theta, mass)
    rhs = projector_at(xi, -theta, mass) @ a
    riesz = (theta * xi[..., j - 1] / japanese(xi, mass))[..., None, None] * I4
    return np.sqrt(np.sum(np.abs(lhs - rhs - riesz) ** 2, axis=(-2, -1)))


def scalar_reduction_residual(xi, c, theta: int, mass: float = 1.0):
    """``|| Pi (c0 + c_j alpha^j) Pi - (c0 + theta c.xi/<xi>) Pi ||_max``."""
    xi = np.asarray(xi, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    p = projector_at(xi, theta, mass)
    m = c[..., 0, None, None] * I4 + np.einsum("...j,jab->...ab", c[..., 1:], ALPHA)
    scal = c[..., 0] + theta * np.sum(c[..., 1:] * xi, axis=-1) / japanese(xi, mass)
    return np.abs(p @ m @ p - scal[..., None, None] * p).max(axis=(-2, -1))


def commutator_symbols(xi, theta: int, mass: float = 1.0) -> dict:
    """Symbols of ``[Omega_jk, Pi_theta]`` and of ``[Gamma_j, Pi_theta]``.

    ``rotation[(j, k)]`` is the symbol of
    ``theta (i/2) (alpha_j d_k - alpha_k d_j) / <D>`` with ``d_k -> i xi_k``,
    i.e. ``-(theta/2) (alpha_j xi_k - alpha_k xi_j) / <xi>``.
    ``boost[j]`` is the symbol multiplying ``d_t``:
    ``theta (i/2) (alpha_j / <xi> - (alpha.xi + m beta) xi_j / <xi>^3)``.
    Axis labels are 1-based.
    """
    _check_mass(mass)
    xi = np.asarray(xi, dtype=np.float64)
    jap = japanese(xi, mass)[..., None, None]
    rot = {}
    for (j, k) in ((2, 3), (3, 1), (1, 2)):
        s = ALPHA[j - 1] * xi[..., k - 1, None, None] - ALPHA[k - 1] * xi[..., j - 1, None, None]
        rot[(j, k)] = -0.5 * theta * s / jap
    h = np.einsum("...j,jab->...ab", xi, ALPHA) + mass * BETA
    boost = {}
    for j in (1, 2, 3):
        boost[j] = 0.5j * theta * (ALPHA[j - 1] / jap - h * xi[..., j - 1, None, None] / jap ** 3)
    return {"rotation": rot, "boost": boost}


# ---------------------------------------------------------------------------
# field-level operators (vectorised over the lattice)


def apply_alpha(j: int, psi):
    """``alpha^j psi`` for a ``(4, ...)`` array, ``j`` in 0..3."""
    u1, u2, v1, v2 = psi
    if j == 0:
        return psi.copy()
    if j == 1:
        return np.stack([v2, v1, u2, u1])
    if j == 2:
        return np.stack([-1j * v2, 1j * v1, -1j * u2, 1j * u1])
    if j == 3:
        return np.stack([v1, -v2, u1, -u2])
    raise ValueError(j)


def apply_beta(psi):
    return psi * np.array([1, 1, -1, -1]).reshape((4,) + (1,) * (psi.ndim - 1))


def apply_hamiltonian(xi, psi, mass):
    """``(alpha.xi + m beta) psi`` with ``xi`` a length-3 sequence of
    arrays broadcastable against ``psi[0]``."""
    u1, u2, v1, v2 = psi
    x1, x2, x3 = xi
    # sigma.xi applied to a 2-spinor (w1, w2)
    sv1 = x3 * v1 + (x1 - 1j * x2) * v2
    sv2 = (x1 + 1j * x2) * v1 - x3 * v2
    su1 = x3 * u1 + (x1 - 1j * x2) * u2
    su2 = (x1 + 1j * x2) * u1 - x3 * u2
    return np.stack([sv1 + mass * u1, sv2 + mass * u2, su1 - mass * v1, su2 - mass * v2])


def project_hat(psi_hat, grid, theta: int):
    """``Pi_theta`` applied per mode to fourier-side spinor data."""
    _check_mass(grid.mass)
    h = apply_hamiltonian(grid.xi, psi_hat, grid.mass)
    return 0.5 * (psi_hat + theta * h / grid.japanese)


def free_dirac_hat(psi_hat, grid, t: float):
    """``exp(-i t (alpha.D + m beta))`` applied per mode."""
    jap = grid.japanese
    h = apply_hamiltonian(grid.xi, psi_hat, grid.mass)
    return np.cos(t * jap) * psi_hat - 1j * np.sin(t * jap) * h / jap


def project_spinor(psi: Field, theta: int) -> Field:
    """``Pi_theta psi``, returned fourier-side."""
    g = psi.fourier()
    return Field(project_hat(g.data, g.grid, theta), g.grid, FOURIER)


def random_xi(n: int, seed: int = 0, log2_min: float = -6.0, log2_max: float = 6.0) -> np.ndarray:
    """``n`` frequencies with isotropic directions and log-uniform radii."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (2.0 ** rng.uniform(log2_min, log2_max, n))[:, None]


def identity_suite(n_samples: int = 10_000, seed: int = 0, mass: float = 1.0) -> dict:
    """Max residual of every pointwise matrix identity over random ``xi``."""
    xi = random_xi(n_samples, seed)
    c = np.random.default_rng([seed, 1]).normal(size=(n_samples, 4))
    out = {"clifford": clifford_residual()}
    for key, val in projector_residuals(xi, mass).items():
        out[f"projector_{key}"] = val
    out["riesz_commutation"] = float(max(riesz_commutation_residual(xi, j, th, mass).max()
                                         for j in (1, 2, 3) for th in (1, -1)))
    out["scalar_reduction"] = float(max(scalar_reduction_residual(xi, c, th, mass).max() for th in (1, -1)))
    return out
