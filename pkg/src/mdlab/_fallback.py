"""Pure NumPy versions of the hot kernels.

These define the reference semantics; ``_kernels.pyx`` must agree with them
to rounding.  Array layouts:

* spinors: ``(4, N)`` complex128, components ordered (u1, u2, v1, v2) in the
  Pauli-Dirac basis, i.e. ``beta = diag(1, 1, -1, -1)``.
* gauge potentials: ``(4, N)`` float64, lower index ``A_mu``.
"""
import numpy as np

# points per block in lowpass_eval; bounds the (block, modes) temporaries
_BLOCK = 2048


def lowpass_eval(points, modes, coeffs, k0):
    """Evaluate ``sum_m coeffs[c, m] * exp(i k0 m . x_p)`` for every point.

    Parameters
    ----------
    points : (P, 3) float64
    modes : (M, 3) int64
        Integer lattice indices of the retained modes.
    coeffs : (C, M) complex128
    k0 : float
        Lattice spacing of the dual grid, ``2 pi / L``.

    Returns
    -------
    (C, P) complex128
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    modes = np.ascontiguousarray(modes, dtype=np.int64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    n_pts = points.shape[0]
    out = np.zeros((coeffs.shape[0], n_pts), dtype=np.complex128)
    if modes.shape[0] == 0 or n_pts == 0:
        return out
    mmax = int(np.abs(modes).max())
    mvals = np.arange(-mmax, mmax + 1)
    idx = modes + mmax
    for start in range(0, n_pts, _BLOCK):
        x = points[start:start + _BLOCK]
        e1 = np.exp(1j * k0 * x[:, 0:1] * mvals)
        e2 = np.exp(1j * k0 * x[:, 1:2] * mvals)
        e3 = np.exp(1j * k0 * x[:, 2:3] * mvals)
        phase = e1[:, idx[:, 0]] * e2[:, idx[:, 1]] * e3[:, idx[:, 2]]
        out[:, start:start + _BLOCK] = (phase @ coeffs.T).T
    return out


def dirac_source(psi, A):
    """Pointwise ``A_mu alpha^mu psi`` with ``alpha^0 = I``."""
    u1, u2, v1, v2 = psi
    a0, a1, a2, a3 = A
    out = np.empty_like(psi)
    # alpha^j psi = (sigma_j v, sigma_j u)
    out[0] = a0 * u1 + a1 * v2 - 1j * a2 * v2 + a3 * v1
    out[1] = a0 * u2 + a1 * v1 + 1j * a2 * v1 - a3 * v2
    out[2] = a0 * v1 + a1 * u2 - 1j * a2 * u2 + a3 * u1
    out[3] = a0 * v2 + a1 * u1 + 1j * a2 * u1 - a3 * u2
    return out


def current(psi):
    """Pointwise ``J_mu = <psi, alpha_mu psi>`` (lowered with diag(-1,1,1,1))."""
    u1, u2, v1, v2 = psi
    out = np.empty((4,) + psi.shape[1:], dtype=np.float64)
    out[0] = -(np.abs(u1) ** 2 + np.abs(u2) ** 2 + np.abs(v1) ** 2 + np.abs(v2) ** 2)
    c12 = np.conj(u1) * v2
    c21 = np.conj(u2) * v1
    out[1] = 2.0 * (c12.real + c21.real)
    out[2] = 2.0 * (c12.imag - c21.imag)
    out[3] = 2.0 * (np.conj(u1) * v1 - np.conj(u2) * v2).real
    return out
