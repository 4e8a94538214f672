import time

import numpy as np
import pytest

from mdlab.dirac import (ALPHA, ALPHA_DOWN, ALPHA_UP, BETA, apply_alpha, apply_beta, apply_hamiltonian,
                         clifford_residual, commutator_symbols, free_dirac_hat, identity_suite,
                         project_hat, project_spinor, projector_at, random_xi,
                         riesz_commutation_residual, scalar_reduction_residual)
from mdlab.grid import FOURIER, Field, FourierGrid

I4 = np.eye(4)


def test_matrices_hermitian_and_clifford():
    for a in list(ALPHA) + [BETA]:
        assert np.allclose(a, a.conj().T)
    assert clifford_residual() < 1e-15
    assert np.allclose(ALPHA_UP[0], I4)
    assert np.allclose(ALPHA_DOWN[0], -I4)
    assert np.allclose(ALPHA_DOWN[1:], ALPHA)


def test_projector_at_zero():
    assert np.allclose(projector_at(np.zeros(3), 1), np.diag([1, 1, 0, 0]))
    assert np.allclose(projector_at(np.zeros(3), -1), np.diag([0, 0, 1, 1]))


def test_projectors_sum_and_square():
    xi = random_xi(200, seed=3)
    p, m = projector_at(xi, 1), projector_at(xi, -1)
    assert np.abs(p + m - I4).max() < 1e-14
    assert np.abs(p @ p - p).max() < 1e-14
    assert np.abs(p @ m).max() < 1e-14


def test_projector_requires_positive_mass():
    with pytest.raises(ValueError):
        projector_at(np.zeros(3), 1, mass=0.0)


def test_riesz_commutation_examples():
    for j in (1, 2, 3):
        for th in (1, -1):
            assert riesz_commutation_residual(np.zeros(3), j, th) == 0
    assert riesz_commutation_residual(np.array([1.0, 0, 0]), 1, 1) <= 1e-13
    xi = random_xi(10_000, seed=5)
    worst = max(riesz_commutation_residual(xi, j, th).max() for j in (1, 2, 3) for th in (1, -1))
    assert worst <= 1e-12


def test_scalar_reduction():
    xi = random_xi(500, seed=6)
    c = np.random.default_rng(0).normal(size=(500, 4))
    assert scalar_reduction_residual(xi, c, 1).max() < 1e-13
    assert scalar_reduction_residual(xi, c, -1).max() < 1e-13


def test_commutator_symbols_at_zero():
    s = commutator_symbols(np.zeros(3), 1)
    for v in s["rotation"].values():
        assert np.all(v == 0)
    for j in (1, 2, 3):
        assert np.allclose(s["boost"][j], 0.5j * ALPHA[j - 1])
    s = commutator_symbols(np.zeros(3), -1)
    assert np.allclose(s["boost"][2], -0.5j * ALPHA[1])


def test_rotation_symbol_anti_hermitian_after_i():
    xi = random_xi(50, seed=7)
    s = commutator_symbols(xi, 1)["rotation"][(1, 2)]
    # the symbol is Hermitian, so i times it is anti-Hermitian
    m = 1j * s
    assert np.abs(m + np.conj(np.swapaxes(m, -1, -2))).max() < 1e-14


def test_field_operators_match_matrices():
    rng = np.random.default_rng(8)
    psi = rng.normal(size=(4, 5)) + 1j * rng.normal(size=(4, 5))
    for j in range(4):
        assert np.allclose(apply_alpha(j, psi), ALPHA_UP[j] @ psi)
    assert np.allclose(apply_beta(psi), BETA @ psi)
    xi = rng.normal(size=3)
    H = np.einsum("j,jab->ab", xi, ALPHA) + 1.3 * BETA
    assert np.allclose(apply_hamiltonian(xi, psi, 1.3), H @ psi)
    with pytest.raises(ValueError):
        apply_alpha(4, psi)


def random_spinor(g, seed):
    rng = np.random.default_rng(seed)
    return Field(rng.normal(size=(4,) + g.shape) + 1j * rng.normal(size=(4,) + g.shape), g)


def test_project_spinor_zero_mode_example():
    g = FourierGrid(8, 10.0)
    a = np.zeros((4,) + g.shape, dtype=complex)
    a[0, 0, 0, 0] = 1.0
    f = Field(a, g, FOURIER)
    assert np.allclose(project_spinor(f, 1).data, a)
    assert np.allclose(project_spinor(f, -1).data, 0)


def test_project_spinor_orthogonal_and_idempotent():
    g = FourierGrid(8, 10.0)
    f = random_spinor(g, 9)
    p, m = project_spinor(f, 1), project_spinor(f, -1)
    assert abs(p.norm() ** 2 + m.norm() ** 2 - f.norm() ** 2) <= 1e-12 * f.norm() ** 2
    assert np.abs(project_spinor(p, 1).data - p.data).max() <= 1e-12 * np.abs(p.data).max()


def test_free_dirac_is_unitary_group():
    g = FourierGrid(8, 10.0)
    f = random_spinor(g, 10).fourier().data
    a = free_dirac_hat(free_dirac_hat(f, g, 0.3), g, 0.4)
    b = free_dirac_hat(f, g, 0.7)
    assert np.abs(a - b).max() < 1e-12 * np.abs(f).max()
    assert g.norm_hat(b) == pytest.approx(g.norm_hat(f), rel=1e-13)
    # branches rotate with opposite frequencies
    p = project_hat(f, g, 1)
    assert np.allclose(free_dirac_hat(p, g, 0.5), np.exp(-0.5j * g.japanese) * p, atol=1e-12)


def test_identity_suite_fast_and_tight():
    t0 = time.perf_counter()
    res = identity_suite()
    assert time.perf_counter() - t0 < 1.0
    assert max(res.values()) <= 1e-12
    assert {"clifford", "riesz_commutation", "scalar_reduction"} <= set(res)
