import numpy as np
import pytest

from mdlab.grid import ContractError
from mdlab.resonance import (EMPTY, ETA_ZERO, SIGN_TRIPLES, XI_MINUS_2ETA, XI_ZERO, SampleSpec,
                             check_classification, classify_sets, full_scan, grad_eta, phase,
                             phase_approximation_scan, sample_points, scan_lower_bounds)

SMALL = SampleSpec(n_samples=20_000, n_targeted=4_000)


def test_dirac_phase_examples():
    z = np.zeros(3)
    e1 = np.array([1.0, 0, 0])
    assert phase("dirac", (1, 1, 1), z, z) == pytest.approx(0.0)
    assert phase("dirac", (1, -1, 1), z, z) == pytest.approx(2.0)
    assert phase("dirac", (1, 1, 1), e1, e1) == pytest.approx(np.sqrt(2.0))


def test_dirac_gradient_at_equal_frequencies():
    e1 = np.array([1.0, 0, 0])
    g = grad_eta("dirac", (1, 1, 1), e1, e1)
    # xi - eta = 0 leaves only the |eta| term, whose gradient is eta/|eta|
    assert np.allclose(g, [1.0, 0, 0])
    assert np.linalg.norm(g) == pytest.approx(1.0)
    # the space-resonance bound saturates here: |grad| * <xi - eta>^2 = 1
    assert np.linalg.norm(g) * 1.0 ** 2 >= 1.0 - 1e-15


def test_maxwell_space_resonance_at_zero_xi():
    eta = np.array([0.3, -1.2, 0.7])
    for s in (1, -1):
        assert np.allclose(grad_eta("maxwell", (1, s, s), np.zeros(3), eta), 0.0, atol=1e-15)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    h = 1e-6
    for kind in ("dirac", "maxwell"):
        for signs in SIGN_TRIPLES:
            xi, eta = rng.normal(size=3), rng.normal(size=3)
            g = grad_eta(kind, signs, xi, eta)
            fd = np.array([(phase(kind, signs, xi, eta + h * e) - phase(kind, signs, xi, eta - h * e)) / (2 * h)
                           for e in np.eye(3)])
            assert np.allclose(g, fd, atol=1e-8)


def test_dirac_gradient_undefined_at_zero_eta():
    with pytest.raises(ContractError):
        grad_eta("dirac", (1, 1, 1), np.ones(3), np.zeros(3))


def test_phase_sign_symmetry():
    rng = np.random.default_rng(1)
    xi, eta = rng.normal(size=(10, 3)), rng.normal(size=(10, 3))
    for kind in ("dirac", "maxwell"):
        for signs in SIGN_TRIPLES:
            neg = tuple(-s for s in signs)
            assert np.allclose(phase(kind, neg, xi, eta), -phase(kind, signs, xi, eta))
            assert np.allclose(phase(kind, signs, -xi, -eta), phase(kind, signs, xi, eta))


def test_bad_arguments():
    with pytest.raises(ValueError):
        phase("klein", (1, 1, 1), np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        phase("dirac", (1, 0, 1), np.zeros(3), np.zeros(3))


def test_classification_table():
    assert classify_sets("dirac", (1, 1, -1)) == {"T": ETA_ZERO, "S": EMPTY, "R": EMPTY}
    assert classify_sets("dirac", (1, -1, 1))["T"] == EMPTY
    assert classify_sets("maxwell", (1, 1, 1)) == {"T": XI_ZERO, "S": XI_ZERO, "R": XI_ZERO}
    assert classify_sets("maxwell", (-1, 1, -1)) == {"T": EMPTY, "S": XI_MINUS_2ETA, "R": EMPTY}


def test_maxwell_mixed_space_resonance_locus():
    eta = np.array([0.4, 0.1, -0.3])
    assert np.allclose(grad_eta("maxwell", (1, 1, -1), -2 * eta, eta), 0.0, atol=1e-15)


def test_sampling_is_seeded_and_filtered():
    a = sample_points("dirac", (1, 1, 1), SMALL)
    b = sample_points("dirac", (1, 1, 1), SMALL)
    assert np.array_equal(a[0], b[0])
    assert np.linalg.norm(a[1], axis=1).min() >= 1e-12


def test_dirac_time_bound_argmin_near_eta_zero():
    res = {r.bound: r for r in scan_lower_bounds("dirac", (1, 1, 1), SMALL)}
    t = res["time"]
    assert t.min_ratio > 0
    assert np.linalg.norm(t.raw_argmin_eta) < 1e-2


def test_dirac_nonresonant_time_bound_order_one():
    res = {r.bound: r for r in scan_lower_bounds("dirac", (1, -1, 1), SMALL)}
    assert res["time"].min_ratio >= 1.0


def test_maxwell_equal_sign_time_bound_positive():
    res = {r.bound: r for r in scan_lower_bounds("maxwell", (1, 1, 1), SMALL)}
    assert res["time"].min_ratio > 0 and res["space"].min_ratio > 0


def test_classification_checks_consistent():
    # the separation test needs the full targeted sample near each set
    spec = SampleSpec(n_samples=20_000, n_targeted=20_000)
    for kind in ("dirac", "maxwell"):
        for signs in SIGN_TRIPLES:
            assert check_classification(kind, signs, spec).consistent, (kind, signs)


def test_full_scan_small():
    out = full_scan(SMALL)
    assert len(out["bounds"]) == 2 * 8 * 2
    assert all(b["min_ratio"] > 0 for b in out["bounds"])


def test_phase_approximation_small():
    res = phase_approximation_scan(20_000)
    assert 0 < res["max_constant"] <= 1.1
    assert np.linalg.norm(res["argmax_xi"]) <= 8.0 and np.linalg.norm(res["argmax_eta"]) <= 1.0
