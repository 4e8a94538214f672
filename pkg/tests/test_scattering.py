import math

import numpy as np
import pytest
from scipy.linalg import expm

from mdlab.dirac import ALPHA, projector_at, random_xi
from mdlab.evolution import IntegratorConfig, run
from mdlab.grid import FOURIER, ContractError, Field, FourierGrid, fftn
from mdlab.littlewood_paley import rho_k, spatial_cutoff, u_set
from mdlab.scattering import (ModesSpec, PaperConstants, PhaseAccumulator, PhaseCorrectionTable,
                              SnapshotRecorder, accumulate_phase, corrected_profile, cutoff_K,
                              drift_report, new_phase_table, norm_D, norm_M, profile, snapshot,
                              weighted_energy, xi_derivative_hat, xi_derivative_norm)
from mdlab.state import DataRecipe, MDState, gaussian, make_initial_data

G = FourierGrid(16, 20.0)


def test_constants():
    c = PaperConstants()
    assert c.zeta == pytest.approx(1.05e-7)
    assert c.delta_bar == pytest.approx(4.1e-8)
    assert c.overrides() == {}
    assert PaperConstants(delta=0.0).overrides() == {"delta": 0.0}
    assert PaperConstants(zeta_override=0.0).zeta == 0.0


def test_cutoff_K_examples():
    assert cutoff_K(0.0) == 0
    s8 = math.sqrt(63.0)
    assert cutoff_K(s8) == -3
    assert cutoff_K(s8, zeta=0.0) == -2
    with pytest.raises(ValueError):
        cutoff_K(-1.0)


def _state_with_constant_A0(grid, c, psi_amp=0.05):
    st = make_initial_data(grid, DataRecipe(amplitude=psi_amp, gauge_amplitude=0.0))
    st.A_hat[:] = 0
    st.Adot_hat[:] = 0
    st.A_hat[0, 0, 0, 0] = c * grid.n ** 3
    return st


def test_phase_unchanged_without_field():
    st = _state_with_constant_A0(G, 0.0)
    tab = new_phase_table(G)
    for t in (0.0, 0.5, 1.0):
        accumulate_phase(tab, st.copy(t=t))
    assert np.all(tab.b[1] == 0) and np.all(tab.b[-1] == 0)


def test_constant_A0_gives_linear_phase():
    c = 0.37
    st = _state_with_constant_A0(G, c)
    tab = new_phase_table(G)
    for t in np.linspace(0.0, 3.0, 13):
        accumulate_phase(tab, st.copy(t=float(t)))
    sel = np.zeros(G.shape, dtype=bool).reshape(-1)
    sel[tab.flat_index] = True
    sel = sel.reshape(G.shape)
    for th in (1, -1):
        ok = sel & ~tab.wrapped[th]
        assert ok.sum() > 100
        assert np.abs(tab.b[th][ok] - c * 3.0).max() <= 1e-8
        assert np.all(tab.b[th][~sel] == 0)


def test_zero_mode_phase_uses_origin_value():
    st = make_initial_data(G, DataRecipe(amplitude=0.05))
    tab = new_phase_table(G)
    accumulate_phase(tab, st.copy(t=0.0))
    accumulate_phase(tab, st.copy(t=0.5))
    from mdlab.grid import eval_lowpass_at_point
    a0 = eval_lowpass_at_point(Field(st.A_hat[0], G, FOURIER), 0, (0, 0, 0)).real
    a0b = eval_lowpass_at_point(Field(st.A_hat[0], G, FOURIER), cutoff_K(0.5), (0, 0, 0)).real
    assert tab.b[1][0, 0, 0] == pytest.approx(0.25 * (a0 + a0b), rel=1e-12)
    assert tab.b[-1][0, 0, 0] == tab.b[1][0, 0, 0]


def test_table_round_trip_and_time_order():
    st = make_initial_data(G, DataRecipe(amplitude=0.05))
    tab = new_phase_table(G, xi_max=2.0)
    accumulate_phase(tab, st.copy(t=0.0))
    accumulate_phase(tab, st.copy(t=0.3))
    back = PhaseCorrectionTable.from_arrays(G, tab.to_arrays())
    for th in (1, -1):
        assert np.array_equal(back.b[th], tab.b[th])
    assert back.times == tab.times and back.Ks == tab.Ks
    with pytest.raises(ContractError):
        accumulate_phase(tab, st.copy(t=0.1))


def test_corrected_profile_examples():
    st = make_initial_data(G, DataRecipe(amplitude=0.05), t=0.0)
    tab = new_phase_table(G)
    accumulate_phase(tab, st)
    for th in (1, -1):
        assert np.array_equal(corrected_profile(st, tab, th).data, profile(st, th))
    tab.b[1][:] = np.random.default_rng(0).normal(size=G.shape)
    out = corrected_profile(st, tab, 1).data
    assert np.allclose(np.abs(out), np.abs(profile(st, 1)), rtol=1e-14, atol=0)
    with pytest.raises(ContractError):
        corrected_profile(st.copy(t=1.0), tab, 1)


def test_scalar_phase_matches_matrix_exponential():
    rng = np.random.default_rng(1)
    for xi in random_xi(20, seed=2, log2_min=-3, log2_max=3):
        c = rng.normal(size=4)
        for th in (1, -1):
            P = projector_at(xi, th)
            v = P @ (rng.normal(size=4) + 1j * rng.normal(size=4))
            X = c[0] * np.eye(4) + np.einsum("j,jab->ab", c[1:], ALPHA)
            b = c[0] + th * xi @ c[1:] / math.sqrt(1 + xi @ xi)
            assert np.abs(expm(-1j * P @ X) @ v - np.exp(-1j * b) * v).max() <= 1e-10


def test_norm_D_examples():
    g = FourierGrid(8, 2 * np.pi)  # xi(m) = m, so |xi| = 1 sits on the k = 0 shell
    assert norm_D(Field(np.zeros((4,) + g.shape, dtype=complex), g, FOURIER)).value == 0
    a = np.zeros((4,) + g.shape, dtype=complex)
    a[1, 1, 0, 0] = 1.0 / g.dV  # unit continuum amplitude
    rep = norm_D(Field(a, g, FOURIER))
    expect = 2.0 ** 10 + 2.0 ** 19 * (2 * np.pi) ** -1.5
    assert rep.value == pytest.approx(expect, rel=1e-12)
    assert rep.value == pytest.approx(34312.95, abs=0.01)
    assert rep.argmax_k == 0
    assert norm_D(Field(2 * a, g, FOURIER)).value == pytest.approx(2 * rep.value, rel=1e-14)
    with pytest.raises(ContractError):
        norm_D(Field(a, g))


def test_norm_M_examples():
    g = FourierGrid(32, 20.0)
    z = Field(np.zeros(g.shape, dtype=complex), g, FOURIER)
    assert norm_M(z).value == 0
    V = Field(fftn(gaussian(g, 1.0) + 0j), g, FOURIER)
    rep = norm_M(V)
    assert norm_M(V * (3 - 4j)).value == pytest.approx(5 * rep.value, rel=1e-12)
    const = PaperConstants()
    expo = 1 + 5 * const.H[2] * const.delta
    brute = 0.0
    for k in range(*g.dyadic_range):
        pk = np.fft.ifftn(rho_k(g.abs_xi, k) * V.data)
        s = sum(2.0 ** j * np.sqrt(np.sum(np.abs(spatial_cutoff(g, j, k) * pk) ** 2) * g.dV) for j in u_set(g, k))
        brute = max(brute, (1 + 4.0 ** k) ** 12.5 * 2.0 ** (expo * k) * s)
    k_max = g.dyadic_range[1]
    pk = np.fft.ifftn(rho_k(g.abs_xi, k_max) * V.data)
    s = sum(2.0 ** j * np.sqrt(np.sum(np.abs(spatial_cutoff(g, j, k_max) * pk) ** 2) * g.dV)
            for j in u_set(g, k_max))
    brute = max(brute, (1 + 4.0 ** k_max) ** 12.5 * 2.0 ** (expo * k_max) * s)
    assert rep.value == pytest.approx(brute, rel=1e-9)


def test_xi_derivative_gaussian_moment():
    g = FourierGrid(64, 40.0)
    vals = []
    for w in (1.0, 2.0, 4.0):
        f = Field(gaussian(g, w) + 0j, g)
        r = xi_derivative_norm(f, 1) / ((2 * np.pi) ** 1.5 * f.norm())
        vals.append(r)
        assert r == pytest.approx(w / math.sqrt(2), rel=1e-8)
    assert vals[2] / vals[0] == pytest.approx(4.0, rel=1e-6)


def test_xi_derivative_finite_difference_oracle():
    g = FourierGrid(16, 24.0)
    c = np.array([1.5, -0.5, 0.25])
    f = gaussian(g, 1.5, c) + 0j
    d = xi_derivative_hat(Field(f, g), 1) * g.dV
    x = np.stack(np.broadcast_arrays(*g.x))
    h = 1e-4

    def ft(xi):
        return g.dV * np.sum(f * np.exp(-1j * np.tensordot(xi, x, axes=(0, 0))))

    for m in ((1, 0, 0), (2, -1, 3), (0, 2, 1)):
        xi = g.k0 * np.array(m, dtype=float)
        e = np.array([h, 0, 0])
        fd = (ft(xi + e) - ft(xi - e)) / (2 * h)
        assert abs(d[tuple(np.array(m) % g.n)] - fd) <= 1e-6 * max(1.0, abs(fd))


def test_weighted_energy_basic():
    g = FourierGrid(16, 20.0)
    z = Field(np.zeros((4,) + g.shape, dtype=complex), g, FOURIER)
    assert weighted_energy(z, 0).value == 0
    f = Field(np.stack([gaussian(g, 1.5)] * 4) + 0j, g)
    r = weighted_energy(f, 1)
    assert r.value > 0 and not r.flag_boundary
    wide = Field(np.stack([gaussian(g, 6.0)] * 4) + 0j, g)
    assert weighted_energy(wide, 1).flag_boundary
    assert weighted_energy(f, 1, kind="maxwell").value != r.value
    with pytest.raises(ValueError):
        weighted_energy(f, 3)


def _trajectory(state, cfg, times, T):
    tab = new_phase_table(state.grid)
    acc = PhaseAccumulator(tab)
    acc.start(state)
    rec = SnapshotRecorder(times, tab)
    rec.start(state)
    run(state, cfg, T, step_hooks=[acc, rec])
    return rec.snapshots


def test_drift_equal_times_is_zero():
    st = make_initial_data(G, DataRecipe(amplitude=0.05))
    snaps = {0.0: snapshot(st)}
    d = drift_report(snaps, 0.0, 0.0)
    assert d["uncorrected"] == 0 and d["corrected"] == 0 and d["maxwell_total"] == 0
    assert d["ratio"] == 0.0
    with pytest.raises(ContractError):
        drift_report({0.0: snapshot(st), 1.0: snapshot(st)}, 1.0, 0.0)


def test_drift_without_coupling_is_zero():
    st = make_initial_data(G, DataRecipe(amplitude=0.05, gauge_amplitude=0.0))
    st = st.copy(A_hat=np.zeros_like(st.A_hat), Adot_hat=np.zeros_like(st.Adot_hat))
    snaps = _trajectory(st, IntegratorConfig(coupling="off"), [0.0, 1.0, 2.0], 2.0)
    d = drift_report(snaps, 0.0, 2.0)
    scale = np.abs(snaps[0.0].phi[1]).max() * G.dV
    assert d["uncorrected"] <= 1e-13 * scale
    assert d["corrected"] <= 1e-13 * scale
    assert d["maxwell_total"] == 0


def test_free_gauge_profiles_are_constant():
    st = make_initial_data(G, DataRecipe(amplitude=0.05))
    snaps = _trajectory(st, IntegratorConfig(coupling="off"), [0.0, 1.5], 1.5)
    d = drift_report(snaps, 0.0, 1.5)
    ref = sum(np.abs(snaps[0.0].V[s]).sum() for s in (1, -1))
    assert d["maxwell_total"] <= 1e-12 * max(ref, 1.0)
    assert d["uncorrected"] <= 1e-13 * np.abs(snaps[0.0].phi[1]).max() * G.dV


def test_coupled_drift_report_shape():
    st = make_initial_data(G, DataRecipe(amplitude=0.05))
    snaps = _trajectory(st, IntegratorConfig(), [0.0, 1.0], 1.0)
    d = drift_report(snaps, 0.0, 1.0, ModesSpec(top=5))
    assert len(d["top_modes"]) == 5
    assert d["uncorrected"] > 0
    amps = [m["amplitude"] for m in d["top_modes"]]
    assert amps == sorted(amps, reverse=True)
    assert set(d["maxwell_by_shell"]) == set(range(-3, 3))


def test_snapshot_requires_synchronized_table():
    st = make_initial_data(G, DataRecipe())
    tab = new_phase_table(G)
    with pytest.raises(ContractError):
        snapshot(st, tab)
    assert isinstance(MDState.vacuum(G), MDState)
