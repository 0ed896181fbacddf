"""Brute-force master-equation engine: contracts against closed forms."""

import math
import warnings

import numpy as np
import pytest

from kerrqed.errors import CutoffError, CutoffWarning, SolverError
from kerrqed.fields import solve_pointer_pump
from kerrqed.lindblad import (
    HilbertConfig,
    build_generator,
    coherent_state,
    evolve_to_steady,
    floquet_steady,
    oracle_spectrum,
    steady_state_exact,
    superoperator_matrix,
)
from kerrqed.model import DriveSpec, QubitSpec, ResonatorSpec
from kerrqed.reduced import ReducedRates, steady_state_p1

TWO_PI = 2.0 * math.pi


def micro_hilbert(levels=2, n_fock=4, **kw):
    return HilbertConfig(levels=levels, n_fock=n_fock, **kw)


def basis_rho(dim, i, j):
    rho = np.zeros((dim, dim), complex)
    rho[i, j] = 1.0
    return rho


def test_coherent_state_amplitudes():
    alpha = 0.7 - 0.4j
    amp = coherent_state(alpha, 24)
    assert np.linalg.norm(amp) == pytest.approx(1.0, rel=1e-12)
    n = np.arange(24)
    fact = np.array([math.factorial(k) for k in n], dtype=float)
    want = np.exp(-0.5 * abs(alpha) ** 2) * alpha**n / np.sqrt(fact)
    assert np.allclose(amp, want, atol=1e-12)
    nbar = float(np.sum(np.abs(amp) ** 2 * n))
    assert nbar == pytest.approx(abs(alpha) ** 2, rel=1e-10)
    vac = coherent_state(0.0, 6)
    assert vac[0] == 1.0 and np.all(vac[1:] == 0.0)


def test_vacuum_is_fixed_point(two_level_qubit, kerr_resonator):
    gen = build_generator(
        two_level_qubit, kerr_resonator, (), micro_hilbert(n_fock=6))
    rho = basis_rho(gen.dim, 0, 0)
    deriv = gen.apply_static(rho)
    assert float(np.max(np.abs(deriv))) < 1e-12
    exact = steady_state_exact(gen)
    assert exact.rho[0, 0].real == pytest.approx(1.0, abs=1e-9)


def test_decay_and_dephasing_rates(three_level_qubit, kerr_resonator):
    # Instantaneous derivatives of populations and coherences against
    # the stated channel rates (angular internally, MHz in the specs).
    q = three_level_qubit
    hil = micro_hilbert(levels=3, n_fock=4, frame_mhz=0.0)
    gen = build_generator(q, kerr_resonator, (), hil)
    N = hil.n_fock
    # Excited population decays at 2 pi gamma; level 2 at the ladder
    # weight (g_1/g_0)^2.
    rho = basis_rho(gen.dim, N, N)
    deriv = gen.apply_static(rho)
    assert deriv[N, N].real == pytest.approx(-TWO_PI * q.gamma, rel=1e-12)
    assert deriv[0, 0].real == pytest.approx(TWO_PI * q.gamma, rel=1e-12)
    rho = basis_rho(gen.dim, 2 * N, 2 * N)
    deriv = gen.apply_static(rho)
    w2 = (q.g[1] / q.g[0]) ** 2
    assert deriv[2 * N, 2 * N].real == pytest.approx(
        -TWO_PI * q.gamma * w2, rel=1e-12)
    # Qubit coherences: -i omega_i0 - (decay_i)/2 - gamma_phi eps_i^2,
    # so the dephasing contribution grows quadratically in eps_disp.
    rho = basis_rho(gen.dim, N, 0)
    ratio1 = gen.apply_static(rho)[N, 0] / rho[N, 0]
    want1 = -1j * TWO_PI * q.nu[1] - TWO_PI * (
        0.5 * q.gamma + q.gamma_phi * q.epsilon_disp[1] ** 2)
    assert ratio1 == pytest.approx(want1, rel=1e-12)
    rho = basis_rho(gen.dim, 2 * N, 0)
    ratio2 = gen.apply_static(rho)[2 * N, 0] / rho[2 * N, 0]
    want2 = -1j * TWO_PI * q.nu[2] - TWO_PI * (
        0.5 * q.gamma * w2 + q.gamma_phi * q.epsilon_disp[2] ** 2)
    assert ratio2 == pytest.approx(want2, rel=1e-12)
    # Photon coherence |0,1><0,0|: -i omega_r - kappa/2.
    rho = basis_rho(gen.dim, 1, 0)
    deriv = gen.apply_static(rho)
    want_res = -1j * TWO_PI * kerr_resonator.nu_r - TWO_PI * 0.5 * kerr_resonator.kappa
    assert deriv[1, 0] / rho[1, 0] == pytest.approx(want_res, rel=1e-12)


def test_generator_matches_dense_superoperator_fuzz(two_level_qubit,
                                                    kerr_resonator):
    rng = np.random.default_rng(20260814)
    drives = (
        DriveSpec(2.0, 6450.0, "pump"),
        DriveSpec(0.4, 5718.0, "spectroscopy"),
    )
    gen = build_generator(
        two_level_qubit, kerr_resonator, drives, micro_hilbert(n_fock=4))
    d = gen.dim
    for t in (0.0, 0.173, 1.9):
        sup = superoperator_matrix(gen, t)
        for _ in range(4):
            z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            rho = z + z.conj().T
            lhs = gen.apply(t, rho).ravel()
            rhs = sup @ rho.ravel()
            assert np.allclose(lhs, rhs, rtol=1e-11, atol=1e-8)
            # Trace preservation and Hermiticity preservation.
            deriv = lhs.reshape(d, d)
            assert abs(np.trace(deriv)) < 1e-8 * np.max(np.abs(rho))
            assert np.max(np.abs(deriv - deriv.conj().T)) < 1e-8 * np.max(
                np.abs(deriv))


def test_generator_linearity_fuzz(two_level_qubit, kerr_resonator):
    rng = np.random.default_rng(11)
    gen = build_generator(
        two_level_qubit, kerr_resonator,
        (DriveSpec(3.0, 6450.0, "pump"),
         DriveSpec(0.5, 5715.0, "spectroscopy")),
        micro_hilbert(n_fock=5))
    d = gen.dim
    for _ in range(6):
        r1 = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        r2 = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        a, b = complex(rng.normal(), rng.normal()), complex(rng.normal())
        t = float(rng.uniform(0.0, 2.0))
        lhs = gen.apply(t, a * r1 + b * r2)
        rhs = a * gen.apply(t, r1) + b * gen.apply(t, r2)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-9)


def test_driven_cavity_coherent_steady_state():
    # Pure-loss driven cavity: the steady state is exactly the coherent
    # pointer state alpha = -2 i eps / kappa (resonant pump).
    res = ResonatorSpec(nu_r=6453.5, kappa=9.6)
    # The decoupled qubit still needs decay to make the steady state
    # unique (it pins the qubit sector to its ground state).
    q = QubitSpec(nu=(0.0, 5720.0), g=(0.0,), epsilon_disp=(0.0, 1.0),
                  gamma=0.22, gamma_phi=0.0)
    pump = DriveSpec(1.2, res.nu_r, "pump")
    gen = build_generator(q, res, (pump,), micro_hilbert(n_fock=10))
    out = floquet_steady(gen)
    alpha = -2j * pump.epsilon / res.kappa
    assert abs(out.a_mean - alpha) < 1e-9
    assert out.n_mean == pytest.approx(abs(alpha) ** 2, rel=1e-8)
    # Full state check: overlap with the analytic coherent state.
    vec = np.zeros(gen.dim, complex)
    vec[:10] = coherent_state(alpha, 10)
    fidelity = float(np.real(vec.conj() @ gen_state_rho(out) @ vec))
    assert fidelity > 1.0 - 1e-8


def gen_state_rho(result):
    return result.state.rho


def test_decoupled_kerr_pointer_matches_classical_field():
    # Kerr cavity at modest photon number: the quantum <a> sits within
    # O(K/kappa) of the classical pointer root.
    res = ResonatorSpec(nu_r=6453.5, K=-0.625, K_prime=-0.00125, kappa=9.6)
    q = QubitSpec(nu=(0.0, 5720.0), g=(0.0,), epsilon_disp=(0.0, 1.0),
                  gamma=0.22, gamma_phi=0.0)
    pump = DriveSpec(2.5, 6450.0, "pump")
    gen = build_generator(q, res, (pump,), micro_hilbert(n_fock=24))
    out = floquet_steady(gen)
    alpha = solve_pointer_pump(None, res, pump)
    assert abs(out.a_mean - alpha) < 1e-3
    assert out.diagnostics["leakage"] < 1e-6


def test_driven_qubit_matches_reduced_formula():
    # Decoupled two-level system under a direct qubit tone: the exact
    # steady population equals the reduced-model closed form.
    res = ResonatorSpec(nu_r=6453.5, kappa=9.6)
    q = QubitSpec(nu=(0.0, 5720.0), g=(0.0,), epsilon_disp=(0.0, 1.0),
                  gamma=0.22, gamma_phi=0.25)
    gamma2 = q.gamma_phi + 0.5 * q.gamma
    for delta in (0.0, 0.7):
        nu_q = q.nu[1] - delta
        drive = DriveSpec(0.1, nu_q, "qubit")
        gen = build_generator(
            q, res, (drive,), micro_hilbert(n_fock=4, frame_mhz=nu_q))
        exact = steady_state_exact(gen)
        p1 = float(np.sum(np.diagonal(exact.rho).real[4:]))
        rates = ReducedRates(
            kappa2=res.kappa, gamma_down=q.gamma, gamma_up=0.0,
            gamma_dd=0.0, gamma_phi3=q.gamma_phi, Gamma_phim=0.0,
            gamma2=gamma2, D=0.0, purcell=0.0, omega10_3=q.nu[1],
            breakdown=False)
        want = steady_state_p1(rates, drive.epsilon, delta)
        assert p1 == pytest.approx(want, rel=1e-9)


def test_static_floquet_agrees_with_null_space(two_level_qubit,
                                               kerr_resonator):
    pump = DriveSpec(2.0, 6450.0, "pump")
    gen = build_generator(
        two_level_qubit, kerr_resonator, (pump,), micro_hilbert(n_fock=8))
    exact = steady_state_exact(gen)
    out = floquet_steady(gen)
    assert out.harmonics == 0
    assert np.max(np.abs(out.state.rho - exact.rho)) < 1e-10
    p1_exact = float(np.sum(np.diagonal(exact.rho).real[8:]))
    assert out.p_excited == pytest.approx(p1_exact, abs=1e-11)


def test_frame_choice_does_not_move_observables(two_level_qubit,
                                                kerr_resonator):
    pump = DriveSpec(1.5, 6450.0, "pump")
    hil_pump_frame = micro_hilbert(n_fock=16)
    hil_shifted = micro_hilbert(n_fock=16, frame_mhz=6445.0)
    out_a = floquet_steady(build_generator(
        two_level_qubit, kerr_resonator, (pump,), hil_pump_frame))
    out_b = floquet_steady(build_generator(
        two_level_qubit, kerr_resonator, (pump,), hil_shifted))
    assert out_b.harmonics > 0
    assert out_b.p_excited == pytest.approx(out_a.p_excited,
                                            rel=1e-6, abs=1e-12)
    assert out_b.n_mean == pytest.approx(out_a.n_mean, rel=1e-6)


def test_floquet_cross_checks_evolve(two_level_qubit, kerr_resonator):
    # One pump+probe beat point solved both ways.
    drives = (
        DriveSpec(2.0, 6450.0, "pump"),
        DriveSpec(0.6, 5716.5, "spectroscopy"),
    )
    hil = micro_hilbert(n_fock=12)
    gen_f = build_generator(two_level_qubit, kerr_resonator, drives, hil)
    out_f = floquet_steady(gen_f)
    gen_e = build_generator(two_level_qubit, kerr_resonator, drives, hil)
    out_e = evolve_to_steady(gen_e)
    assert out_e.steady
    # The integrator's own steadiness tolerance (1e-4 relative per
    # window pair) bounds how closely the two can agree.
    assert abs(out_f.p_excited - out_e.p_excited) < 1e-3 * max(
        out_e.p_excited, 1e-3)
    assert abs(out_f.n_mean - out_e.n_mean) < 1e-3 * out_e.n_mean
    for key in ("trace_drift", "herm_drift"):
        assert out_f.diagnostics[key] < 1e-8
        assert out_e.diagnostics[key] < 1e-8
    assert out_f.diagnostics["min_eigenvalue"] > -1e-8
    assert out_e.diagnostics["min_eigenvalue"] > -1e-8


def test_default_initial_centres_on_pointer(two_level_qubit, kerr_resonator):
    pump = DriveSpec(2.5, 6450.0, "pump")
    gen = build_generator(
        two_level_qubit, kerr_resonator, (pump,), micro_hilbert(n_fock=16))
    rho0 = gen.default_initial()
    p1, n_mean, a_mean = gen.observables(rho0.rho)
    alpha = solve_pointer_pump(two_level_qubit, kerr_resonator, pump)
    assert p1 == 0.0
    assert abs(a_mean - alpha) < 1e-6
    assert n_mean == pytest.approx(abs(alpha) ** 2, rel=1e-6)
    bare = build_generator(
        two_level_qubit, kerr_resonator, (), micro_hilbert(n_fock=6))
    vac = bare.default_initial()
    assert vac.rho[0, 0].real == pytest.approx(1.0, abs=1e-14)


def test_oracle_leakage_escalation(two_level_qubit, kerr_resonator):
    # A 4-state Fock ladder under a ~1 photon pump trips the leakage
    # monitor, escalates once, and finishes with a warning.
    pump = DriveSpec(6.0, 6450.0, "pump")
    probes = np.linspace(5714.0, 5719.0, 5)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        grid = oracle_spectrum(
            two_level_qubit, kerr_resonator, pump, 0.3, probes,
            micro_hilbert(n_fock=4))
    cutoffs = [w for w in caught if issubclass(w.category, CutoffWarning)]
    assert len(cutoffs) >= 1
    assert grid.diagnostics["escalated"]
    assert grid.diagnostics["n_fock_used"] == 6
    assert grid.p1.shape == (1, 5)
    assert np.all(np.isfinite(grid.p1))
    assert grid.engine == "oracle"


def test_validation_errors(two_level_qubit, kerr_resonator):
    with pytest.raises(CutoffError):
        build_generator(two_level_qubit, kerr_resonator, (),
                        micro_hilbert(levels=3))
    with pytest.raises(CutoffError):
        HilbertConfig(levels=2, n_fock=3)
    with pytest.raises(CutoffError):
        HilbertConfig(levels=1, n_fock=8)
    gen_big = build_generator(
        two_level_qubit, kerr_resonator, (), micro_hilbert(n_fock=16))
    with pytest.raises(CutoffError):
        superoperator_matrix(gen_big)
    two_tones = (
        DriveSpec(2.0, 6450.0, "pump"),
        DriveSpec(0.3, 5716.0, "spectroscopy"),
        DriveSpec(0.3, 5000.0, "qubit"),
    )
    gen3 = build_generator(
        two_level_qubit, kerr_resonator, two_tones, micro_hilbert(n_fock=4))
    with pytest.raises(SolverError):
        floquet_steady(gen3)
    with pytest.raises(SolverError):
        steady_state_exact(gen3)
    with pytest.raises(ValueError):
        oracle_spectrum(two_level_qubit, kerr_resonator,
                        DriveSpec(1.0, 6450.0, "pump"), 0.1,
                        np.array([5716.0]), micro_hilbert(), method="exact")
