"""Charge-basis transmon spectrum, fitting, and spec construction."""

import numpy as np
import pytest

from kerrqed.errors import CutoffError
from kerrqed.transmon import build_transmon, fit_transmon, transmon_spectrum


def test_fit_round_trip():
    nu10, nu21 = 5720.0, 5421.6
    ej, ec = fit_transmon(nu10, nu21)
    nu, _, _ = transmon_spectrum(ej, ec, 3)
    assert nu[1] == pytest.approx(nu10, abs=1e-6)
    assert nu[2] - nu[1] == pytest.approx(nu21, abs=1e-6)


def test_fit_rejects_positive_anharmonicity():
    with pytest.raises(ValueError):
        fit_transmon(5720.0, 5800.0)
    with pytest.raises(ValueError):
        fit_transmon(5720.0, -10.0)


def test_asymptotic_anharmonicity():
    # Deep transmon: nu10 ~ sqrt(8 EJ EC) - EC and the anharmonicity
    # approaches -EC from below as EJ/EC grows.
    ec = 250.0

    def anharm(ej):
        nu, _, _ = transmon_spectrum(ej, ec, 3, charge_cutoff=40)
        return (nu[2] - nu[1]) - nu[1]

    a_mid, a_deep = anharm(100.0 * ec), anharm(400.0 * ec)
    assert -1.15 * ec < a_deep < -ec
    assert abs(a_deep + ec) < abs(a_mid + ec)
    nu, _, _ = transmon_spectrum(200.0 * ec, ec, 3, charge_cutoff=40)
    assert nu[1] == pytest.approx(np.sqrt(8 * 200.0 * ec * ec) - ec, rel=0.01)


def test_charge_matrix_elements_grow_along_ladder():
    ej, ec = 16972.07368, 264.9938896
    _, n_elem, _ = transmon_spectrum(ej, ec, 5)
    # Near-harmonic scaling <i|n|i+1> ~ sqrt(i+1) within ~15%.
    ratios = n_elem / n_elem[0]
    expected = np.sqrt(np.arange(1, 5))
    assert np.all(np.abs(ratios / expected - 1.0) < 0.15)
    assert np.all(np.diff(n_elem) > 0)


def test_charge_dispersion_shrinks_with_ej_over_ec():
    # Level splitting between ng = 0 and ng = 1/2 collapses as EJ/EC grows.
    ec = 250.0

    def dispersion(ej):
        a, _, _ = transmon_spectrum(ej, ec, 2, charge_cutoff=40, ng=0.5)
        b, _, _ = transmon_spectrum(ej, ec, 2, charge_cutoff=40, ng=0.0)
        return abs(a[1] - b[1])

    assert dispersion(50.0 * ec) < 1e-3 * dispersion(5.0 * ec)


def test_build_transmon_spec():
    ej, ec = fit_transmon(5720.0, 5421.6)
    q = build_transmon(ej, ec, levels=5, g0=42.4)
    assert q.levels == 5
    assert q.nu[0] == 0.0
    assert q.nu[1] == pytest.approx(5720.0, abs=1e-6)
    assert q.g[0] == pytest.approx(42.4)
    # Dephasing dispersion is pinned to 0 and 1 on the first two levels
    # and grows superlinearly above.
    assert q.epsilon_disp[0] == 0.0
    assert q.epsilon_disp[1] == 1.0
    eps = np.asarray(q.epsilon_disp)
    assert np.all(eps[2:] > np.arange(2, 5))


def test_cutoff_guard():
    with pytest.raises(ValueError):
        transmon_spectrum(5000.0, 250.0, 3, charge_cutoff=5)
    with pytest.raises(ValueError):
        transmon_spectrum(200.0, 250.0, 3)
    # Huge EJ/EC with a minimal basis trips the convergence check.
    with pytest.raises(CutoffError):
        transmon_spectrum(4e6, 250.0, 18, charge_cutoff=10)
