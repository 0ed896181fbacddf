"""Charge-basis transmon diagonalization and spec building.

Energies are given as frequencies (E/h) in MHz. The offset charge is
fixed at the charge-insensitive sweet spot ng = 1/2 by default and is
configurable; at large EJ/EC the spectrum is exponentially insensitive
to it.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize

from .errors import CutoffError
from .model import QubitSpec

CONVERGENCE_RTOL = 1e-9


def _charge_diag(EJ: float, EC: float, ng: float, cutoff: int):
    """Eigen-decomposition of 4EC(n-ng)^2 - (EJ/2)(|n><n+1| + h.c.)."""
    nvals = np.arange(-cutoff, cutoff + 1, dtype=float)
    h = np.diag(4.0 * EC * (nvals - ng) ** 2)
    off = -0.5 * EJ * np.ones(2 * cutoff)
    h += np.diag(off, 1) + np.diag(off, -1)
    evals, evecs = np.linalg.eigh(h)
    return nvals, evals, evecs


def transmon_spectrum(
    EJ: float,
    EC: float,
    levels: int,
    charge_cutoff: int = 30,
    ng: float = 0.5,
):
    """Lowest levels of the Cooper-pair-box Hamiltonian in the charge basis.

    Parameters
    ----------
    EJ, EC : float
        Josephson and charging energies as frequencies in MHz; EJ/EC > 1.
    levels : int
        Number of eigenlevels returned (>= 2).
    charge_cutoff : int
        Charge states run from -cutoff to +cutoff; must be >= 10.
    ng : float
        Offset charge in Cooper pairs.

    Returns
    -------
    nu : ndarray
        Level frequencies relative to the ground state, nu[0] = 0, in MHz.
    n_elem : ndarray
        Charge matrix elements <i|n|i+1> with a positive sign convention.
    cos_elem : ndarray
        Diagonal matrix elements <i|cos(phi)|i>, used for the dispersion.

    Raises
    ------
    CutoffError
        If enlarging the cutoff by 5 moves any kept level by more than
        1e-9 relative.
    """
    if EJ <= EC:
        raise ValueError("need EJ/EC > 1")
    if charge_cutoff < 10:
        raise ValueError("charge_cutoff must be at least 10")
    if levels < 2 or levels > 2 * charge_cutoff - 1:
        raise ValueError("invalid level count for this cutoff")

    nvals, evals, evecs = _charge_diag(EJ, EC, ng, charge_cutoff)
    _, evals_big, _ = _charge_diag(EJ, EC, ng, charge_cutoff + 5)
    scale = max(abs(evals[levels - 1] - evals[0]), abs(EC))
    drift = np.max(np.abs(evals[:levels] - evals_big[:levels])) / scale
    if drift > CONVERGENCE_RTOL:
        raise CutoffError(
            f"charge cutoff {charge_cutoff} not converged "
            f"(relative level drift {drift:.2e}); increase it"
        )

    vecs = evecs[:, :levels]
    # Fix eigenvector signs so every ladder charge element is positive.
    for i in range(1, levels):
        elem = vecs[:, i - 1] @ (nvals * vecs[:, i])
        if elem < 0:
            vecs[:, i] = -vecs[:, i]
    n_elem = np.array(
        [vecs[:, i] @ (nvals * vecs[:, i + 1]) for i in range(levels - 1)]
    )
    # cos(phi) shifts charge by one: <i|cos phi|i> = sum_n c_n c_{n+1}.
    cos_elem = np.array(
        [vecs[:-1, i] @ vecs[1:, i] for i in range(levels)]
    )
    nu = evals[:levels] - evals[0]
    return nu, n_elem, cos_elem


def build_transmon(
    EJ: float,
    EC: float,
    levels: int,
    charge_cutoff: int = 30,
    g0: float = 1.0,
    ng: float = 0.5,
    gamma: float = 0.0,
    gamma_phi: float = 0.0,
) -> QubitSpec:
    """QubitSpec from a transmon diagonalization.

    Couplings scale with the charge matrix elements,
    g_i = g0 * <i|n|i+1> / <0|n|1>, and the dephasing dispersion is the
    normalized EJ-sensitivity of each level obtained from the
    Hellmann-Feynman derivative d(nu_i - nu_0)/dEJ, so eps_0 = 0 and
    eps_1 = 1 hold by construction.
    """
    nu, n_elem, cos_elem = transmon_spectrum(EJ, EC, levels, charge_cutoff, ng)
    g = g0 * n_elem / n_elem[0]
    # dE_i/dEJ = -<i|cos phi|i>; normalize to the 0<->1 sensitivity.
    dE = -(cos_elem - cos_elem[0])
    denom = dE[1]
    eps = dE / denom if denom != 0.0 else np.arange(levels, dtype=float)
    eps[0] = 0.0
    eps[1] = 1.0
    return QubitSpec(
        nu=tuple(nu), g=tuple(g), epsilon_disp=tuple(eps),
        gamma=gamma, gamma_phi=gamma_phi,
    )


def fit_transmon(
    nu10: float,
    nu21: float,
    charge_cutoff: int = 30,
    ng: float = 0.5,
):
    """EJ, EC reproducing the two lowest transition frequencies.

    Parameters
    ----------
    nu10, nu21 : float
        Target 0<->1 and 1<->2 transition frequencies in MHz with
        nu21 < nu10 (negative anharmonicity).

    Returns
    -------
    (EJ, EC) : tuple of float in MHz.
    """
    if not (0 < nu21 < nu10):
        raise ValueError("expected 0 < nu21 < nu10 for a transmon")

    def residual(x):
        EJ, EC = x
        if EJ <= 0 or EC <= 0 or EJ <= EC:
            return [1e6, 1e6]
        nu, _, _ = transmon_spectrum(EJ, EC, 3, charge_cutoff, ng)
        return [nu[1] - nu10, (nu[2] - nu[1]) - nu21]

    ec0 = nu10 - nu21
    ej0 = (nu10 + ec0) ** 2 / (8.0 * ec0)
    sol = optimize.root(residual, x0=[ej0, ec0], method="hybr", tol=1e-12)
    if not sol.success:
        raise CutoffError(f"transmon fit did not converge: {sol.message}")
    return float(sol.x[0]), float(sol.x[1])
