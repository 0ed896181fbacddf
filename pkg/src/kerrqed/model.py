"""Domain types and dispersive-coupling algebra for a multilevel qubit
coupled to a driven nonlinear (Kerr) resonator.

Unit convention: every frequency, rate, and drive amplitude crossing a
public interface is nu = omega/2pi in MHz. The coupling algebra below is
homogeneous of degree one in frequency, so it is evaluated directly in
MHz; angular units (rad/us) appear only where absolute time enters (the
master-equation integrator converts once at build time via TWO_PI).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ResonanceError, StraddlingWarning

TWO_PI = 2.0 * np.pi

# Reject qubit-drive detunings below 1 kHz instead of returning huge coefficients.
RESONANCE_GUARD_MHZ = 1e-3


def to_angular(nu_mhz):
    """Convert nu in MHz to angular frequency in rad/us."""
    return TWO_PI * np.asarray(nu_mhz) if np.ndim(nu_mhz) else TWO_PI * nu_mhz


def to_nu(omega_rad_per_us):
    """Convert angular frequency in rad/us back to nu in MHz."""
    return omega_rad_per_us / TWO_PI


@dataclass(frozen=True)
class QubitSpec:
    """Multilevel qubit: level frequencies, ladder couplings, dephasing dispersion.

    Parameters
    ----------
    nu : sequence of float
        Level frequencies nu_i in MHz, length M >= 2. Only differences enter
        the physics; nu[0] = 0 is conventional but not required.
    g : sequence of float
        Ladder couplings g_i in MHz for transitions i <-> i+1, length M - 1.
    epsilon_disp : sequence of float
        Dimensionless dephasing dispersions eps_i with eps_0 = 0, eps_1 = 1.
    gamma : float
        Relaxation rate of the 0 <-> 1 transition in MHz (rate/2pi).
    gamma_phi : float
        Pure dephasing rate in MHz (rate/2pi).
    """

    nu: tuple
    g: tuple
    epsilon_disp: tuple
    gamma: float = 0.0
    gamma_phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "nu", tuple(float(x) for x in self.nu))
        object.__setattr__(self, "g", tuple(float(x) for x in self.g))
        object.__setattr__(
            self, "epsilon_disp", tuple(float(x) for x in self.epsilon_disp)
        )
        if len(self.nu) < 2:
            raise ValueError("qubit needs at least two levels")
        if len(self.g) != len(self.nu) - 1:
            raise ValueError("need exactly M-1 couplings for M levels")
        if len(self.epsilon_disp) != len(self.nu):
            raise ValueError("need one dispersion value per level")
        if self.epsilon_disp[0] != 0.0 or self.epsilon_disp[1] != 1.0:
            raise ValueError("dispersion must satisfy eps_0 = 0 and eps_1 = 1")
        if self.gamma < 0 or self.gamma_phi < 0:
            raise ValueError("rates must be nonnegative")

    @property
    def levels(self) -> int:
        return len(self.nu)

    def transition(self, i: int) -> float:
        """Transition frequency nu_{i+1} - nu_i in MHz."""
        return self.nu[i + 1] - self.nu[i]

    def g_at(self, i: int) -> float:
        """Coupling g_i, zero outside 0 <= i <= M-2."""
        if 0 <= i <= self.levels - 2:
            return self.g[i]
        return 0.0


@dataclass(frozen=True)
class ResonatorSpec:
    """Driven nonlinear resonator: frequency, Kerr constants, loss rates.

    All values in MHz. K and K_prime are the quadratic and cubic Kerr
    constants (photon-number dependent frequency shifts); kappa and
    kappa_nl are the one- and two-photon loss rates.
    """

    nu_r: float
    K: float = 0.0
    K_prime: float = 0.0
    kappa: float = 0.0
    kappa_nl: float = 0.0

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.kappa_nl < 0:
            raise ValueError("kappa_nl must be nonnegative")


@dataclass(frozen=True)
class DriveSpec:
    """One coherent drive tone: complex amplitude, frequency, role.

    epsilon is the drive amplitude in MHz (may be complex), nu_d its
    frequency in MHz, role "pump" or "spectroscopy" for resonator
    tones, or "qubit" for a tone applied directly to the qubit ladder
    (only the brute-force engine consumes "qubit" drives). A scenario
    has exactly one pump and at most one spectroscopy drive.
    """

    epsilon: complex
    nu_d: float
    role: str = "pump"

    def __post_init__(self):
        if self.role not in ("pump", "spectroscopy", "qubit"):
            raise ValueError("role must be 'pump', 'spectroscopy' or 'qubit'")
        object.__setattr__(self, "epsilon", complex(self.epsilon))


@dataclass(frozen=True)
class StarkCoeffs:
    """Drive-induced level-shift coefficients for one drive.

    lam[i] is dimensionless, chi/s2/s4 are in MHz. Arrays lam and chi
    have length M-1 (ladder index); s2 and s4 have length M (level
    index). xi[i] = lam[i] * alpha_{i,d} is filled in once pointer
    fields are known (None until then).
    """

    nu_d: float
    lam: np.ndarray
    chi: np.ndarray
    s2: np.ndarray
    s4: np.ndarray
    xi: np.ndarray | None = None

    def with_xi(self, alpha: Sequence[complex]) -> "StarkCoeffs":
        """Attach xi[i] = lam[i] * alpha_i for ladder indices i."""
        alpha = np.asarray(alpha, dtype=complex)
        if alpha.shape[0] < self.lam.shape[0]:
            raise ValueError("need one field per ladder index")
        xi = self.lam * alpha[: self.lam.shape[0]]
        return StarkCoeffs(self.nu_d, self.lam, self.chi, self.s2, self.s4, xi)

    def without_quartic(self) -> "StarkCoeffs":
        """Variant with the quartic coefficients forced to zero."""
        return StarkCoeffs(
            self.nu_d, self.lam, self.chi, self.s2, np.zeros_like(self.s4), self.xi
        )


@dataclass(frozen=True)
class ShiftedSpectrum:
    """Field-dependent qubit/resonator spectrum after both shift stages.

    omega2[i]: drive-shifted level frequencies (MHz).
    omega3[i]: additionally Lamb-shifted level frequencies (MHz).
    lamb[i]: Lamb shift L_i = chi_q[i-1] (MHz).
    pull[i]: per-photon resonator pull S_i conditioned on level i (MHz).
    lambda_q[i]: dimensionless dressing amplitudes (ladder index).
    chi_q[i]: dispersive shifts (ladder index, MHz).
    nu_r_pulled: Kerr-shifted resonator frequency at this field (MHz).
    """

    omega2: np.ndarray
    omega3: np.ndarray
    lamb: np.ndarray
    pull: np.ndarray
    lambda_q: np.ndarray
    chi_q: np.ndarray
    nu_r_pulled: float

    @property
    def nu10_shifted(self) -> float:
        """Fully shifted 0 <-> 1 transition frequency in MHz."""
        return float(self.omega3[1] - self.omega3[0])


def _padded(values: np.ndarray, i: int) -> float:
    """values[i] with zero outside the valid ladder range."""
    if 0 <= i < values.shape[0]:
        return float(values[i])
    return 0.0


def stark_coeffs(q: QubitSpec, d: DriveSpec) -> StarkCoeffs:
    """Quadratic and quartic level-shift coefficients for one drive.

    Parameters
    ----------
    q : QubitSpec
    d : DriveSpec
        Must be detuned from every qubit transition by more than the
        1 kHz guard band.

    Returns
    -------
    StarkCoeffs
        lam[i] = -g_i / (nu_{i+1} - nu_i - nu_d), chi[i] = -g_i lam[i],
        s2[i] = -(chi[i] - chi[i-1]) and the quartic s4[i], with every
        out-of-range ladder index contributing zero.

    Raises
    ------
    ResonanceError
        If |nu_{i+1} - nu_i - nu_d| < 1 kHz for some transition i.
    """
    m = q.levels
    lam = np.zeros(m - 1)
    chi = np.zeros(m - 1)
    for i in range(m - 1):
        det = q.transition(i) - d.nu_d
        if abs(det) < RESONANCE_GUARD_MHZ:
            raise ResonanceError(
                f"drive at {d.nu_d} MHz is resonant with transition "
                f"{i}<->{i + 1} at {q.transition(i)} MHz"
            )
        lam[i] = -q.g[i] / det
        chi[i] = -q.g[i] * lam[i]

    s2 = np.zeros(m)
    s4 = np.zeros(m)
    for i in range(m):
        s2[i] = -(_padded(chi, i) - _padded(chi, i - 1))
        li = _padded(lam, i)
        lim1 = _padded(lam, i - 1)
        s4[i] = (
            -4.0 * s2[i] * (li**2 + lim1**2)
            - (3.0 * _padded(chi, i + 1) * li**2 - _padded(chi, i) * _padded(lam, i + 1) ** 2)
            + (3.0 * _padded(chi, i - 2) * lim1**2 - _padded(chi, i - 1) * _padded(lam, i - 2) ** 2)
        )
    return StarkCoeffs(d.nu_d, lam, chi, s2, s4)


def stark_shifted_freqs(
    q: QubitSpec,
    coeffs: StarkCoeffs | Sequence[StarkCoeffs],
    alpha: complex | Sequence[complex],
) -> np.ndarray:
    """Drive-shifted level frequencies omega2[i] in MHz.

    coeffs and alpha may be a single drive's coefficients and field or
    matching sequences for several drives. The shift per drive is
    s2[i] |alpha|^2 + s4[i] |alpha|^4 / 4.
    """
    if isinstance(coeffs, StarkCoeffs):
        coeffs = [coeffs]
        alpha = [alpha]
    omega2 = np.array(q.nu, dtype=float)
    for c, a in zip(coeffs, alpha):
        n = abs(complex(a)) ** 2
        if not np.isfinite(n):
            raise ValueError("field amplitude must be finite")
        omega2 = omega2 + c.s2 * n + 0.25 * c.s4 * n * n
    return omega2


def lamb_shift_chain(
    q: QubitSpec, res: ResonatorSpec, omega2: np.ndarray, alpha: complex
) -> ShiftedSpectrum:
    """Resonator-induced Lamb shifts on top of the drive-shifted spectrum.

    Parameters
    ----------
    q, res : system specs.
    omega2 : drive-shifted level frequencies in MHz (from stark_shifted_freqs).
    alpha : complex
        Resonator field at which the pulled frequency is evaluated.

    Returns
    -------
    ShiftedSpectrum
        With nu_r_pulled = nu_r + 2K|a|^2 + 3K'|a|^4, dressing
        lambda_q[i] = -g_i/(omega2[i+1]-omega2[i]-nu_r_pulled),
        chi_q[i] = -g_i lambda_q[i], Lamb shift L_i = chi_q[i-1],
        omega3 = omega2 + L, and per-photon pull S_i = -(chi_q[i]-chi_q[i-1]).

    Raises
    ------
    ResonanceError
        If a shifted transition is within the guard band of nu_r_pulled.
    """
    m = q.levels
    omega2 = np.asarray(omega2, dtype=float)
    n = abs(complex(alpha)) ** 2
    nu_r_pulled = res.nu_r + 2.0 * res.K * n + 3.0 * res.K_prime * n * n

    lambda_q = np.zeros(m - 1)
    chi_q = np.zeros(m - 1)
    for i in range(m - 1):
        det = omega2[i + 1] - omega2[i] - nu_r_pulled
        if abs(det) < RESONANCE_GUARD_MHZ:
            raise ResonanceError(
                f"pulled resonator at {nu_r_pulled} MHz is resonant with "
                f"shifted transition {i}<->{i + 1}"
            )
        lambda_q[i] = -q.g[i] / det
        chi_q[i] = -q.g[i] * lambda_q[i]

    lamb = np.zeros(m)
    pull = np.zeros(m)
    for i in range(m):
        lamb[i] = _padded(chi_q, i - 1)
        pull[i] = -(_padded(chi_q, i) - _padded(chi_q, i - 1))
    omega3 = omega2 + lamb
    return ShiftedSpectrum(
        omega2=omega2,
        omega3=omega3,
        lamb=lamb,
        pull=pull,
        lambda_q=lambda_q,
        chi_q=chi_q,
        nu_r_pulled=float(nu_r_pulled),
    )


def shifted_spectrum_at(
    q: QubitSpec,
    res: ResonatorSpec,
    coeffs: StarkCoeffs,
    alpha: complex,
) -> ShiftedSpectrum:
    """Convenience: both shift stages evaluated at a single pump field."""
    omega2 = stark_shifted_freqs(q, coeffs, alpha)
    return lamb_shift_chain(q, res, omega2, alpha)


def check_straddling(q: QubitSpec, nu_probe: float, what: str = "resonator") -> bool:
    """Warn when nu_probe lies between qubit transition frequencies.

    The coupling algebra drops two-photon terms that matter inside the
    straddling regime, so such inputs are allowed but flagged.
    """
    dets = [q.transition(i) - nu_probe for i in range(q.levels - 1)]
    straddling = any(a > 0 for a in dets) and any(a < 0 for a in dets)
    if straddling:
        warnings.warn(
            f"{what} frequency {nu_probe} MHz lies between qubit transition "
            "frequencies (straddling regime); shift coefficients neglect "
            "two-photon terms that are not small there",
            StraddlingWarning,
            stacklevel=2,
        )
    return straddling
