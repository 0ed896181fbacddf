"""Reduced-qubit model: effective rates, steady-state spectra, validity flags.

The resonator is eliminated in favor of qubit-state-conditioned pointer
fields. What remains is a two-level master equation for the 0 <-> 1
manifold whose ingredients (shifted transition frequency, relaxation,
excitation, dephasing) depend on the solved fields; its steady state is
closed-form. All rates and frequencies in MHz.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelBreakdownWarning, SolverError
from .fitting import LorentzianFit, lorentzian_fit
from .fields import (
    PointerSolution,
    linear_response_fields,
    solve_pointer_pump,
    solve_pointer_spectroscopy,
    solve_pointer_states,
)
from .model import (
    DriveSpec,
    QubitSpec,
    ResonatorSpec,
    StarkCoeffs,
    lamb_shift_chain,
    stark_coeffs,
    stark_shifted_freqs,
)

DRESSED_DEPHASING_MODES = ("off", "white")


def power_db(eps_mhz: float) -> float:
    """Drive power axis 20 log10(eps / MHz) used for reporting."""
    return 20.0 * np.log10(eps_mhz)


@dataclass(frozen=True)
class ReducedRates:
    """Effective two-level parameters at one pump operating point (MHz)."""

    kappa2: float        # dressed resonator linewidth
    gamma_down: float    # total downward rate, state 0 manifold
    gamma_up: float      # upward (heating) rate
    gamma_dd: float      # dressed-dephasing contribution
    gamma_phi3: float    # total pure dephasing
    Gamma_phim: float    # measurement-induced dephasing
    gamma2: float        # half-width: gamma_phi3 + (down+up)/2
    D: float             # pointer-state distinguishability |a1 - a0|
    purcell: float       # resonator-mediated decay lambda_0^2 kappa2
    omega10_3: float     # fully shifted 0<->1 transition frequency
    breakdown: bool      # measurement dephasing beyond the model's window


def reduced_rates(
    q: QubitSpec,
    res: ResonatorSpec,
    pointer: PointerSolution,
    dressed_dephasing: str = "off",
) -> ReducedRates:
    """Effective rates of the reduced qubit at one operating point.

    Parameters
    ----------
    q, res : system specs.
    pointer : PointerSolution
        Pointer fields for at least states 0 and 1, carrying the pump
        drive's shift coefficients.
    dressed_dephasing : "off" or "white"
        The drive-assisted mixing rate derived from low-frequency
        dephasing noise; "off" zeroes it (white-noise estimate
        otherwise).

    Notes
    -----
    Field-dependent quantities (dressed linewidth, dressing amplitudes,
    shifted frequencies) are evaluated at the ground-state pump field,
    consistent with low spectroscopy power.
    """
    if dressed_dephasing not in DRESSED_DEPHASING_MODES:
        raise ValueError(f"unknown dressed_dephasing mode {dressed_dephasing!r}")
    if pointer.coeffs is None:
        raise SolverError("pointer solution lacks its drive coefficients")
    if len(pointer.alpha_p) < 2:
        raise SolverError("need pointer fields for qubit states 0 and 1")

    coeffs = pointer.coeffs
    a0 = complex(pointer.alpha_p[0])
    a1 = complex(pointer.alpha_p[1])
    n0 = abs(a0) ** 2
    d = abs(a1 - a0)

    kappa2 = res.kappa + 4.0 * res.kappa_nl * n0

    # Drive-assisted mixing from dephasing noise and resonator loss.
    if dressed_dephasing == "white":
        eps_step = q.epsilon_disp[1] - q.epsilon_disp[0]
        gamma_dd = (
            2.0 * q.gamma_phi * abs(eps_step) ** 2
            + res.kappa * abs(a1 - a0) ** 2
        ) * float(coeffs.lam[0]) ** 2 * n0
    else:
        gamma_dd = 0.0

    omega2 = stark_shifted_freqs(q, coeffs, a0)
    chain = lamb_shift_chain(q, res, omega2, a0)
    purcell = float(chain.lambda_q[0]) ** 2 * kappa2

    gamma_down = q.gamma + gamma_dd + purcell
    gamma_up = gamma_dd

    chi0 = float(coeffs.chi[0])
    chi1 = float(coeffs.chi[1]) if q.levels > 2 else 0.0
    gamma_phim = (
        0.5 * res.kappa * d * d
        + 0.5 * res.kappa_nl * abs(a1 * a1 - a0 * a0) ** 2
        + q.gamma * abs(2.0 * chi0 * a0 - chi1 * a1) ** 2 / (2.0 * q.g[0] ** 2)
    )
    gamma_phi3 = q.gamma_phi + gamma_phim
    gamma2 = gamma_phi3 + 0.5 * (gamma_down + gamma_up)

    breakdown = gamma_phim > 0.5 * res.kappa
    if breakdown:
        warnings.warn(
            "measurement-induced dephasing exceeds kappa/2; pointer "
            "separation is outside the reduced model's validity window",
            ModelBreakdownWarning,
            stacklevel=2,
        )
    return ReducedRates(
        kappa2=float(kappa2),
        gamma_down=float(gamma_down),
        gamma_up=float(gamma_up),
        gamma_dd=float(gamma_dd),
        gamma_phi3=float(gamma_phi3),
        Gamma_phim=float(gamma_phim),
        gamma2=float(gamma2),
        D=float(d),
        purcell=float(purcell),
        omega10_3=float(chain.omega3[1] - chain.omega3[0]),
        breakdown=bool(breakdown),
    )


def steady_state_p1(rates: ReducedRates, g0_alpha_s: complex, delta: float) -> float:
    """Steady excited-state population of the reduced qubit.

    Parameters
    ----------
    rates : ReducedRates
    g0_alpha_s : complex
        Drive matrix element g_0 * alpha_{0,s} in MHz.
    delta : float
        Detuning omega10_3 - nu_s in MHz.

    Returns
    -------
    float in [0, 1].
    """
    if rates.gamma2 <= 0:
        raise SolverError("gamma2 must be positive for a steady state")
    u = abs(g0_alpha_s) ** 2
    lorentz = rates.gamma2**2 + delta * delta
    num = rates.gamma_up * lorentz + 2.0 * rates.gamma2 * u
    den = (rates.gamma_up + rates.gamma_down) * lorentz + 4.0 * rates.gamma2 * u
    if den == 0.0:
        raise SolverError("no unique steady state: undriven lossless qubit")
    return float(num / den)


def quantum_limit_ratio(rates: ReducedRates, res: ResonatorSpec) -> float:
    """Measurement efficiency ratio kappa D^2 / (2 Gamma_phim), <= 1.

    Zero when the pointer states coincide (no information in the output
    field, whatever the other dephasing channels do).
    """
    if rates.D == 0.0:
        return 0.0
    return float(res.kappa * rates.D**2 / (2.0 * rates.Gamma_phim))


COEFF_VARIANTS = ("full", "no_quartic", "drive_at_res")


def variant_coeffs(
    q: QubitSpec, res: ResonatorSpec, pump: DriveSpec, variant: str = "full"
) -> StarkCoeffs:
    """Pump shift coefficients under a model variant.

    "full": as computed at the pump frequency. "no_quartic": quartic
    coefficients zeroed (second-order model). "drive_at_res":
    coefficients evaluated at the resonator frequency instead of the
    pump frequency (dispersive-limit approximation).
    """
    if variant not in COEFF_VARIANTS:
        raise ValueError(f"unknown coefficient variant {variant!r}")
    if variant == "drive_at_res":
        return stark_coeffs(q, DriveSpec(pump.epsilon, res.nu_r, pump.role))
    coeffs = stark_coeffs(q, pump)
    if variant == "no_quartic":
        coeffs = coeffs.without_quartic()
    return coeffs


def operating_point(
    q: QubitSpec,
    res: ResonatorSpec,
    pump: DriveSpec,
    branch_policy: str = "sweep_up",
    dressed_dephasing: str = "off",
    variant: str = "full",
    field_method: str = "nonlinear",
):
    """Pointer solution and reduced rates at one pump setting.

    field_method "nonlinear" solves the self-consistent pointer
    equations; "linear" uses the first-order response around the
    qubit-independent field instead (same downstream rate pipeline).
    """
    coeffs = variant_coeffs(q, res, pump, variant)
    if field_method == "nonlinear":
        pointer = solve_pointer_states(
            q, res, pump, branch_policy=branch_policy, coeffs=coeffs
        )
    elif field_method == "linear":
        expansions = linear_response_fields(q, res, pump, branch_policy)
        alpha_p = np.array(
            [e.alpha_bar + e.alpha1 for e in expansions], dtype=complex
        )
        nvals = np.abs(alpha_p) ** 2
        pointer = PointerSolution(
            pump=pump,
            coeffs=coeffs.with_xi(alpha_p),
            alpha_p=alpha_p,
            alpha_s=np.zeros(q.levels, dtype=complex),
            n=nvals,
            branch=tuple(["L"] * q.levels),
            residual=np.full(q.levels, np.nan),
        )
    else:
        raise ValueError(f"unknown field method {field_method!r}")
    rates = reduced_rates(q, res, pointer, dressed_dephasing)
    return pointer, rates


@dataclass(frozen=True)
class SpectrumGrid:
    """Steady-state spectroscopy grid with per-column line fits."""

    eps_p: np.ndarray
    nu_s: np.ndarray
    p1: np.ndarray               # shape (len(eps_p), len(nu_s))
    fits: list                  # LorentzianFit per pump amplitude
    branch: tuple               # ground-state branch label per amplitude
    breakdown: np.ndarray        # bool per amplitude
    engine: str = "reduced"
    diagnostics: dict = field(default_factory=dict)

    @property
    def peak_mhz(self) -> np.ndarray:
        return np.array([f.center for f in self.fits])

    @property
    def hwhm_mhz(self) -> np.ndarray:
        return np.array([f.hwhm for f in self.fits])

    @property
    def fit_ok(self) -> np.ndarray:
        return np.array([f.ok for f in self.fits])


def spectrum(
    q: QubitSpec,
    res: ResonatorSpec,
    eps_p_values,
    nu_s_values,
    eps_s: complex,
    branch_policy: str = "sweep_up",
    dressed_dephasing: str = "off",
    variant: str = "full",
    field_method: str = "nonlinear",
    nu_p: float | None = None,
    pump_template: DriveSpec | None = None,
) -> SpectrumGrid:
    """Reduced-model P(|1>) over a (pump amplitude, probe frequency) grid.

    Provide the pump frequency either via nu_p or a pump_template drive.
    Each column is fitted with the shared Lorentzian fitter; fit failures
    are flagged, never raised.
    """
    if pump_template is not None:
        nu_p = pump_template.nu_d
    if nu_p is None:
        raise ValueError("need the pump frequency")
    eps_p_values = np.asarray(eps_p_values, dtype=float)
    nu_s_values = np.asarray(nu_s_values, dtype=float)
    if eps_p_values.size == 0 or nu_s_values.size == 0:
        raise ValueError("empty axis")

    p1 = np.zeros((eps_p_values.size, nu_s_values.size))
    fits: list[LorentzianFit] = []
    branches = []
    breakdown = np.zeros(eps_p_values.size, dtype=bool)
    for k, eps in enumerate(eps_p_values):
        pump = DriveSpec(eps, nu_p, "pump")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ModelBreakdownWarning)
            pointer, rates = operating_point(
                q, res, pump, branch_policy, dressed_dephasing, variant,
                field_method,
            )
        breakdown[k] = rates.breakdown
        branches.append(pointer.branch[0])
        for j, nu_s in enumerate(nu_s_values):
            a_s = solve_pointer_spectroscopy(
                q, res, pointer.alpha_p[0], eps_s, float(nu_s)
            )
            p1[k, j] = steady_state_p1(
                rates, q.g[0] * a_s, rates.omega10_3 - float(nu_s)
            )
        fits.append(lorentzian_fit(nu_s_values, p1[k]))
    if np.any(breakdown):
        warnings.warn(
            "some pump amplitudes drive the reduced model outside its "
            "validity window (measurement dephasing above kappa/2)",
            ModelBreakdownWarning,
            stacklevel=2,
        )
    return SpectrumGrid(
        eps_p=eps_p_values,
        nu_s=nu_s_values,
        p1=p1,
        fits=fits,
        branch=tuple(branches),
        breakdown=breakdown,
        engine="reduced",
    )


def frequency_shift_curve(
    q: QubitSpec,
    res: ResonatorSpec,
    nu_p: float,
    eps_p_values,
    variant: str = "full",
    branch_policy: str = "sweep_up",
):
    """Shifted 0<->1 frequency and linewidth along a pump-amplitude scan.

    Returns a dict of arrays: eps_p_mhz, omega10_3_mhz, gamma2_mhz,
    n0, D, branch, breakdown.
    """
    eps_p_values = np.asarray(eps_p_values, dtype=float)
    out = {
        "eps_p_mhz": eps_p_values,
        "omega10_3_mhz": np.zeros(eps_p_values.size),
        "gamma2_mhz": np.zeros(eps_p_values.size),
        "n0": np.zeros(eps_p_values.size),
        "D": np.zeros(eps_p_values.size),
        "branch": [],
        "breakdown": np.zeros(eps_p_values.size, dtype=bool),
    }
    for k, eps in enumerate(eps_p_values):
        pump = DriveSpec(eps, nu_p, "pump")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ModelBreakdownWarning)
            pointer, rates = operating_point(
                q, res, pump, branch_policy, variant=variant
            )
        out["omega10_3_mhz"][k] = rates.omega10_3
        out["gamma2_mhz"][k] = rates.gamma2
        out["n0"][k] = pointer.n[0]
        out["D"][k] = rates.D
        out["branch"].append(pointer.branch[0])
        out["breakdown"][k] = rates.breakdown
    out["branch"] = tuple(out["branch"])
    return out
