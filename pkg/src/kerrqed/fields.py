"""Self-consistent pointer-state fields of the driven Kerr resonator.

Each qubit state i sees its own effective resonator; the steady pump
field alpha_{i,p} solves

    0 = (nu_r - nu_p - i kappa/2) a + (K - i kappa_nl)|a|^2 a
        + K' |a|^4 a + eps_p + (s2_i + s4_i |a|^2 / 6) a.

Substituting n = |a|^2 and taking the squared modulus turns this into a
real polynomial in n of degree at most five, solved by companion-matrix
eigenvalues with a Newton polish; the phase follows from the linear
relation a = -eps_p / (A(n) - i B(n)). Stability is classified by the
slope criterion dn/d|eps_p|^2 > 0 (middle branch unstable).

All frequencies and rates in MHz; fields are dimensionless.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import AmbiguousBranchError, SolverError, WeakProbeWarning
from .model import (
    DriveSpec,
    QubitSpec,
    ResonatorSpec,
    StarkCoeffs,
    lamb_shift_chain,
    stark_coeffs,
)

OMEGA_C = math.sqrt(3.0)

BRANCH_POLICIES = ("sweep_up", "sweep_down", "lowest", "highest", "strict")

# Relative tolerance for bistability thresholds found by bisection.
THRESHOLD_RTOL = 1e-4
_MAX_GRID_REFINES = 4


@dataclass(frozen=True)
class _StateEq:
    """Coefficients of one qubit state's pump-field equation."""

    d0: float    # nu_r - nu_p + s2_i
    a1: float    # K + s4_i / 6
    a2: float    # K'
    b0: float    # kappa / 2
    b1: float    # kappa_nl
    eps: complex

    def a_of(self, n):
        return self.d0 + self.a1 * n + self.a2 * n * n

    def b_of(self, n):
        return self.b0 + self.b1 * n

    def alpha_of(self, n: float) -> complex:
        return -self.eps / (self.a_of(n) - 1j * self.b_of(n))

    def residual(self, alpha: complex) -> float:
        n = abs(alpha) ** 2
        return abs((self.a_of(n) - 1j * self.b_of(n)) * alpha + self.eps)

    def target_poly(self) -> np.ndarray:
        """Descending coefficients of t(n) = n (A(n)^2 + B(n)^2)."""
        a2, a1, d0, b1, b0 = self.a2, self.a1, self.d0, self.b1, self.b0
        c4 = a2 * a2
        c3 = 2.0 * a2 * a1
        c2 = a1 * a1 + 2.0 * a2 * d0 + b1 * b1
        c1 = 2.0 * a1 * d0 + 2.0 * b1 * b0
        c0 = d0 * d0 + b0 * b0
        return np.array([c4, c3, c2, c1, c0, 0.0])


def _state_equation(
    res: ResonatorSpec,
    pump: DriveSpec,
    coeffs: StarkCoeffs | None,
    state: int,
) -> _StateEq:
    s2 = 0.0
    s4 = 0.0
    if coeffs is not None:
        s2 = float(coeffs.s2[state])
        s4 = float(coeffs.s4[state])
    return _StateEq(
        d0=res.nu_r - pump.nu_d + s2,
        a1=res.K + s4 / 6.0,
        a2=res.K_prime,
        b0=0.5 * res.kappa,
        b1=res.kappa_nl,
        eps=complex(pump.epsilon),
    )


def _real_nonneg_roots(poly: np.ndarray) -> np.ndarray:
    """Real nonnegative roots of a real polynomial (descending coeffs)."""
    poly = np.trim_zeros(np.asarray(poly, dtype=float), "f")
    if poly.size <= 1:
        return np.array([])
    roots = np.roots(poly)
    scale = max(1.0, np.max(np.abs(roots))) if roots.size else 1.0
    real = roots[np.abs(roots.imag) < 1e-7 * scale].real
    real = real[real > -1e-12 * scale]
    real = np.clip(real, 0.0, None)
    if real.size == 0:
        return real
    # Newton polish; near-degenerate fold roots keep their raw value.
    der = np.polyder(poly)
    for _ in range(3):
        p = np.polyval(poly, real)
        dp = np.polyval(der, real)
        step = np.where(np.abs(dp) > 0, p / np.where(dp == 0, 1.0, dp), 0.0)
        real = np.clip(real - step, 0.0, None)
    real.sort()
    # Merge numerically identical roots.
    keep = [real[0]]
    for r in real[1:]:
        if r - keep[-1] > 1e-9 * (1.0 + r):
            keep.append(r)
    return np.asarray(keep)


def _fold_points(eq: _StateEq):
    """Fold photon numbers and drive powers of t(n) = n(A^2+B^2).

    Returns a list of (n_fold, t_value, is_local_max) for the real
    positive stationary points of t, sorted by n. A bistable window
    exists when a local max is followed by a local min.
    """
    tpoly = eq.target_poly()
    dp = np.polyder(tpoly)
    ddp = np.polyder(dp)
    roots = np.roots(dp)
    scale = max(1.0, np.max(np.abs(roots))) if roots.size else 1.0
    real = np.sort(roots[(np.abs(roots.imag) < 1e-9 * scale) & (roots.real > 0)].real)
    out = []
    for n in real:
        curv = np.polyval(ddp, n)
        out.append((float(n), float(np.polyval(tpoly, n)), curv < 0))
    return out


def _bistable_window(eq: _StateEq):
    """(eps_low, eps_high, n_max_fold, n_min_fold) or None."""
    folds = _fold_points(eq)
    for (na, ta, mxa), (nb, tb, mxb) in zip(folds, folds[1:]):
        if mxa and not mxb and ta > tb >= 0.0:
            return math.sqrt(max(tb, 0.0)), math.sqrt(ta), na, nb
    return None


@dataclass(frozen=True)
class PumpBranch:
    """One root of the pump-field equation for one qubit state."""

    n: float
    alpha: complex
    stable: bool
    label: str  # "L" | "H" | "unstable"
    residual: float


def pump_branches(
    q: QubitSpec | None,
    res: ResonatorSpec,
    pump: DriveSpec,
    state: int = 0,
    coeffs: StarkCoeffs | None = None,
) -> list[PumpBranch]:
    """All pump-field branches for one qubit state, sorted by photon number.

    Pass coeffs to override the drive-shift coefficients (model variants);
    by default they are computed from q, or zeroed when q is None (bare
    Kerr resonator).
    """
    if coeffs is None and q is not None:
        coeffs = stark_coeffs(q, pump)
    eq = _state_equation(res, pump, coeffs, state)
    tol = 1e-9 * (abs(eq.eps) + eq.b0)

    if eq.eps == 0:
        return [PumpBranch(0.0, 0j, True, "L", 0.0)]

    poly = eq.target_poly().copy()
    poly[-1] -= abs(eq.eps) ** 2
    ns = _real_nonneg_roots(poly)
    if ns.size == 0:
        raise SolverError("pump-field polynomial has no nonnegative root")

    dpoly = np.polyder(poly)
    window = _bistable_window(eq)
    branches = []
    stable_ns = []
    for n in ns:
        alpha = eq.alpha_of(n)
        resid = eq.residual(alpha)
        if resid > tol:
            alpha = _newton_polish(eq, alpha, tol)
            resid = eq.residual(alpha)
            n = abs(alpha) ** 2
        if resid > tol:
            raise SolverError(
                f"pump-field residual {resid:.3e} exceeds tolerance {tol:.3e}"
            )
        stable = bool(np.polyval(dpoly, n) > 0.0)
        branches.append([n, alpha, stable, "unstable", resid])
        if stable:
            stable_ns.append(n)

    for b in branches:
        if not b[2]:
            continue
        if len(stable_ns) > 1:
            b[3] = "L" if b[0] == min(stable_ns) else "H"
        elif window is not None:
            _, _, na, nb = window
            b[3] = "L" if b[0] <= na else "H" if b[0] >= nb else "L"
        else:
            b[3] = "L"
    return [PumpBranch(b[0], b[1], b[2], b[3], b[4]) for b in branches]


def _newton_polish(
    eq: _StateEq, alpha: complex, tol: float = 0.0, max_iter: int = 24
) -> complex:
    """Real-Jacobian Newton on the full complex equation.

    Near a degenerate fold the root is (nearly) multiple and Newton
    converges only linearly, so this iterates until the residual meets
    tol or stops improving rather than taking a fixed step count.
    """
    best, best_resid = alpha, eq.residual(alpha)
    stalls = 0
    for _ in range(max_iter):
        n = abs(alpha) ** 2
        bracket = eq.a_of(n) - 1j * eq.b_of(n)
        f = bracket * alpha + eq.eps
        fa = bracket + (eq.a1 + 2.0 * eq.a2 * n - 1j * eq.b1) * n
        fas = (eq.a1 + 2.0 * eq.a2 * n - 1j * eq.b1) * alpha * alpha
        det = abs(fa) ** 2 - abs(fas) ** 2
        if det == 0.0:
            break
        alpha = alpha - (np.conj(fa) * f - fas * np.conj(f)) / det
        resid = eq.residual(alpha)
        if resid < best_resid:
            stalls = 0 if resid < 0.5 * best_resid else stalls + 1
            best, best_resid = alpha, resid
        else:
            stalls += 1
        if best_resid <= tol or stalls >= 3:
            break
    return best


def _select_branch(branches: list[PumpBranch], policy: str) -> PumpBranch:
    if policy not in BRANCH_POLICIES:
        raise ValueError(f"unknown branch policy {policy!r}")
    stable = [b for b in branches if b.stable]
    if not stable:
        raise SolverError("no stable pump-field branch")
    if policy == "strict" and len(stable) > 1:
        roots = ", ".join(f"n={b.n:.6g} ({b.label})" for b in stable)
        raise AmbiguousBranchError(f"multiple stable branches: {roots}")
    if policy in ("sweep_down", "highest"):
        return stable[-1]
    # sweep_up, lowest, strict-with-one: lowest stable branch. On an
    # S-curve this reproduces up-sweep hysteresis exactly: below the
    # upper threshold the L branch is the lowest stable root, above it
    # only H survives.
    return stable[0]


def solve_pointer_pump(
    q: QubitSpec | None,
    res: ResonatorSpec,
    pump: DriveSpec,
    state: int = 0,
    branch_policy: str = "sweep_up",
    coeffs: StarkCoeffs | None = None,
) -> complex:
    """Steady pump field alpha_{i,p} for qubit state i under a branch policy."""
    branches = pump_branches(q, res, pump, state, coeffs)
    return _select_branch(branches, branch_policy).alpha


def solve_pointer_spectroscopy(
    q: QubitSpec | None,
    res: ResonatorSpec,
    pump_alpha: complex,
    eps_s: complex,
    nu_s: float,
) -> complex:
    """Weak spectroscopy field riding on a pump-stiffened resonator.

    alpha_s = -eps_s / [(nu_r - nu_s - i kappa/2)
                        + (K - i kappa_nl)|a_p|^2 + K' |a_p|^4]

    where pump_alpha is normally the ground-state pump field. Warns when
    the result is not small compared to the pump field.
    """
    np_ = abs(pump_alpha) ** 2
    denom = (
        res.nu_r - nu_s - 0.5j * res.kappa
        + (res.K - 1j * res.kappa_nl) * np_
        + res.K_prime * np_ * np_
    )
    alpha_s = -complex(eps_s) / denom
    if abs(pump_alpha) > 0 and abs(alpha_s) > 0.3 * abs(pump_alpha):
        warnings.warn(
            "spectroscopy field exceeds 30% of the pump field; the weak-probe "
            "expansion is strained",
            WeakProbeWarning,
            stacklevel=2,
        )
    return alpha_s


@dataclass(frozen=True)
class PointerSolution:
    """Pointer fields of all qubit states at one operating point."""

    pump: DriveSpec
    coeffs: StarkCoeffs | None
    alpha_p: np.ndarray   # complex, per qubit state
    alpha_s: np.ndarray   # complex, per qubit state (zero without probe)
    n: np.ndarray
    branch: tuple
    residual: np.ndarray

    @property
    def distinguishability(self) -> float:
        """D = |alpha_1p - alpha_0p|."""
        return float(abs(self.alpha_p[1] - self.alpha_p[0]))


def solve_pointer_states(
    q: QubitSpec,
    res: ResonatorSpec,
    pump: DriveSpec,
    spectroscopy: DriveSpec | None = None,
    branch_policy: str = "sweep_up",
    coeffs: StarkCoeffs | None = None,
) -> PointerSolution:
    """Pointer fields for every qubit state, plus the spectroscopy fields.

    The spectroscopy fields use the ground-state pump field in their
    denominator (low spectroscopy power, qubit mostly in its ground
    state), so they are state-independent here.
    """
    if coeffs is None:
        coeffs = stark_coeffs(q, pump)
    m = q.levels
    alpha_p = np.zeros(m, dtype=complex)
    nvals = np.zeros(m)
    labels = []
    resid = np.zeros(m)
    for i in range(m):
        branches = pump_branches(q, res, pump, i, coeffs)
        sel = _select_branch(branches, branch_policy)
        alpha_p[i] = sel.alpha
        nvals[i] = sel.n
        labels.append(sel.label)
        resid[i] = sel.residual
    alpha_s = np.zeros(m, dtype=complex)
    if spectroscopy is not None:
        a_s = solve_pointer_spectroscopy(
            q, res, alpha_p[0], spectroscopy.epsilon, spectroscopy.nu_d
        )
        alpha_s[:] = a_s
    return PointerSolution(
        pump=pump,
        coeffs=coeffs.with_xi(alpha_p),
        alpha_p=alpha_p,
        alpha_s=alpha_s,
        n=nvals,
        branch=tuple(labels),
        residual=resid,
    )


def pulled_resonator_freq(q: QubitSpec, res: ResonatorSpec) -> float:
    """Resonator frequency pulled by the ground-state qubit at zero field."""
    chain = lamb_shift_chain(q, res, np.array(q.nu, dtype=float), 0.0)
    return res.nu_r + float(chain.pull[0])


def reduced_detuning(
    res: ResonatorSpec,
    pump: DriveSpec,
    pulled: bool = True,
    q: QubitSpec | None = None,
):
    """Reduced pump detuning Omega = 2(nu_eff - nu_p)/kappa and Omega/Omega_C.

    With pulled=True (requires q) nu_eff is the resonator frequency
    pulled by the ground-state qubit; otherwise the bare nu_r.
    """
    if pulled:
        if q is None:
            raise ValueError("pulled detuning needs a qubit spec")
        nu_eff = pulled_resonator_freq(q, res)
    else:
        nu_eff = res.nu_r
    omega = 2.0 * (nu_eff - pump.nu_d) / res.kappa
    return omega, omega / OMEGA_C


def pump_thresholds(
    q: QubitSpec | None,
    res: ResonatorSpec,
    nu_p: float,
    eps_grid: np.ndarray,
    state: int = 0,
    coeffs: StarkCoeffs | None = None,
):
    """Bistability thresholds (eps_low, eps_high) at fixed pump frequency.

    Bisection on the root count of the pump polynomial over the drive
    amplitude, to 1e-4 relative. The amplitude grid supplies the initial
    brackets and is refined (doubled, up to 4 times) if it straddles a
    window without resolving it; (nan, nan) when no window is found.
    """
    pump0 = DriveSpec(1.0, nu_p, "pump")
    cf0 = coeffs
    if cf0 is None and q is not None:
        cf0 = stark_coeffs(q, pump0)  # independent of the amplitude
    base_eq = _state_equation(res, pump0, cf0, state)
    base_poly = base_eq.target_poly()

    def count(eps):
        if eps == 0.0:
            return 1
        poly = base_poly.copy()
        poly[-1] -= eps * eps
        return _real_nonneg_roots(poly).size

    eps_grid = np.asarray(sorted(set(float(abs(e)) for e in eps_grid)))
    if eps_grid.size < 2:
        raise ValueError("need at least two amplitudes to bracket thresholds")

    window = _bistable_window(base_eq)

    grid = eps_grid
    for _ in range(_MAX_GRID_REFINES + 1):
        counts = np.array([count(e) for e in grid])
        jumps = np.nonzero(np.diff(counts))[0]
        if jumps.size >= 2 or window is None:
            break
        grid = np.unique(np.concatenate([grid, 0.5 * (grid[:-1] + grid[1:])]))

    def bisect(lo, hi):
        clo = count(lo)
        while hi - lo > THRESHOLD_RTOL * hi:
            mid = 0.5 * (lo + hi)
            if count(mid) == clo:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    # Root count rises entering the window (lower edge), falls leaving it.
    lo_edge = float("nan")
    hi_edge = float("nan")
    for k in jumps:
        edge = bisect(grid[k], grid[k + 1])
        if counts[k + 1] > counts[k] and math.isnan(lo_edge):
            lo_edge = edge
        elif counts[k + 1] < counts[k]:
            hi_edge = edge
    if window is not None and (math.isnan(lo_edge) or math.isnan(hi_edge)):
        warnings.warn(
            "amplitude grid does not bracket the full bistable window "
            "even after refinement",
            UserWarning,
            stacklevel=2,
        )
    return float(lo_edge), float(hi_edge)


@dataclass(frozen=True)
class StabilityDiagram:
    """Region labels and threshold curves over (Omega/Omega_C, eps_p)."""

    omega_ratio: np.ndarray
    eps_p: np.ndarray
    region: np.ndarray      # shape (len(omega_ratio), len(eps_p)), strings
    eps_low: np.ndarray     # nan where monostable
    eps_high: np.ndarray
    nu_p: np.ndarray


def stability_diagram(
    q: QubitSpec | None,
    res: ResonatorSpec,
    omega_ratio: np.ndarray,
    eps_p: np.ndarray,
    state: int = 0,
    pulled: bool | None = None,
) -> StabilityDiagram:
    """Classify (detuning, amplitude) cells as mono-L, mono-H, or bistable.

    omega_ratio values are Omega/Omega_C; each maps to a pump frequency
    nu_p = nu_eff - Omega kappa/2, with nu_eff pulled when a qubit is
    given (default) and bare otherwise.
    """
    omega_ratio = np.asarray(omega_ratio, dtype=float)
    eps_p = np.asarray(eps_p, dtype=float)
    if pulled is None:
        pulled = q is not None
    nu_eff = pulled_resonator_freq(q, res) if pulled else res.nu_r

    regions = np.empty((omega_ratio.size, eps_p.size), dtype=object)
    lows = np.full(omega_ratio.size, np.nan)
    highs = np.full(omega_ratio.size, np.nan)
    nu_ps = np.zeros(omega_ratio.size)
    for k, ratio in enumerate(omega_ratio):
        nu_p = nu_eff - ratio * OMEGA_C * res.kappa / 2.0
        nu_ps[k] = nu_p
        lo, hi = pump_thresholds(q, res, nu_p, eps_p, state)
        lows[k], highs[k] = lo, hi
        for j, e in enumerate(eps_p):
            pump = DriveSpec(e, nu_p, "pump")
            branches = pump_branches(q, res, pump, state)
            if sum(b.stable for b in branches) > 1:
                regions[k, j] = "bistable"
            else:
                sel = next(b for b in branches if b.stable)
                regions[k, j] = "mono-H" if sel.label == "H" else "mono-L"
    return StabilityDiagram(omega_ratio, eps_p, regions, lows, highs, nu_ps)


def critical_detuning(
    res: ResonatorSpec,
    q: QubitSpec | None = None,
    state: int = 0,
    rtol: float = 1e-12,
) -> float:
    """Bare reduced detuning Omega where the bistable window first opens.

    Bisection on the existence of a fold pair of the pump polynomial.
    For the bare Kerr resonator this is Omega_C = sqrt(3) exactly.
    """
    def has_window(omega):
        nu_p = res.nu_r - omega * res.kappa / 2.0
        pump = DriveSpec(1.0, nu_p, "pump")
        cf = stark_coeffs(q, pump) if q is not None else None
        return _bistable_window(_state_equation(res, pump, cf, state)) is not None

    lo, hi = 1e-6, OMEGA_C
    while not has_window(hi):
        lo = hi
        hi *= 2.0
        if hi > 1e6:
            raise SolverError("no bistable window found up to Omega = 1e6")
    while (hi - lo) > rtol * hi:
        mid = 0.5 * (lo + hi)
        if has_window(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ResponseExpansion:
    """Pump field expanded in powers of the dispersive pull of one state."""

    alpha_bar: complex
    alpha1: complex
    alpha2: complex
    ratio: float
    diverged: bool = False


def _bare_pump_derivs(res: ResonatorSpec, nu_p: float, alpha_bar: complex):
    """Wirtinger derivatives of the bare pump equation at alpha_bar."""
    kt = res.K - 1j * res.kappa_nl
    kp = res.K_prime
    n = abs(alpha_bar) ** 2
    c = res.nu_r - nu_p - 0.5j * res.kappa
    f_a = c + 2.0 * kt * n + 3.0 * kp * n * n
    f_as = kt * alpha_bar**2 + 2.0 * kp * n * alpha_bar**2
    f_aa = 2.0 * kt * np.conj(alpha_bar) + 6.0 * kp * n * np.conj(alpha_bar)
    f_aas = 2.0 * kt * alpha_bar + 6.0 * kp * n * alpha_bar
    f_asas = 2.0 * kp * alpha_bar**3
    return f_a, f_as, f_aa, f_aas, f_asas


def _solve_conjugate_pair(f_a, f_as, rhs):
    """x from f_a x + f_as conj(x) = rhs (with the conjugate equation)."""
    det = abs(f_a) ** 2 - abs(f_as) ** 2
    if det == 0.0:
        return None
    return (np.conj(f_a) * rhs - f_as * np.conj(rhs)) / det


def response_expansion(
    q: QubitSpec | None,
    res: ResonatorSpec,
    pump: DriveSpec,
    state: int = 0,
    pull: float | None = None,
    branch_policy: str = "sweep_up",
) -> ResponseExpansion:
    """Exact second-order expansion of the pump field in the state pull.

    The qubit-independent field alpha_bar solves the bare pump equation
    (shift coefficients zeroed); the perturbation is the linear pull
    term s2 * alpha added by state `state` (or an explicit `pull` in
    MHz). Successive orders solve the same linearized conjugate pair
    with right-hand sides from the Wirtinger expansion, so
    |alpha1| is exactly linear and |alpha2| exactly quadratic in s2.
    """
    if pull is None:
        if q is None:
            raise ValueError("need a qubit spec or an explicit pull")
        pull = float(stark_coeffs(q, pump).s2[state])
    alpha_bar = solve_pointer_pump(None, res, pump, branch_policy=branch_policy)
    f_a, f_as, f_aa, f_aas, f_asas = _bare_pump_derivs(res, pump.nu_d, alpha_bar)

    rhs1 = -pull * alpha_bar
    a1 = _solve_conjugate_pair(f_a, f_as, rhs1)
    if a1 is None:
        return ResponseExpansion(alpha_bar, 0j, 0j, float("inf"), True)
    rhs2 = (
        -pull * a1
        - 0.5 * f_aa * a1 * a1
        - f_aas * a1 * np.conj(a1)
        - 0.5 * f_asas * np.conj(a1) ** 2
    )
    a2 = _solve_conjugate_pair(f_a, f_as, rhs2)
    if a2 is None:
        return ResponseExpansion(alpha_bar, a1, 0j, float("inf"), True)
    if a1 == 0:
        return ResponseExpansion(alpha_bar, a1, a2, float("inf"), abs(a2) > 0)
    return ResponseExpansion(alpha_bar, a1, a2, float(abs(a2) / abs(a1)))


def quadratic_response_ratio(
    q: QubitSpec,
    res: ResonatorSpec,
    pump: DriveSpec,
    state: int = 0,
) -> float:
    """r = |alpha2| / |alpha1| for the given state's actual pull."""
    return response_expansion(q, res, pump, state).ratio


def linear_response_fields(
    q: QubitSpec,
    res: ResonatorSpec,
    pump: DriveSpec,
    branch_policy: str = "sweep_up",
) -> list[ResponseExpansion]:
    """First-order pointer fields around the qubit-independent solution.

    Per state i: alpha_{i,p} = alpha_bar + alpha1_i with

        alpha1_i = -s2_i alpha_bar / [(nu_r - nu_p - i kappa/2) + 3K|alpha_bar|^2],

    the single-pole form of the first-order response (it matches the
    exact pull derivative when K = 0).
    """
    coeffs = stark_coeffs(q, pump)
    alpha_bar = solve_pointer_pump(None, res, pump, branch_policy=branch_policy)
    n = abs(alpha_bar) ** 2
    denom = (res.nu_r - pump.nu_d - 0.5j * res.kappa) + 3.0 * res.K * n
    out = []
    for i in range(q.levels):
        a1 = -coeffs.s2[i] * alpha_bar / denom
        out.append(ResponseExpansion(alpha_bar, a1, 0j, 0.0))
    return out


def pump_field_gain(
    res: ResonatorSpec,
    nu_p: float,
    alpha_bar: complex,
) -> float:
    """|d alpha_bar / d nu_p| of the bare pump equation at alpha_bar."""
    f_a, f_as, _, _, _ = _bare_pump_derivs(res, nu_p, alpha_bar)
    # d(nu_r - nu_p)/d nu_p = -1, so the implicit RHS is +alpha_bar.
    da = _solve_conjugate_pair(f_a, f_as, alpha_bar)
    if da is None:
        return float("inf")
    return float(abs(da))


def _max_gain_point(res: ResonatorSpec, nu_p: float):
    """Photon number and amplitude maximizing |d alpha_bar / d nu_p|."""
    pump1 = DriveSpec(1.0, nu_p, "pump")
    eq = _state_equation(res, pump1, None, 0)
    window = _bistable_window(eq)
    if window is not None:
        n_hi = window[2] * (1.0 - 1e-9)  # stay on the up-sweep branch
    else:
        delta = res.nu_r - nu_p
        scale = abs(res.K) + abs(res.K_prime) + res.kappa_nl
        if scale == 0.0:
            raise SolverError("gain point undefined for a linear resonator")
        n_hi = 8.0 * (abs(delta) + res.kappa) / scale

    def gain_at(n):
        return pump_field_gain(res, nu_p, eq.alpha_of(n))

    ngrid = np.linspace(n_hi / 400.0, n_hi, 400)
    gains = np.array([gain_at(n) for n in ngrid])
    k = int(np.argmax(gains))
    lo = ngrid[max(k - 1, 0)]
    hi = ngrid[min(k + 1, ngrid.size - 1)]
    sol = optimize.minimize_scalar(
        lambda n: -gain_at(n), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-10 * max(n_hi, 1.0)},
    )
    n_star = float(sol.x)
    eps_star = math.sqrt(max(float(np.polyval(eq.target_poly(), n_star)), 0.0))
    return n_star, eps_star


def s_max_curve(
    q: QubitSpec | None,
    res: ResonatorSpec,
    omega_ratio: np.ndarray,
    r_threshold: float = 0.1,
):
    """Largest dispersive pull with a quadratic/linear response ratio <= r_threshold.

    For each Omega/Omega_C (bare convention, so the gain diverges exactly
    at the critical point), the pump amplitude is set to the gain point,
    the maximizer of |d alpha_bar / d nu_p| along the up-sweep branch;
    there the response ratio r is exactly linear in the pull, so
    S_max = r_threshold / (r per MHz of pull).

    Returns a dict of arrays: omega_ratio, s_max_mhz, eps_gain_mhz,
    n_gain, r_per_mhz, and (when q is given) the scenario's actual
    |s2_1 - s2_0| per point for context.
    """
    omega_ratio = np.asarray(omega_ratio, dtype=float)
    if np.any(omega_ratio <= 0):
        raise ValueError("omega ratios must be positive")
    s_max = np.zeros(omega_ratio.size)
    eps_gain = np.zeros(omega_ratio.size)
    n_gain = np.zeros(omega_ratio.size)
    r_unit = np.zeros(omega_ratio.size)
    s_actual = np.full(omega_ratio.size, np.nan)
    for k, ratio in enumerate(omega_ratio):
        nu_p = res.nu_r - ratio * OMEGA_C * res.kappa / 2.0
        n_star, eps_star = _max_gain_point(res, nu_p)
        pump = DriveSpec(eps_star, nu_p, "pump")
        exp = response_expansion(None, res, pump, pull=1.0)
        r_unit[k] = exp.ratio
        s_max[k] = r_threshold / exp.ratio if exp.ratio > 0 else float("inf")
        eps_gain[k] = eps_star
        n_gain[k] = n_star
        if q is not None:
            c = stark_coeffs(q, pump)
            s_actual[k] = abs(c.s2[1] - c.s2[0])
    return {
        "omega_ratio": omega_ratio,
        "s_max_mhz": s_max,
        "eps_gain_mhz": eps_gain,
        "n_gain": n_gain,
        "r_per_mhz": r_unit,
        "s_actual_mhz": s_actual,
    }
