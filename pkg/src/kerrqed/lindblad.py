"""Brute-force master-equation engine on a truncated qubit x Fock space.

This module integrates the full dissipative model
``rho' = -i[H(t), rho] + kappa D[a] + kappa_nl D[a^2]
+ gamma sum_i (g_i/g_0)^2 D[|i><i+1|] + 2 gamma_phi D[P_eps]``
in a frame co-rotating with the pump, so only the spectroscopy tone
(if any) remains explicitly time dependent, oscillating at the
pump/probe beat frequency. It produces steady-state observables and
oracle spectra against which the analytic reduced model is validated.

Unlike the rest of the package, which works in ordinary-frequency MHz
throughout, absolute time enters here, so the generator internally
converts every frequency and rate to angular units (rad/us). All
public inputs and outputs stay in MHz and probabilities.

The generator application is matrix free in the superoperator sense:
only (M*N, M*N) state-sized matrices are ever materialized. A dense
superoperator is offered solely as a micro oracle for tiny cutoffs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CutoffError, CutoffWarning, SolverError, SteadinessWarning
from .fitting import lorentzian_fit
from .model import TWO_PI, DriveSpec, QubitSpec, ResonatorSpec
from .fields import solve_pointer_pump
from .reduced import SpectrumGrid

__all__ = [
    "HilbertConfig",
    "DensityState",
    "EvolutionResult",
    "FloquetResult",
    "LindbladGenerator",
    "build_generator",
    "coherent_state",
    "evolve_to_steady",
    "floquet_steady",
    "oracle_spectrum",
    "superoperator_matrix",
    "steady_state_exact",
]

# Hard abort threshold for sampled negativity; A-grade runs stay above -1e-8.
POSITIVITY_ABORT = -1e-6
LEAKAGE_LIMIT = 1e-4
LEAKAGE_ESCALATION = 1.5

# Dormand-Prince 5(4) tableau (FSAL).
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B5 - _DP_B4


@dataclass(frozen=True)
class HilbertConfig:
    """Truncation, frame, and integrator settings for the full engine.

    Parameters
    ----------
    levels : int
        Qubit levels kept (M >= 2).
    n_fock : int
        Fock cutoff (N >= 4); the top two Fock populations are the
        leakage monitor and should stay below 1e-4 at steady state.
    frame_mhz : float or None
        Rotating-frame frequency for both subsystems. None means "use
        the pump frequency", which makes the pump term static.
    rtol, atol : float
        Embedded Runge-Kutta error-control tolerances (elementwise on
        the density matrix).
    horizon_us : float
        Wall of simulated time; running out of it flags the result as
        unsteady rather than raising.
    window_us : float or None
        Target averaging-window length. The actual window is snapped
        to an integer number of pump/probe beat periods. None picks a
        default of 0.35 us.
    steadiness_rtol : float
        Relative change of windowed means of qubit excited population
        and photon number below which the run is declared steady.
    positivity_interval : int
        Accepted steps between sampled eigenvalue (positivity) checks.
    """

    levels: int = 3
    n_fock: int = 32
    frame_mhz: float | None = None
    rtol: float = 1e-8
    atol: float = 1e-11
    horizon_us: float = 60.0
    window_us: float | None = None
    steadiness_rtol: float = 1e-4
    positivity_interval: int = 400

    def __post_init__(self):
        if self.levels < 2:
            raise CutoffError("need at least 2 qubit levels")
        if self.n_fock < 4:
            raise CutoffError("need at least 4 Fock states")
        if not (0 < self.rtol < 1e-2 and 0 <= self.atol < 1e-2):
            raise ValueError("integrator tolerances out of range")
        if self.horizon_us <= 0:
            raise ValueError("horizon_us must be positive")

    def with_n_fock(self, n_fock: int) -> "HilbertConfig":
        return HilbertConfig(
            levels=self.levels,
            n_fock=int(n_fock),
            frame_mhz=self.frame_mhz,
            rtol=self.rtol,
            atol=self.atol,
            horizon_us=self.horizon_us,
            window_us=self.window_us,
            steadiness_rtol=self.steadiness_rtol,
            positivity_interval=self.positivity_interval,
        )


@dataclass
class DensityState:
    """Density matrix on the product basis |qubit level, Fock n>.

    Basis index is ``i * n_fock + n``. Physical states have unit
    trace (drift < 1e-8), Hermiticity residual < 1e-10, and sampled
    minimum eigenvalue > -1e-8.
    """

    rho: np.ndarray
    t: float = 0.0

    def trace_error(self) -> float:
        return abs(np.trace(self.rho).real - 1.0) + abs(np.trace(self.rho).imag)

    def herm_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.rho)[0])


@dataclass
class EvolutionResult:
    """Steady-state observables plus integrity diagnostics."""

    state: DensityState
    p_excited: float
    n_mean: float
    a_mean: complex
    steady: bool
    windows: int
    diagnostics: dict = field(default_factory=dict)


def coherent_state(alpha: complex, n_fock: int) -> np.ndarray:
    """Coherent-state amplitude vector on a truncated Fock ladder."""
    amp = np.zeros(n_fock, complex)
    amp[0] = 1.0
    if alpha != 0:
        n = np.arange(n_fock)
        log_fact = np.cumsum(np.log(np.maximum(n, 1)))
        amp = np.exp(n * np.log(complex(alpha)) - 0.5 * log_fact)
        amp[0] = 1.0
    norm = math.sqrt(float(np.sum(np.abs(amp) ** 2)))
    return amp / norm


class LindbladGenerator:
    """Matrix-free application of the full master-equation generator.

    Precomputes the static effective Hamiltonian (including the
    anti-Hermitian jump-rate part), the oscillating drive matrices,
    and index tables for the jump superoperator, which is applied by
    array slicing rather than matrix products.
    """

    def __init__(self, q: QubitSpec, res: ResonatorSpec, drives, hilbert: HilbertConfig):
        if hilbert.levels > q.levels:
            raise CutoffError(
                "hilbert.levels=%d exceeds qubit model levels=%d"
                % (hilbert.levels, q.levels)
            )
        self.q = q
        self.res = res
        self.hilbert = hilbert
        self.drives = tuple(drives)
        M, N = hilbert.levels, hilbert.n_fock
        self.m_levels = M
        self.n_fock = N
        self.dim = M * N

        pumps = [d for d in self.drives if d.role == "pump"]
        if hilbert.frame_mhz is not None:
            frame = float(hilbert.frame_mhz)
        elif pumps:
            frame = float(pumps[0].nu_d)
        else:
            frame = res.nu_r
        self.frame_mhz = frame

        nvec = np.arange(N, dtype=float)
        sq1 = np.sqrt(nvec[1:])                      # <n-1|a|n>
        adag = np.zeros((N, N))
        adag[np.arange(1, N), np.arange(N - 1)] = sq1
        a_op = adag.T.copy()

        iq = np.eye(M)
        if_ = np.eye(N)

        # Static Hermitian part, angular units (rad/us).
        h_res_diag = (res.nu_r - frame) * nvec \
            + 0.5 * res.K * nvec * (nvec - 1) \
            + (res.K_prime / 3.0) * nvec * (nvec - 1) * (nvec - 2)
        levels_idx = np.arange(M, dtype=float)
        h_q_diag = np.array(q.nu[:M]) - levels_idx * frame
        h0 = np.kron(np.diag(h_q_diag), if_) + np.kron(iq, np.diag(h_res_diag))
        qcoup = np.zeros((M, M))
        for i in range(M - 1):
            qcoup[i, i + 1] = q.g[i]
        h0 = h0 + np.kron(qcoup, adag) + np.kron(qcoup.T, a_op)
        h0 = TWO_PI * h0.astype(complex)

        self._adag_full = np.kron(iq, adag).astype(complex)
        self._a_full = np.kron(iq, a_op).astype(complex)
        # Ladder weights g_i/g_0; a fully decoupled qubit (g_0 = 0) keeps
        # unit weights so its bare decay/drive rates survive.
        if q.g and q.g[0] != 0:
            weights = [q.g[i] / q.g[0] for i in range(M - 1)]
        else:
            weights = [1.0] * (M - 1)
        qraise = np.zeros((M, M))
        for i in range(M - 1):
            qraise[i + 1, i] = weights[i]
        self._qraise_full = np.kron(qraise, if_).astype(complex)

        # Oscillating drive terms: H += c(t)*mat + conj(c(t))*mat^dag
        # with c(t) = amp_ang * exp(-1i * delta_ang * t). Every drive
        # matrix is a single subdiagonal band in the flat basis:
        # mat[r, r - shift] = wvec[r] (resonator tones: shift 1, qubit
        # tones: shift n_fock), which the Floquet path exploits.
        self._osc: list[tuple[np.ndarray, np.ndarray, complex, float]] = []
        self._osc_band: list[tuple[int, np.ndarray, complex, float]] = []
        wvec_res = np.kron(np.ones(M), np.concatenate(([0.0], np.sqrt(nvec[1:]))))
        wvec_qub = np.kron(
            np.concatenate(([0.0], [qraise[i + 1, i] for i in range(M - 1)])),
            np.ones(N),
        )
        for d in self.drives:
            if d.role == "qubit":
                mat, shift, wvec = self._qraise_full, N, wvec_qub
            else:
                mat, shift, wvec = self._adag_full, 1, wvec_res
            amp = TWO_PI * complex(d.epsilon)
            delta = TWO_PI * (d.nu_d - frame)
            if amp == 0:
                continue
            if abs(d.nu_d - frame) < 1e-12:
                h0 = h0 + amp * mat + np.conj(amp) * mat.conj().T
            else:
                self._osc.append((mat, mat.conj().T, amp, delta))
                self._osc_band.append((shift, wvec.astype(complex), amp, delta))
        # Slowest oscillating tone; averaging windows hold an integer
        # number of its periods (faster beats then dephase within it).
        self.beat_mhz = min(
            (abs(d.nu_d - frame) for d in self.drives
             if d.epsilon != 0 and abs(d.nu_d - frame) >= 1e-12),
            default=0.0,
        )

        # Jump-rate sum  sum_L L^dag L  is diagonal in this basis.
        kap = TWO_PI * res.kappa
        kap_nl = TWO_PI * res.kappa_nl
        gam = TWO_PI * q.gamma
        gph = TWO_PI * q.gamma_phi
        self._kap = kap
        self._kap_nl = kap_nl
        gamma_i = np.array([gam * w**2 for w in weights])
        # |i><i+1| jumps deplete level i+1, so the decay diagonal is shifted.
        level_decay = np.concatenate(([0.0], gamma_i))
        eps_disp = np.array(q.epsilon_disp[:M], dtype=float)
        rate_diag = np.add.outer(level_decay, kap * nvec + kap_nl * nvec * (nvec - 1)).ravel()
        rate_diag = rate_diag + np.repeat(2.0 * gph * eps_disp**2, N)
        self._h_eff_static = h0 - 0.5j * np.diag(rate_diag)

        # Jump (sandwich) terms as flat shifted elementwise products:
        # out[:d-s, :d-s] += W (x) rho[s:, s:]. Weights are zeroed where
        # the flat shift would cross a qubit-block boundary.
        self._jump_gamma = gamma_i
        d = self.dim
        v1 = np.kron(np.ones(M), np.concatenate((np.sqrt(nvec[1:]), [0.0])))[: d - 1]
        self._w_shift1 = kap * np.outer(v1, v1)
        v2 = np.kron(
            np.ones(M), np.concatenate((np.sqrt(nvec[1:-1] * nvec[2:]), [0.0, 0.0]))
        )[: d - 2]
        self._w_shift2 = kap_nl * np.outer(v2, v2) if kap_nl != 0.0 else None
        if M > 1 and gamma_i.any():
            lvl = np.repeat(np.arange(M - 1), N)
            gq = np.repeat(gamma_i, N)
            wq = np.where(lvl[:, None] == lvl[None, :], np.sqrt(np.outer(gq, gq)), 0.0)
            self._w_shiftn = wq
        else:
            self._w_shiftn = None
        self._deph_w = 2.0 * gph * np.outer(eps_disp, eps_disp)
        if self._deph_w.any():
            ef = np.repeat(eps_disp, N)
            self._w_deph_full = 2.0 * gph * np.outer(ef, ef)
        else:
            self._w_deph_full = None
        self._tmp1 = np.empty((d - 1, d - 1), complex)
        self._tmp2 = np.empty((d - 2, d - 2), complex) if self._w_shift2 is not None else None
        self._tmpn = np.empty((d - N, d - N), complex) if self._w_shiftn is not None else None

        # Observable weights.
        self._p1_mask = np.zeros(self.dim)
        if M > 1:
            self._p1_mask[N:2 * N] = 1.0
        self._n_diag = np.tile(nvec, M)
        self._scratch = np.empty((self.dim, self.dim), complex)
        self._static_solver_cache = None

    # -- generator application ------------------------------------------------

    def h_eff(self, t: float, out: np.ndarray | None = None) -> np.ndarray:
        """Non-Hermitian effective Hamiltonian at time t (angular units)."""
        if out is None:
            out = np.empty_like(self._h_eff_static)
        np.copyto(out, self._h_eff_static)
        for mat, mat_dag, amp, delta in self._osc:
            c = amp * np.exp(-1j * delta * t)
            out += c * mat
            out += np.conj(c) * mat_dag
        return out

    def _jump_into(self, rho: np.ndarray, out: np.ndarray) -> None:
        d, N = self.dim, self.n_fock
        np.multiply(self._w_shift1, rho[1:, 1:], out=self._tmp1)
        out[: d - 1, : d - 1] += self._tmp1
        if self._w_shift2 is not None:
            np.multiply(self._w_shift2, rho[2:, 2:], out=self._tmp2)
            out[: d - 2, : d - 2] += self._tmp2
        if self._w_shiftn is not None:
            np.multiply(self._w_shiftn, rho[N:, N:], out=self._tmpn)
            out[: d - N, : d - N] += self._tmpn
        if self._w_deph_full is not None:
            out += self._w_deph_full * rho

    def apply_hermitian(self, t: float, rho: np.ndarray, out: np.ndarray) -> np.ndarray:
        """rho' for Hermitian rho, with a single matrix product per call."""
        heff = self.h_eff(t, self._scratch)
        m1 = heff @ rho
        m1 *= -1j
        np.conjugate(m1.T, out=out)
        out += m1
        self._jump_into(rho, out)
        return out

    def apply(self, t: float, rho: np.ndarray) -> np.ndarray:
        """Generator applied to an arbitrary (not necessarily Hermitian) matrix."""
        heff = self.h_eff(t, None)
        out = -1j * (heff @ rho - rho @ heff.conj().T)
        self._jump_into(rho, out)
        return out

    def apply_static(self, rho: np.ndarray) -> np.ndarray:
        """Time-independent part of the generator on an arbitrary matrix."""
        hs = self._h_eff_static
        out = -1j * (hs @ rho - rho @ hs.conj().T)
        self._jump_into(rho, out)
        return out

    def drive_commutators(self, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(-i[H_plus, rho], -i[H_minus, rho]) for the oscillating tone.

        H_plus is the e^{-i*beat*t} coefficient (amp * band matrix),
        H_minus its conjugate partner. Band structure keeps this at a
        few strided products instead of matrix multiplies.
        """
        if len(self._osc_band) != 1:
            raise SolverError("drive_commutators needs exactly one oscillating tone")
        shift, w, amp, _delta = self._osc_band[0]
        d = self.dim
        mp = np.zeros_like(rho)
        # H_plus rho - rho H_plus with H_plus[r, r-shift] = amp*w[r].
        mp[shift:, :] = w[shift:, None] * rho[: d - shift, :]
        mp[:, : d - shift] -= w[None, shift:] * rho[:, shift:]
        mp *= -1j * amp
        mm = np.zeros_like(rho)
        wc = np.conj(w)
        # H_minus = conj(amp) * band^dag, band^dag[r, r+shift] = conj(w[r+shift]).
        mm[: d - shift, :] = wc[shift:, None] * rho[shift:, :]
        mm[:, shift:] -= wc[None, shift:] * rho[:, : d - shift]
        mm *= -1j * np.conj(amp)
        return mp, mm

    def _static_superop(self):
        """Sparse matrix of the static generator plus the unit-trace closure.

        Rows and columns index the row-major flattening of the density
        matrix. The rank-1 closure term maps rho to (tr rho / dim) * I,
        which removes the stationary null space without disturbing any
        traceless right-hand side.
        """
        import scipy.sparse as sp

        d = self.dim
        eye = sp.identity(d, format="csr", dtype=complex)
        hs = sp.csr_matrix(self._h_eff_static)
        sup = (-1j) * sp.kron(hs, eye) + 1j * sp.kron(eye, hs.conj())

        def sandwich(wmat, s):
            # Feeding term out[r, c] += W[r, c] * rho[r+s, c+s].
            r, c = np.nonzero(np.abs(wmat) > 0)
            return sp.coo_matrix(
                (wmat[r, c].astype(complex), (r * d + c, (r + s) * d + (c + s))),
                shape=(d * d, d * d),
            )

        for wmat, s in (
            (self._w_shift1, 1),
            (self._w_shift2, 2),
            (self._w_shiftn, self.n_fock),
            (self._w_deph_full, 0),
        ):
            if wmat is not None:
                sup = sup + sandwich(wmat, s).tocsr()
        diag_pos = np.arange(d) * d + np.arange(d)
        closure = sp.coo_matrix(
            (np.full(d * d, 1.0 / d), (np.tile(diag_pos, d), np.repeat(diag_pos, d))),
            shape=(d * d, d * d),
        )
        return (sup + closure.tocsr()).tocsc()

    def static_solver(self):
        """Cached sparse form and LU of the trace-closed static generator.

        The factorization depends only on the static tones, never on an
        oscillating probe, so one factorization serves a whole probe
        sweep. Returns ``(mat, lu, diag)``: the sparse matrix (reused to
        factor harmonic-shifted copies), its LU, and the elementwise
        diagonal of the static generator.
        """
        if self._static_solver_cache is None:
            from scipy.sparse.linalg import splu

            hd = np.diagonal(self._h_eff_static)
            l0d = -1j * (hd[:, None] - np.conj(hd)[None, :])
            if self._w_deph_full is not None:
                l0d = l0d + self._w_deph_full
            mat = self._static_superop()
            self._static_solver_cache = (mat, splu(mat), l0d)
        return self._static_solver_cache

    # -- observables -----------------------------------------------------------

    def observables(self, rho: np.ndarray) -> tuple[float, float, complex]:
        """(excited-state population, mean photon number, <a>)."""
        d = np.diagonal(rho).real
        p1 = float(self._p1_mask @ d)
        n_mean = float(self._n_diag @ d)
        a_mean = complex(np.einsum("ij,ji->", self._a_full, rho))
        return p1, n_mean, a_mean

    def leakage(self, rho: np.ndarray) -> float:
        """Total population of the top two Fock states."""
        M, N = self.m_levels, self.n_fock
        d = np.diagonal(rho).real.reshape(M, N)
        return float(np.sum(d[:, N - 2:]))

    def default_initial(self, branch_policy: str = "sweep_up") -> DensityState:
        """Ground qubit x pointer coherent state (vacuum if no pump)."""
        M, N = self.m_levels, self.n_fock
        alpha = 0.0 + 0.0j
        pumps = [d for d in self.drives if d.role == "pump" and d.epsilon != 0]
        if pumps:
            try:
                alpha = solve_pointer_pump(
                    self.q, self.res, pumps[0], state=0, branch_policy=branch_policy
                )
            except Exception:
                alpha = 0.0 + 0.0j
        vec = np.zeros(self.dim, complex)
        vec[:N] = coherent_state(alpha, N)
        rho = np.outer(vec, vec.conj())
        return DensityState(rho=rho, t=0.0)


def build_generator(
    q: QubitSpec,
    res: ResonatorSpec,
    drives,
    hilbert: HilbertConfig,
) -> LindbladGenerator:
    """Assemble the matrix-free master-equation generator.

    Parameters
    ----------
    q, res : QubitSpec, ResonatorSpec
        Physical model (frequencies in MHz; conversion to angular
        units happens internally).
    drives : iterable of DriveSpec
        Any number of tones; "pump"/"spectroscopy" act on the
        resonator, "qubit" directly on the qubit ladder. Tones at the
        frame frequency become static terms.
    hilbert : HilbertConfig
        Truncation and integrator settings.

    Returns
    -------
    LindbladGenerator
    """
    return LindbladGenerator(q, res, drives, hilbert)


def _window_length(gen: LindbladGenerator) -> float:
    target = gen.hilbert.window_us if gen.hilbert.window_us else 0.35
    if gen.beat_mhz > 0:
        beat = 1.0 / gen.beat_mhz
        n_beats = max(1, round(target / beat))
        return n_beats * beat
    return target


def evolve_to_steady(
    gen: LindbladGenerator,
    rho0: DensityState | None = None,
    horizon_us: float | None = None,
    window_us: float | None = None,
) -> EvolutionResult:
    """Integrate to the (time-averaged) steady state.

    Uses an adaptive Dormand-Prince 5(4) pair with elementwise error
    control. Observables are averaged over windows that hold an
    integer number of pump/probe beat periods; the run is steady once
    the windowed means of the qubit excited population and the photon
    number each change by less than ``steadiness_rtol`` (relative)
    across two consecutive window pairs. Exhausting the horizon
    returns a result flagged unsteady (with a warning) instead of
    raising.

    Returns
    -------
    EvolutionResult
        Final state, window-averaged observables, steadiness flag,
        and diagnostics (trace drift, Hermiticity drift, sampled
        minimum eigenvalue, leakage, step counts).
    """
    hil = gen.hilbert
    state = rho0 if rho0 is not None else gen.default_initial()
    rho = state.rho.copy()
    t = float(state.t)
    t_end = t + (horizon_us if horizon_us is not None else hil.horizon_us)
    if window_us is None:
        window = _window_length(gen)
    else:
        window = window_us
        if gen.beat_mhz > 0:
            beat = 1.0 / gen.beat_mhz
            window = max(1, round(window / beat)) * beat

    rtol, atol = hil.rtol, hil.atol
    dim = gen.dim
    k = [np.empty((dim, dim), complex) for _ in range(7)]
    ytmp = np.empty((dim, dim), complex)
    gen.apply_hermitian(t, rho, k[0])

    h = 1e-5
    h_max = max(window / 4.0, 1e-4)
    max_herm = 0.0
    max_trace = 0.0
    min_eig = 1.0
    n_accept = 0
    n_reject = 0
    eig_checks = 0

    # Trapezoid accumulators for window means.
    p1_prev, n_prev, a_prev = gen.observables(rho)
    acc = np.zeros(2)
    acc_a = 0.0 + 0.0j
    acc_t = 0.0
    means: list[tuple[float, float, complex]] = []
    steady = False

    floor = 1e-9
    stretch = 0

    while t < t_end - 1e-12:
        window_end = min(t + (window - acc_t), t_end)
        if h > window_end - t:
            h = window_end - t
        # One DP45 attempt.
        for attempt in range(60):
            for s in range(1, 6):
                np.copyto(ytmp, rho)
                a_row = _DP_A[s]
                for j in range(s):
                    if a_row[j] != 0.0:
                        ytmp += (h * a_row[j]) * k[j]
                gen.apply_hermitian(t + _DP_C[s] * h, ytmp, k[s])
            np.copyto(ytmp, rho)
            a_row = _DP_A[6]
            for j in range(6):
                if a_row[j] != 0.0:
                    ytmp += (h * a_row[j]) * k[j]
            gen.apply_hermitian(t + h, ytmp, k[6])
            err = _DP_E[0] * k[0]
            for j in range(1, 7):
                if _DP_E[j] != 0.0:
                    err += _DP_E[j] * k[j]
            # Uniform scale: step size follows the loaded components, not
            # tiny fast-rotating coherences that observables never feel.
            scale = atol + rtol * max(
                float(np.max(np.abs(rho))), float(np.max(np.abs(ytmp)))
            )
            err_norm = float(np.sqrt(np.mean(np.abs(h * err / scale) ** 2)))
            if err_norm <= 1.0 or h <= 1e-12:
                break
            h = max(h * max(0.2, 0.9 * err_norm ** -0.2), 1e-12)
        else:
            raise SolverError("step-size control failed to accept a step")

        t_new = t + h
        rho, ytmp = ytmp, rho
        # Enforce Hermiticity; monitor how much symmetrization removed.
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        max_herm = max(max_herm, herm)
        rho += rho.conj().T
        rho *= 0.5
        np.copyto(k[0], k[6])          # FSAL
        n_accept += 1
        max_trace = max(max_trace, abs(np.trace(rho).real - 1.0))

        p1_new, n_new, a_new = gen.observables(rho)
        acc[0] += 0.5 * (p1_prev + p1_new) * h
        acc[1] += 0.5 * (n_prev + n_new) * h
        acc_a += 0.5 * (a_prev + a_new) * h
        acc_t += h
        p1_prev, n_prev, a_prev = p1_new, n_new, a_new
        t = t_new

        if n_accept % hil.positivity_interval == 0:
            eig_checks += 1
            ev = float(np.linalg.eigvalsh(rho)[0])
            min_eig = min(min_eig, ev)
            if ev < POSITIVITY_ABORT:
                raise SolverError(
                    "density matrix lost positivity (min eigenvalue %.3e)" % ev
                )

        # Next step size from the controller.
        grow = 0.9 * (err_norm + 1e-16) ** -0.2
        h = min(h * min(5.0, max(0.2, grow)), h_max)

        if acc_t >= window - 1e-12:
            means.append((acc[0] / acc_t, acc[1] / acc_t, acc_a / acc_t))
            acc[:] = 0.0
            acc_a = 0.0
            acc_t = 0.0
            if len(means) >= 3:
                ok = True
                for i_obs in range(2):
                    v2, v1, v0 = (means[-1][i_obs], means[-2][i_obs], means[-3][i_obs])
                    ref = max(abs(v2), floor)
                    if abs(v2 - v1) / ref > hil.steadiness_rtol or \
                            abs(v1 - v0) / ref > hil.steadiness_rtol:
                        ok = False
                        break
                if ok:
                    steady = True
                    break
            # Slowly growing windows cope with near-critical slowing.
            stretch += 1
            if stretch % 8 == 0:
                window *= 1.5
                if gen.beat_mhz > 0:
                    beat = 1.0 / gen.beat_mhz
                    window = max(1, round(window / beat)) * beat

    ev = float(np.linalg.eigvalsh(rho)[0])
    min_eig = min(min_eig, ev)
    eig_checks += 1
    if ev < POSITIVITY_ABORT:
        raise SolverError("density matrix lost positivity (min eigenvalue %.3e)" % ev)
    if not steady:
        warnings.warn(
            "horizon %.3g us exhausted before steadiness" % (t_end,), SteadinessWarning
        )
    if means:
        p1_bar, n_bar, a_bar = means[-1]
    else:
        p1_bar, n_bar, a_bar = gen.observables(rho)
    leak = gen.leakage(rho)
    diag = {
        "trace_drift": max_trace,
        "herm_drift": max_herm,
        "min_eigenvalue": min_eig,
        "leakage": leak,
        "steps_accepted": n_accept,
        "steps_rejected": n_reject,
        "windows": len(means),
        "window_us": window,
        "final_time_us": t,
        "eig_checks": eig_checks,
    }
    return EvolutionResult(
        state=DensityState(rho=rho, t=t),
        p_excited=p1_bar,
        n_mean=n_bar,
        a_mean=a_bar,
        steady=steady,
        windows=len(means),
        diagnostics=diag,
    )


@dataclass
class FloquetResult:
    """Algebraic steady state of the beat-periodic master equation."""

    state: DensityState
    p_excited: float
    n_mean: float
    a_mean: complex
    harmonics: int
    residual: float
    iterations: int
    harmonic_tail: float
    diagnostics: dict = field(default_factory=dict)
    x: np.ndarray | None = None


def floquet_steady(
    gen: LindbladGenerator,
    harmonics: int = 3,
    rtol: float = 1e-11,
    max_harmonics: int = 12,
    tail_tol: float = 1e-5,
    x0: np.ndarray | None = None,
) -> FloquetResult:
    """Solve the periodic steady state as a truncated harmonic ansatz.

    With a single oscillating tone at the beat frequency, the long-time
    state is periodic, rho(t) = sum_k rho_k exp(-i k beat t), and the
    harmonics satisfy a linear block-tridiagonal system closed by the
    unit-trace condition. That system is solved matrix-free with
    preconditioned GMRES; the zeroth harmonic is exactly the windowed
    time average the integrator would report, with no transient to
    outwait. With no oscillating tone this reduces to the static
    steady state (single block).

    The harmonic count grows automatically (by 2, warm-started) until
    the top harmonic's relative amplitude falls below ``tail_tol``.

    Returns
    -------
    FloquetResult
        Time-averaged observables, converged harmonic count, linear
        residual, and the raw solution for warm starts.
    """
    import scipy.sparse as sp
    from scipy.sparse.linalg import LinearOperator, gmres, splu

    if len(gen._osc_band) > 1:
        raise SolverError("floquet_steady supports at most one oscillating tone")
    d = gen.dim
    beat_ang = gen._osc_band[0][3] if gen._osc_band else 0.0
    has_beat = bool(gen._osc_band)

    # Preconditioner: blocks with |k| <= 1 (static generator, shifted by
    # i*k*beat) are inverted exactly through sparse LUs; higher blocks
    # are preconditioned elementwise, where the harmonic offset dominates
    # the off-diagonal couplings. Exact low-k inverses matter because
    # some coherence frequencies resonate with the beat, leaving only
    # the weak probe coupling for GMRES.
    mat0, lu0, l0d = gen.static_solver()
    lus = {0: lu0}
    if has_beat:
        shift_eye = sp.identity(d * d, format="csc", dtype=complex)
        for k in (1, -1):
            lus[k] = splu(mat0 + (1j * k * beat_ang) * shift_eye)
    floor = 1e-8 * max(beat_ang, TWO_PI * gen.res.kappa, 1.0)

    km = harmonics if has_beat else 0
    eye_flat = (np.eye(d) / d).ravel()
    x_prev = x0
    iters = 0
    while True:
        nh = 2 * km + 1
        n_tot = nh * d * d

        def matvec(xv, km=km, nh=nh):
            X = xv.reshape(nh, d, d)
            out = np.empty_like(X)
            for h in range(nh):
                k = h - km
                blk = gen.apply_static(X[h])
                if k != 0:
                    blk += (1j * k * beat_ang) * X[h]
                if has_beat:
                    if h > 0:
                        mp, _ = gen.drive_commutators(X[h - 1])
                        blk += mp
                    if h < nh - 1:
                        _, mm = gen.drive_commutators(X[h + 1])
                        blk += mm
                out[h] = blk
            out[km] += (np.trace(X[km]) / d) * np.eye(d)
            return out.ravel()

        pc = {}
        for h in range(nh):
            k = h - km
            if k in lus:
                continue
            m = l0d + 1j * k * beat_ang
            pc[h] = 1.0 / np.where(np.abs(m) < floor, floor, m)

        def psolve(xv, nh=nh, km=km):
            X = xv.reshape(nh, d, d)
            out = np.empty_like(X)
            for h in range(nh):
                k = h - km
                if k in lus:
                    out[h] = lus[k].solve(X[h].ravel()).reshape(d, d)
                else:
                    out[h] = X[h] * pc[h]
            return out.ravel()

        b = np.zeros(n_tot, complex)
        b[km * d * d:(km + 1) * d * d] = eye_flat

        if x_prev is not None and x_prev.size != n_tot:
            # Re-centre a smaller warm start inside the larger ansatz.
            old_nh = x_prev.size // (d * d)
            old_km = (old_nh - 1) // 2
            X0 = np.zeros((nh, d, d), complex)
            if old_km <= km:
                X0[km - old_km: km + old_km + 1] = x_prev.reshape(old_nh, d, d)
            x_prev = X0.ravel()

        A = LinearOperator((n_tot, n_tot), matvec=matvec, dtype=complex)
        M = LinearOperator((n_tot, n_tot), matvec=psolve, dtype=complex)

        def cb(_):
            nonlocal iters
            iters += 1

        xsol, info = gmres(
            A, b, x0=x_prev, rtol=rtol, atol=0.0, restart=60,
            maxiter=10, M=M, callback=cb, callback_type="pr_norm",
        )
        resid = float(np.linalg.norm(matvec(xsol) - b) / np.linalg.norm(b))
        if info != 0 and resid > 1e-8:
            raise SolverError(
                "Floquet steady-state solve stalled (info=%d, residual %.2e)"
                % (info, resid)
            )
        X = xsol.reshape(nh, d, d)
        tail = 0.0
        if has_beat and km > 0:
            top = max(float(np.max(np.abs(X[0]))), float(np.max(np.abs(X[-1]))))
            tail = top / max(float(np.max(np.abs(X[km]))), 1e-300)
        if not has_beat or tail < tail_tol or km >= max_harmonics:
            if tail >= tail_tol:
                warnings.warn(
                    "harmonic tail %.1e above %.1e at cutoff %d harmonics"
                    % (tail, tail_tol, km),
                    SteadinessWarning,
                )
            break
        x_prev = xsol
        km += 2

    rho0 = X[km]
    herm = float(np.max(np.abs(rho0 - rho0.conj().T)))
    rho0 = 0.5 * (rho0 + rho0.conj().T)
    tr = float(np.trace(rho0).real)
    trace_err = abs(tr - 1.0)
    rho0 = rho0 / tr
    p1, n_mean, a_mean = gen.observables(rho0)
    min_eig = float(np.linalg.eigvalsh(rho0)[0])
    if min_eig < POSITIVITY_ABORT:
        raise SolverError("Floquet steady state lost positivity (%.3e)" % min_eig)
    diag = {
        "trace_drift": trace_err,
        "herm_drift": herm,
        "min_eigenvalue": min_eig,
        "leakage": gen.leakage(rho0),
        "residual": resid,
        "iterations": iters,
        "harmonics": km,
        "harmonic_tail": tail,
    }
    return FloquetResult(
        state=DensityState(rho=rho0, t=math.inf),
        p_excited=p1,
        n_mean=n_mean,
        a_mean=a_mean,
        harmonics=km,
        residual=resid,
        iterations=iters,
        harmonic_tail=tail,
        diagnostics=diag,
        x=xsol,
    )


def oracle_spectrum(
    q: QubitSpec,
    res: ResonatorSpec,
    pump: DriveSpec,
    eps_s: complex,
    nu_s_values,
    hilbert: HilbertConfig,
    branch_policy: str = "sweep_up",
    method: str = "floquet",
) -> SpectrumGrid:
    """Brute-force qubit spectroscopy column at one pump amplitude.

    For each probe frequency the full model is taken to its
    time-averaged steady state and the excited-state population is
    recorded; the column is then fitted with the same Lorentzian
    routine the reduced model uses. ``method="floquet"`` (default)
    solves the beat-periodic state algebraically; ``method="evolve"``
    integrates the master equation until the windowed means settle.
    Both share the leakage monitor: if it trips, the Fock cutoff is
    escalated once (x1.5) with a warning and the column restarts; a
    second trip warns and finishes the column as-is.

    Each point warm-starts the next (harmonic vector or density
    matrix, depending on the method).

    Returns
    -------
    SpectrumGrid
        Single-row grid (one pump amplitude) with engine="oracle" and
        per-point integrity diagnostics.
    """
    nu_s_values = np.atleast_1d(np.asarray(nu_s_values, float))
    if nu_s_values.size == 0:
        raise ValueError("empty probe-frequency axis")
    if method not in ("floquet", "evolve"):
        raise ValueError("method must be 'floquet' or 'evolve'")

    hil = hilbert
    escalated = False
    for _round in range(2):
        gen0 = build_generator(q, res, (pump,), hil)
        warm_rho: DensityState | None = None
        warm_x: np.ndarray | None = None
        shared_cache = None
        p1 = np.empty(nu_s_values.size)
        point_diags = []

        def run_point(j):
            nonlocal warm_rho, warm_x, shared_cache
            drives = (pump, DriveSpec(eps_s, float(nu_s_values[j]), role="spectroscopy"))
            gen = build_generator(q, res, drives, hil)
            if method == "floquet":
                # The static factorization is probe-independent: share it
                # across the whole column.
                if shared_cache is not None:
                    gen._static_solver_cache = shared_cache
                out = floquet_steady(gen, x0=warm_x)
                shared_cache = gen._static_solver_cache
                warm_x = out.x
            else:
                rho0 = warm_rho if warm_rho is not None else gen0.default_initial(branch_policy)
                out = evolve_to_steady(gen, rho0)
                warm_rho = out.state
            p1[j] = out.p_excited
            point_diags.append(out.diagnostics)
            return out.diagnostics["leakage"]

        leaked = False
        for j in range(nu_s_values.size):
            if run_point(j) > LEAKAGE_LIMIT:
                leaked = True
                break
        if leaked and not escalated:
            new_n = int(math.ceil(hil.n_fock * LEAKAGE_ESCALATION))
            warnings.warn(
                "steady-state leakage above %.0e with n_fock=%d; retrying once "
                "with n_fock=%d" % (LEAKAGE_LIMIT, hil.n_fock, new_n),
                CutoffWarning,
            )
            hil = hil.with_n_fock(new_n)
            escalated = True
            continue
        if leaked:
            warnings.warn(
                "leakage persists after cutoff escalation (n_fock=%d); "
                "treating remaining points as saturated" % hil.n_fock,
                CutoffWarning,
            )
            # Finish the column anyway so the caller gets an artifact.
            for j2 in range(len(point_diags), nu_s_values.size):
                run_point(j2)
        break

    fit = lorentzian_fit(nu_s_values, p1)
    diagnostics = {
        "points": point_diags,
        "method": method,
        "n_fock_used": hil.n_fock,
        "escalated": escalated,
        "trace_drift": max(d["trace_drift"] for d in point_diags),
        "herm_drift": max(d["herm_drift"] for d in point_diags),
        "min_eigenvalue": min(d["min_eigenvalue"] for d in point_diags),
        "leakage": max(d["leakage"] for d in point_diags),
    }
    return SpectrumGrid(
        eps_p=np.array([abs(pump.epsilon)]),
        nu_s=nu_s_values,
        p1=p1.reshape(1, -1),
        fits=[fit],
        branch=("oracle",),
        breakdown=np.array([False]),
        engine="oracle",
        diagnostics=diagnostics,
    )


# -- dense micro oracle --------------------------------------------------------

def superoperator_matrix(gen: LindbladGenerator, t: float = 0.0) -> np.ndarray:
    """Dense superoperator in the row-major vec convention.

    vec(rho)[i*D+j] = rho[i, j]; vec(A rho B) = kron(A, B^T) vec(rho).
    Only offered for M*N <= 24; larger spaces are the matrix-free
    integrator's job.
    """
    d = gen.dim
    if d > 24:
        raise CutoffError("dense superoperator restricted to dimension <= 24")
    eye = np.eye(d)
    heff = gen.h_eff(t, None)
    # -i(Heff rho - rho Heff^dag): rho Heff^dag -> kron(I, (Heff^dag)^T) = kron(I, conj(Heff)).
    sup = -1j * (np.kron(heff, eye) - np.kron(eye, heff.conj()))
    # Jump sandwich terms L rho L^dag -> kron(L, conj(L)).
    M, N = gen.m_levels, gen.n_fock
    nvec = np.arange(N, dtype=float)
    adag = np.zeros((N, N))
    adag[np.arange(1, N), np.arange(N - 1)] = np.sqrt(nvec[1:])
    a_op = adag.T
    iq = np.eye(M)
    a_full = np.kron(iq, a_op)
    sup += gen._kap * np.kron(a_full, a_full.conj())
    if gen._kap_nl != 0.0:
        a2 = np.kron(iq, a_op @ a_op)
        sup += gen._kap_nl * np.kron(a2, a2.conj())
    if_ = np.eye(N)
    for i, g_i in enumerate(gen._jump_gamma):
        if g_i != 0.0:
            pi = np.zeros((M, M))
            pi[i, i + 1] = 1.0
            pf = np.kron(pi, if_)
            sup += g_i * np.kron(pf, pf.conj())
    if gen.q.gamma_phi > 0:
        eps_vec = np.array(gen.q.epsilon_disp[:M], dtype=float)
        pe = np.kron(np.diag(eps_vec), if_)
        sup += 2.0 * TWO_PI * gen.q.gamma_phi * np.kron(pe, pe.conj())
    return sup


def steady_state_exact(gen: LindbladGenerator) -> DensityState:
    """Exact steady state from the dense superoperator's null space.

    Requires a time-independent generator (no oscillating tones) and
    M*N <= 24. The null vector is Hermitized and trace-normalized.
    """
    if gen._osc:
        raise SolverError("exact steady state needs a time-independent generator")
    sup = superoperator_matrix(gen)
    w, v = np.linalg.eig(sup)
    idx = int(np.argmin(np.abs(w)))
    if abs(w[idx]) > 1e-6:
        raise SolverError("no numerical null vector (smallest |eig| %.3e)" % abs(w[idx]))
    d = gen.dim
    rho = v[:, idx].reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise SolverError("null vector has (numerically) zero trace")
    rho = rho / tr
    return DensityState(rho=rho, t=math.inf)
