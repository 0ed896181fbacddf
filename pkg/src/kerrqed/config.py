"""Scenario configuration: schema-validated TOML/JSON ingestion.

A scenario file fully determines a run: system specs, drive tones,
sweep axes, engine options, and output location. Unknown keys are
rejected with key-path messages; TOML syntax errors keep the parser's
line/column information. All frequencies, amplitudes, and rates are
plain MHz (cycles, not angular).
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - py3.10 fallback
    import tomli as tomllib

from .errors import ConfigError
from .fields import BRANCH_POLICIES
from .lindblad import HilbertConfig
from .model import DriveSpec, QubitSpec, ResonatorSpec
from .reduced import COEFF_VARIANTS, DRESSED_DEPHASING_MODES
from .transmon import build_transmon

ENGINES = ("reduced", "oracle", "both")
ORACLE_METHODS = ("floquet", "evolve")


@dataclass(frozen=True)
class RunConfig:
    """Validated scenario: specs, drives, sweep axes, and run options."""

    qubit: QubitSpec
    resonator: ResonatorSpec
    pump: DriveSpec
    spectroscopy: DriveSpec | None
    eps_p_mhz: np.ndarray
    nu_s_mhz: np.ndarray | None
    omega_ratio: np.ndarray | None
    branch_policy: str = "sweep_up"
    dressed_dephasing: str = "off"
    variant: str = "full"
    engine: str = "reduced"
    out_dir: str = "out"
    seed: int | None = None
    threads: int = 1
    hilbert: HilbertConfig = field(default_factory=HilbertConfig)
    oracle_method: str = "floquet"


def _fail(path: str, message: str):
    raise ConfigError("%s: %s" % (path, message))


def _reject_unknown(path: str, mapping: dict, allowed):
    extra = sorted(set(mapping) - set(allowed))
    if extra:
        _fail(path, "unknown key%s %s" % ("s" if len(extra) > 1 else "",
                                          ", ".join(repr(k) for k in extra)))


def _number(mapping: dict, path: str, key: str, default=None, required: bool = False):
    if key not in mapping:
        if required:
            _fail("%s.%s" % (path, key), "missing required value")
        return default
    v = mapping[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail("%s.%s" % (path, key), "expected a number, got %r" % (v,))
    return float(v)


def _integer(mapping: dict, path: str, key: str, default=None):
    if key not in mapping:
        return default
    v = mapping[key]
    if isinstance(v, bool) or not isinstance(v, int):
        _fail("%s.%s" % (path, key), "expected an integer, got %r" % (v,))
    return int(v)


def _string(mapping: dict, path: str, key: str, default=None, choices=None):
    if key not in mapping:
        return default
    v = mapping[key]
    if not isinstance(v, str):
        _fail("%s.%s" % (path, key), "expected a string, got %r" % (v,))
    if choices is not None and v not in choices:
        _fail("%s.%s" % (path, key),
              "expected one of %s, got %r" % ("/".join(choices), v))
    return v


def _number_list(mapping: dict, path: str, key: str, default=None):
    if key not in mapping:
        return default
    v = mapping[key]
    if not isinstance(v, list) or not v or any(
        isinstance(x, bool) or not isinstance(x, (int, float)) for x in v
    ):
        _fail("%s.%s" % (path, key), "expected a non-empty list of numbers")
    return [float(x) for x in v]


def _axis(value, path: str) -> np.ndarray:
    """Sweep axis: explicit list of values or {start, stop, points} grid."""
    if isinstance(value, list):
        if not value:
            _fail(path, "empty axis")
        if any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in value):
            _fail(path, "expected numbers")
        return np.asarray(value, dtype=float)
    if isinstance(value, dict):
        _reject_unknown(path, value, ("start", "stop", "points"))
        start = _number(value, path, "start", required=True)
        stop = _number(value, path, "stop", required=True)
        points = _integer(value, path, "points")
        if points is None:
            _fail("%s.points" % path, "missing required value")
        if points < 1:
            _fail("%s.points" % path, "empty axis")
        return np.linspace(start, stop, points)
    _fail(path, "expected a list of values or a start/stop/points table")


def _parse_qubit(section, path: str) -> QubitSpec:
    if not isinstance(section, dict):
        _fail(path, "expected a table")
    allowed = ("levels_mhz", "couplings_mhz", "dephasing_dispersion",
               "gamma_mhz", "gamma_phi_mhz", "transmon")
    _reject_unknown(path, section, allowed)
    gamma = _number(section, path, "gamma_mhz", 0.0)
    gamma_phi = _number(section, path, "gamma_phi_mhz", 0.0)

    if "transmon" in section:
        for key in ("levels_mhz", "couplings_mhz", "dephasing_dispersion"):
            if key in section:
                _fail("%s.%s" % (path, key),
                      "explicit levels cannot be combined with a transmon table")
        sub = section["transmon"]
        tpath = path + ".transmon"
        if not isinstance(sub, dict):
            _fail(tpath, "expected a table")
        _reject_unknown(tpath, sub, ("ej_mhz", "ec_mhz", "levels", "g0_mhz",
                                     "charge_offset"))
        ej = _number(sub, tpath, "ej_mhz", required=True)
        ec = _number(sub, tpath, "ec_mhz", required=True)
        levels = _integer(sub, tpath, "levels", 3)
        g0 = _number(sub, tpath, "g0_mhz", required=True)
        ng = _number(sub, tpath, "charge_offset", 0.5)
        try:
            return build_transmon(ej, ec, levels, g0=g0, ng=ng,
                                  gamma=gamma, gamma_phi=gamma_phi)
        except ValueError as exc:
            _fail(tpath, str(exc))

    nu = _number_list(section, path, "levels_mhz")
    if nu is None:
        _fail(path, "need either levels_mhz or a transmon table")
    g = _number_list(section, path, "couplings_mhz")
    if g is None:
        _fail("%s.couplings_mhz" % path, "missing required value")
    eps = _number_list(section, path, "dephasing_dispersion",
                       [float(i) for i in range(len(nu))])
    try:
        return QubitSpec(nu=tuple(nu), g=tuple(g), epsilon_disp=tuple(eps),
                         gamma=gamma, gamma_phi=gamma_phi)
    except ValueError as exc:
        _fail(path, str(exc))


def _parse_resonator(section, path: str) -> ResonatorSpec:
    if not isinstance(section, dict):
        _fail(path, "expected a table")
    _reject_unknown(path, section, ("nu_r_mhz", "kerr_mhz", "kerr_prime_mhz",
                                    "kappa_mhz", "kappa_nl_mhz"))
    try:
        return ResonatorSpec(
            nu_r=_number(section, path, "nu_r_mhz", required=True),
            K=_number(section, path, "kerr_mhz", 0.0),
            K_prime=_number(section, path, "kerr_prime_mhz", 0.0),
            kappa=_number(section, path, "kappa_mhz", required=True),
            kappa_nl=_number(section, path, "kappa_nl_mhz", 0.0),
        )
    except ValueError as exc:
        _fail(path, str(exc))


def _parse_drive(section, path: str, role: str) -> DriveSpec:
    if not isinstance(section, dict):
        _fail(path, "expected a table")
    _reject_unknown(path, section, ("freq_mhz", "amp_mhz", "role"))
    given_role = _string(section, path, "role", role,
                         ("pump", "spectroscopy", "qubit"))
    return DriveSpec(
        epsilon=_number(section, path, "amp_mhz", required=True),
        nu_d=_number(section, path, "freq_mhz", required=True),
        role=given_role,
    )


def _parse_raw(raw: dict, origin: str) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("%s: top level must be a table" % origin)
    _reject_unknown(origin, raw, ("qubit", "resonator", "pump", "spectroscopy",
                                  "drives", "sweep", "run", "oracle"))
    for key in ("qubit", "resonator"):
        if key not in raw:
            raise ConfigError("%s: missing [%s] section" % (origin, key))
    qubit = _parse_qubit(raw["qubit"], "[qubit]")
    resonator = _parse_resonator(raw["resonator"], "[resonator]")

    # Drives: convenient [pump]/[spectroscopy] tables, or a [[drives]]
    # list with roles. Exactly one pump either way.
    pumps: list[DriveSpec] = []
    probes: list[DriveSpec] = []
    if "pump" in raw:
        pumps.append(_parse_drive(raw["pump"], "[pump]", "pump"))
    if "spectroscopy" in raw:
        probes.append(_parse_drive(raw["spectroscopy"], "[spectroscopy]",
                                   "spectroscopy"))
    if "drives" in raw:
        entries = raw["drives"]
        if not isinstance(entries, list):
            raise ConfigError("[drives]: expected an array of tables")
        for i, entry in enumerate(entries):
            d = _parse_drive(entry, "[drives][%d]" % i, "pump")
            if d.role == "pump":
                pumps.append(d)
            elif d.role == "spectroscopy":
                probes.append(d)
            else:
                raise ConfigError(
                    "[drives][%d]: only pump/spectroscopy tones are "
                    "configurable here" % i)
    if len(pumps) != 1:
        raise ConfigError("exactly one pump drive required, got %d" % len(pumps))
    if len(probes) > 1:
        raise ConfigError("at most one spectroscopy drive allowed, got %d"
                          % len(probes))
    pump = pumps[0]
    probe = probes[0] if probes else None

    sweep = raw.get("sweep", {})
    if not isinstance(sweep, dict):
        raise ConfigError("[sweep]: expected a table")
    _reject_unknown("[sweep]", sweep, ("eps_p_mhz", "nu_s_mhz", "omega_ratio"))
    eps_p = (_axis(sweep["eps_p_mhz"], "[sweep].eps_p_mhz")
             if "eps_p_mhz" in sweep else np.array([abs(pump.epsilon)]))
    nu_s = (_axis(sweep["nu_s_mhz"], "[sweep].nu_s_mhz")
            if "nu_s_mhz" in sweep else None)
    omega_ratio = (_axis(sweep["omega_ratio"], "[sweep].omega_ratio")
                   if "omega_ratio" in sweep else None)

    run = raw.get("run", {})
    if not isinstance(run, dict):
        raise ConfigError("[run]: expected a table")
    _reject_unknown("[run]", run, ("branch_policy", "dressed_dephasing",
                                   "variant", "engine", "out_dir", "seed",
                                   "threads"))
    branch_policy = _string(run, "[run]", "branch_policy", "sweep_up",
                            BRANCH_POLICIES)
    dressed = _string(run, "[run]", "dressed_dephasing", "off",
                      DRESSED_DEPHASING_MODES)
    variant = _string(run, "[run]", "variant", "full", COEFF_VARIANTS)
    engine = _string(run, "[run]", "engine", "reduced", ENGINES)
    out_dir = _string(run, "[run]", "out_dir", "out")
    seed = _integer(run, "[run]", "seed")
    threads = _integer(run, "[run]", "threads", 1)
    if threads < 1:
        raise ConfigError("[run].threads: must be at least 1")

    oracle = raw.get("oracle", {})
    if not isinstance(oracle, dict):
        raise ConfigError("[oracle]: expected a table")
    _reject_unknown("[oracle]", oracle, ("levels", "n_fock", "method",
                                         "frame_mhz", "rtol", "atol",
                                         "horizon_us", "window_us"))
    method = _string(oracle, "[oracle]", "method", "floquet", ORACLE_METHODS)
    defaults = HilbertConfig()
    try:
        hilbert = HilbertConfig(
            levels=_integer(oracle, "[oracle]", "levels", qubit.levels),
            n_fock=_integer(oracle, "[oracle]", "n_fock", defaults.n_fock),
            frame_mhz=_number(oracle, "[oracle]", "frame_mhz"),
            rtol=_number(oracle, "[oracle]", "rtol", defaults.rtol),
            atol=_number(oracle, "[oracle]", "atol", defaults.atol),
            horizon_us=_number(oracle, "[oracle]", "horizon_us",
                               defaults.horizon_us),
            window_us=_number(oracle, "[oracle]", "window_us"),
        )
    except ValueError as exc:
        raise ConfigError("[oracle]: %s" % exc)
    if hilbert.levels > qubit.levels:
        raise ConfigError(
            "[oracle].levels: %d exceeds the qubit's %d levels"
            % (hilbert.levels, qubit.levels))

    return RunConfig(
        qubit=qubit, resonator=resonator, pump=pump, spectroscopy=probe,
        eps_p_mhz=eps_p, nu_s_mhz=nu_s, omega_ratio=omega_ratio,
        branch_policy=branch_policy, dressed_dephasing=dressed,
        variant=variant, engine=engine, out_dir=out_dir, seed=seed,
        threads=threads, hilbert=hilbert, oracle_method=method,
    )


def load_config(path: str) -> RunConfig:
    """Parse and validate a scenario file (.toml, or .json mirror)."""
    if str(path).endswith(".json"):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError("%s: %s" % (path, exc.strerror or exc))
        except json.JSONDecodeError as exc:
            raise ConfigError("%s:%d:%d: %s" % (path, exc.lineno, exc.colno,
                                                exc.msg))
    else:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError("%s: %s" % (path, exc.strerror or exc))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("%s: %s" % (path, exc))
    return _parse_raw(raw, str(path))
