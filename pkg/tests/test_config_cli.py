"""Scenario parsing, CSV io, CLI exit codes, and artifact determinism."""

import json
import os

import numpy as np
import pytest

from kerrqed.cli import main
from kerrqed.config import load_config
from kerrqed.csvio import read_csv, write_csv
from kerrqed.errors import ConfigError

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")

BASE_TOML = """
[qubit]
levels_mhz = [0.0, 5720.0, 11141.6]
couplings_mhz = [42.4, 58.4]
dephasing_dispersion = [0.0, 1.0, 2.0]
gamma_mhz = 0.22
gamma_phi_mhz = 0.25

[resonator]
nu_r_mhz = 6453.5
kerr_mhz = -0.625
kerr_prime_mhz = -0.00125
kappa_mhz = 9.6
kappa_nl_mhz = 0.0

[pump]
freq_mhz = 6450.0
amp_mhz = 7.76

[sweep]
eps_p_mhz = [3.38, 7.76]
"""


def write_scenario(tmp_path, body, name="scenario.toml"):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return str(path)


def test_csv_round_trip(tmp_path):
    path = str(tmp_path / "table.csv")
    header = ("x", "flag", "label", "count")
    rows = [
        (0.1 + 0.2, True, "mono-L", 3),
        (1e-17, False, "bistable", -2),
        (123456.789012345678, True, "H", 0),
    ]
    write_csv(path, header, rows)
    with open(path, "rb") as fh:
        blob = fh.read()
    assert b"\r" not in blob
    got_header, cols = read_csv(path)
    assert got_header == list(header)
    # %.17g survives a float round trip exactly.
    assert cols["x"] == [0.1 + 0.2, 1e-17, 123456.789012345678]
    assert cols["flag"] == [1.0, 0.0, 1.0]
    assert cols["label"] == ["mono-L", "bistable", "H"]
    assert cols["count"] == [3.0, -2.0, 0.0]


def test_csv_rejects_ragged_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n3\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_csv(str(path))


def test_config_minimal_and_defaults(tmp_path):
    cfg = load_config(write_scenario(tmp_path, BASE_TOML))
    assert cfg.qubit.levels == 3
    assert cfg.resonator.kappa == 9.6
    assert cfg.pump.nu_d == 6450.0
    assert cfg.spectroscopy is None
    assert cfg.engine == "reduced"
    assert cfg.branch_policy == "sweep_up"
    assert cfg.hilbert.levels == 3
    assert list(cfg.eps_p_mhz) == [3.38, 7.76]


def test_config_unknown_key_paths(tmp_path):
    bad = BASE_TOML.replace("kappa_nl_mhz = 0.0",
                            "kappa_nl_mhz = 0.0\nbogus_mhz = 1.0")
    with pytest.raises(ConfigError, match=r"resonator.*bogus_mhz"):
        load_config(write_scenario(tmp_path, bad))
    with pytest.raises(ConfigError, match="extra"):
        load_config(write_scenario(tmp_path, BASE_TOML + "\n[extra]\nx = 1\n"))


def test_config_axis_validation(tmp_path):
    empty = BASE_TOML.replace("eps_p_mhz = [3.38, 7.76]", "eps_p_mhz = []")
    with pytest.raises(ConfigError, match="empty axis"):
        load_config(write_scenario(tmp_path, empty))
    ranged = BASE_TOML.replace(
        "eps_p_mhz = [3.38, 7.76]",
        "eps_p_mhz = { start = 1.0, stop = 2.0, points = 5 }")
    cfg = load_config(write_scenario(tmp_path, ranged))
    assert np.allclose(cfg.eps_p_mhz, np.linspace(1.0, 2.0, 5))
    zero = BASE_TOML.replace(
        "eps_p_mhz = [3.38, 7.76]",
        "eps_p_mhz = { start = 1.0, stop = 2.0, points = 0 }")
    with pytest.raises(ConfigError, match="empty axis"):
        load_config(write_scenario(tmp_path, zero))


def test_config_exactly_one_pump(tmp_path):
    two_pumps = BASE_TOML + """
[[drives]]
freq_mhz = 6440.0
amp_mhz = 1.0
role = "pump"
"""
    with pytest.raises(ConfigError, match="exactly one pump"):
        load_config(write_scenario(tmp_path, two_pumps))


def test_config_oracle_levels_bound(tmp_path):
    bad = BASE_TOML + "\n[oracle]\nlevels = 4\n"
    with pytest.raises(ConfigError, match="levels"):
        load_config(write_scenario(tmp_path, bad))


def test_config_transmon_exclusive(tmp_path):
    mixed = BASE_TOML + """
[qubit.transmon]
ej_mhz = 16972.07368
ec_mhz = 264.9938896
levels = 3
g0_mhz = 42.4
"""
    with pytest.raises(ConfigError):
        load_config(write_scenario(tmp_path, mixed))
    transmon_only = """
[qubit]
gamma_mhz = 0.22
gamma_phi_mhz = 0.25

[qubit.transmon]
ej_mhz = 16972.07368
ec_mhz = 264.9938896
levels = 3
g0_mhz = 42.4

[resonator]""" + BASE_TOML.split("[resonator]", 1)[1]
    cfg = load_config(write_scenario(tmp_path, transmon_only))
    assert cfg.qubit.levels == 3
    assert cfg.qubit.nu[1] == pytest.approx(5720.0, abs=1e-4)
    assert cfg.qubit.g[0] == pytest.approx(42.4)


def test_config_json_mirror(tmp_path):
    cfg_toml = load_config(write_scenario(tmp_path, BASE_TOML))
    raw = {
        "qubit": {
            "levels_mhz": [0.0, 5720.0, 11141.6],
            "couplings_mhz": [42.4, 58.4],
            "dephasing_dispersion": [0.0, 1.0, 2.0],
            "gamma_mhz": 0.22,
            "gamma_phi_mhz": 0.25,
        },
        "resonator": {
            "nu_r_mhz": 6453.5, "kerr_mhz": -0.625,
            "kerr_prime_mhz": -0.00125, "kappa_mhz": 9.6,
            "kappa_nl_mhz": 0.0,
        },
        "pump": {"freq_mhz": 6450.0, "amp_mhz": 7.76},
        "sweep": {"eps_p_mhz": [3.38, 7.76]},
    }
    jpath = tmp_path / "scenario.json"
    jpath.write_text(json.dumps(raw), encoding="utf-8")
    cfg_json = load_config(str(jpath))
    assert cfg_json.qubit == cfg_toml.qubit
    assert cfg_json.resonator == cfg_toml.resonator
    assert cfg_json.pump == cfg_toml.pump
    assert np.array_equal(cfg_json.eps_p_mhz, cfg_toml.eps_p_mhz)
    broken = tmp_path / "broken.json"
    broken.write_text('{"qubit": }', encoding="utf-8")
    with pytest.raises(ConfigError, match=r":1:"):
        load_config(str(broken))


def test_config_toml_syntax_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write_scenario(tmp_path, "[qubit\nlevels_mhz = [0,"))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.toml"))


def test_cli_fields_deterministic(tmp_path):
    scenario = write_scenario(tmp_path, BASE_TOML)
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["fields", "--config", scenario, "--out", out_a]) == 0
    assert main(["fields", "--config", scenario, "--out", out_b]) == 0
    with open(os.path.join(out_a, "fields.csv"), "rb") as fh:
        blob_a = fh.read()
    with open(os.path.join(out_b, "fields.csv"), "rb") as fh:
        blob_b = fh.read()
    assert blob_a == blob_b
    header, cols = read_csv(os.path.join(out_a, "fields.csv"))
    assert header == ["eps_p_mhz", "state", "re_alpha_p", "im_alpha_p",
                      "n", "branch", "residual"]
    assert len(cols["state"]) == 2 * 3
    assert set(cols["branch"]) == {"L"}


def test_cli_exit_codes(tmp_path, capsys):
    missing = str(tmp_path / "nope.toml")
    assert main(["fields", "--config", missing]) == 2
    bad = write_scenario(tmp_path, BASE_TOML.replace(
        "kappa_mhz = 9.6", "kappa_mhz = -1.0"), "bad.toml")
    assert main(["fields", "--config", bad]) == 2
    capsys.readouterr()
    # Strict branch policy inside a bistable window is exit 3.
    strict = write_scenario(tmp_path, BASE_TOML.replace(
        "[sweep]", '[run]\nbranch_policy = "strict"\n\n[sweep]').replace(
        "eps_p_mhz = [3.38, 7.76]", "eps_p_mhz = [45.0]").replace(
        "freq_mhz = 6450.0", "freq_mhz = 6430.0"), "strict.toml")
    assert main(["fields", "--config", strict, "--out",
                 str(tmp_path / "s")]) == 3
    err = capsys.readouterr().err
    assert "numerical failure" in err


def test_cli_warning_exit_code(tmp_path, capsys):
    scenario = os.path.join(SCENARIOS, "cutoff_escalation.toml")
    code = main(["spectrum", "--config", scenario, "--out",
                 str(tmp_path / "esc")])
    captured = capsys.readouterr()
    assert code == 4
    assert "warning:" in captured.err
    assert os.path.exists(os.path.join(str(tmp_path / "esc"),
                                       "spectrum_oracle.csv"))


def test_cli_stability_and_thresholds(tmp_path):
    body = BASE_TOML.replace(
        "eps_p_mhz = [3.38, 7.76]",
        "eps_p_mhz = { start = 2.0, stop = 60.0, points = 10 }\n"
        "omega_ratio = [0.5, 2.0]")
    scenario = write_scenario(tmp_path, body)
    out = str(tmp_path / "stab")
    assert main(["stability", "--config", scenario, "--out", out]) == 0
    _, grid = read_csv(os.path.join(out, "stability.csv"))
    assert len(grid["region"]) == 2 * 10
    assert set(grid["region"]) <= {"mono-L", "mono-H", "bistable"}
    _, thr = read_csv(os.path.join(out, "thresholds.csv"))
    # Only the supercritical detuning row carries a finite window.
    assert len(thr["omega_ratio"]) == 1
    assert thr["omega_ratio"][0] == 2.0
    _, crit = read_csv(os.path.join(out, "critical.csv"))
    assert len(crit["omega_critical"]) == 1
    # The coupled qubit's quartic pull opens the window below the bare
    # Kerr critical point.
    ratio = crit["omega_ratio_critical"][0]
    assert 0.0 < ratio < 1.0
    assert crit["omega_critical"][0] == pytest.approx(
        ratio * np.sqrt(3.0), rel=1e-12)


def test_cli_validity_artifact(tmp_path):
    body = BASE_TOML.replace(
        "eps_p_mhz = [3.38, 7.76]",
        "eps_p_mhz = [3.38, 7.76]\nomega_ratio = [0.3, 0.6, 0.9]")
    scenario = write_scenario(tmp_path, body)
    out = str(tmp_path / "val")
    assert main(["validity", "--config", scenario, "--out", out]) == 0
    header, cols = read_csv(os.path.join(out, "validity.csv"))
    assert header == ["omega_ratio", "s_max_mhz", "eps_gain_mhz", "n_gain",
                      "r_per_mhz", "s_actual_mhz"]
    s = cols["s_max_mhz"]
    assert s[0] > s[1] > s[2] > 0.0


def test_cli_compare_round_trip(tmp_path, capsys):
    scenario = write_scenario(tmp_path, BASE_TOML)
    out = str(tmp_path / "cmp")
    main(["fields", "--config", scenario, "--out", out])
    fields = os.path.join(out, "fields.csv")
    assert main(["compare", fields, fields, "--out", out]) == 0
    assert "max |delta| = 0.000e+00" in capsys.readouterr().out
    _, cols = read_csv(os.path.join(out, "compare.csv"))
    assert all(v == 0.0 for v in cols["max_abs_delta"])
    other = os.path.join(out, "other.csv")
    write_csv(other, ("a", "b"), [(1.0, 2.0)])
    assert main(["compare", fields, other]) == 2


def test_cli_spectrum_reduced_artifacts(tmp_path):
    body = BASE_TOML + """
[spectroscopy]
freq_mhz = 5716.0
amp_mhz = 0.3
"""
    scenario = write_scenario(tmp_path, body)
    out = str(tmp_path / "spec")
    assert main(["spectrum", "--config", scenario, "--engine", "reduced",
                 "--out", out]) == 0
    _, peaks = read_csv(os.path.join(out, "peaks_reduced.csv"))
    assert len(peaks["eps_p_mhz"]) == 2
    assert all(v == 1.0 for v in peaks["fit_ok"])
    _, grid = read_csv(os.path.join(out, "spectrum_reduced.csv"))
    assert len(grid["p1"]) == 2 * 41
    assert max(grid["p1"]) > 0.0
