"""Command dispatch and the executable entry point: every command
produces a schema-valid bundle, the solve tables reproduce the elliptic
closed form, reruns with one seed are byte-identical, and exit codes
separate validation, convergence, and property failures."""

import csv

import numpy as np
import pytest

import fnlslab.cli as cli
from fnlslab.config import parse_config
from fnlslab.errors import (ConservationDriftExceeded, NonConvergence,
                            ValidationError)
from fnlslab.reports import report_dict
import oracles

T = np.pi

BASE = f"""
[problem]
alpha = 1.5
sigma = 1
gamma = -1
half_period = {T!r}

[solver]
mu = 1
n_modes = 32

[grid]
n_grid = 256
sector_size = 64

[kernels]
n = 256

[evolve]
dt = 1e-3
steps = 200
log_interval = 50

[sweep]
parameter = mu
target = 1.2
steps = 4

[stability]
horizon_periods = 2
dt = 1e-2
epsilons = 1e-4, 1e-3
log_interval = 20

[rearrange]
trials = 20
n_modes = 8
n_grid = 256
"""


def config_for(command, extra="", base=BASE, seed=3):
    return parse_config(base + extra).with_overrides(
        command=command, seed=seed, workers=None, out=None)


def test_run_requires_a_command():
    with pytest.raises(ValidationError, match="command"):
        cli.run(parse_config(BASE))


def test_solve_reproduces_elliptic_closed_form(tmp_path):
    m = 0.6
    mu = oracles.snoidal_charge(m, T)
    text = f"""
[problem]
alpha = 2.0
sigma = 1
gamma = -1
half_period = {T!r}

[solver]
mu = {mu!r}
n_modes = 48

[grid]
n_grid = 1024
"""
    bundle = cli.run(parse_config(text).with_overrides(
        command="solve", seed=0, workers=None, out=None))
    _, _, om_true = oracles.snoidal_params(m, T)
    assert abs(bundle.results["profile"]["omega"] - om_true) < 1e-8

    cli.emit(bundle, tmp_path)
    with open(tmp_path / "profile_grid.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "re", "im"]
    xs = np.array([float(r[0]) for r in rows[1:]])
    vals = np.array([float(r[1]) + 1j * float(r[2]) for r in rows[1:]])
    ref = oracles.snoidal_values(xs, m, T)
    assert np.max(np.abs(vals - ref)) < 1e-6


def test_solve_mode_table_is_lossless(tmp_path):
    bundle = cli.run(config_for("solve"))
    header, rows = bundle.tables["profile_modes"]
    assert header == ("k", "re", "im")
    cli.emit(bundle, tmp_path)
    with open(tmp_path / "profile_modes.csv", newline="") as fh:
        got = list(csv.reader(fh))[1:]
    for (k, re, im), row in zip(rows, got):
        assert (int(row[0]), float(row[1]), float(row[2])) == (k, re, im)


def test_spectrum_reports_morse_counts():
    res = cli.run(config_for("spectrum")).results
    assert res["morse_plus"] == 0
    assert res["morse_minus"] == 1
    assert res["ker_plus_residual"] < 1e-6
    assert res["ker_minus_residual"] < 1e-6
    for block in res["ker_alignments"].values():
        assert block["cosine"] > 0.999
    assert res["jordan"]["dQ_dmu"] == pytest.approx(1.0, abs=1e-6)


def test_spectrum_eigenvalue_table_is_sorted_per_sector():
    bundle = cli.run(config_for("spectrum"))
    _, rows = bundle.tables["eigenvalues"]
    by_block = {}
    for op, sector, idx, lam in rows:
        by_block.setdefault((op, sector), []).append((idx, lam))
    assert set(by_block) == {("L_plus", "even"), ("L_plus", "odd"),
                             ("L_minus", "even"), ("L_minus", "odd")}
    for block in by_block.values():
        lams = [lam for _, lam in sorted(block)]
        assert lams == sorted(lams)


def test_kernels_reports_positive_margins():
    res = cli.run(config_for("kernels")).results
    assert res["time_unit"] == pytest.approx((T / np.pi) ** 1.5)
    assert len(res["positivity"]) == 3
    for margins in res["positivity"]:
        for key in ("interior_min", "decrease_min", "even_pair_min",
                    "odd_pair_min"):
            assert margins[key] > 0.0


def test_rearrange_randomized_checks_pass():
    res = cli.run(config_for("rearrange")).results
    assert res["polya_szego"]["violations"] == 0
    assert res["potential_ordering"]["satisfied"]
    assert res["potential_ordering"]["direction"] == "nonincreasing"


def test_evolve_stays_on_orbit():
    res = cli.run(config_for("evolve")).results
    assert res["rho_final"] < 1e-5
    assert not res["flagged"]
    assert max(res["drift"].values()) < 1e-9
    assert res["time"] == pytest.approx(0.2)


def test_sweep_walks_to_target():
    bundle = cli.run(config_for("sweep"))
    assert bundle.results["failed_at"] is None
    # anchor profile plus one per step
    assert bundle.results["points"] == 5
    _, rows = bundle.tables["sweep"]
    values = [r[0] for r in rows]
    assert values == sorted(values)
    assert values[0] == pytest.approx(1.0)
    assert values[-1] == pytest.approx(1.2)
    assert all(r[-1] < 1e-8 for r in rows)


def test_sweep_requires_target():
    cfg = config_for("sweep", base=BASE.replace("target = 1.2\n", ""))
    with pytest.raises(ValidationError, match="sweep.target"):
        cli.run(cfg)


def test_report_command_summarizes_stability():
    res = cli.run(config_for("report")).results
    assert res["c_emp"] < 50.0
    assert res["indices"]["dNdc"]["value"] == pytest.approx(3.61, rel=1e-2)
    assert res["coercivity"]["positive"]
    assert len(res["runs"]) == 2
    assert res["runs"][0]["epsilon"] == 1e-4


def test_every_command_is_schema_valid():
    for command in ("solve", "kernels", "rearrange", "evolve", "sweep"):
        d = report_dict(cli.run(config_for(command)))
        assert d["command"] == command


def test_main_success_prints_flat_scalars(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(BASE)
    rc = cli.main(["--config", str(cfg), "--command", "solve"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = [l for l in out.splitlines() if l]
    assert lines == sorted(lines)
    omega = [l for l in lines if l.startswith("profile.omega = ")]
    assert len(omega) == 1
    float(omega[0].split(" = ")[1])


def test_main_seeded_reruns_are_byte_identical(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(BASE)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = cli.main(["--config", str(cfg), "--command", "rearrange",
                       "--seed", "9", "--out", str(out)])
        assert rc == 0
        outs.append(out)
    files = sorted(p.name for p in outs[0].iterdir())
    assert "report.json" in files and "config.ini" in files
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_main_validation_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(BASE.replace("alpha = 1.5", "alpha = 2.5"))
    rc = cli.main(["--config", str(cfg), "--command", "solve"])
    assert rc == 2
    assert "(1, 2]" in capsys.readouterr().err


def test_main_missing_config_exit_code(tmp_path, capsys):
    rc = cli.main(["--config", str(tmp_path / "nope.ini")])
    assert rc == 2
    assert "cannot read" in capsys.readouterr().err


def test_main_no_command_exit_code(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(BASE)
    rc = cli.main(["--config", str(cfg)])
    assert rc == 2
    assert "command" in capsys.readouterr().err


def test_main_maps_failure_kinds_to_exit_codes(tmp_path, capsys,
                                               monkeypatch):
    cfg = tmp_path / "run.ini"
    cfg.write_text(BASE)

    def boom_convergence(config):
        raise NonConvergence("newton stalled")

    def boom_property(config):
        raise ConservationDriftExceeded("charge drift 1e-3")

    monkeypatch.setitem(cli._DISPATCH, "solve", boom_convergence)
    assert cli.main(["--config", str(cfg), "--command", "solve"]) == 3
    assert "stalled" in capsys.readouterr().err

    monkeypatch.setitem(cli._DISPATCH, "solve", boom_property)
    assert cli.main(["--config", str(cfg), "--command", "solve"]) == 4
    assert "drift" in capsys.readouterr().err


def test_flag_overrides_win_over_config(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(BASE + "\n[run]\ncommand = solve\nseed = 1\n")
    out = tmp_path / "o"
    rc = cli.main(["--config", str(cfg), "--command", "kernels",
                   "--seed", "2", "--out", str(out)])
    assert rc == 0
    assert (out / "kernel_samples.csv").exists()
    report = (out / "report.json").read_text()
    assert '"command": "kernels"' in report
    assert '"seed": 2' in report
