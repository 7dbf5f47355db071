import numpy as np
import pytest

from restime import cli
from restime.checks import CheckResult
from restime.measure import read_table_csv


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)])


SMALL = {
    "phi": ["--T-min", "5", "--T-max", "10", "--n-T", "2", "--n-tau", "11"],
    "meter": ["--N", "1000", "--n-tau", "5", "--n-max", "4"],
    "measure": ["--T", "5", "--alpha", "1", "--n-bin", "10", "--n-overlay", "21"],
    "zeno": ["--T", "2", "--alpha", "2"],
    "weak": ["--T-min", "1", "--T-max", "2", "--n-T", "3"],
    "fluct": ["--T", "5", "--alpha", "1", "--n-paths", "2000", "--n-bin", "10"],
}


@pytest.mark.parametrize("cmd", sorted(SMALL))
def test_command_runs_and_writes_csv_with_provenance(tmp_path, cmd):
    assert run(tmp_path, cmd, *SMALL[cmd]) == 0
    files = sorted(tmp_path.glob("*.csv"))
    assert files
    for p in files:
        text = p.read_text()
        assert text.startswith("# ")
        assert f"# command={cmd}" in text and "# tool=restime" in text
        meta, cols = read_table_csv(p)
        assert cols and all(v.size for v in cols.values())


@pytest.mark.parametrize("cmd", ["measure", "fluct", "weak"])
def test_output_is_deterministic(tmp_path, cmd):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, cmd, *SMALL[cmd]) == 0
    assert run(b, cmd, *SMALL[cmd]) == 0
    for p in a.glob("*.csv"):
        assert p.read_bytes() == (b / p.name).read_bytes()


def test_phi_default_files_and_both_methods(tmp_path, capsys):
    assert run(tmp_path, "phi", *SMALL["phi"]) == 0
    assert sorted(p.name for p in tmp_path.glob("*.csv")) == [
        "phi11_pathsum.csv", "phi21_pathsum.csv", "phi_asymptote.csv"]
    assert run(tmp_path / "b", "phi", *SMALL["phi"], "--method", "both") == 0
    assert "max_deviation" in capsys.readouterr().out
    assert len(list((tmp_path / "b").glob("*.csv"))) == 5


def test_phi_oscillation_follows_the_asymptote(tmp_path):
    assert run(tmp_path, "phi", "--T-min", "100", "--T-max", "100", "--n-T", "1") == 0
    _, surf = read_table_csv(tmp_path / "phi11_pathsum.csv")
    _, asym = read_table_csv(tmp_path / "phi_asymptote.csv")
    sel = (surf["tau_over_T"] >= 0.3) & (surf["tau_over_T"] <= 0.7)
    crossings = [int(np.count_nonzero(np.diff(np.sign(v[sel])))) for v in (surf["re"], asym["phi11_re"])]
    assert crossings[0] == crossings[1] > 0


def test_unknown_config_key_is_rejected(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("T = 5\nbogus = 1\n")
    assert run(tmp_path, "zeno", "--config", str(cfg)) == 2


@pytest.mark.parametrize("argv", [["zeno", "--T", "-1"], ["zeno", "--i", "3"], ["meter", "--N", "0"],
                                  ["measure", "--preset", "nope"], ["nosuch"]])
def test_invalid_values_exit_2(tmp_path, argv):
    assert run(tmp_path, *argv) == 2


def test_missing_config_file_exits_2(tmp_path):
    assert run(tmp_path, "zeno", "--config", str(tmp_path / "none.cfg")) == 2


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nT = 3\nalpha = 2.5\n")
    args = cli.parse(["zeno", "--config", str(cfg), "--T", "4"])
    assert args.T == 4.0 and args.alpha == 2.5
    cfg.write_text("n-T = 7\n")
    assert cli.parse(["weak", "--config", str(cfg)]).n_T == 7


def test_verify_quick_passes(tmp_path, capsys):
    assert run(tmp_path, "verify", "--quick") == 0
    out = capsys.readouterr().out
    assert "checks passed" in out and "FAIL" not in out
    assert (tmp_path / "verify.csv").exists()


def test_verify_failure_exits_3(tmp_path, monkeypatch):
    bad = CheckResult("fake", False, "forced", {}, 0.0)
    monkeypatch.setattr(cli, "run_suite", lambda quick: [bad])
    assert run(tmp_path, "verify") == 3
