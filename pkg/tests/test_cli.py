import csv
import io

import pytest

from polfock import cli, experiments
from polfock.circuit import Circuit
from polfock.errors import InvariantError


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_truth_table_ideal_csv(capsys):
    code, out, _ = run(["truth-table", "--ideal"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["input", "HH", "HV", "VH", "VV"]
    assert rows[3] == ["VH", "0", "0", "0", "1"]


def test_bad_epsilon_is_config_error(capsys):
    code, out, err = run(["truth-table", "--epsilon", "2.0"], capsys)
    assert code == 2 and out == "" and "config error" in err


def test_unknown_subcommand_and_missing_epsilon(capsys):
    assert run(["teleport"], capsys)[0] == 2
    assert run(["noise", "--input", "+H"], capsys)[0] == 2
    assert run(["truth-table", "--ideal", "--epsilon", "0.1"], capsys)[0] == 2


def test_noise_study_text(capsys):
    code, out, _ = run(["noise", "--epsilon", "0.1", "--input", "+H"], capsys)
    assert code == 0
    assert out.startswith("format: 1\nscenario: noise\n")
    assert "cond_iii_ratio = " in out


def test_entangle_defaults_to_plus_h(capsys):
    code, out, _ = run(["entangle", "--ideal"], capsys)
    assert code == 0
    assert "bell_fidelity = 1" in out


def test_dump_circuit_roundtrip(capsys):
    code, out, _ = run(["dump-circuit", "--delay", "100", "--arm-offset", "20"], capsys)
    assert code == 0
    c = Circuit.load(out)
    assert c.distinguishability.delay == 100.0
    assert c.distinguishability.arm_offset == 20.0


def test_out_file_and_config(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[source]\ninput = +H\n\n[scan]\ndelays = -700:700:5\n")
    out = tmp_path / "hom.csv"
    code, stdout, _ = run(["hom-scan", "--config", str(cfg), "--out", str(out)], capsys)
    assert code == 0 and stdout == ""
    lines = out.read_text().splitlines()
    assert lines[0] == "delay_fs,overlap,desired,spurious,visibility"
    assert len(lines) == 6
    assert run(["hom-scan", "--config", str(tmp_path / "missing.ini")], capsys)[0] == 2


def test_output_is_deterministic(capsys):
    a = run(["hom-scan", "--delays", "-1000:1000:5"], capsys)[1]
    b = run(["hom-scan", "--delays", "-1000:1000:5"], capsys)[1]
    assert a == b


def test_invariant_violation_exit_code(monkeypatch, capsys):
    def broken(config, settings=None):
        raise InvariantError("norm drift")

    monkeypatch.setitem(experiments.SCENARIOS, "truth-table", broken)
    code, _, err = run(["truth-table", "--ideal"], capsys)
    assert code == 3 and "norm drift" in err
