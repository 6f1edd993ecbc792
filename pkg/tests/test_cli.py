import subprocess
import sys

import pytest

from freelip.cli import main
from freelip.harness import strip_wall_clock

SPACE = "points 3 base 0\no\na\nb\n3 4\n5\n"


@pytest.fixture
def files(tmp_path):
    (tmp_path / "s.txt").write_text(SPACE)
    (tmp_path / "m.txt").write_text("a 2\nb -1\n")
    (tmp_path / "c1.txt").write_text("points 2 base 0\nz\nu\n1\n")
    (tmp_path / "c2.txt").write_text("points 3 base 0\nz\nv\nw\n1 2\n1.5\n")
    return tmp_path


def test_norm_both(files, capsys):
    rc = main(["norm", "--space", str(files / "s.txt"), "--molecule", str(files / "m.txt"),
               "--format", "machine", "--plan-out", str(files / "plan.txt"),
               "--certificate-out", str(files / "cert.txt")])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.startswith("primal=8.0 dual=") and out.strip().endswith("verdict=pass")
    assert (files / "plan.txt").read_text().split("\n")[0].split()[0] in ("a", "o")
    assert len((files / "cert.txt").read_text().splitlines()) == 3


def test_norm_rejects_invalid_space(files, capsys):
    (files / "bad.txt").write_text("points 3 base 0\no\na\nb\n1 1\n3\n")
    rc = main(["norm", "--space", str(files / "bad.txt"), "--molecule", str(files / "m.txt")])
    assert rc == 2
    assert "triangle" in capsys.readouterr().err


def test_norm_bad_file_is_error(files, capsys):
    (files / "junk.txt").write_text("hello\n")
    assert main(["norm", "--space", str(files / "junk.txt"), "--molecule", str(files / "m.txt")]) == 2
    assert main(["norm", "--space", str(files / "nope.txt"), "--molecule", str(files / "m.txt")]) == 2


@pytest.mark.parametrize("rule", ["l1", "sup"])
def test_glue_check(files, capsys, rule):
    (files / "g.txt").write_text(f"rule {rule}\ncomponent c1.txt\ncomponent c2.txt\n")
    assert main(["glue-check", "--spec", str(files / "g.txt"), "--trials", "20", "--format", "machine"]) == 0
    out = capsys.readouterr().out
    assert f"check={rule}" in out and "verdict=pass" in out


def test_glue_check_explicit(files, capsys):
    (files / "g.txt").write_text("rule explicit\ncomponent c1.txt\ncomponent c2.txt\n"
                                 "cross u v 1.5\ncross u w 2.5\n")
    assert main(["glue-check", "--spec", str(files / "g.txt"), "--trials", "10"]) == 0
    (files / "g.txt").write_text("rule explicit\ncomponent c1.txt\ncomponent c2.txt\ncross u v 1.5\n")
    assert main(["glue-check", "--spec", str(files / "g.txt")]) == 2
    (files / "g.txt").write_text("component c1.txt\n")
    assert main(["glue-check", "--spec", str(files / "g.txt")]) == 2


@pytest.mark.parametrize("kind", ["block", "c0"])
def test_retract_audit(capsys, kind):
    assert main(["retract-audit", "--kind", kind, "--trials", "2000", "--format", "machine"]) == 0
    assert "verdict=pass" in capsys.readouterr().out


def test_adfamily(capsys):
    assert main(["adfamily", "--count", "64", "--horizon", "4096", "--format", "machine"]) == 0
    out = capsys.readouterr().out
    assert "max_intersection=6" in out and "bound=13" in out
    assert main(["adfamily", "--count", "64", "--horizon", "40"]) == 2


@pytest.mark.parametrize("fn", ["binary-embed", "const", "firstbits:3"])
def test_partition_demo(capsys, fn):
    assert main(["partition-demo", "--depth", "6", "--function", fn, "--format", "machine"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 8 and out[-1] == "verdict=pass"


def test_partition_demo_unknown_function():
    with pytest.raises(SystemExit):
        main(["partition-demo", "--depth", "4", "--function", "cosine"])


def test_suite_command(capsys):
    assert main(["suite", "partition", "--trials", "5", "--depth", "5"]) == 0
    assert "verdict: pass" in capsys.readouterr().out


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("FREELIP_SEED", "11")
    main(["suite", "adfamily", "--format", "machine"])
    assert "seed=11" in capsys.readouterr().out.splitlines()[0]
    monkeypatch.setenv("FREELIP_SEED", "eleven")
    with pytest.raises(SystemExit):
        main(["suite", "adfamily"])


def test_negative_arguments(capsys):
    assert main(["suite", "duality", "--trials", "-1"]) == 2
    assert main(["suite", "duality", "--seed", "-1"]) == 2
    assert main(["suite", "duality", "--seed", str(2**64)]) == 2


@pytest.mark.parametrize("suite", ["duality", "decomposition", "block-retract", "c0-retract", "partition"])
def test_zero_trials_pass_with_a_note(capsys, suite):
    assert main(["suite", suite, "--trials", "0", "--format", "machine"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == f"record=header suite={suite} seed=0 trials=0"
    assert lines[1].startswith("record=note ") and "no trials" in lines[1]
    assert strip_wall_clock(lines[2]) == "record=summary checks=0 verdict=pass"


def test_console_script_runs():
    out = subprocess.run([sys.executable, "-m", "freelip.cli", "suite", "adfamily", "--format", "machine",
                          "--seed", "2"], capture_output=True, text=True, check=True).stdout
    assert strip_wall_clock(out).splitlines()[-1] == "record=summary checks=1 verdict=pass"


def test_failing_check_exits_nonzero_with_witness(capsys):
    # a negative slack pulls the c0 bound down to 0.1, which the audit exceeds
    rc = main(["retract-audit", "--kind", "c0", "--trials", "500", "--tolerance", "-1.9",
               "--format", "machine"])
    out = capsys.readouterr().out
    assert rc == 1
    assert "verdict=fail" in out and 'witness={"witness_pair":[{' in out
