import pytest

from freelip.harness import (SUITES, Check, ExperimentConfig, SuiteReport, emit_report, run_suite,
                             strip_wall_clock)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig("nope")
    with pytest.raises(ValueError):
        ExperimentConfig("duality", trials=-1)
    with pytest.raises(ValueError):
        ExperimentConfig("duality", seed=2**64)
    ExperimentConfig("duality", seed=2**64 - 1)
    with pytest.raises(ValueError):
        ExperimentConfig("partition", depth=0)
    with pytest.raises(ValueError):
        ExperimentConfig("adfamily", count=10, horizon=5)
    assert ExperimentConfig("duality", tolerance=1e-3).tol(1e-7) == 1e-3
    assert ExperimentConfig("duality").tol(1e-7) == 1e-7


@pytest.mark.parametrize("suite", SUITES)
def test_each_suite_passes_small(suite):
    rep = run_suite(ExperimentConfig(suite, seed=1, trials=8, points=6, depth=6))
    assert rep.checks and rep.verdict, emit_report(rep)


def test_zero_trials_reports_notes():
    rep = run_suite(ExperimentConfig("block-retract", trials=0))
    assert rep.checks == [] and rep.notes
    assert "no trials" in emit_report(rep, "machine")


def test_machine_report_layout():
    rep = run_suite(ExperimentConfig("adfamily", seed=3, trials=1))
    lines = emit_report(rep, "machine").splitlines()
    assert lines[0] == "record=header suite=adfamily seed=3 trials=1"
    assert lines[1].startswith("record=check suite=adfamily check=intersections ")
    assert "max_intersection=6" in lines[1] and "verdict=pass" in lines[1]
    assert lines[-1].startswith("record=summary checks=1 verdict=pass wall_clock_s=")


def test_empty_report_is_header_only():
    rep = SuiteReport("duality", ExperimentConfig("duality", trials=0))
    assert emit_report(rep, "machine") == "record=header suite=duality seed=0 trials=0\n"
    assert emit_report(rep, "human").count("\n") == 2


def test_failed_check_shows_witness():
    cfg = ExperimentConfig("duality")
    rep = SuiteReport("duality", cfg, [Check("duality", "gap", False, {"x": 1.5}, {"trial": 4})])
    text = emit_report(rep, "human")
    assert "fail" in text and 'witness={"trial":4}' in text
    assert "verdict=fail" in emit_report(rep, "machine")
    with pytest.raises(ValueError):
        emit_report(rep, "xml")


def test_strip_wall_clock():
    a = "record=summary checks=1 verdict=pass wall_clock_s=0.123"
    b = "record=summary checks=1 verdict=pass wall_clock_s=9.999"
    assert strip_wall_clock(a) == strip_wall_clock(b)


def test_adding_trials_keeps_earlier_draws():
    from freelip.sampling import random_space, trial_rng
    a = random_space(trial_rng(7, "duality", 3), 10)
    b = random_space(trial_rng(7, "duality", 3), 10)
    c = random_space(trial_rng(7, "duality", 4), 10)
    assert (a.dist == b.dist).all() and not (a.dist.shape == c.dist.shape and (a.dist == c.dist).all())


def test_tolerance_override_can_fail_a_suite():
    rep = run_suite(ExperimentConfig("c0-retract", seed=1, trials=2000, tolerance=-1.9))
    assert not rep.check("c0-retract", "lipschitz").passed


def test_all_with_one_trial_has_every_section():
    rep = run_suite(ExperimentConfig("all", seed=5, trials=1, depth=4))
    assert list(rep.sections()) == list(SUITES)
    assert rep.verdict


def test_duality_report_keys():
    rep = run_suite(ExperimentConfig("duality", seed=7, trials=3))
    line = emit_report(rep, "machine").splitlines()[1]
    keys = {tok.split("=", 1)[0] for tok in line.split(" ")}
    assert {"gap_max", "trials", "seed", "verdict"} <= keys
