import json
import math

import pytest

import dcqe


def test_feedback_table_is_exact():
    t = dcqe.declared_table("E5")
    assert t == pytest.approx({"E3,E3": 0.5, "E4,D1Click": 0.25, "E4,E3": 0.125, "E4,E4": 0.125})
    assert dcqe.declared_table("E5", "RetrocausalConsistent/Strict") == pytest.approx({"E3,E3": 1.0})


def test_simulated_counts_are_seeded():
    a = dcqe.simulate_table("E2", pairs=2000, seed=7)
    b = dcqe.simulate_table("E2", pairs=2000, seed=7, threads=3)
    assert a == b
    assert sum(a.values()) == 2000
    assert set(a) == {"E3,E3", "E4,E4"}


def test_ball_model_keeps_hybrid_correlation():
    t = dcqe.simulate_table("E4", "LocalRealistBall", pairs=4000, seed=3)
    assert "E3,E4" not in t and "E4,E3" not in t


def test_erased_patterns_sum_to_plain_pattern():
    xs = [i * 1e-4 for i in range(-200, 201)]
    d3 = dcqe.condition_intensity("OnD3", xs)
    d4 = dcqe.condition_intensity("OnD4", xs)
    none = dcqe.condition_intensity("NoCondition", xs)
    assert max(abs(a + b - c) for a, b, c in zip(d3, d4, none)) < 1e-12


def test_visibility_of_conditioned_pattern():
    step = 1e-5
    xs = [-0.03 + i * step for i in range(6001)]
    v = dcqe.visibility(xs, dcqe.condition_intensity("OnD3", xs),
                        dcqe.first_envelope_zero(), dcqe.fringe_period())
    assert v > 0.99


def test_bomb_and_significance():
    assert dcqe.bomb_probabilities(False)["DetectorDark"] == 0.0
    assert dcqe.bomb_probabilities(True)["Explode"] == pytest.approx(0.5)
    assert dcqe.pairs_to_significance(1e-6) == 20
    assert dcqe.chi_square_sf(3.0, 2) == pytest.approx(math.exp(-1.5))


def test_cli_round_trip(tmp_path):
    out = tmp_path / "run"
    code, _, err = dcqe.run_cli(["run", "--out", str(out), "--quiet", "--set", "experiment.pairs=500"])
    assert code == 0, err
    summary = json.loads((out / "summary.json").read_text())
    assert summary["analysis"]["coincidences"] == 500


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nnmae = E2\n")
    code, _, err = dcqe.run_cli(["run", "--config", str(bad)])
    assert code == 2 and "experiment.nmae" in err
    code, _, _ = dcqe.run_cli(["analyze", str(tmp_path / "missing")])
    assert code == 4


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        dcqe.declared_table("E9")
    with pytest.raises(ValueError):
        dcqe.simulate_table("E6")
