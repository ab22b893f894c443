import json
import os
from fractions import Fraction as F

import pytest

from matchgames.cli import main

HERE = os.path.dirname(__file__)
EX4 = os.path.join(HERE, "..", "demos", "data", "example4_auction.json")


def run(args):
    return main(args)


def test_gen_is_deterministic(tmp_path):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["gen", "--seed", "7", "--doctors", "4", "--hospitals", "2",
                "--strategies", "3", "--output", str(out1)]) == 0
    assert run(["gen", "--seed", "7", "--doctors", "4", "--hospitals", "2",
                "--strategies", "3", "--output", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_gen_strictly_competitive_loads(tmp_path):
    out = tmp_path / "sc.json"
    assert run(["gen", "--seed", "3", "--classes", "strictly_competitive",
                "--output", str(out)]) == 0
    from matchgames.core import load_instance
    inst = load_instance(str(out))
    assert all(g.class_tag == "strictly_competitive" for g in inst.games.values())


def test_solve_dac_verify_pipeline(tmp_path):
    alloc_path = tmp_path / "alloc.json"
    trace_path = tmp_path / "trace.log"
    code = run(["solve-dac", "--input", EX4, "--epsilon", "1/2",
                "--output", str(alloc_path), "--trace", str(trace_path), "--oracle"])
    assert code == 0
    doc = json.loads(alloc_path.read_text())
    assert doc["matching"] == {"a": "alpha", "b": "alpha", "c": "beta", "d": "beta"}
    assert trace_path.read_text().startswith("baseline")
    report_path = tmp_path / "report.json"
    code = run(["verify", "--input", EX4, "--allocation", str(alloc_path),
                "--epsilon", "1/2", "--coalitions", "4", "--output", str(report_path)])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["individually_rational"] is True
    assert report["blocking_pair"] is None


def test_determinism_of_solve_output(tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    run(["solve-dac", "--input", EX4, "--epsilon", "1/2", "--output", str(p1)])
    run(["solve-dac", "--input", EX4, "--epsilon", "1/2", "--output", str(p2)])
    assert p1.read_bytes() == p2.read_bytes()


def test_zero_epsilon_is_an_input_error(tmp_path):
    assert run(["solve-dac", "--input", EX4, "--epsilon", "0",
                "--output", str(tmp_path / "x.json")]) == 1


def test_corrupted_allocation_fails_verification(tmp_path):
    alloc_path = tmp_path / "alloc.json"
    run(["solve-dac", "--input", EX4, "--epsilon", "1/2", "--output", str(alloc_path)])
    doc = json.loads(alloc_path.read_text())
    # hand-corrupt: pay seller a the bottom of the grid (price 0)
    doc["hospital_strategies"]["alpha|a"] = ["1"] + ["0"] * 10
    alloc_path.write_text(json.dumps(doc))
    code = run(["verify", "--input", EX4, "--allocation", str(alloc_path),
                "--epsilon", "1/2", "--output", str(tmp_path / "report.json")])
    assert code == 2
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["blocking_pair"] is not None


def test_renegotiate_pipeline(tmp_path):
    gen_path = tmp_path / "inst.json"
    run(["gen", "--seed", "5", "--doctors", "3", "--hospitals", "2", "--output", str(gen_path)])
    alloc_path = tmp_path / "alloc.json"
    assert run(["solve-dac", "--input", str(gen_path), "--epsilon", "1/10",
                "--output", str(alloc_path)]) == 0
    out_path = tmp_path / "reneg.json"
    assert run(["renegotiate", "--input", str(gen_path), "--allocation", str(alloc_path),
                "--epsilon", "1/10", "--output", str(out_path)]) == 0
    doc = json.loads(out_path.read_text())
    assert "sweeps" in doc
    code = run(["verify", "--input", str(gen_path), "--allocation", str(out_path),
                "--epsilon", "1/10", "--renegotiation",
                "--output", str(tmp_path / "report.json")])
    assert code == 0


def test_cne_command(tmp_path):
    game_path = tmp_path / "game.json"
    game_path.write_text(json.dumps({
        "class": "zero_sum",
        "A": [["1", "-1"], ["-1", "1"]],
        "M": [["-1", "1"], ["1", "-1"]],
    }))
    out_path = tmp_path / "cne.json"
    assert run(["cne", "--game", str(game_path), "--f-res", "-1", "--g-res", "-1",
                "--epsilon", "1/10", "--output", str(out_path)]) == 0
    doc = json.loads(out_path.read_text())
    assert doc["case"] == "saddle_value"
    assert doc["doctor_payoff"] == "0"


def test_contracts_da_command(tmp_path):
    model_path = tmp_path / "contracts.json"
    model_path.write_text(json.dumps({
        "contracts": [
            {"id": "c1", "doctor": "d1", "hospital": "h1"},
            {"id": "c2", "doctor": "d2", "hospital": "h1"},
        ],
        "doctor_utilities": {"d1": {"c1": "3"}, "d2": {"c2": "2"}},
        "hospitals": {"h1": {"weights": {"c1": "5", "c2": "7"}, "quota": 1}},
    }))
    out_path = tmp_path / "out.json"
    assert run(["contracts-da", "--input", str(model_path), "--audit",
                "--output", str(out_path)]) == 0
    doc = json.loads(out_path.read_text())
    assert doc["contracts"] == ["c2"]
    assert doc["audit"]["h1"] == {"substitutable": True, "irc": True}
    assert doc["audit"]["stable"] is True


def test_roommates_commands(tmp_path):
    inst_path = tmp_path / "rm.json"
    run(["gen", "--seed", "2", "--model", "roommates", "--doctors", "4",
        "--strategies", "3", "--output", str(inst_path)])
    profile_path = tmp_path / "profile.json"
    assert run(["roommates-aspiration", "--input", str(inst_path),
                "--output", str(profile_path)]) == 0
    code = run(["roommates-realize", "--input", str(inst_path),
                "--profile", str(profile_path), "--output", str(tmp_path / "alloc.json")])
    assert code in (0, 2)
    doc = json.loads((tmp_path / "alloc.json").read_text())
    assert doc["realizable"] is (code == 0)


def test_verify_roommates_allocation(tmp_path):
    inst_path = tmp_path / "rm.json"
    run(["gen", "--seed", "13", "--model", "roommates", "--doctors", "5",
        "--strategies", "4", "--output", str(inst_path)])
    profile_path = tmp_path / "profile.json"
    run(["roommates-aspiration", "--input", str(inst_path), "--output", str(profile_path)])
    alloc_path = tmp_path / "alloc.json"
    code = run(["roommates-realize", "--input", str(inst_path),
                "--profile", str(profile_path), "--output", str(alloc_path)])
    assert code == 0
    assert run(["verify", "--input", str(inst_path), "--allocation", str(alloc_path),
                "--epsilon", "1/100", "--output", str(tmp_path / "r.json")]) == 0


def test_cne_accepts_negative_rationals_with_equals(tmp_path):
    game_path = tmp_path / "game.json"
    game_path.write_text(json.dumps({
        "class": "zero_sum",
        "A": [["1", "-1"], ["-1", "1"]],
        "M": [["-1", "1"], ["1", "-1"]],
    }))
    out_path = tmp_path / "cne.json"
    assert run(["cne", "--game", str(game_path), "--f-res=-1/2", "--g-res=-1/2",
                "--epsilon", "1/10", "--output", str(out_path)]) == 0
    assert json.loads(out_path.read_text())["case"] == "saddle_value"


def test_gen_repeated_denominator_bound(tmp_path):
    out = tmp_path / "rep.json"
    assert run(["gen", "--seed", "11", "--classes", "repeated", "--den", "3",
                "--output", str(out)]) == 0
    from matchgames.core import load_instance
    inst = load_instance(str(out))
    for game in inst.games.values():
        assert game.class_tag == "repeated"
        for matrix in (game.doctor_matrix, game.hospital_matrix):
            for row in matrix:
                for v in row:
                    assert v.denominator <= 3


def test_missing_file_is_input_error(tmp_path):
    assert run(["solve-dac", "--input", str(tmp_path / "nope.json"),
                "--epsilon", "1/2"]) == 1
