import json
from pathlib import Path

import pytest

from qdesign.cli import main
from qdesign.qsystem import SignedQSystem, serialize
from qdesign.template import plain_design

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr().out
    return rc, out


def run_json(capsys, *argv):
    rc, out = run(capsys, *argv)
    return rc, json.loads(out)


@pytest.fixture
def p0_config(tmp_path):
    path = tmp_path / "p0.json"
    path.write_text(json.dumps({"q": 2, "n": 4, "s": 2, "r": 1, "lambda": 1,
                                "tower": "2^1:2:2", "z": 1, "tau": "1"}))
    return str(path)


def test_gaussian(capsys):
    rc, obj = run_json(capsys, "gaussian", "4", "2", "2")
    assert rc == 0 and obj["value"] == 35


def test_divisibility(capsys):
    assert run_json(capsys, "divisibility", "3", "2", "1", "1", "2")[1] == {"admissible": False,
                                                                           "failing_i": [0]}
    assert run_json(capsys, "divisibility", "4", "2", "1", "1", "2")[1]["admissible"]


def test_kantor_and_decode(capsys):
    assert run_json(capsys, "kantor", "2", "1", "2")[1]["delta"] == 24
    rc, obj = run_json(capsys, "decode", "2", "1", "2")
    assert rc == 0 and obj["delta"] == 24 and obj["coeffs"]


def test_exchange_build_matches_golden(capsys, tmp_path):
    out = tmp_path / "ex.txt"
    assert main(["exchange", "build", "2", "2", "1", "-o", str(out)]) == 0
    assert out.read_text() == (GOLDEN / "exchange_2_2_1.txt").read_text()
    rc, obj = run_json(capsys, "exchange", "verify", str(out))
    assert rc == 0 and obj["passed"] and obj["family_size"] == 4


def test_absorber_build_and_verify(capsys, tmp_path):
    out = tmp_path / "ab.txt"
    assert main(["absorber", "build", "2^1:2:2", "-o", str(out)]) == 0
    assert out.read_text() == (GOLDEN / "absorber_2122.txt").read_text()
    rc, obj = run_json(capsys, "absorber", "verify", str(out), "--cap", "64")
    assert rc == 0 and obj["passed"] and obj["recovery_count"] == 36


def test_template_sample_and_verify(capsys, tmp_path, p0_config):
    out = tmp_path / "tem.txt"
    assert main(["template", "sample", p0_config, "--seed", "0", "-o", str(out)]) == 0
    assert out.read_text() == (GOLDEN / "template_p0_seed0.txt").read_text()
    rc, obj = run_json(capsys, "template", "verify", str(out))
    assert rc == 0 and obj["passed"] and obj["blocks"] == 2


def test_nibble(capsys, p0_config):
    rc, obj = run_json(capsys, "nibble", p0_config, "--seed", "2")
    assert rc == 0
    assert obj["leave"] == 15 - 3 * obj["matching"]


def test_pipeline_success(capsys, p0_config):
    rc, out = run(capsys, "pipeline", p0_config)
    rep = json.loads(out)
    assert rc == 0 and rep["result"] == "design"


def test_pipeline_rejection_exit_code(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"q": 2, "n": 3, "s": 2, "r": 1}))
    rc, out = run(capsys, "pipeline", str(cfg))
    assert rc == 1 and json.loads(out)["stopped_at"] == "divisibility"


def test_verify_plain_design(capsys, tmp_path):
    pd = plain_design(2, 4, 2, 1, 2, 2)
    f = tmp_path / "blocks.txt"
    f.write_text(serialize(SignedQSystem.from_subspaces(pd.blocks, 2, 4, 2)))
    rc, obj = run_json(capsys, "verify", str(f), "--n", "4", "--s", "2", "--r", "1", "--lambda", "3")
    assert rc == 0 and obj["passed"] and obj["histogram"] == {"3": 15}
    rc, obj = run_json(capsys, "verify", str(f), "--n", "4", "--s", "2", "--r", "1", "--lambda", "1")
    assert rc == 1 and not obj["passed"]


def test_malformed_input_exit_code(capsys, tmp_path):
    f = tmp_path / "junk.txt"
    f.write_text("qsystem q=2 n=3 k=1\n1 1020\n")
    rc = main(["verify", str(f), "--n", "3", "--s", "2", "--r", "1", "--lambda", "1"])
    err = capsys.readouterr().err
    assert rc == 2 and "line 2" in err
