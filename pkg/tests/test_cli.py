import json

import numpy as np

from app.service.attack_service import linear_attack
from app.service.experiment_service import parse_csv
from tasks.sl2c import build_parser, config_from_args, main


def test_preset_prints_generators(capsys):
    assert main(["preset", "appendixB", "--p", "7"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data == {"p": 7, "n": 1, "modulus": [0, 1], "A0": "[3,6;1,0]", "A1": "[4,6;1,0]"}


def test_preset_bad_field_is_reported(capsys):
    assert main(["preset", "random", "--p", "9"]) == 1
    assert "FieldError" in capsys.readouterr().err


def test_run_csv(capsys, tmp_path):
    log = tmp_path / "trials.csv"
    code = main(["run", "--p-min", "101", "--p-max", "200", "--N", "7", "--trials", "3",
                 "--seed", "2", "--log", str(log)])
    assert code == 0
    (row,) = parse_csv(capsys.readouterr().out)
    assert row.trials == 3 and row.failures == 0
    assert log.exists() and len(log.read_text().splitlines()) == 4


def test_run_from_config_file(capsys, tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"p": 101, "N": 7, "trials": 2, "out": "json"}))
    assert main(["run", "--config", str(path), "--seed", "4"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data[0]["trials"] == 2 and data[0]["p_range"] == "101-101"


def test_run_invalid_configuration(capsys):
    assert main(["run", "--alg", "linear"]) == 2
    assert "invalid configuration" in capsys.readouterr().err


def test_run_routes_table_commands(capsys):
    assert main(["run", "--p", "3", "--alg", "mixing"]) == 0
    assert capsys.readouterr().out.startswith("m,l1_distance,bound")
    assert main(["run", "--p", "2", "--alg", "table6"]) == 0
    assert "2^64" in capsys.readouterr().out


def test_run_mixing_needs_a_single_table_q(capsys):
    assert main(["run", "--p-min", "2", "--p-max", "5", "--alg", "mixing"]) == 2
    assert "mixing --q" in capsys.readouterr().err
    assert main(["run", "--p", "7", "--alg", "mixing"]) == 2
    assert "needs a single --p" in capsys.readouterr().err


def test_mitm_jobs_option_is_parsed():
    args = build_parser().parse_args(["run", "--p", "101", "--N", "7", "--mitm-jobs", "2"])
    assert config_from_args(args).mitm_jobs == 2


def test_verify_command(tmp_path, xi01, capsys):
    rec = linear_attack(xi01, rng=np.random.default_rng(0)).to_record(xi01)
    good = tmp_path / "good.json"
    good.write_text(rec.model_dump_json())
    assert main(["verify", str(good)]) == 0
    assert "verified" in capsys.readouterr().out

    bad = tmp_path / "bad.json"
    bad.write_text(rec.model_copy(update={"w1": rec.w1 + "0"}).model_dump_json())
    assert main(["verify", str(bad)]) == 1


def test_table6_outputs(capsys):
    assert main(["table6"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[2].strip().startswith("2^64")
    assert main(["table6", "--out", "csv"]) == 0
    assert capsys.readouterr().out.startswith("n,n0,")


def test_mixing_command(capsys):
    assert main(["mixing", "--q", "3", "--m-max", "10"]) == 0
    captured = capsys.readouterr()
    assert len(captured.out.splitlines()) == 12
    assert "bound holds" in captured.err
