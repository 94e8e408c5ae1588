import json
import math
import subprocess
import sys

import pytest

from wimanlab.cli import main

FAST_COMMANDS = [
    ["maxterm", "--rule", "SqrtHalf", "--k", "8"],
    ["summod", "--rule", "Geometric", "--p", "2", "--r", "0.5", "0.5"],
    ["maxmod", "--rule", "SqrtHalf", "--k", "7", "--signs", "Rademacher", "--seed", "3"],
    ["sweep", "--k-min", "4", "--k-max", "6", "--realizations", "3", "--seed", "1"],
    ["levy", "--k-min", "4", "--k-max", "7", "--realizations", "3", "--seed", "1"],
    ["sz-tail", "--N", "16", "32", "--A", "1", "2", "--trials", "100", "--seed", "2"],
    ["deriv-check", "--rule", "Geometric", "--r", "0.5", "--delta", "0", "--h", "1e-5"],
    ["logmeasure", "box", "--lo", "0.5", "--hi", "0.75", "0.75"],
    ["logmeasure", "region", "--rule", "SqrtHalf", "--form", "DiscDet", "--lo", "0.5", "--hi", "0.99", "--cells", "16"],
    ["logmeasure", "estar", "--t-star", "0.98", "--upper", "0.999", "--cells", "2"],
    ["sharpness", "check-2s", "--k-min", "7", "--k-max", "8"],
    ["sharpness", "g", "--t", "0.9", "--v", "5"],
]


def run(argv, tmp_path, name="out.txt"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out.read_bytes()


@pytest.mark.parametrize("argv", FAST_COMMANDS, ids=lambda a: " ".join(a[:2]))
def test_commands_succeed_and_are_deterministic(argv, tmp_path):
    code1, a = run(argv, tmp_path, "a")
    code2, b = run(argv, tmp_path, "b")
    assert code1 == code2 == 0
    assert a == b and len(a) > 0


def test_maxterm_json(capsys):
    assert main(["maxterm", "--rule", "SqrtHalf", "--r", str(math.exp(-0.25))]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["ln_mu"] == pytest.approx(0.25) and out["argmax"] == [1]


def test_box_json(capsys):
    main(["logmeasure", "box", "--lo", "0", "--hi", str(1 - math.exp(-1))])
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(1.0)


def test_levy_prints_both_slopes_and_ratio(capsys):
    main(["levy", "--k-min", "4", "--k-max", "7", "--realizations", "2"])
    out = json.loads(capsys.readouterr().out)
    assert {"det_slope", "rand_slope", "ratio"} <= set(out)
    assert out["ratio"] == pytest.approx(out["rand_slope"] / out["det_slope"])


def test_budget_truncation_exit_code(tmp_path):
    code, text = run(["sweep", "--k-min", "8", "--k-max", "8", "--budget-mb", "0.02"], tmp_path)
    assert code == 2
    header, row = text.decode().splitlines()
    assert row.split(",")[header.split(",").index("budget_truncated")] == "1"
    code, _ = run(["maxmod", "--k", "9", "--budget-mb", "0.02"], tmp_path)
    assert code == 2


def test_error_exit_code(capsys):
    assert main(["maxterm", "--rule", "PowerExp", "--r", "0.5"]) == 1
    assert "epsilon" in capsys.readouterr().err
    assert main(["maxterm", "--rule", "SqrtHalf", "--r", "0.5", "0.5"]) == 1
    assert main(["sharpness", "g", "--v", "-3"]) == 1


def test_config_file_defaults_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rule": "Geometric", "r": [0.5]}))
    main(["summod", "--config", str(cfg)])
    assert json.loads(capsys.readouterr().out)["ln_frak"] == pytest.approx(math.log(2))
    main(["summod", "--config", str(cfg), "--r", "0.75"])
    assert json.loads(capsys.readouterr().out)["ln_frak"] == pytest.approx(math.log(4))


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"no_such_flag": 1}))
    with pytest.raises(SystemExit):
        main(["summod", "--config", str(cfg)])


def test_table_rule_file(tmp_path, capsys):
    from wimanlab.series import CoefficientRule

    path = tmp_path / "rule.json"
    path.write_text(CoefficientRule.from_table({0: 0.0, 1: 0.0}).to_json())
    main(["maxmod", "--table", str(path), "--r", "0.5", "--signs", "PlusOnly"])
    assert json.loads(capsys.readouterr().out)["ln_max"] == pytest.approx(math.log(1.5))


def test_console_script_module_entry():
    res = subprocess.run(
        [sys.executable, "-m", "wimanlab.cli", "maxterm", "--rule", "Geometric", "--r", "0.5"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(res.stdout)["ln_mu"] == 0.0
