import csv
import json
import math

import numpy as np
import pytest
import toml

from weylkit.errors import InvalidInputError
from weylkit.main import create_parser, load_config, main
from weylkit.repositories import Writers


def write_config(out_dir, name: str, data: dict) -> str:
    path = out_dir.join(name)
    with open(path, "w", encoding="utf-8") as f:
        toml.dump(data, f)
    return str(path)


def read_rows(path: str) -> tuple[str, list[dict]]:
    with open(path, "r", encoding="utf-8") as f:
        meta = f.readline()
        return meta, list(csv.DictReader(f))


FREE = {
    "potential": {"kind": "constant", "value": 0.0},
    "z_grid": {"moduli": [4.0], "arg": [math.pi / 2]},
}


def test_mfun_free(out_dir):
    config = write_config(out_dir, "free.toml", FREE)
    out = str(out_dir.join("free.csv"))
    assert main(["mfun", "--config", config, "--out", out]) == 0
    meta, rows = read_rows(out)
    assert meta.startswith("# meta: ")
    assert json.loads(meta[len("# meta: ") :])["experiment"] == "mfun"
    assert len(rows) == 1
    row = rows[0]
    assert row["method"] == "limit"
    value = complex(float(row["value_00.re"]), float(row["value_00.im"]))
    assert value == pytest.approx(np.sqrt(2) * (-1 + 1j), rel=1e-8)
    assert json.loads(row["diagnostics"])["boundary"] == "tail"


def test_mfun_json(out_dir):
    config = write_config(out_dir, "free_json.toml", FREE)
    out = str(out_dir.join("free.json"))
    assert main(["mfun", "--config", config, "--out", out, "--format", "json"]) == 0
    with open(out, "r", encoding="utf-8") as f:
        document = json.load(f)
    assert document["meta"]["tolerances"]["rtol"] == 1e-10
    assert document["rows"][0]["m"] == 1
    assert len(document["rows"][0]["value"]) == 2


def test_stdout_when_no_out(out_dir, capsys):
    config = write_config(out_dir, "stdout.toml", FREE)
    assert main(["mfun", "--config", config]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("# meta: ")
    assert "mfun: 1 points" in captured.err


def test_invalid_argument(out_dir, capsys):
    data = dict(FREE, z_grid={"moduli": [4.0], "arg": [3.5]})
    config = write_config(out_dir, "bad_arg.toml", data)
    assert main(["mfun", "--config", config]) == 2
    assert "z_grid.arg[0]" in capsys.readouterr().err


def test_argument_outside_sector(out_dir, capsys):
    data = dict(FREE, z_grid={"moduli": [4.0], "arg": [0.05]})
    config = write_config(out_dir, "narrow.toml", data)
    assert main(["mfun", "--config", config]) == 2
    assert "outside the sector" in capsys.readouterr().err
    wide = write_config(out_dir, "wide.toml", dict(data, eps=0.01))
    assert main(["mfun", "--config", wide]) == 0


def test_unknown_key(out_dir, capsys):
    config = write_config(out_dir, "extra.toml", dict(FREE, horizon=3))
    assert main(["mfun", "--config", config]) == 2
    assert "horizon" in capsys.readouterr().err


def test_missing_config_file(out_dir, capsys):
    assert main(["mfun", "--config", str(out_dir.join("missing.toml"))]) == 2
    assert "cannot read config" in capsys.readouterr().err


def test_cli_flags_override_file(out_dir):
    config = write_config(out_dir, "flags.toml", dict(FREE, order=1))
    args = create_parser().parse_args(
        ["asymp", "--config", config, "--order", "4", "--rtol", "1e-8", "--jobs", "2"]
    )
    loaded = load_config(args)
    assert loaded.experiment == "asymp"
    assert loaded.order == 4
    assert loaded.tolerances.rtol == 1e-8
    assert loaded.tolerances.atol == 1e-12
    assert loaded.jobs == 2


def test_asymp_coefficients(out_dir):
    data = {
        "potential": {"kind": "constant", "value": [[1.0, 0.0], [0.0, -2.0]]},
        "z_grid": {"moduli": [100.0], "arg": [math.pi / 2]},
    }
    config = write_config(out_dir, "asymp.toml", data)
    out = str(out_dir.join("asymp.csv"))
    assert main(["asymp", "--config", config, "--out", out, "--order", "3"]) == 0
    _, rows = read_rows(out)
    methods = [row["method"] for row in rows]
    assert methods == ["m1", "m2", "m3", "series"]
    # m₁ = Q/(2i)
    assert float(rows[0]["value_11.im"]) == pytest.approx(1.0)


def test_verify_constant(out_dir, capsys):
    data = {
        "potential": {
            "kind": "constant",
            "value": [[[1.0, 0.0], [0.5, -0.25]], [[0.5, 0.25], [-2.0, 0.0]]],
        },
        "z_grid": {"moduli": [10.0, 100.0, 1000.0], "arg": [math.pi / 2, math.pi / 4]},
    }
    config = write_config(out_dir, "verify.toml", data)
    out = str(out_dir.join("verify.csv"))
    assert main(["verify", "--config", config, "--out", out, "--order", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "PASS verify: order 2"
    assert len(lines) == 1 + 2 * 3


def test_verify_needs_three_moduli(out_dir, capsys):
    config = write_config(out_dir, "verify_short.toml", FREE)
    assert main(["verify", "--config", config]) == 2
    assert "three moduli" in capsys.readouterr().err


def test_compare_volterra_needs_compact_support(out_dir, capsys):
    config = write_config(out_dir, "compare.toml", FREE)
    assert main(["compare", "--config", config, "--methods", "limit,volterra"]) == 2
    assert capsys.readouterr().err.startswith("error: ")


def test_compare_step(out_dir, capsys):
    data = {
        "potential": {
            "kind": "piecewise_constant",
            "breaks": [0.0, 1.0, 2.0],
            "values": [2.0, -1.0],
        },
        "z_grid": {"moduli": [25.0], "arg": [math.pi / 2]},
    }
    config = write_config(out_dir, "compare_step.toml", data)
    out = str(out_dir.join("compare_step.csv"))
    code = main(
        ["compare", "--config", config, "--out", out, "--methods", "limit,riccati,volterra"]
    )
    assert code == 0
    assert capsys.readouterr().out.startswith("PASS compare limit/riccati/volterra")
    _, rows = read_rows(out)
    assert [row["method"] for row in rows] == ["limit", "riccati", "volterra"]


def test_unknown_writer():
    with pytest.raises(InvalidInputError):
        Writers.get("xml")


def test_disk_containment(out_dir, capsys):
    data = {
        "potential": {
            "kind": "truncated",
            "x0": 0.0,
            "x1": 3.0,
            "base": {
                "kind": "gaussian",
                "amplitude": [[0.0, 1.0], [1.0, 0.0]],
                "center": 1.5,
                "width": 0.4,
            },
        },
        "z_grid": {"moduli": [1.0, 10.0], "arg": [math.pi / 2]},
        "samples": 4,
    }
    config = write_config(out_dir, "disk.toml", data)
    out = str(out_dir.join("disk.csv"))
    assert main(["disk", "--config", config, "--out", out]) == 0
    assert capsys.readouterr().out.startswith("PASS disk: 24/24 contained")
    _, rows = read_rows(out)
    for row in rows:
        diagnostics = json.loads(row["diagnostics"])
        assert len(diagnostics["defects"]) == [1.0, 2.0, 4.0].index(diagnostics["c"]) + 1
        assert max(diagnostics["defects"]) <= 1e-8
