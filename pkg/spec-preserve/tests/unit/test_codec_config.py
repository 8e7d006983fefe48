from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from specpreserve.core.blockpsd import gen_random_gram
from specpreserve.core.codec import (
    decode_block_matrix,
    decode_matrix,
    encode_block_matrix,
    encode_function,
    encode_matrix,
    is_block_payload,
    load_function,
    parse_function,
    read_json,
)
from specpreserve.core.config import CONFIG_ENV, build_run_config, load_run_config, resolve_config_path
from specpreserve.core.errors import SchemaError
from specpreserve.core.linalg import HermitianMatrix
from specpreserve.core.symfun import SymmetricFunction, builtin
from specpreserve.core.types import CheckReport, RunConfig, Verdict
from specpreserve.core.util import make_rng, max_workers, rel_close, spawn_seeds, stopwatch
from specpreserve.families import FAMILIES, get_families
from specpreserve.formatters import json_fmt, markdown_fmt

SUM_MINUS_3PROD = {
    "arity": 2,
    "kind": "series",
    "coeffs": [
        {"index": [1, 0], "value": 1},
        {"index": [0, 1], "value": 1},
        {"index": [1, 1], "value": -3},
    ],
}

RUN_YML = """\
seed: 7
max_order: 6
epsilon_schedule: [0.5, 0.25, 0.125]
families: gram, lemma4, thm6
trials: 200
"""


def _write(tmp_path: Path, name: str, text: str) -> Path:
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_series_and_diagonal_payloads():
    f = parse_function(SUM_MINUS_3PROD)
    assert f.kind == "series"
    assert f((1.0, 2.0)) == pytest.approx(-3.0)

    g = parse_function({"arity": 2, "kind": "diagonal", "name": "1 + x1 x2", "b": [1, 1]})
    assert g.name == "1 + x1 x2"
    assert g((2.0, 2.0)) == pytest.approx(5.0)

    h = parse_function({"arity": 3, "kind": "series", "orbits": True, "coeffs": [{"index": [1, 1, 0], "value": 2}]})
    assert h((1.0, 2.0, 3.0)) == pytest.approx(2.0 * (2.0 + 3.0 + 6.0))

    assert parse_function({"arity": 2, "kind": "builtin", "name": "max"}).kind == "black_box"


@pytest.mark.parametrize(
    "payload",
    [
        [],
        {"kind": "series", "coeffs": []},
        {"arity": 0, "kind": "diagonal", "b": [1]},
        {"arity": True, "kind": "diagonal", "b": [1]},
        {"arity": 2, "kind": "taylor"},
        {"arity": 2, "kind": "diagonal", "b": [1, "x"]},
        {"arity": 2, "kind": "diagonal", "b": [1, float("inf")]},
        {"arity": 2, "kind": "series", "coeffs": [{"index": [1, 0], "value": 1}]},
        {"arity": 2, "kind": "series", "coeffs": [{"index": [1, 1], "value": 1}, {"index": [1, 1], "value": 2}]},
        {"arity": 2, "kind": "series", "coeffs": [{"index": [1.5, 0], "value": 1}]},
        {"arity": 2, "kind": "series", "coeffs": [{"index": [1, 1], "value": True}]},
        {"arity": 2, "kind": "series", "degree": "3", "coeffs": []},
        {"arity": 2, "kind": "builtin", "name": "median"},
    ],
)
def test_parse_function_rejects_bad_payloads(payload):
    with pytest.raises(SchemaError):
        parse_function(payload)


def test_encode_function_keeps_original_payload():
    assert encode_function(parse_function(SUM_MINUS_3PROD)) == SUM_MINUS_3PROD


def test_encode_function_for_built_functions():
    f = SymmetricFunction.series(2, {(2, 0): 0.5, (1, 1): 1.0}, orbits=True, name="q")
    back = parse_function(encode_function(f))
    assert back((0.3, 1.7)) == f((0.3, 1.7))

    d = SymmetricFunction.diagonal(2, [1.0, 0.25])
    assert encode_function(d) == {"arity": 2, "kind": "diagonal", "name": d.name, "b": [1.0, 0.25]}
    assert encode_function(builtin("max", 2)) == {"arity": 2, "kind": "builtin", "name": "max"}


def test_read_json_and_load_function(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_json(tmp_path / "missing.json")
    with pytest.raises(SchemaError):
        read_json(_write(tmp_path, "bad.json", "{not json"))
    path = _write(tmp_path, "f.json", json.dumps(SUM_MINUS_3PROD))
    assert load_function(path)((0.5, 0.5)) == pytest.approx(0.25)


def test_matrix_payloads():
    a = HermitianMatrix(np.array([[2.0, 1.0 + 1j], [1.0 - 1j, 3.0]]))
    payload = encode_matrix(a)
    assert payload["dim"] == 2
    assert payload["im"] == [[0.0, 1.0], [-1.0, 0.0]]
    assert np.array_equal(decode_matrix(payload).entries, a.entries)

    real = encode_matrix(HermitianMatrix.identity(2))
    assert "im" not in real
    with pytest.raises(SchemaError):
        decode_matrix({"dim": 3, "re": [[1.0, 0.0], [0.0, 1.0]]})
    with pytest.raises(SchemaError):
        decode_matrix({"dim": 1, "re": [["a"]]})
    with pytest.raises(SchemaError):
        decode_matrix({"dim": 1})


def test_block_matrix_payloads():
    mat = gen_random_gram(3, 2, 2, seed=5)
    payload = encode_block_matrix(mat)
    assert is_block_payload(payload)
    assert not is_block_payload({"dim": 2, "re": []})
    assert np.array_equal(decode_block_matrix(json.loads(json.dumps(payload))).blocks, mat.blocks)

    payload["blocks"] = payload["blocks"][:2]
    with pytest.raises(SchemaError):
        decode_block_matrix(payload)
    with pytest.raises(SchemaError):
        decode_block_matrix([])


def test_load_run_config(tmp_path):
    out = load_run_config(_write(tmp_path, "run.yml", RUN_YML))
    assert out == {
        "seed": 7,
        "max_order": 6,
        "epsilon_schedule": (0.5, 0.25, 0.125),
        "families": ("gram", "lemma4", "thm6"),
        "trials": 200,
    }
    assert load_run_config(_write(tmp_path, "empty.yml", "")) == {}
    assert load_run_config(_write(tmp_path, "list.yml", "families: [thm6]\nexact: false\n")) == {
        "families": ("thm6",),
        "exact": False,
    }


@pytest.mark.parametrize(
    "text",
    [
        "- 1\n- 2\n",
        "sed: 1\n",
        "tol: 0\n",
        "tol: yes\n",
        "trials: 0\n",
        "seed: -1\n",
        "max_order: 1.5\n",
        "epsilon_schedule: []\n",
        "epsilon_schedule: [0.5, -0.1]\n",
        "families: ''\n",
        "families: 3\n",
        "exact: 1\n",
    ],
)
def test_load_run_config_rejects_bad_values(tmp_path, text):
    with pytest.raises(ValueError):
        load_run_config(_write(tmp_path, "bad.yml", text))


def test_load_run_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_run_config(tmp_path / "nope.yml")


def test_config_path_resolution(tmp_path, monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)
    assert resolve_config_path(None) is None
    monkeypatch.setenv(CONFIG_ENV, str(tmp_path / "env.yml"))
    assert resolve_config_path(None) == tmp_path / "env.yml"
    assert resolve_config_path(tmp_path / "cli.yml") == tmp_path / "cli.yml"


def test_build_run_config_precedence(tmp_path, monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)
    assert build_run_config("certify", None) == RunConfig(command="certify")

    path = _write(tmp_path, "run.yml", RUN_YML)
    cfg = build_run_config("falsify", path, seed=11, trials=None)
    assert cfg.seed == 11
    assert cfg.trials == 200
    assert cfg.max_order == 6

    monkeypatch.setenv(CONFIG_ENV, str(path))
    assert build_run_config("falsify", None).seed == 7


def test_run_config_dict_round_trip():
    cfg = RunConfig(command="demo", demo="thm6", m=2, q=(1, 1), out="x.json")
    data = cfg.to_dict()
    assert "out" not in data
    assert data["families"] == ["gram", "lemma4", "thm6"]
    assert RunConfig.from_dict({**data, "unknown": 1}) == RunConfig(command="demo", demo="thm6", m=2, q=(1, 1))


def test_family_registry():
    assert set(FAMILIES) == {"gram", "lemma4", "thm6", "commuting"}
    names = [fam.name for fam in get_families(["thm6", "gram"])]
    assert names == ["thm6", "gram"]
    with pytest.raises(ValueError):
        get_families(["gram", "wishart"])


def test_family_draws_are_seeded():
    for fam in get_families(list(FAMILIES)):
        a = fam.draw(make_rng(1), 2)
        b = fam.draw(make_rng(1), 2)
        assert a.family == fam.name
        assert a.params == b.params
        first = a.matrix if a.matrix is not None else a.pair[0]
        again = b.matrix if b.matrix is not None else b.pair[0]
        assert np.array_equal(first.blocks, again.blocks)
    thm6 = get_families(["thm6"])[0]
    assert not thm6.supports(1)
    with pytest.raises(ValueError):
        thm6.draw(make_rng(0), 1)


def test_to_jsonable():
    tree = {
        "verdict": Verdict.FALSIFIED,
        "x": np.array([1.0, 2.0]),
        "k": np.int64(3),
        "z": 1 + 2j,
        "w": complex(4.0, 0.0),
        "frac": Fraction(-1, 2),
        "bad": [float("inf"), float("-inf"), float("nan")],
        "t": (0.1, None, True),
        1: "key",
    }
    assert json_fmt.to_jsonable(tree) == {
        "verdict": "falsified",
        "x": [1.0, 2.0],
        "k": 3,
        "z": {"re": 1.0, "im": 2.0},
        "w": 4.0,
        "frac": "-1/2",
        "bad": ["inf", "-inf", "nan"],
        "t": [0.1, None, True],
        "1": "key",
    }


def test_json_render_is_stable_and_exact():
    value = 0.1 + 0.2
    text = json_fmt.render({"b": value, "a": [float("nan")]})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text)["b"] == value
    assert text == json_fmt.render({"a": [float("nan")], "b": value})


@pytest.mark.parametrize(
    "value, literal",
    [(0.1, "0.10000000000000001"), (1.0, "1.0"), (-0.0, "-0.0"), (1e-9, "1.0000000000000001e-09"), (2.5, "2.5")],
)
def test_json_render_writes_17_significant_digits(value, literal):
    text = json_fmt.render({"v": value})
    assert text == '{\n  "v": ' + literal + "\n}"
    assert json.loads(text)["v"] == value
    assert isinstance(json.loads(text)["v"], float)


def test_json_render_layout_matches_json_dumps():
    tree = {"b": [1, "s", None, True, []], "a": {"c": {}, "d": False}, "e": "ü"}
    assert json_fmt.render(tree) == json.dumps(tree, indent=2, sort_keys=True)


def test_markdown_render():
    report = CheckReport(
        check="theorem6",
        verdict=Verdict.FALSIFIED,
        message="det[f(A B)] = -9.801000e-01",
        witness={"epsilon": 0.1, "blocks": ["omitted"]},
    )
    result = {
        "meta": {"command": "falsify", "verdict": "falsified", "seed": 7},
        "reports": [report.to_dict()],
        "summary": {"rows": [{"epsilon": 0.1, "det_sum": -0.9801, "det_product": 0.0}], "notes": ["note"]},
    }
    text = markdown_fmt.render(result)
    assert "## spec-preserve: `falsify`" in text
    assert "| theorem6 | falsified |" in text
    assert "- epsilon: `0.1`" in text
    assert "omitted" not in text
    assert "| 0.1 | -0.9801 | 0 |" in text
    assert "> note" in text


def test_max_workers(monkeypatch):
    monkeypatch.delenv("SPECPRESERVE_THREADS", raising=False)
    assert max_workers() == 1
    monkeypatch.setenv("SPECPRESERVE_THREADS", "3")
    assert max_workers() == 3
    for raw in ("0", "two"):
        monkeypatch.setenv("SPECPRESERVE_THREADS", raw)
        with pytest.raises(ValueError):
            max_workers()


def test_small_helpers():
    a = [s.generate_state(1)[0] for s in spawn_seeds(5, 3)]
    assert a == [s.generate_state(1)[0] for s in spawn_seeds(5, 3)]
    assert len(set(a)) == 3
    assert rel_close(1.0, 1.0 + 1e-10, 1e-9)
    assert not rel_close(1.0, 1.1, 1e-9)
    timings: dict[str, float] = {}
    with stopwatch(timings, "step"):
        pass
    assert timings["step"] >= 0.0
