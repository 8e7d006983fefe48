"""End-to-end CLI runs."""
from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from specpreserve import cli
from specpreserve.core.errors import RankDeficiencyError
from specpreserve.core.types import RunConfig

PROJECT_ROOT = Path(__file__).resolve().parents[2]

DIAG_B_1_1 = {"arity": 2, "kind": "diagonal", "name": "1 + x1 x2", "b": [1, 1]}
SUM_MINUS_3PROD = {
    "arity": 2,
    "kind": "series",
    "name": "x1 + x2 - 3 x1 x2",
    "coeffs": [
        {"index": [1, 0], "value": 1},
        {"index": [0, 1], "value": 1},
        {"index": [1, 1], "value": -3},
    ],
}
SUM2 = {"arity": 2, "kind": "series", "name": "x1 + x2", "coeffs": [{"index": [1, 0], "value": 1}, {"index": [0, 1], "value": 1}]}
PROD2 = {"arity": 2, "kind": "series", "name": "x1 x2", "coeffs": [{"index": [1, 1], "value": 1}]}


def _cli(args: list[str], tmp_path: Path) -> subprocess.CompletedProcess:
    env = {**os.environ, "PYTHONPATH": str(PROJECT_ROOT)}
    env.pop("SPECPRESERVE_CONFIG", None)
    env.pop("SPECPRESERVE_THREADS", None)
    return subprocess.run(
        [sys.executable, "-m", "specpreserve.cli", *args],
        cwd=str(tmp_path),
        env=env,
        capture_output=True,
        text=True,
    )


def _json_run(args: list[str], tmp_path: Path, expect: int) -> dict:
    p = _cli([*args, "--format", "json", "--quiet"], tmp_path)
    assert p.returncode == expect, f"STDOUT:\n{p.stdout}\n\nSTDERR:\n{p.stderr}"
    return json.loads(p.stdout)


def _write(tmp_path: Path, name: str, payload) -> Path:
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return path


@pytest.mark.integration
def test_certify_consistent_diagonal_series(tmp_path):
    f = _write(tmp_path, "diag.json", DIAG_B_1_1)
    out = _json_run(["certify", "--f", str(f), "--max-order", "6"], tmp_path, expect=0)
    assert out["meta"]["verdict"] == "certified"
    assert out["reports"][0]["message"] == "consistent with preserver up to order 6"
    assert out["config"]["function"] == DIAG_B_1_1


@pytest.mark.integration
def test_certify_reports_mixed_difference_witness(tmp_path):
    f = _write(tmp_path, "f.json", SUM_MINUS_3PROD)
    out = _json_run(["certify", "--f", str(f), "--max-order", "3", "--eps", "0.5"], tmp_path, expect=2)
    witness = out["reports"][0]["witness"]
    assert witness["order"] == [1, 1]
    assert witness["epsilon"] == 0.5


@pytest.mark.integration
@pytest.mark.parametrize(
    "payload, extra",
    [
        ("{not json", []),
        ({"arity": 2, "kind": "series", "coeffs": [{"index": [1, 0], "value": 1}]}, []),
        (SUM2, ["--m", "3"]),
        (SUM2, ["--eps", ","]),
    ],
)
def test_bad_input_exits_1(tmp_path, payload, extra):
    f = _write(tmp_path, "bad.json", payload)
    p = _cli(["certify", "--f", str(f), *extra, "--format", "json", "--quiet"], tmp_path)
    assert p.returncode == 1, p.stderr
    assert p.stdout == ""


@pytest.mark.integration
def test_usage_errors_exit_1(tmp_path):
    assert _cli(["certify"], tmp_path).returncode == 1
    assert _cli(["certify", "--f", str(tmp_path / "missing.json")], tmp_path).returncode == 1
    f = _write(tmp_path, "f.json", SUM2)
    assert _cli(["certify", "--f", str(f), "--format", "yaml"], tmp_path).returncode == 1
    assert _cli(["demo", "lemma7"], tmp_path).returncode == 1


@pytest.mark.integration
def test_falsify_sum_with_j_construction(tmp_path):
    f = _write(tmp_path, "sum2.json", SUM2)
    out = _json_run(["falsify", "--f", str(f), "--m", "2", "--families", "thm6", "--trials", "20"], tmp_path, expect=2)
    search = out["reports"][0]
    assert search["check"] == "theorem6_search"
    assert search["verdict"] == "falsified"
    assert search["witness"]["epsilon"] == 0.1
    assert search["witness"]["determinant"] == pytest.approx(-0.9801, abs=1e-9)
    assert out["reports"][1]["verdict"] == "falsified"


@pytest.mark.integration
def test_falsify_product_is_reproducible_and_replayable(tmp_path):
    f = _write(tmp_path, "prod2.json", PROD2)
    args = ["falsify", "--f", str(f), "--m", "2", "--trials", "200", "--seed", "7", "--format", "json", "--quiet"]
    first = _cli([*args, "--out", str(tmp_path / "report.json")], tmp_path)
    second = _cli(args, tmp_path)
    assert first.returncode == 0, first.stderr
    assert second.returncode == 0, second.stderr
    assert first.stdout == second.stdout

    out = json.loads(first.stdout)
    assert out["meta"]["seed"] == 7
    assert "diagonal form" in out["summary"]["notes"][0]
    assert (tmp_path / "report.json").read_text() == first.stdout

    replayed = _json_run(["replay", str(tmp_path / "report.json")], tmp_path, expect=0)
    assert replayed["replay"] == {"original_verdict": "certified", "matches": True}
    assert replayed["reports"] == out["reports"]


@pytest.mark.integration
def test_falsify_reads_yaml_config(tmp_path):
    f = _write(tmp_path, "prod2.json", PROD2)
    cfg = _write(tmp_path, "run.yml", "seed: 3\ntrials: 12\nfamilies: lemma4\n")
    out = _json_run(["falsify", "--f", str(f), "--config", str(cfg), "--seed", "5"], tmp_path, expect=0)
    assert out["config"]["seed"] == 5
    assert out["config"]["trials"] == 12
    assert out["config"]["families"] == ["lemma4"]

    bad = _write(tmp_path, "bad.yml", "trails: 12\n")
    assert _cli(["falsify", "--f", str(f), "--config", str(bad)], tmp_path).returncode == 1


@pytest.mark.integration
@pytest.mark.parametrize("p, m, rank", [(0, 1, 1), (1, 2, 3)])
def test_demo_node_family(tmp_path, p, m, rank):
    out = _json_run(["demo", "lemma3", "--p", str(p), "--m", str(m)], tmp_path, expect=0)
    assert out["summary"]["rank"] == rank
    assert out["summary"]["exponent_map_injective"] is True
    assert len(out["summary"]["moment_vectors"]) == rank


@pytest.mark.integration
def test_demo_determinant_sweep(tmp_path):
    out = _json_run(["demo", "thm6", "--m", "2"], tmp_path, expect=0)
    rows = {r["epsilon"]: r for r in out["summary"]["rows"]}
    assert rows[0.1]["det_sum"] == pytest.approx(-0.9801, abs=1e-12)
    flat = [v for row in rows[0.1]["matrix_sum"] for v in row]
    assert flat == pytest.approx([0.2, 1.01, 1.01, 0.2], abs=1e-12)
    assert all(abs(r["det_product"]) < 1e-12 for r in rows.values())


@pytest.mark.integration
def test_construct_functional(tmp_path):
    out = _json_run(["construct", "--p", "1", "--m", "1", "--q", "1"], tmp_path, expect=0)
    functional = out["summary"]["functional"]
    assert functional["z"] == pytest.approx([-0.5, 0.0, 0.5], abs=1e-12)
    assert functional["z_exact"] == ["-1/2", "0", "1/2"]
    assert functional["max_residual"] == 0.0

    loose = _json_run(["construct", "--p", "1", "--m", "2", "--float", "--q", "0,1"], tmp_path, expect=0)
    assert loose["summary"]["family"]["mode"] == "float"
    assert loose["summary"]["functional"]["max_residual"] <= 1e-10
    assert [r["verdict"] for r in loose["reports"]] == ["certified", "certified"]


@pytest.mark.integration
@pytest.mark.parametrize("p, m, q", [(2, 5, "0,0,0,0,1"), (4, 3, "0,0,4")])
def test_construct_float_breakdown_is_inconclusive(tmp_path, p, m, q):
    out = _json_run(["construct", "--p", str(p), "--m", str(m), "--float", "--q", q], tmp_path, expect=3)
    assert out["meta"]["verdict"] == "inconclusive"
    functional = out["reports"][-1]
    assert functional["check"] == "functional"
    assert functional["verdict"] == "inconclusive"
    assert "functional" not in out["summary"]


def test_numerical_breakdown_exits_3(monkeypatch, capsys):
    def broken(*args, **kwargs):
        raise RankDeficiencyError("moment vectors are numerically dependent")

    monkeypatch.setattr(cli, "dispatch", broken)
    monkeypatch.setattr(sys, "argv", ["spec-preserve", "construct", "--p", "1", "--m", "1", "--quiet"])
    with pytest.raises(SystemExit) as exc:
        cli.main()
    assert exc.value.code == 3
    assert capsys.readouterr().out == ""


@pytest.mark.integration
def test_gen_then_eval(tmp_path):
    grid = tmp_path / "grid.json"
    p = _cli(["gen", "--family", "identity", "--n", "2", "--m", "2", "--out", str(grid)], tmp_path)
    assert p.returncode == 0, p.stderr
    blocks = json.loads(grid.read_text())["blocks"][0]

    f = _write(tmp_path, "sum2.json", SUM2)
    _write(tmp_path, "block.json", blocks)
    out = _json_run(["eval", "--f", str(f), "--input", str(tmp_path / "block.json")], tmp_path, expect=0)
    assert out["summary"]["values"] == [[2.0, 2.0], [2.0, 2.0]]
    assert out["reports"][0]["details"]["input_psd"] is True

    g = _write(tmp_path, "prod2.json", PROD2)
    _write(tmp_path, "a.json", {"dim": 2, "re": [[2.0, 1.0], [1.0, 2.0]]})
    out = _json_run(["eval", "--f", str(g), "--input", str(tmp_path / "a.json")], tmp_path, expect=0)
    assert out["summary"]["value"] == pytest.approx(3.0, rel=1e-12)

    assert _cli(["gen", "--family", "wishart"], tmp_path).returncode == 1


def test_main_maps_usage_errors_to_1(monkeypatch, capsys):
    monkeypatch.setattr(sys, "argv", ["spec-preserve", "certify", "--bogus"])
    with pytest.raises(SystemExit) as exc:
        cli.main()
    assert exc.value.code == 1


def test_main_returns_verdict_codes(monkeypatch, capsys):
    monkeypatch.setattr(sys, "argv", ["spec-preserve", "demo", "thm6", "--format", "json", "--quiet"])
    with pytest.raises(SystemExit) as exc:
        cli.main()
    assert exc.value.code == 0
    assert json.loads(capsys.readouterr().out)["meta"]["verdict"] == "certified"


def test_run_wrappers(capsys, tmp_path):
    code = cli.run_demo(RunConfig(command="demo", demo="lemma3", p=1, m=2), fmt="markdown")
    assert code == 0
    text = capsys.readouterr().out
    assert "### Moment vectors (rank 3)" in text

    out = tmp_path / "r.json"
    code = cli.run_falsify(
        RunConfig(command="falsify", function=PROD2, families=("lemma4",), trials=10, seed=1), out=out
    )
    assert code == 0
    assert json.loads(out.read_text())["config"]["trials"] == 10

    with pytest.raises(ValueError):
        cli.run_certify(RunConfig(command="falsify", function=PROD2))
