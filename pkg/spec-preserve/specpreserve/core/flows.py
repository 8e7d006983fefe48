"""End-to-end flows behind the CLI commands.

Each flow computes a structured result dict; rendering is handled by formatters.
Every result embeds the RunConfig it was produced from, so `replay` can
re-run it without the original input files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import numpy as np

from specpreserve.core.absmono import PipelineConfig, certify_preserver
from specpreserve.core.blockpsd import (
    apply_spectral,
    gen_commuting_pair,
    gen_random_gram,
    identity_grid,
    is_block_psd,
)
from specpreserve.core.codec import (
    decode_block_matrix,
    decode_matrix,
    encode_block_matrix,
    is_block_payload,
    parse_function,
    read_json,
)
from specpreserve.core.construct import (
    RESIDUAL_TOL,
    build_family,
    exponent_map,
    exponent_map_injective,
    moment_vector,
    solve_functional,
    verify_independence,
)
from specpreserve.core.errors import SchemaError
from specpreserve.core.linalg import is_psd
from specpreserve.core.symfun import (
    MultiIndex,
    PowerSeries,
    SymmetricFunction,
    eval_spectral,
    is_diagonal_form,
    power_sum,
    product,
)
from specpreserve.core.types import CheckReport, RunConfig, Verdict
from specpreserve.core.util import make_rng, progress
from specpreserve.core.witness import (
    GapSearch,
    Theorem6Config,
    falsify_diagonal_gap,
    random_falsify,
    theorem6_determinant,
)
from specpreserve.families import FAMILIES, get_families

DEMO_EPSILONS = (0.5, 0.25, 0.125, 0.1, 0.05, 0.01)


def overall_verdict(reports: list[CheckReport]) -> Verdict:
    """Falsified if any report is; otherwise inconclusive if any report is; else certified."""
    if any(r.falsified for r in reports):
        return Verdict.FALSIFIED
    if not reports or any(r.verdict is Verdict.INCONCLUSIVE for r in reports):
        return Verdict.INCONCLUSIVE
    return Verdict.CERTIFIED


def _result(
    cfg: RunConfig,
    reports: list[CheckReport],
    include_timings: bool,
    summary: Optional[dict[str, Any]] = None,
) -> dict[str, Any]:
    verdict = overall_verdict(reports)
    return {
        "meta": {"command": cfg.command, "verdict": verdict.value, "seed": cfg.seed},
        "config": cfg.to_dict(),
        "reports": [r.to_dict(include_timings) for r in reports],
        "summary": summary or {},
    }


def function_from_config(cfg: RunConfig) -> SymmetricFunction:
    if cfg.function is None:
        raise SchemaError(f"'{cfg.command}' needs a function payload")
    f = parse_function(cfg.function)
    if cfg.m is not None and cfg.m != f.arity:
        raise ValueError(f"--m {cfg.m} does not match the function arity {f.arity}")
    return f


def certify_flow(cfg: RunConfig, verbose: bool = False, include_timings: bool = False) -> dict[str, Any]:
    """Absolute-monotonicity pipeline on the configured function."""
    f = function_from_config(cfg)
    pipeline = PipelineConfig(
        epsilon_schedule=cfg.epsilon_schedule,
        max_order=cfg.max_order,
        h=cfg.h,
        extent=cfg.extent,
        tol=cfg.tol,
        seed=cfg.seed,
    )
    progress(f"certifying {f.name} (m={f.arity}) up to order {cfg.max_order}", verbose)
    report = certify_preserver(f, pipeline, verbose=verbose)
    return _result(cfg, [report], include_timings, summary={"function": f.name, "m": f.arity})


def _gap_report(f: SymmetricFunction, verbose: bool) -> tuple[Optional[CheckReport], str]:
    if f.arity < 2 or f.kind == "black_box":
        return None, "J-construction search needs a series with m >= 2"
    diagonal, _ = is_diagonal_form(f)
    if diagonal:
        return None, "f is of diagonal form; the J-construction cannot falsify it"
    if isinstance(f.body, PowerSeries) and any(v < 0.0 for v in f.body.orbits.values()):
        return None, "f has a negative coefficient; J-construction search skipped"
    search = GapSearch(epsilon=Theorem6Config.reference(f.arity).epsilon)
    witness = falsify_diagonal_gap(f, search, verbose=verbose)
    return witness.to_check_report("theorem6_search", search.tol), ""


def falsify_flow(cfg: RunConfig, verbose: bool = False, include_timings: bool = False) -> dict[str, Any]:
    """J-construction search (when thm6 is selected) followed by the random block search."""
    f = function_from_config(cfg)
    reports: list[CheckReport] = []
    notes: list[str] = []
    if "thm6" in cfg.families:
        report, note = _gap_report(f, verbose)
        if report is not None:
            reports.append(report)
        if note:
            notes.append(note)
    reports.append(
        random_falsify(f, get_families(cfg.families), cfg.trials, cfg.seed, cfg.psd_tol, verbose=verbose)
    )
    return _result(cfg, reports, include_timings, summary={"function": f.name, "m": f.arity, "notes": notes})


def demo_lemma3(cfg: RunConfig, verbose: bool = False, include_timings: bool = False) -> dict[str, Any]:
    """Node family, moment vectors and rank for (p, m)."""
    p = cfg.p if cfg.p is not None else 1
    m = cfg.m if cfg.m is not None else 2
    fam = build_family(p, m, exact=cfg.exact)
    progress(f"family with n={fam.n} nodes, |Con_{p}|={len(fam.index_set)}", verbose)
    vectors = []
    for idx in fam.index_set:
        vec = moment_vector(fam, idx)
        vectors.append(
            {
                "index": list(idx.exponents),
                "exponent": exponent_map(idx, p),
                "entries": [str(v) for v in vec.entries] if fam.exact else list(vec.entries),
            }
        )
    report = verify_independence(fam)
    summary = {
        "family": fam.summary(),
        "exponent_map_injective": exponent_map_injective(p, m),
        "moment_vectors": vectors,
        "rank": report.details["rank"],
    }
    return _result(cfg, [report], include_timings, summary=summary)


def _demo_row(f: SymmetricFunction, m: int, eps: float) -> dict[str, Any]:
    rep = theorem6_determinant(f, Theorem6Config.reference(m).at(eps))
    return {"matrix": rep.matrix.tolist(), "determinant": rep.determinant}


def demo_thm6(cfg: RunConfig, verbose: bool = False, include_timings: bool = False) -> dict[str, Any]:
    """Epsilon sweep of det[f(A B)] for the power sum (negative) and the product (zero)."""
    m = cfg.m if cfg.m is not None else 2
    if m < 2:
        raise ValueError(f"the J-construction needs m >= 2, got m={m}")
    f_sum, f_prod = power_sum(m), product(m)
    rows = []
    for eps in DEMO_EPSILONS:
        progress(f"eps={eps:g}", verbose)
        s = _demo_row(f_sum, m, eps)
        q = _demo_row(f_prod, m, eps)
        rows.append(
            {
                "epsilon": eps,
                "det_sum": s["determinant"],
                "det_product": q["determinant"],
                "matrix_sum": s["matrix"],
                "matrix_product": q["matrix"],
            }
        )
    sum_negative = all(r["det_sum"] < 0.0 for r in rows)
    scale = max(abs(v) for r in rows for row in r["matrix_product"] for v in row)
    product_zero = all(abs(r["det_product"]) <= 1e-12 * max(1.0, scale * scale) for r in rows)
    ok = sum_negative and product_zero
    report = CheckReport(
        check="theorem6_demo",
        verdict=Verdict.CERTIFIED if ok else Verdict.INCONCLUSIVE,
        message=(
            "det(sum) < 0 and det(product) = 0 at every eps"
            if ok
            else f"unexpected sweep: sum negative={sum_negative}, product zero={product_zero}"
        ),
        tolerances={"product_zero": 1e-12},
        details={"m": m, "r": 1, "x": [1.0]},
    )
    return _result(cfg, [report], include_timings, summary={"m": m, "rows": rows})


def construct_flow(cfg: RunConfig, verbose: bool = False, include_timings: bool = False) -> dict[str, Any]:
    """Family summary, independence check and (with q) the isolating functional."""
    if cfg.p is None or cfg.m is None:
        raise ValueError("construct needs --p and --m")
    fam = build_family(cfg.p, cfg.m, exact=cfg.exact)
    report = verify_independence(fam)
    summary: dict[str, Any] = {"family": fam.summary(), "rank": report.details["rank"]}
    reports = [report]
    if cfg.q is not None:
        q = MultiIndex(cfg.q)
        progress(f"solving for the functional isolating {q}", verbose)
        try:
            sol = solve_functional(fam, q)
        except ArithmeticError as exc:
            reports.append(
                CheckReport(
                    check="functional",
                    verdict=Verdict.INCONCLUSIVE,
                    message=str(exc),
                    details={"q": list(q.exponents)},
                )
            )
            return _result(cfg, reports, include_timings, summary=summary)
        summary["functional"] = {
            "q": list(q.exponents),
            "z": list(sol.weights),
            "max_residual": sol.max_residual,
        }
        if sol.exact_weights is not None:
            summary["functional"]["z_exact"] = [str(v) for v in sol.exact_weights]
        solved = sol.max_residual <= RESIDUAL_TOL
        reports.append(
            CheckReport(
                check="functional",
                verdict=Verdict.CERTIFIED if solved else Verdict.INCONCLUSIVE,
                message=f"<v(p), z> = [p == {q}] on Con_{fam.p}, max relative residual {sol.max_residual:.3e}",
                tolerances={"residual": RESIDUAL_TOL},
                details={"q": list(q.exponents), "max_residual": sol.max_residual},
            )
        )
    return _result(cfg, reports, include_timings, summary=summary)


def eval_flow(cfg: RunConfig, verbose: bool = False, include_timings: bool = False) -> dict[str, Any]:
    """f(A) for a matrix input, [f(A_ab)] plus its PSD verdict for a block input."""
    f = function_from_config(cfg)
    if cfg.input_path is None:
        raise ValueError("eval needs --input")
    payload = read_json(Path(cfg.input_path))
    if is_block_payload(payload):
        mat = decode_block_matrix(payload)
        values = apply_spectral(f, mat, cfg.psd_tol)
        input_verdict = is_block_psd(mat, cfg.psd_tol)
        out_verdict = is_psd(values, cfg.psd_tol)
        report = CheckReport(
            check="eval_block",
            verdict=Verdict.CERTIFIED if out_verdict.is_psd else Verdict.FALSIFIED,
            message=f"[f(A_ab)] min eigenvalue {out_verdict.min_eigenvalue:.6e}",
            witness={} if out_verdict.is_psd else {"matrix": np.real(values.entries).tolist()},
            tolerances={"psd_tol": cfg.psd_tol},
            details={
                "input_psd": input_verdict.is_psd,
                "input_min_eigenvalue": input_verdict.min_eigenvalue,
                "min_eigenvalue": out_verdict.min_eigenvalue,
            },
        )
        summary = {"kind": "block", "n": mat.n, "m": mat.m, "values": np.real(values.entries).tolist()}
        return _result(cfg, [report], include_timings, summary=summary)

    a = decode_matrix(payload)
    value = eval_spectral(f, a, cfg.psd_tol)
    report = CheckReport(check="eval", verdict=Verdict.CERTIFIED, message=f"f(A) = {value!r}")
    return _result(cfg, [report], include_timings, summary={"kind": "matrix", "dim": a.dim, "value": value})


def gen_flow(family: str, n: int, m: int, rank: int, seed: int) -> dict[str, Any]:
    """Draw a block matrix (or pair) and return its JSON payload."""
    if family == "gram":
        mats = [gen_random_gram(n, m, rank, seed)]
        params: dict[str, Any] = {"n": n, "m": m, "rank": rank, "seed": seed}
    elif family == "commuting":
        mats = list(gen_commuting_pair(n, m, rank, seed))
        params = {"n": n, "m": m, "rank": rank, "seed": seed}
    elif family == "identity":
        mats = [identity_grid(n, m)]
        params = {"n": n, "m": m}
    elif family in FAMILIES:
        draw = get_families([family])[0].draw(make_rng(seed), m)
        mats = [draw.matrix] if draw.matrix is not None else list(draw.pair)
        params = {**draw.params, "seed": seed}
    else:
        raise ValueError(f"Unsupported family '{family}'. Expected one of {', '.join([*FAMILIES, 'identity'])}.")
    return {
        "meta": {"command": "gen", "family": family, "seed": seed},
        "params": params,
        "blocks": [encode_block_matrix(b) for b in mats],
    }


def demo_flow(cfg: RunConfig, verbose: bool = False, include_timings: bool = False) -> dict[str, Any]:
    if cfg.demo == "lemma3":
        return demo_lemma3(cfg, verbose, include_timings)
    if cfg.demo == "thm6":
        return demo_thm6(cfg, verbose, include_timings)
    raise ValueError(f"Unknown demo '{cfg.demo}'. Expected lemma3 or thm6.")


FLOWS = {
    "certify": certify_flow,
    "falsify": falsify_flow,
    "demo": demo_flow,
    "construct": construct_flow,
    "eval": eval_flow,
}


def dispatch(cfg: RunConfig, verbose: bool = False, include_timings: bool = False) -> dict[str, Any]:
    if cfg.command not in FLOWS:
        raise ValueError(f"command '{cfg.command}' cannot be run from a config")
    return FLOWS[cfg.command](cfg, verbose, include_timings)


def replay(report: Any, verbose: bool = False, include_timings: bool = False) -> dict[str, Any]:
    """
    Re-run the flow recorded in a report from its embedded config and seed.

    Raises:
        SchemaError: If the report has no usable config.
    """
    if not isinstance(report, dict) or not isinstance(report.get("config"), dict):
        raise SchemaError("report has no 'config' object")
    try:
        cfg = RunConfig.from_dict(report["config"])
    except TypeError as exc:
        raise SchemaError(f"report config is malformed: {exc}") from None
    result = dispatch(cfg, verbose, include_timings)
    original = (report.get("meta") or {}).get("verdict")
    result["replay"] = {
        "original_verdict": original,
        "matches": original == result["meta"]["verdict"],
    }
    return result
