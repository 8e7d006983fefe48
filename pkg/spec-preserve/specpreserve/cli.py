"""CLI entrypoint for spec-preserve."""

from __future__ import annotations

import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Optional

import typer

try:  # typer>=0.2x vendors click and raises its own exception classes
    from typer import _click as click
except ImportError:
    import click

from specpreserve.core.codec import read_json
from specpreserve.core.config import build_run_config
from specpreserve.core.errors import SchemaError
from specpreserve.core.flows import dispatch, gen_flow, replay
from specpreserve.core.types import RunConfig, Verdict
from specpreserve.core.util import err_console
from specpreserve.formatters.json_fmt import render as render_json
from specpreserve.formatters.markdown_fmt import render as render_markdown
from specpreserve.formatters.rich_fmt import render as render_rich

app = typer.Typer(add_completion=False, no_args_is_help=True)

EXIT_CODES = {Verdict.CERTIFIED: 0, Verdict.FALSIFIED: 2, Verdict.INCONCLUSIVE: 3}
FORMATS = {"rich", "json", "markdown"}


@contextmanager
def _exit_on_error() -> Iterator[None]:
    """Bad input exits 1; numerical breakdown (no convergence, bad quadrature, lost rank or range) exits 3."""
    try:
        yield
    except (SchemaError, ValueError, FileNotFoundError) as exc:
        err_console.print(f"[red]error:[/red] {exc}")
        raise typer.Exit(1)
    except (RuntimeError, ArithmeticError) as exc:
        err_console.print(f"[yellow]inconclusive:[/yellow] {exc}")
        raise typer.Exit(3)


def _check_format(fmt: str) -> str:
    fmt = fmt.lower().strip()
    if fmt not in FORMATS:
        raise typer.BadParameter("--format must be one of: rich, json, markdown")
    return fmt


def _emit(result: dict[str, Any], fmt: str, out: Optional[Path]) -> None:
    if out is not None:
        out.write_text(render_json(result) + "\n")
    if fmt == "rich":
        render_rich(result)
        return
    if fmt == "json":
        sys.stdout.write(render_json(result) + "\n")
        return
    sys.stdout.write(render_markdown(result) + "\n")


def _run(
    cfg: RunConfig,
    fmt: str = "json",
    out: Optional[Path] = None,
    verbose: bool = False,
    timings: bool = False,
) -> int:
    result = dispatch(cfg, verbose=verbose, include_timings=timings)
    _emit(result, fmt, out)
    return EXIT_CODES[Verdict(result["meta"]["verdict"])]


def run_certify(cfg: RunConfig, fmt: str = "json", out: Optional[Path] = None,
                verbose: bool = False, timings: bool = False) -> int:
    """Certification run; 0 consistent, 2 falsified, 3 inconclusive."""
    if cfg.command != "certify":
        raise ValueError(f"run_certify got a '{cfg.command}' config")
    return _run(cfg, fmt, out, verbose, timings)


def run_falsify(cfg: RunConfig, fmt: str = "json", out: Optional[Path] = None,
                verbose: bool = False, timings: bool = False) -> int:
    """Falsification run; 0 when every trial passes, 2 with a witness, 3 inconclusive."""
    if cfg.command != "falsify":
        raise ValueError(f"run_falsify got a '{cfg.command}' config")
    return _run(cfg, fmt, out, verbose, timings)


def run_demo(cfg: RunConfig, fmt: str = "rich", out: Optional[Path] = None,
             verbose: bool = False, timings: bool = False) -> int:
    if cfg.command != "demo":
        raise ValueError(f"run_demo got a '{cfg.command}' config")
    return _run(cfg, fmt, out, verbose, timings)


def _floats(raw: Optional[str]) -> Optional[tuple[float, ...]]:
    if raw is None:
        return None
    values = tuple(float(v) for v in raw.split(",") if v.strip())
    if not values:
        raise ValueError("expected a comma-separated list of numbers")
    return values


def _ints(raw: Optional[str]) -> Optional[tuple[int, ...]]:
    if raw is None:
        return None
    return tuple(int(v) for v in raw.split(",") if v.strip())


def _names(raw: Optional[str]) -> Optional[tuple[str, ...]]:
    if raw is None:
        return None
    return tuple(v.strip() for v in raw.split(",") if v.strip())


FormatOpt = typer.Option("rich", "--format", help="Output format: rich | json | markdown")
OutOpt = typer.Option(None, "--out", help="Also write the JSON report to this path")
ConfigOpt = typer.Option(None, "--config", help="YAML run settings (default: $SPECPRESERVE_CONFIG)")
QuietOpt = typer.Option(False, "--quiet", help="Suppress progress output on stderr")
TimingsOpt = typer.Option(False, "--timings", help="Include wall-clock timings in reports")


@app.command("certify")
def certify_cmd(
    function: Path = typer.Option(..., "--f", help="Function JSON"),
    m: Optional[int] = typer.Option(None, "--m", help="Expected arity"),
    max_order: Optional[int] = typer.Option(None, "--max-order", help="Highest difference order"),
    h: Optional[float] = typer.Option(None, "--h", help="Grid step"),
    extent: Optional[int] = typer.Option(None, "--extent", help="Grid points per axis"),
    eps: Optional[str] = typer.Option(None, "--eps", help="Comma-separated mollification radii"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Difference tolerance"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for the symmetry probe"),
    fmt: str = FormatOpt,
    out: Optional[Path] = OutOpt,
    config: Optional[Path] = ConfigOpt,
    quiet: bool = QuietOpt,
    timings: bool = TimingsOpt,
):
    """Check the forward-difference necessary condition on mollified f."""
    fmt = _check_format(fmt)
    with _exit_on_error():
        cfg = build_run_config(
            "certify",
            config,
            function=read_json(function),
            input_path=str(function),
            m=m,
            max_order=max_order,
            h=h,
            extent=extent,
            epsilon_schedule=_floats(eps),
            tol=tol,
            seed=seed,
        )
        code = run_certify(cfg, fmt, out, verbose=not quiet, timings=timings)
    raise typer.Exit(code)


@app.command("falsify")
def falsify_cmd(
    function: Path = typer.Option(..., "--f", help="Function JSON"),
    m: Optional[int] = typer.Option(None, "--m", help="Expected arity"),
    families: Optional[str] = typer.Option(None, "--families", help="Comma-separated: gram,lemma4,thm6,commuting"),
    trials: Optional[int] = typer.Option(None, "--trials", help="Random trials"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Root seed"),
    psd_tol: Optional[float] = typer.Option(None, "--psd-tol", help="Relative PSD tolerance"),
    fmt: str = FormatOpt,
    out: Optional[Path] = OutOpt,
    config: Optional[Path] = ConfigOpt,
    quiet: bool = QuietOpt,
    timings: bool = TimingsOpt,
):
    """Search for block-PSD inputs that f maps to a non-PSD matrix."""
    fmt = _check_format(fmt)
    with _exit_on_error():
        cfg = build_run_config(
            "falsify",
            config,
            function=read_json(function),
            input_path=str(function),
            m=m,
            families=_names(families),
            trials=trials,
            seed=seed,
            psd_tol=psd_tol,
        )
        code = run_falsify(cfg, fmt, out, verbose=not quiet, timings=timings)
    raise typer.Exit(code)


@app.command("demo")
def demo_cmd(
    name: str = typer.Argument(..., help="lemma3 | thm6"),
    p: Optional[int] = typer.Option(None, "--p", help="Degree bound (lemma3)"),
    m: Optional[int] = typer.Option(None, "--m", help="Number of variables"),
    exact: bool = typer.Option(True, "--exact/--float", help="Exact rational or floating arithmetic"),
    fmt: str = FormatOpt,
    out: Optional[Path] = OutOpt,
    quiet: bool = QuietOpt,
    timings: bool = TimingsOpt,
):
    """Print the node family and rank (lemma3) or the determinant sweep (thm6)."""
    fmt = _check_format(fmt)
    with _exit_on_error():
        cfg = RunConfig(command="demo", demo=name, p=p, m=m, exact=exact)
        code = run_demo(cfg, fmt, out, verbose=not quiet, timings=timings)
    raise typer.Exit(code)


@app.command("construct")
def construct_cmd(
    p: int = typer.Option(..., "--p", help="Degree bound"),
    m: int = typer.Option(..., "--m", help="Number of variables"),
    exact: bool = typer.Option(True, "--exact/--float", help="Exact rational or floating arithmetic"),
    q: Optional[str] = typer.Option(None, "--q", help="Target index, e.g. 1,0"),
    fmt: str = typer.Option("json", "--format", help="Output format: rich | json | markdown"),
    out: Optional[Path] = OutOpt,
    quiet: bool = QuietOpt,
):
    """Build the Vandermonde family, check independence and solve for the functional."""
    fmt = _check_format(fmt)
    with _exit_on_error():
        cfg = RunConfig(command="construct", p=p, m=m, exact=exact, q=_ints(q))
        code = _run(cfg, fmt, out, verbose=not quiet)
    raise typer.Exit(code)


@app.command("eval")
def eval_cmd(
    function: Path = typer.Option(..., "--f", help="Function JSON"),
    input_path: Path = typer.Option(..., "--input", help="Matrix or block matrix JSON"),
    psd_tol: Optional[float] = typer.Option(None, "--psd-tol", help="Relative PSD tolerance"),
    fmt: str = FormatOpt,
    out: Optional[Path] = OutOpt,
):
    """Evaluate f(A) or [f(A_ab)]."""
    fmt = _check_format(fmt)
    with _exit_on_error():
        cfg = RunConfig(command="eval", function=read_json(function), input_path=str(input_path))
        cfg = cfg.with_overrides(psd_tol=psd_tol)
        code = _run(cfg, fmt, out)
    raise typer.Exit(code)


@app.command("gen")
def gen_cmd(
    family: str = typer.Option("gram", "--family", help="gram | lemma4 | thm6 | commuting | identity"),
    n: int = typer.Option(2, "--n", help="Grid size"),
    m: int = typer.Option(2, "--m", help="Block size"),
    rank: int = typer.Option(2, "--rank", help="Rank of the Gram factor"),
    seed: int = typer.Option(0, "--seed", help="Seed"),
    out: Optional[Path] = OutOpt,
):
    """Write a generated block matrix (or pair) as JSON."""
    with _exit_on_error():
        text = render_json(gen_flow(family, n, m, rank, seed))
    if out is not None:
        out.write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


@app.command("replay")
def replay_cmd(
    report: Path = typer.Argument(..., help="JSON report written with --out or --format json"),
    fmt: str = FormatOpt,
    out: Optional[Path] = OutOpt,
    quiet: bool = QuietOpt,
):
    """Re-run a report from its embedded config and seed."""
    fmt = _check_format(fmt)
    with _exit_on_error():
        result = replay(read_json(report), verbose=not quiet)
        _emit(result, fmt, out)
    raise typer.Exit(EXIT_CODES[Verdict(result["meta"]["verdict"])])


def main() -> None:
    """Console script entrypoint; usage errors exit 1, never 2."""
    try:
        code = app(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        code = 1
    except click.exceptions.Abort:
        code = 1
    sys.exit(code or 0)


if __name__ == "__main__":
    main()
