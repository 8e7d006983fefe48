"""Rich formatter for interactive CLI output."""

from __future__ import annotations

from typing import Any

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

console = Console()

_STYLE = {"certified": "green", "falsified": "red", "inconclusive": "yellow"}


def render(result: dict[str, Any]) -> None:
    """Render a result as a header panel plus report, witness and sweep tables."""
    meta = result.get("meta", {})
    verdict = str(meta.get("verdict"))
    style = _STYLE.get(verdict, "white")
    console.print(
        Panel.fit(
            "\n".join(
                [
                    f"[bold]{meta.get('command')}[/bold]",
                    f"verdict=[{style}]{verdict}[/{style}]",
                    f"seed={meta.get('seed')}",
                ]
            ),
            title="spec-preserve",
        )
    )

    reports = result.get("reports") or []
    if reports:
        table = Table(title="Checks")
        table.add_column("Check")
        table.add_column("Verdict")
        table.add_column("Message")
        for r in reports:
            v = r.get("verdict", "")
            table.add_row(r.get("check", ""), f"[{_STYLE.get(v, 'white')}]{v}[/]", r.get("message", ""))
        console.print(table)

    for r in reports:
        witness = r.get("witness") or {}
        if not witness:
            continue
        wt = Table(title=f"Witness ({r.get('check')})")
        wt.add_column("Field")
        wt.add_column("Value")
        for key in sorted(witness):
            if key != "blocks":
                wt.add_row(key, str(witness[key]))
        console.print(wt)
        break

    summary = result.get("summary") or {}
    sweep = summary.get("rows")
    if sweep:
        st = Table(title=f"det[f(A B)] sweep (m={summary.get('m')})")
        st.add_column("eps", justify="right")
        st.add_column("det (sum)", justify="right")
        st.add_column("det (product)", justify="right")
        for row in sweep:
            st.add_row(f"{row['epsilon']:g}", f"{row['det_sum']:.6g}", f"{row['det_product']:.6g}")
        console.print(st)

    vectors = summary.get("moment_vectors")
    if vectors:
        fam = summary.get("family", {})
        vt = Table(title=f"Moment vectors: n={fam.get('n')}, rank {summary.get('rank')}")
        vt.add_column("Index")
        vt.add_column("e(index)", justify="right")
        vt.add_column("Entries")
        for v in vectors:
            vt.add_row(str(v["index"]), str(v["exponent"]), ", ".join(map(str, v["entries"])))
        console.print(vt)

    functional = summary.get("functional")
    if functional:
        console.print(f"[bold]z[/bold] for q={functional['q']}: {functional['z']}")
        console.print(f"max residual: {functional['max_residual']:.3e}")

    for note in summary.get("notes") or []:
        console.print(f"[yellow]{note}[/yellow]")

    if "value" in summary:
        console.print(f"[bold]f(A)[/bold] = {summary['value']!r}")
