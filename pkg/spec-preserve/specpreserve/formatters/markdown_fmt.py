"""Markdown formatter for run transcripts."""

from __future__ import annotations

from typing import Any


def _md_table(rows: list[list[str]]) -> str:
    header = "| " + " | ".join(rows[0]) + " |"
    sep = "|" + "|".join(["---"] * len(rows[0])) + "|"
    body = "\n".join(["| " + " | ".join(r) + " |" for r in rows[1:]])
    return "\n".join([header, sep, body])


def _num(value: Any) -> str:
    return f"{value:.6g}" if isinstance(value, float) else str(value)


def render(result: dict[str, Any]) -> str:
    """
    Render a result as Markdown.

    Sections: header (command, verdict, seed), one row per check report,
    the first witness, and command-specific tables (epsilon sweeps, moment
    vectors, functional weights).
    """
    meta = result.get("meta", {})
    lines: list[str] = []
    lines.append(f"## spec-preserve: `{meta.get('command')}`")
    lines.append(f"**Verdict:** `{meta.get('verdict')}`  |  **Seed:** `{meta.get('seed')}`")
    lines.append("")

    reports = result.get("reports") or []
    if reports:
        rows = [["Check", "Verdict", "Message"]]
        rows += [[r.get("check", ""), r.get("verdict", ""), r.get("message", "")] for r in reports]
        lines.append(_md_table(rows))
        lines.append("")

    for r in reports:
        witness = r.get("witness") or {}
        if witness:
            lines.append(f"### Witness ({r.get('check')})")
            for key in sorted(witness):
                if key in {"blocks", "matrix"}:
                    continue
                lines.append(f"- {key}: `{witness[key]}`")
            lines.append("")
            break

    summary = result.get("summary") or {}
    sweep = summary.get("rows")
    if sweep:
        lines.append("### Determinant sweep")
        rows = [["eps", "det (sum)", "det (product)"]]
        rows += [[_num(r["epsilon"]), _num(r["det_sum"]), _num(r["det_product"])] for r in sweep]
        lines.append(_md_table(rows))
        lines.append("")

    vectors = summary.get("moment_vectors")
    if vectors:
        lines.append(f"### Moment vectors (rank {summary.get('rank')})")
        rows = [["Index", "e(index)", "Entries"]]
        rows += [[str(v["index"]), str(v["exponent"]), ", ".join(map(str, v["entries"]))] for v in vectors]
        lines.append(_md_table(rows))
        lines.append("")

    functional = summary.get("functional")
    if functional:
        lines.append(f"### Functional for q = {functional['q']}")
        lines.append(f"- z: `{', '.join(_num(v) for v in functional['z'])}`")
        lines.append(f"- max residual: `{_num(functional['max_residual'])}`")
        lines.append("")

    for note in summary.get("notes") or []:
        lines.append(f"> {note}")

    if "value" in summary:
        lines.append(f"**f(A):** `{summary['value']!r}`")

    return "\n".join(lines).strip()
