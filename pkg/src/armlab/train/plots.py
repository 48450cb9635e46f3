"""CSV/SVG emission for evaluation curves. The SVG is hand-rolled so byte
output is deterministic."""

from __future__ import annotations

from pathlib import Path

from armlab.train.evaluate import EvalReport

_COLORS = ("#1f6fb2", "#c23b22", "#3a9e4f", "#8c5aa8", "#c78f2d", "#4d4d4d")


def _svg_plot(series: dict[str, list[tuple[float, float]]], title: str,
              width: int = 640, height: int = 400) -> str:
    ml, mr, mt, mb = 60, 16, 28, 40
    pw, ph = width - ml - mr, height - mt - mb
    xs = [x for pts in series.values() for x, _ in pts]
    x_max = max(xs) if xs else 1.0
    x_min = min(0.0, min(xs) if xs else 0.0)
    span = (x_max - x_min) or 1.0

    def sx(x):
        return ml + (x - x_min) / span * pw

    def sy(y):
        return mt + (1.0 - y) * ph  # y axis fixed to [0, 1]

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{ml}" y="18" font-family="sans-serif" font-size="13">{title}</text>']
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(frac)
        out.append(f'<line x1="{ml}" y1="{y:.1f}" x2="{width - mr}" y2="{y:.1f}" '
                   f'stroke="#dddddd"/>')
        out.append(f'<text x="{ml - 8}" y="{y + 4:.1f}" font-family="sans-serif" '
                   f'font-size="11" text-anchor="end">{frac:g}</text>')
    out.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="#333"/>')
    out.append(f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" '
               f'stroke="#333"/>')
    for i, (label, pts) in enumerate(series.items()):
        if not pts:
            continue
        color = _COLORS[i % len(_COLORS)]
        path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in pts:
            out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="2.5" fill="{color}"/>')
        out.append(f'<text x="{width - mr - 4}" y="{mt + 16 + 14 * i}" font-family="sans-serif" '
                   f'font-size="11" text-anchor="end" fill="{color}">{label}</text>')
    out.append(f'<text x="{(ml + width - mr) / 2:.0f}" y="{height - 10}" '
               f'font-family="sans-serif" font-size="11" text-anchor="middle">training step</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_curves(report: EvalReport, out_prefix: str | Path) -> tuple[Path, Path]:
    """Write <prefix>.csv and <prefix>.svg; one line per eval seed."""
    prefix = Path(out_prefix)
    csv_path = prefix.with_suffix(".csv")
    svg_path = prefix.with_suffix(".svg")
    csv_path.write_text(report.to_csv())
    series = {}
    for j, seed in enumerate(report.seeds):
        series[f"seed {seed}"] = [(s, row[j]) for s, row in zip(report.steps, report.rates)]
    svg_path.write_text(_svg_plot(
        series, f"{report.task_id}: success over training "
                f"({report.rollouts} rollouts, {report.inference_steps} steps)"))
    return csv_path, svg_path


def emit_ablation_curves(series: dict[str, list[tuple[float, float]]], title: str,
                         path: str | Path) -> Path:
    p = Path(path)
    p.write_text(_svg_plot(series, title))
    return p
