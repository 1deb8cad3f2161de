"""CSV, JSON and SVG output."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .. import __version__
from .config import ExperimentConfig, config_dict, config_text

INFLUENCE_COLUMNS = ["T", "eps", "N", "replica", "m_hat", "stderr", "sweeps", "seconds"]
DECAY_COLUMNS = ["L", "count", "prob", "prob_stderr"]
GOODBOX_COLUMNS = ["T", "q", "bc", "p_good", "stderr", "samples"]
SVG_TAGS = {"svg", "g", "rect", "line", "polyline", "circle", "text"}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as f:
        return list(csv.DictReader(f))


def influence_rows(records):
    return [(r.T, r.eps, r.N, r.replica, r.m_hat, r.stderr, r.sweeps, r.seconds)
            for r in records]


def parse_influence(rows) -> list[tuple]:
    out = []
    for r in rows:
        out.append((float(r["T"]), float(r["eps"]), int(r["N"]), int(r["replica"]),
                    float(r["m_hat"]), float(r["stderr"]), int(r["sweeps"]),
                    float(r["seconds"]) if r["seconds"] else None))
    return out


def decay_rows(record):
    return [(int(L), int(c), float(p), float(e)) for L, c, p, e in
            zip(record.L_values, record.counts, record.probs, record.prob_stderr)]


def goodbox_rows(estimates):
    return [(e.T, e.q, e.bc, e.p_good, e.stderr, e.samples) for e in estimates]


def run_metadata(command: str, cfg: ExperimentConfig) -> dict:
    digest = hashlib.sha1((command + "\n" + config_text(cfg)).encode()).hexdigest()
    return {"command": command, "run_id": digest[:12], "package_version": __version__,
            "python": platform.python_version(), "numpy": np.__version__}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_json(path, command: str, cfg: ExperimentConfig, records, residuals=None,
               summary=None) -> Path:
    doc = {"meta": run_metadata(command, cfg), "config": config_dict(cfg),
           "records": records, "residuals": residuals or [], "summary": summary or {}}
    path = Path(path)
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return path


# --------------------------------------------------------------------------
# SVG


def svg_line_plot(series: dict, title: str, xlabel: str, ylabel: str,
                  width: int = 480, height: int = 320) -> str:
    """Line plot of ``{label: (xs, ys)}`` using only ``SVG_TAGS``."""
    pad = 48
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys)
           if math.isfinite(x) and math.isfinite(y)]
    if not pts:
        pts = [(0.0, 0.0)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<text x="{width / 2:.1f}" y="20" text-anchor="middle">{escape(title)}</text>',
           f'<text x="{width / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>',
           f'<text x="12" y="{height / 2:.1f}" transform="rotate(-90 12 {height / 2:.1f})" '
           f'text-anchor="middle">{escape(ylabel)}</text>',
           f'<text x="{pad}" y="{height - pad + 16}" text-anchor="middle">{x0:.3g}</text>',
           f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="middle">{x1:.3g}</text>',
           f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end">{y0:.3g}</text>',
           f'<text x="{pad - 4}" y="{pad}" text-anchor="end">{y1:.3g}</text>']
    for i, (label, (xs, ys)) in enumerate(series.items()):
        c = colours[i % len(colours)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys)
                          if math.isfinite(x) and math.isfinite(y))
        out.append(f'<g stroke="{c}" fill="{c}">')
        out.append(f'<polyline points="{coords}" fill="none"/>')
        for pair in coords.split():
            cx, cy = pair.split(",")
            out.append(f'<circle cx="{cx}" cy="{cy}" r="2.5"/>')
        out.append(f'<text x="{width - pad + 4}" y="{pad + 14 * i}" stroke="none">{escape(str(label))}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def influence_svg(records) -> str:
    series = {}
    for T in sorted({r.T for r in records}):
        for N in sorted({r.N for r in records}):
            eps = sorted({r.eps for r in records if r.T == T and r.N == N})
            m = [float(np.mean([r.m_hat for r in records if (r.T, r.N, r.eps) == (T, N, e)]))
                 for e in eps]
            if eps:
                series[f"T={T:g} N={N}"] = (eps, m)
    return svg_line_plot(series, "boundary influence", "eps", "m")


def decay_svg(record) -> str:
    surv = np.cumsum(record.counts[::-1])[::-1] / record.samples
    return svg_line_plot({"P(L >= l)": (record.L_values.astype(float).tolist(),
                                        np.log(surv).tolist())},
                         "coarse-grained boundary size", "l", "log P(L >= l)")


def write_svg(path, text: str) -> Path:
    path = Path(path)
    path.write_text(text)
    return path
