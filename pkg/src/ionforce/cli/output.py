"""CSV, JSON metadata and minimal SVG line plots."""

from __future__ import annotations

import csv
import json
import math
from html import escape
from pathlib import Path
from typing import Sequence

import numpy as np

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def fmt(value) -> str:
    """12 significant digits; integers and strings pass through."""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def write_csv(path: str | Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_signal_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"t_seconds", "p_up"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns t_seconds,p_up")
        rows = [(float(r["t_seconds"]), float(r["p_up"])) for r in reader]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows)
    return data[:, 0], data[:, 1]


def signal_rows(trace):
    tails = [trace.tails.get(k, np.full(len(trace), np.nan)) for k in sorted(trace.tails)]
    for i in range(len(trace)):
        yield [trace.times[i], trace.p_up[i]] + [tl[i] for tl in tails]


def signal_header(n_modes: int) -> list[str]:
    return ["t_seconds", "p_up"] + ["tail_x", "tail_y"][:n_modes]


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def write_metadata(path: str | Path, data: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_svg(
    path: str | Path,
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    markers: Sequence[bool] | None = None,
    width: int = 640,
    height: int = 420,
) -> None:
    """Polyline plot on linear axes; ``markers[i]`` draws series i as dots."""
    left, right, top, bottom = 70, 20, 40, 50
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    finite = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = (xs[finite].min(), xs[finite].max()) if finite.any() else (0.0, 1.0)
    y0, y1 = (ys[finite].min(), ys[finite].max()) if finite.any() else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="15" y="{top + ph / 2}" text-anchor="middle" transform="rotate(-90 15 {top + ph / 2})">{escape(ylabel)}</text>',
    ]
    for frac in np.linspace(0, 1, 5):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        out.append(f'<text x="{px(xv):.1f}" y="{top + ph + 16}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{left - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    for i, (label, x, y) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = [(px(a), py(b)) for a, b in zip(x, y) if math.isfinite(a) and math.isfinite(b)]
        if markers is not None and markers[i]:
            out += [f'<circle cx="{a:.1f}" cy="{b:.1f}" r="2" fill="{color}"/>' for a, b in pts]
        elif pts:
            coords = " ".join(f"{a:.1f},{b:.1f}" for a, b in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{left + 10}" y="{top + 16 + 14 * i}" fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
