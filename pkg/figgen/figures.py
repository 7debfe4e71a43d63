#!/usr/bin/env python3
"""Render figures from sweep CSV outputs: distance-versus-coupling curves and
the h_sin/h_hyp branch plot.

Driven by a JSON config:

    python figures.py --config figures.json

    {
      "figures": [
        {"kind": "distance",
         "series": [{"csv": "runs/a2/sweep.csv", "label": "a2 = 1"},
                    {"csv": "runs/a4/sweep.csv", "label": "a4 = 1"}],
         "x_scale": "log", "y_scale": "log", "out": "fig_distance.png"},
        {"kind": "hcurves", "csv": "props/hcurves.csv", "out": "fig_h.png"}
      ]
    }

This tool only reads the CSV contracts written by the sweep tool; it never
recomputes any physics. Rendering is deterministic: fixed style, fixed dpi,
no timestamps, so re-running produces byte-identical images.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

SWEEP_COLUMNS = ["c", "trace_distance", "n_points", "q_min", "q_max", "converged",
                 "wall_time_s"]
HCURVE_COLUMNS = ["x", "h_sin", "h_hyp"]

STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 130,
    "savefig.dpi": 130,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.6,
    "lines.markersize": 4.5,
}

SCALES = ("linear", "log")


class FigureConfigError(ValueError):
    """Config or input-file contract violation."""


def _read_csv(path: Path, expected_columns: list) -> list:
    if not path.exists():
        raise FigureConfigError(f"input CSV does not exist: {path}")
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    if header != expected_columns:
        missing = [c for c in expected_columns if c not in header]
        extra = [c for c in header if c not in expected_columns]
        raise FigureConfigError(
            f"{path}: column mismatch; expected {expected_columns}, got {header}"
            f" (missing {missing}, unexpected {extra})"
        )
    rows = [line.split(",") for line in lines[1:] if line]
    if not rows:
        raise FigureConfigError(f"{path}: no data rows (header only)")
    return rows


def read_sweep_series(path) -> tuple:
    """(c, trace_distance) arrays from one sweep CSV, sorted by c."""
    rows = _read_csv(Path(path), SWEEP_COLUMNS)
    pairs = sorted((float(r[0]), float(r[1])) for r in rows)
    return [p[0] for p in pairs], [p[1] for p in pairs]


def read_hcurves(path) -> tuple:
    """(x, h_sin, h_hyp) arrays from an h-curve CSV, sorted by x."""
    rows = _read_csv(Path(path), HCURVE_COLUMNS)
    triples = sorted((float(r[0]), float(r[1]), float(r[2])) for r in rows)
    return (
        [t[0] for t in triples],
        [t[1] for t in triples],
        [t[2] for t in triples],
    )


def _check_keys(node: dict, allowed: set, context: str) -> None:
    unknown = set(node) - allowed
    if unknown:
        raise FigureConfigError(
            f"{context}: unknown key(s) {sorted(unknown)}; valid: {sorted(allowed)}"
        )


def _scale(node: dict, key: str, default: str) -> str:
    value = node.get(key, default)
    if value not in SCALES:
        raise FigureConfigError(f"{key}: must be one of {SCALES}, got {value!r}")
    return value


def render_distance_figure(spec: dict, base_dir: Path) -> Path:
    """One curve per series: x = coupling, y = trace distance."""
    _check_keys(spec, {"kind", "series", "x_scale", "y_scale", "out", "title"},
                "distance figure")
    series = spec.get("series", [])
    if not series:
        raise FigureConfigError("distance figure: at least one series is required")
    fig, ax = plt.subplots()
    for entry in series:
        _check_keys(entry, {"csv", "label"}, "series entry")
        if "csv" not in entry:
            raise FigureConfigError("series entry: missing 'csv'")
        xs, ys = read_sweep_series(base_dir / entry["csv"])
        ax.plot(xs, ys, marker="o", label=entry.get("label", Path(entry["csv"]).stem))
    ax.set_xscale(_scale(spec, "x_scale", "log"))
    ax.set_yscale(_scale(spec, "y_scale", "log"))
    ax.set_xlabel("coupling strength c")
    ax.set_ylabel("trace distance")
    if spec.get("title"):
        ax.set_title(spec["title"])
    ax.legend()
    out = base_dir / spec["out"]
    _save(fig, out)
    return out


def render_h_figure(spec: dict, base_dir: Path) -> Path:
    """Both h branches on one axis with a reference line at the sampled minimum."""
    _check_keys(spec, {"kind", "csv", "out", "x_scale", "y_max", "title"}, "hcurves figure")
    if "csv" not in spec:
        raise FigureConfigError("hcurves figure: missing 'csv'")
    xs, h_sin_vals, h_hyp_vals = read_hcurves(base_dir / spec["csv"])
    floor = min(h_sin_vals)
    fig, ax = plt.subplots()
    ax.plot(xs, h_sin_vals, label="h_sin(x)")
    ax.plot(xs, h_hyp_vals, label="h_hyp(x)")
    ax.axhline(floor, color="0.3", linestyle="--", linewidth=1.0,
               label=f"sampled minimum {floor:.4f}")
    ax.set_xscale(_scale(spec, "x_scale", "linear"))
    ax.set_xlabel("x")
    ax.set_ylabel("h(x)")
    if spec.get("y_max") is not None:
        ax.set_ylim(0.0, float(spec["y_max"]))
    if spec.get("title"):
        ax.set_title(spec["title"])
    ax.legend()
    out = base_dir / spec["out"]
    _save(fig, out)
    return out


def _save(fig, out: Path) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    # strip the writer's software tag so the bytes depend on inputs only
    fig.savefig(out, format="png", metadata={"Software": None})
    plt.close(fig)


def render_all(config_path) -> list:
    config_path = Path(config_path)
    try:
        config = json.loads(config_path.read_text())
    except json.JSONDecodeError as exc:
        raise FigureConfigError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(config, dict):
        raise FigureConfigError("config root must be a JSON object")
    _check_keys(config, {"figures"}, "config")
    figures = config.get("figures")
    if not isinstance(figures, list) or not figures:
        raise FigureConfigError("config: 'figures' must be a non-empty list")
    base_dir = config_path.resolve().parent
    outputs = []
    plt.rcParams.update(STYLE)
    for spec in figures:
        kind = spec.get("kind")
        if kind == "distance":
            outputs.append(render_distance_figure(spec, base_dir))
        elif kind == "hcurves":
            outputs.append(render_h_figure(spec, base_dir))
        else:
            raise FigureConfigError(
                f"figure kind must be 'distance' or 'hcurves', got {kind!r}"
            )
    return outputs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--config", required=True, help="path to figures.json")
    args = parser.parse_args(argv)
    try:
        outputs = render_all(args.config)
    except FigureConfigError as exc:
        print(f"figure config error: {exc}", file=sys.stderr)
        return 2
    for out in outputs:
        print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
