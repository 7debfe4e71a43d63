"""Command-line entry points.

Subcommands: ``compute`` (single reduced state), ``usc`` (single closed-form
state), ``sweep`` (distance-vs-coupling data), ``converge`` (grid refinement
report), ``props`` (bound-bench report). Exit codes: 0 success, 2 config
error, 3 numerical-precondition failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .engine import compute_mfgs_for, converge_mfgs, grid_schedule
from .operators import PreconditionError
from .sweep import (
    ConfigError,
    model_spec_for,
    parse_config,
    parse_props_config,
    run_props,
    run_sweep,
    write_hcurves_csv,
    write_report_json,
    write_sweep_csv,
)
from .usc import DiagonalState, usc_state_for
from . import __version__

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3


def _out_dir(config_out, override) -> Path:
    out = Path(override) if override else Path(config_out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _state_payload(state: np.ndarray) -> dict:
    return {
        "re": [[float(v) for v in row] for row in state.real],
        "im": [[float(v) for v in row] for row in np.asarray(state, dtype=complex).imag],
    }


def _single_coupling(config):
    if len(config.coupling_values) != 1:
        raise ConfigError(
            "this subcommand needs exactly one coupling value, got "
            f"{len(config.coupling_values)}"
        )
    return config.coupling_values[0]


def _cmd_compute(args) -> int:
    config = parse_config(args.config)
    coupling = _single_coupling(config)
    spec = model_spec_for(config, coupling)
    state = compute_mfgs_for(spec)
    report = {
        "version": __version__,
        "config": config.raw,
        "c": coupling,
        "grid": {"q_min": spec.env.q_min, "q_max": spec.env.q_max,
                 "n_points": spec.env.n_points, "mass": spec.env.mass},
        "state": _state_payload(state),
    }
    write_report_json(report, _out_dir(config.out, args.out) / "report.json")
    print(f"reduced state written for c={coupling:g} (dim {state.shape[0]})")
    return EXIT_OK


def _cmd_usc(args) -> int:
    config = parse_config(args.config)
    coupling = _single_coupling(config)
    spec = model_spec_for(config, coupling)
    usc = usc_state_for(spec)
    if isinstance(usc, DiagonalState):
        body = {
            "kind": "diagonal",
            "positions": [float(q) for q in usc.grid.points],
            "weights": [float(w) for w in usc.weights],
            "effective_mass": usc.grid.mass,
        }
    else:
        body = {
            "kind": "clustered",
            "family": usc.family,
            "cluster_values": [float(v) for v in usc.clusters.values],
            "state": _state_payload(usc.state),
            "h_eff": _state_payload(usc.h_eff),
        }
        if usc.v0 is not None:
            body["v0"] = [float(v) for v in usc.v0]
    report = {"version": __version__, "config": config.raw, "c": coupling, "usc": body}
    write_report_json(report, _out_dir(config.out, args.out) / "report.json")
    print(f"closed-form state written for c={coupling:g}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = parse_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    rows, report = run_sweep(config, workers=args.workers)
    out = _out_dir(config.out, args.out)
    write_sweep_csv(rows, out / "sweep.csv")
    write_report_json(report, out / "report.json")
    print(f"{len(rows)} rows -> {out / 'sweep.csv'}"
          + (f" ({len(report['errors'])} errored)" if report["errors"] else ""))
    return EXIT_OK


def _cmd_converge(args) -> int:
    config = parse_config(args.config)
    coupling = _single_coupling(config)
    spec = model_spec_for(config, coupling)
    grid = config.grid
    schedule = grid_schedule(
        spec.env, n_stages=grid.max_stages, widen=grid.widen, n_cap=grid.n_cap
    )
    observable = grid.observable
    _, rep = converge_mfgs(spec, schedule=schedule, tol=grid.tol, observable=observable)
    report = {
        "version": __version__,
        "config": config.raw,
        "c": coupling,
        "observable": rep.observable,
        "tol": rep.tol,
        "converged": rep.converged,
        "stages": [
            {"grid": {"q_min": s.grid.q_min, "q_max": s.grid.q_max,
                      "n_points": s.grid.n_points, "mass": s.grid.mass},
             "value": s.value, "delta": s.delta}
            for s in rep.stages
        ],
    }
    write_report_json(report, _out_dir(config.out, args.out) / "report.json")
    status = "converged" if rep.converged else "NOT converged"
    print(f"{status} after {len(rep.stages)} stage(s), final N={rep.final_grid.n_points}")
    return EXIT_OK


def _cmd_props(args) -> int:
    config = parse_props_config(args.config) if args.config else parse_props_config({})
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    report = run_props(config)
    out = _out_dir(config.out, args.out)
    write_report_json(report, out / "report.json")
    write_hcurves_csv(out / "hcurves.csv")
    print(
        f"mu={report['mu']:.6f}; "
        f"prop1 violations {report['prop1']['violations']}/{report['prop1']['in_regime']}; "
        f"prop2 violations {report['prop2']['violations']}/{report['prop2']['in_regime']}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meanforce",
        description="Exact and closed-form strong-coupling equilibrium states.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "compute": (_cmd_compute, "exact reduced state at one coupling", True),
        "usc": (_cmd_usc, "closed-form strong-coupling state", True),
        "sweep": (_cmd_sweep, "trace distance over a coupling sweep", True),
        "converge": (_cmd_converge, "grid-refinement convergence report", True),
        "props": (_cmd_props, "inequality bench report and h-curve samples", False),
    }
    for name, (fn, help_text, config_required) in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=config_required, help="path to a JSON config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--workers", type=int, default=1, help="parallel row workers")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"numerical precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
