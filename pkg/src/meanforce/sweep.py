"""Experiment orchestration: JSON configs, coupling sweeps, convergence runs,
bound-bench reports and the CSV/JSON writers shared with the plotting layer.

File contracts
--------------
sweep.csv    header ``c,trace_distance,n_points,q_min,q_max,converged,wall_time_s``,
             one row per coupling value, floats at 17 significant digits
report.json  full parsed config echo, tool version, effective-Hamiltonian data,
             per-row records and an error ledger
hcurves.csv  header ``x,h_sin,h_hyp`` sampled at x = 0.1 .. 20.0 step 0.1
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import __version__
from .bench import (
    KIND_HYP,
    KIND_SIN,
    check_prop1,
    check_prop2,
    h_hyp,
    h_sin,
    minimize_h,
    soft_sine_map,
)
from .engine import (
    OBSERVABLE_STATE,
    OBSERVABLE_USC_DISTANCE,
    compute_mfgs_for,
    converge_mfgs,
    grid_schedule,
)
from .models import (
    FAMILIES,
    FAMILY_GCL,
    FAMILY_ZWANZIG_CV,
    CvSystem,
    EnvGrid,
    ModelSpec,
    MorsePotential,
    PolynomialPotential,
    SystemModel,
    ZeroPotential,
    ZwanzigEnvSpec,
    default_env_grid,
    default_qutrit_system,
)
from .operators import PreconditionError, trace_distance
from .usc import DiagonalState, usc_state_for

DEFAULT_BETA = 5.0
SWEEP_CSV_HEADER = "c,trace_distance,n_points,q_min,q_max,converged,wall_time_s"
HCURVES_CSV_HEADER = "x,h_sin,h_hyp"

GRID_POLICY_AUTO = "auto"
GRID_POLICY_FIXED = "fixed"
GRID_POLICY_CONVERGE = "converge"
GRID_POLICIES = (GRID_POLICY_AUTO, GRID_POLICY_FIXED, GRID_POLICY_CONVERGE)

PAPER_DEFAULT_TOKENS = ("paper-default", "qutrit-default")

# Canonical 20-point log-spaced coupling grids, fixed by oracle pre-runs so the
# final distance drops below 10% (shift families) / 25% (spring family) of the
# initial one. The spring family needs far larger couplings: its approach to
# the pinned limit is much slower than the shift-coupled families'.
DEFAULT_COUPLING_RANGES = {
    "CL": (0.5, 14.5),
    "GCL": (0.5, 11.0),
    "GCL2": (0.5, 14.5),
    "ZWANZIG": (3.0, 1500.0),
    "ZWANZIG_CV": (2.0, 200.0),
}
DEFAULT_COUPLING_COUNT = 20


def default_coupling_values(family: str, count: int = DEFAULT_COUPLING_COUNT) -> tuple:
    lo, hi = DEFAULT_COUPLING_RANGES[family]
    return tuple(float(c) for c in np.geomspace(lo, hi, count))


class ConfigError(ValueError):
    """A config file failed to parse or validate."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _reject_unknown(mapping: dict, allowed: set, context: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(
            f"{context}: unknown key(s) {sorted(unknown)}; valid keys: {sorted(allowed)}"
        )


@dataclass(frozen=True)
class GridPolicy:
    policy: str = GRID_POLICY_AUTO
    n_points: int = 64
    q_min: Optional[float] = None
    q_max: Optional[float] = None
    mass: float = 1.0
    tol: float = 1e-4
    max_stages: int = 5
    n_cap: int = 1024
    widen: float = 0.25
    observable: str = OBSERVABLE_USC_DISTANCE


@dataclass(frozen=True)
class SweepConfig:
    family: str
    system: Union[SystemModel, CvSystem]
    beta: float
    potential: Union[PolynomialPotential, ZwanzigEnvSpec]
    coupling_values: tuple
    grid: GridPolicy
    env_grid: Optional[EnvGrid]  # explicit environment grid when policy is fixed
    out: Optional[str]
    seed: int
    workers: int
    cluster_tol: float
    raw: dict = field(repr=False, default_factory=dict)


def _parse_scalar_potential(node, context: str):
    if isinstance(node, str):
        if node == "morse":
            return MorsePotential()
        if node == "zero":
            return ZeroPotential()
        raise ConfigError(f"{context}: unknown potential tag {node!r}; valid: morse, zero")
    if isinstance(node, dict):
        _reject_unknown(node, {"a2", "a4", "a6"}, context)
        try:
            return PolynomialPotential(**{k: float(v) for k, v in node.items()})
        except PreconditionError as exc:
            raise ConfigError(f"{context}: {exc}") from exc
    raise ConfigError(f"{context}: expected a tag or coefficient mapping")


def _parse_potential(node, family: str):
    if family in (FAMILY_ZWANZIG_CV, "ZWANZIG"):
        if not isinstance(node, dict):
            raise ConfigError("potential: spring families need a mapping")
        _reject_unknown(node, {"u_free", "spring_min"}, "potential")
        u_free = _parse_scalar_potential(node.get("u_free", "morse"), "potential.u_free")
        return ZwanzigEnvSpec(u_free=u_free, spring_min=float(node.get("spring_min", 0.0)))
    return _parse_scalar_potential(node, "potential")


def _parse_system(node, family: str):
    if isinstance(node, str):
        if node in PAPER_DEFAULT_TOKENS:
            if family == FAMILY_ZWANZIG_CV:
                raise ConfigError("system: the default qutrit is not a grid system")
            return default_qutrit_system()
        raise ConfigError(
            f"system: unknown tag {node!r}; valid tags: {', '.join(PAPER_DEFAULT_TOKENS)}"
        )
    if not isinstance(node, dict):
        raise ConfigError("system: expected a tag or a mapping")
    if family == FAMILY_ZWANZIG_CV:
        _reject_unknown(node, {"q_min", "q_max", "n_points", "mass", "potential"}, "system")
        for key in ("q_min", "q_max", "n_points", "potential"):
            if key not in node:
                raise ConfigError(f"system: grid systems require key {key!r}")
        try:
            grid = EnvGrid(
                float(node["q_min"]),
                float(node["q_max"]),
                int(node["n_points"]),
                float(node.get("mass", 1.0)),
            )
        except PreconditionError as exc:
            raise ConfigError(f"system: {exc}") from exc
        return CvSystem(grid=grid, potential=_parse_scalar_potential(node["potential"],
                                                                     "system.potential"))
    _reject_unknown(node, {"h_sys", "coupling_op"}, "system")
    for key in ("h_sys", "coupling_op"):
        if key not in node:
            raise ConfigError(f"system: explicit systems require key {key!r}")
    try:
        return SystemModel(
            h_sys=np.array(node["h_sys"], dtype=complex),
            coupling_op=np.array(node["coupling_op"], dtype=complex),
        )
    except (PreconditionError, ValueError) as exc:
        raise ConfigError(f"system: {exc}") from exc


def _parse_coupling_values(node, family: str) -> tuple:
    if node == "default":
        return default_coupling_values(family)
    if isinstance(node, dict):
        _reject_unknown(node, {"log_start", "log_stop", "count"}, "coupling_values")
        for key in ("log_start", "log_stop", "count"):
            if key not in node:
                raise ConfigError(f"coupling_values: log range requires key {key!r}")
        start, stop = float(node["log_start"]), float(node["log_stop"])
        count = int(node["count"])
        if not (0 < start < stop) or count < 2:
            raise ConfigError("coupling_values: need 0 < log_start < log_stop and count >= 2")
        values = tuple(float(c) for c in np.geomspace(start, stop, count))
    elif isinstance(node, list):
        values = tuple(float(c) for c in node)
    else:
        raise ConfigError(
            "coupling_values: expected a list, a log-range mapping, or \"default\""
        )
    if not values:
        raise ConfigError("coupling_values: empty")
    if any(c < 0 for c in values):
        raise ConfigError(f"coupling_values: all values must be >= 0, got {values}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"coupling_values: values must be strictly increasing, got {values}")
    return values


def _parse_grid(node) -> GridPolicy:
    if node is None:
        return GridPolicy()
    if not isinstance(node, dict):
        raise ConfigError("grid: expected a mapping")
    _reject_unknown(
        node,
        {"policy", "n_points", "q_min", "q_max", "mass", "tol", "max_stages", "n_cap",
         "widen", "observable"},
        "grid",
    )
    policy = node.get("policy", GRID_POLICY_AUTO)
    if policy not in GRID_POLICIES:
        raise ConfigError(f"grid.policy: unknown policy {policy!r}; valid: {GRID_POLICIES}")
    observable = node.get("observable", OBSERVABLE_USC_DISTANCE)
    if observable not in (OBSERVABLE_USC_DISTANCE, OBSERVABLE_STATE):
        raise ConfigError(f"grid.observable: unknown observable {observable!r}")
    gp = GridPolicy(
        policy=policy,
        n_points=int(node.get("n_points", 64 if policy == GRID_POLICY_CONVERGE else 512)),
        q_min=None if node.get("q_min") is None else float(node["q_min"]),
        q_max=None if node.get("q_max") is None else float(node["q_max"]),
        mass=float(node.get("mass", 1.0)),
        tol=float(node.get("tol", 1e-4)),
        max_stages=int(node.get("max_stages", 5)),
        n_cap=int(node.get("n_cap", 1024)),
        widen=float(node.get("widen", 0.25)),
        observable=observable,
    )
    if policy == GRID_POLICY_FIXED and (gp.q_min is None or gp.q_max is None):
        raise ConfigError("grid: fixed policy requires q_min and q_max")
    return gp


def parse_config(source) -> SweepConfig:
    """Parse and strictly validate a sweep/model config.

    ``source`` may be a path to a JSON document or an already-loaded mapping.
    Unknown keys anywhere are rejected; defaults are filled and echoed back via
    the report sidecar.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    else:
        raw = source
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(
        raw,
        {"family", "system", "beta", "potential", "coupling_values", "grid", "out",
         "seed", "workers", "cluster_tol"},
        "config",
    )
    family = raw.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"family: unknown family {family!r}; valid: {FAMILIES}")
    if "potential" not in raw:
        raise ConfigError("config: missing required key 'potential'")
    if "coupling_values" not in raw:
        raise ConfigError("config: missing required key 'coupling_values'")
    system = _parse_system(raw.get("system", "paper-default"), family)
    potential = _parse_potential(raw["potential"], family)
    grid = _parse_grid(raw.get("grid"))
    env_grid = None
    if grid.policy == GRID_POLICY_FIXED:
        try:
            env_grid = EnvGrid(grid.q_min, grid.q_max, grid.n_points, grid.mass)
        except PreconditionError as exc:
            raise ConfigError(f"grid: {exc}") from exc
    elif family == FAMILY_ZWANZIG_CV:
        raise ConfigError("grid: the grid-system family requires the fixed grid policy")
    beta = float(raw.get("beta", DEFAULT_BETA))
    if not beta > 0:
        raise ConfigError(f"beta: must be positive, got {beta}")
    config = SweepConfig(
        family=family,
        system=system,
        beta=beta,
        potential=potential,
        coupling_values=_parse_coupling_values(raw["coupling_values"], family),
        grid=grid,
        env_grid=env_grid,
        out=raw.get("out"),
        seed=int(raw.get("seed", 0)),
        workers=int(raw.get("workers", 1)),
        cluster_tol=float(raw.get("cluster_tol", 1e-8)),
        raw=raw,
    )
    try:
        model_spec_for(config, config.coupling_values[0])
    except PreconditionError as exc:
        raise ConfigError(str(exc)) from exc
    return config


def model_spec_for(config: SweepConfig, coupling: float, n_points: Optional[int] = None) -> ModelSpec:
    """Instantiate the model at one coupling value under the config's grid policy."""
    if config.env_grid is not None:
        env = config.env_grid
        if n_points is not None and n_points != env.n_points:
            env = EnvGrid(env.q_min, env.q_max, n_points, env.mass)
    elif config.family == FAMILY_ZWANZIG_CV:
        raise PreconditionError("grid-system models need an explicit environment grid")
    else:
        env = default_env_grid(
            config.family,
            config.system,
            coupling,
            n_points=n_points if n_points is not None else config.grid.n_points,
            mass=config.grid.mass,
        )
    return ModelSpec(
        family=config.family,
        system=config.system,
        env=env,
        potential=config.potential,
        coupling=coupling,
        beta=config.beta,
        cluster_tol=config.cluster_tol,
    )


@dataclass(frozen=True)
class SweepRow:
    c: float
    trace_distance: float
    n_points: int
    q_min: float
    q_max: float
    converged: bool
    wall_time_s: float


def _usc_sidecar(state) -> dict:
    if isinstance(state, DiagonalState):
        return {
            "kind": "diagonal",
            "effective_mass": state.grid.mass,
            "weights": [float(w) for w in state.weights],
        }
    fam = state.clusters
    diag = []
    for p in fam.projectors:
        diag.append(float(np.real(np.trace(p @ state.h_eff)) / np.real(np.trace(p))))
    out = {
        "kind": "clustered",
        "cluster_values": [float(v) for v in fam.values],
        "h_eff_diagonal": diag,
    }
    if state.v0 is not None:
        out["v0"] = [float(v) for v in state.v0]
    return out


def _offblock_trace_norm(state: np.ndarray, usc) -> float:
    """Trace norm of the part of the state living off the coupling blocks."""
    if isinstance(usc, DiagonalState):
        block = np.diag(np.diag(state))
    else:
        block = sum(p @ state @ p for p in usc.clusters.projectors)
    return 2.0 * trace_distance(state, block)


def _sweep_point(config: SweepConfig, coupling: float) -> tuple:
    """One sweep row: build, (optionally) converge, reduce and compare."""
    t0 = time.perf_counter()
    spec = model_spec_for(config, coupling)
    usc = usc_state_for(spec)
    usc_matrix = usc.matrix if isinstance(usc, DiagonalState) else usc.state
    if config.grid.policy == GRID_POLICY_CONVERGE:
        schedule = grid_schedule(
            spec.env,
            n_stages=config.grid.max_stages,
            widen=config.grid.widen,
            n_cap=config.grid.n_cap,
        )
        state, report = converge_mfgs(
            spec, schedule=schedule, tol=config.grid.tol, observable=config.grid.observable
        )
        grid = report.final_grid
        converged = report.converged
    else:
        state = compute_mfgs_for(spec)
        grid = spec.env
        converged = True
    distance = trace_distance(state, usc_matrix)
    row = SweepRow(
        c=coupling,
        trace_distance=distance,
        n_points=grid.n_points,
        q_min=grid.q_min,
        q_max=grid.q_max,
        converged=converged,
        wall_time_s=time.perf_counter() - t0,
    )
    return row, state, usc


def run_sweep(config: SweepConfig, workers: Optional[int] = None) -> tuple:
    """Evaluate every coupling value and assemble rows plus the report sidecar.

    Rows are computed independently (optionally by a thread pool; the
    eigensolvers release the GIL) and reported in coupling order. A failed
    precondition becomes an error-ledger entry, not a process abort.
    """
    workers = config.workers if workers is None else workers
    results: dict = {}
    errors: dict = {}

    def job(c: float):
        try:
            results[c] = _sweep_point(config, c)
        except PreconditionError as exc:
            errors[c] = str(exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(job, config.coupling_values))
    else:
        for c in config.coupling_values:
            job(c)

    rows = [results[c][0] for c in config.coupling_values if c in results]
    row_records = []
    for c in config.coupling_values:
        if c not in results:
            continue
        row, state, usc = results[c]
        record = asdict(row)
        record["offblock_trace_norm"] = _offblock_trace_norm(state, usc)
        row_records.append(record)
    usc_entries = [
        {"c": c, **_usc_sidecar(results[c][2])}
        for c in config.coupling_values
        if c in results
    ]
    # Drop duplicate entries when the reference state does not depend on c.
    if config.family != FAMILY_GCL and usc_entries:
        usc_entries = usc_entries[:1]
    report = {
        "version": __version__,
        "config": config.raw,
        "family": config.family,
        "beta": config.beta,
        "coupling_values": list(config.coupling_values),
        "usc": usc_entries,
        "rows": row_records,
        "errors": [{"c": c, "error": msg} for c, msg in sorted(errors.items())],
    }
    return rows, report


def write_sweep_csv(rows, path) -> None:
    lines = [SWEEP_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    _fmt(r.c),
                    _fmt(r.trace_distance),
                    str(int(r.n_points)),
                    _fmt(r.q_min),
                    _fmt(r.q_max),
                    "true" if r.converged else "false",
                    _fmt(r.wall_time_s),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class PropsConfig:
    seed: int = 42
    prop1_trials: int = 10_000
    prop2_trials: int = 1_000
    n_t: int = 1024
    n_modes: int = 10
    delta_fraction: float = 20.0
    quad_tol: float = 1e-6
    x_max: float = 50.0
    n_scan: int = 100_000
    beta: float = DEFAULT_BETA
    out: Optional[str] = None
    raw: dict = field(repr=False, default_factory=dict)


def parse_props_config(source) -> PropsConfig:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    else:
        raw = source
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    allowed = {"seed", "prop1_trials", "prop2_trials", "n_t", "n_modes",
               "delta_fraction", "quad_tol", "x_max", "n_scan", "beta", "out"}
    _reject_unknown(raw, allowed, "props config")
    kwargs = {k: raw[k] for k in allowed & set(raw)}
    out = kwargs.pop("out", None)
    try:
        return PropsConfig(out=out, raw=raw, **{
            k: (int(v) if k in {"seed", "prop1_trials", "prop2_trials", "n_t", "n_modes",
                                "n_scan"} else float(v))
            for k, v in kwargs.items()
        })
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"props config: {exc}") from exc


def hcurve_samples() -> list:
    """(x, h_sin, h_hyp) rows on the fixed plotting grid x = 0.1 .. 20.0."""
    xs = np.round(np.arange(1, 201) * 0.1, 10)
    return [(float(x), float(h_sin(x)), float(h_hyp(x))) for x in xs]


def write_hcurves_csv(path) -> None:
    lines = [HCURVES_CSV_HEADER]
    for x, hs, hh in hcurve_samples():
        lines.append(f"{_fmt(x)},{_fmt(hs)},{_fmt(hh)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _summarize(checks) -> dict:
    in_regime = [c for c in checks if c.in_regime]
    violations = [c for c in in_regime if not c.satisfied]
    return {
        "trials": len(checks),
        "in_regime": len(in_regime),
        "out_of_regime": len(checks) - len(in_regime),
        "violations": len(violations),
        "worst_margin": min((c.margin for c in in_regime), default=float("nan")),
    }


def run_props(config: PropsConfig) -> dict:
    """Bound-bench report: h-curve minima plus ensemble pass counts."""
    x_sin, h_sin_min = minimize_h(KIND_SIN, x_max=config.x_max, n_scan=config.n_scan)
    x_hyp, h_hyp_min = minimize_h(KIND_HYP, x_max=config.x_max, n_scan=config.n_scan)
    mu = min(h_sin_min, h_hyp_min)
    prop1 = check_prop1(
        config.prop1_trials,
        config.seed,
        beta=config.beta,
        n_t=config.n_t,
        n_modes=config.n_modes,
        delta_fraction=config.delta_fraction,
        quad_tol=config.quad_tol,
        mu=mu,
    )
    prop2 = check_prop2(
        soft_sine_map(),
        config.prop2_trials,
        config.seed,
        beta=config.beta,
        n_t=config.n_t,
        n_modes=config.n_modes,
        quad_tol=config.quad_tol,
    )
    return {
        "version": __version__,
        "config": config.raw,
        "mu": mu,
        "h_sin_min": {"x": x_sin, "value": h_sin_min},
        "h_hyp_min": {"x": x_hyp, "value": h_hyp_min},
        "prop1": _summarize(prop1),
        "prop2": _summarize(prop2),
    }


def write_report_json(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=False) + "\n")
