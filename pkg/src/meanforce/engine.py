"""Exact reduced equilibrium states and the grid-truncation convergence loop.

The reduced state of the system at inverse temperature beta is
Tr_env[exp(-beta*H_SE)] / Z. It is computed from one spectral decomposition
of the full Hamiltonian; the environment trace is contracted directly from
the eigenvectors so the full Boltzmann matrix is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .models import EnvGrid, ModelSpec, build_hamiltonian
from .operators import (
    CompositeDims,
    PreconditionError,
    assert_density_matrix,
    hermitian_eig,
    trace_distance,
)

OBSERVABLE_USC_DISTANCE = "trace_distance_to_usc"
OBSERVABLE_STATE = "state_itself"


def compute_gibbs(h, beta: float) -> np.ndarray:
    """exp(-beta*H) / Tr exp(-beta*H)."""
    if not (np.isfinite(beta) and beta > 0):
        raise PreconditionError(f"beta must be finite and positive, got {beta}")
    dec = hermitian_eig(h)
    weights = np.exp(-beta * (dec.eigenvalues - dec.eigenvalues[0]))
    weights /= weights.sum()
    v = dec.eigenvectors
    rho = (v * weights) @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    assert_density_matrix(rho)
    return rho


def compute_mfgs(h_se, dims: CompositeDims, beta: float) -> np.ndarray:
    """Reduced thermal state: normalized environment trace of exp(-beta*H_SE).

    Contracts rho_S[a,b] = sum_n w_n sum_k V[(a,k),n] V*[(b,k),n] with the
    shifted Boltzmann weights w_n, which never materializes the full kernel.
    """
    if not (np.isfinite(beta) and beta > 0):
        raise PreconditionError(f"beta must be finite and positive, got {beta}")
    h_se = np.asarray(h_se)
    if h_se.shape[0] != dims.total:
        raise PreconditionError(
            f"Hamiltonian dimension {h_se.shape[0]} != sys_dim*env_dim = {dims.total}"
        )
    dec = hermitian_eig(h_se)
    weights = np.exp(-beta * (dec.eigenvalues - dec.eigenvalues[0]))
    v = dec.eigenvectors.reshape(dims.sys_dim, dims.env_dim, dims.total)
    rho = np.einsum("akn,n,bkn->ab", v, weights, v.conj(), optimize=True)
    rho /= np.trace(rho).real
    rho = 0.5 * (rho + rho.conj().T)
    if np.isrealobj(dec.eigenvectors):
        rho = np.ascontiguousarray(rho.real)
    assert_density_matrix(rho)
    return rho


def compute_mfgs_for(spec: ModelSpec) -> np.ndarray:
    """Assemble the spec's Hamiltonian and reduce it at the spec's beta."""
    h, dims = build_hamiltonian(spec)
    return compute_mfgs(h, dims, spec.beta)


@dataclass(frozen=True)
class ConvergenceStage:
    grid: EnvGrid
    value: float
    delta: float


@dataclass(frozen=True)
class ConvergenceReport:
    stages: tuple
    converged: bool
    final_grid: EnvGrid
    observable: str
    tol: float


def grid_schedule(
    start: EnvGrid, n_stages: int = 5, widen: float = 0.25, n_cap: int = 1024
) -> list:
    """Default refinement schedule: double the point count (capped) and widen
    the box by a fixed fraction at every stage."""
    stages = [start]
    for _ in range(n_stages - 1):
        prev = stages[-1]
        half = 0.5 * (prev.q_max - prev.q_min) * (1.0 + widen)
        center = 0.5 * (prev.q_max + prev.q_min)
        n = min(2 * prev.n_points, n_cap)
        stages.append(EnvGrid(center - half, center + half, n, prev.mass))
    return stages


def converge_mfgs(
    spec: ModelSpec,
    schedule: Optional[Sequence[EnvGrid]] = None,
    tol: float = 1e-4,
    observable: str = OBSERVABLE_USC_DISTANCE,
) -> tuple:
    """Refine the environment grid until the observable stops moving.

    ``trace_distance_to_usc`` tracks the scalar actually reported by the
    sweeps; ``state_itself`` tracks the reduced state between stages. Returns
    the last stage's state and a stage-by-stage report; ``converged`` is False
    if the schedule ran out first.
    """
    if observable not in (OBSERVABLE_USC_DISTANCE, OBSERVABLE_STATE):
        raise PreconditionError(f"unknown observable {observable!r}")
    if schedule is None:
        schedule = grid_schedule(spec.env)
    schedule = list(schedule)
    if not schedule:
        raise PreconditionError("empty refinement schedule")

    usc_ref = None
    if observable == OBSERVABLE_USC_DISTANCE:
        from .usc import usc_reference_matrix

        usc_ref = usc_reference_matrix(spec)

    stages = []
    prev_value = None
    prev_state = None
    state = None
    converged = False
    for grid in schedule:
        state = compute_mfgs_for(replace(spec, env=grid))
        if observable == OBSERVABLE_USC_DISTANCE:
            value = trace_distance(state, usc_ref)
            delta = np.inf if prev_value is None else abs(value - prev_value)
            prev_value = value
        else:
            delta = np.inf if prev_state is None else trace_distance(state, prev_state)
            value = delta
            prev_state = state
        stages.append(ConvergenceStage(grid=grid, value=float(value), delta=float(delta)))
        if delta <= tol:
            converged = True
            break

    report = ConvergenceReport(
        stages=tuple(stages),
        converged=converged,
        final_grid=stages[-1].grid,
        observable=observable,
        tol=tol,
    )
    return state, report
