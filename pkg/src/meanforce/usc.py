"""Closed-form equilibrium states in the strong-coupling limit.

Every state here is diagonal in the eigenbasis of the coupling operator:
the environment pins the system to the coupling eigensubspaces, and what
remains is a Gibbs state of the block-diagonal part of the system
Hamiltonian, possibly shifted by an environment-induced energy per subspace.

Family map
----------
CL / GCL2   no shift: the blocks of H_S alone set the weights
GCL         each subspace is weighted by its environment partition function
ZWANZIG     each subspace is shifted by the free well evaluated at its pinned position
ZWANZIG_CV  grid system: a diagonal position distribution with renormalized mass
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .engine import compute_gibbs
from .models import (
    DEFAULT_CLUSTER_TOL,
    FAMILY_CL,
    FAMILY_GCL,
    FAMILY_GCL2,
    FAMILY_ZWANZIG,
    FAMILY_ZWANZIG_CV,
    CvEnvMode,
    CvSystem,
    EnvGrid,
    ModelSpec,
    PolynomialPotential,
    Potential,
    SystemModel,
    build_grid_operators,
    cluster_coupling_operator,
)
from .operators import (
    PreconditionError,
    ProjectorFamily,
    hermitize,
    project_block_diagonal,
)

WALL_SIGMA_FACTOR = 4.0


@dataclass(frozen=True)
class EnvModeSpec:
    """One environment particle for the partition-function route.

    ``grid`` is interpreted relative to the well minimum: for each coupling
    eigenvalue a_i the mode is diagonalized on [c*a_i + q_min, c*a_i + q_max],
    which removes the truncation bias that would otherwise differ between
    subspaces.
    """

    grid: EnvGrid
    potential: PolynomialPotential
    coupling: float


@dataclass(frozen=True)
class UscState:
    """A strong-coupling state with its effective Hamiltonian and cluster data."""

    state: np.ndarray
    h_eff: np.ndarray
    clusters: ProjectorFamily
    family: str
    v0: Optional[np.ndarray] = None
    mode_log_z: Optional[np.ndarray] = None  # (n_clusters, n_modes) log partition sums


@dataclass(frozen=True)
class DiagonalState:
    """Position distribution of a grid system; the off-diagonal part is exactly zero."""

    grid: EnvGrid
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.grid.n_points,):
            raise PreconditionError("one weight per grid point required")
        if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-10:
            raise PreconditionError("weights must be a probability distribution")

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.weights)


def usc_cl_gcl2(
    system: SystemModel, beta: float, tol: float = DEFAULT_CLUSTER_TOL
) -> UscState:
    """Strong-coupling state for shift-invariant environment wells.

    The environment contributes no subspace-dependent weight, so the state is
    the Gibbs state of sum_i P_i H_S P_i.
    """
    fam = cluster_coupling_operator(system.coupling_op, tol)
    h_eff = project_block_diagonal(system.h_sys, fam)
    return UscState(
        state=compute_gibbs(h_eff, beta),
        h_eff=h_eff,
        clusters=fam,
        family=FAMILY_GCL2,
    )


def mode_log_partition(mode: EnvModeSpec, cluster_value: float, beta: float) -> float:
    """log Tr exp(-beta*(K + V(Q - c*a_i))) on the recentered grid.

    Raises if the thermal density of the mode sits closer than
    ``WALL_SIGMA_FACTOR`` thermal widths to either wall.
    """
    center = mode.coupling * cluster_value
    grid = EnvGrid(
        center + mode.grid.q_min,
        center + mode.grid.q_max,
        mode.grid.n_points,
        mode.grid.mass,
    )
    _, k_mat = build_grid_operators(grid)
    arg = grid.points - center
    h_mode = k_mat + np.diag(mode.potential(arg))
    energies, vecs = np.linalg.eigh(h_mode)
    shifted = -beta * (energies - energies[0])
    weights = np.exp(shifted)
    density = (vecs * vecs.conj()).real @ weights
    density /= density.sum()
    mean = float(density @ grid.points)
    sigma = float(np.sqrt(max(density @ (grid.points - mean) ** 2, 0.0)))
    margin = WALL_SIGMA_FACTOR * sigma
    if center - grid.q_min < margin or grid.q_max - center < margin:
        raise PreconditionError(
            f"environment well at {center:.3g} sits within {WALL_SIGMA_FACTOR} thermal "
            f"widths ({sigma:.3g}) of the box [{grid.q_min:.3g}, {grid.q_max:.3g}] "
            f"for cluster value {cluster_value:.6g}"
        )
    return float(-beta * energies[0] + logsumexp(shifted))


def usc_gcl(
    system: SystemModel,
    modes: Sequence[EnvModeSpec],
    beta: float,
    tol: float = DEFAULT_CLUSTER_TOL,
) -> UscState:
    """Strong-coupling state with environment partition-function weights.

    Each coupling subspace i acquires the energy
    v0(a_i) = -(1/beta) * log prod_k Tr exp(-beta*(K_k + V_k(Q_k - c_k a_i))),
    so exp(-beta*v0) multiplies the subspace weight by exactly the
    environment partition function pinned at that eigenvalue. With no modes
    this reduces to the shift-invariant result.
    """
    fam = cluster_coupling_operator(system.coupling_op, tol)
    log_z = np.zeros((fam.n_clusters, len(modes)))
    for i, value in enumerate(fam.values):
        for k, mode in enumerate(modes):
            log_z[i, k] = mode_log_partition(mode, float(value), beta)
    v0 = -log_z.sum(axis=1) / beta
    h_eff = project_block_diagonal(system.h_sys, fam)
    for value, p in zip(v0, fam.projectors):
        h_eff = h_eff + value * p
    h_eff = hermitize(h_eff)
    return UscState(
        state=compute_gibbs(h_eff, beta),
        h_eff=h_eff,
        clusters=fam,
        family=FAMILY_GCL,
        v0=v0,
        mode_log_z=log_z,
    )


def usc_zwanzig_discrete(
    system: SystemModel,
    modes: Sequence[tuple],
    beta: float,
    tol: float = DEFAULT_CLUSTER_TOL,
) -> UscState:
    """Strong-coupling state for spring-coupled wells: the free potential of
    every environment particle, evaluated at its pinned position a_i + x_k,
    renormalizes the subspace energies.

    ``modes`` is a sequence of (u_free, x_k) pairs.
    """
    fam = cluster_coupling_operator(system.coupling_op, tol)
    v0 = np.zeros(fam.n_clusters)
    for u_free, x_k in modes:
        for i, value in enumerate(fam.values):
            u = float(np.asarray(u_free(np.array([value + x_k])))[0])
            if not np.isfinite(u):
                raise PreconditionError(
                    f"free potential not finite at pinned position {value + x_k}"
                )
            v0[i] += u
    h_eff = project_block_diagonal(system.h_sys, fam)
    for value, p in zip(v0, fam.projectors):
        h_eff = h_eff + value * p
    h_eff = hermitize(h_eff)
    return UscState(
        state=compute_gibbs(h_eff, beta),
        h_eff=h_eff,
        clusters=fam,
        family=FAMILY_ZWANZIG,
        v0=v0,
    )


def usc_zwanzig_cv(
    system: CvSystem, envs: Sequence[CvEnvMode], beta: float
) -> DiagonalState:
    """Strong-coupling position distribution of a spring-coupled grid system.

    The environment particles ride along with the system coordinate, so the
    system behaves as a single particle of mass m + sum_k m_k in the potential
    V(q) + sum_k u_free_k(q + x_k); the state is the diagonal of its Boltzmann
    kernel, normalized.
    """
    m_eff = system.grid.mass + sum(env.mass for env in envs)
    grid = EnvGrid(system.grid.q_min, system.grid.q_max, system.grid.n_points, m_eff)
    _, k_mat = build_grid_operators(grid)
    v_eff = np.asarray(system.potential(grid.points), dtype=float)
    for env in envs:
        v_eff = v_eff + np.asarray(env.u_free(grid.points + env.shift), dtype=float)
    if not np.all(np.isfinite(v_eff)):
        raise PreconditionError("effective potential is not finite on the grid")
    energies, vecs = np.linalg.eigh(k_mat + np.diag(v_eff))
    boltz = np.exp(-beta * (energies - energies[0]))
    diag = (vecs * vecs.conj()).real @ boltz
    return DiagonalState(grid=system.grid, weights=diag / diag.sum())


def usc_cl_cv(potential: Potential, grid: EnvGrid, beta: float) -> DiagonalState:
    """Infinite-effective-mass limit: kinetic term dropped, weights exp(-beta*V(q))."""
    v = np.asarray(potential(grid.points), dtype=float)
    if not np.all(np.isfinite(v)):
        raise PreconditionError("potential is not finite on the grid")
    w = np.exp(-beta * (v - v.min()))
    return DiagonalState(grid=grid, weights=w / w.sum())


def default_gcl_modes(spec: ModelSpec) -> list:
    """Single-mode default for the partition-function route: the model's own
    environment box, recentered per cluster on the well minimum."""
    half = 0.5 * (spec.env.q_max - spec.env.q_min)
    grid = EnvGrid(-half, half, spec.env.n_points, spec.env.mass)
    return [EnvModeSpec(grid=grid, potential=spec.potential, coupling=spec.coupling)]


def usc_state_for(spec: ModelSpec):
    """The family's strong-coupling state for a fully specified model."""
    if spec.family in (FAMILY_CL, FAMILY_GCL2):
        return usc_cl_gcl2(spec.system, spec.beta, spec.cluster_tol)
    if spec.family == FAMILY_GCL:
        return usc_gcl(spec.system, default_gcl_modes(spec), spec.beta, spec.cluster_tol)
    if spec.family == FAMILY_ZWANZIG:
        modes = [(spec.potential.u_free, spec.potential.spring_min)]
        return usc_zwanzig_discrete(spec.system, modes, spec.beta, spec.cluster_tol)
    if spec.family == FAMILY_ZWANZIG_CV:
        envs = [CvEnvMode(mass=spec.env.mass, u_free=spec.potential.u_free,
                          shift=spec.potential.spring_min)]
        return usc_zwanzig_cv(spec.system, envs, spec.beta)
    raise PreconditionError(f"unknown family {spec.family!r}")


def usc_reference_matrix(spec: ModelSpec) -> np.ndarray:
    """The strong-coupling state as a plain density matrix (diagonal for grid systems)."""
    ref = usc_state_for(spec)
    return ref.matrix if isinstance(ref, DiagonalState) else ref.state
