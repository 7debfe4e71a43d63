"""Model construction: system data, grid-discretized environment operators and
full system-environment Hamiltonians for the four coupling families.

Families
--------
CL        harmonic environment, shift coupling        V(Q - c*A), V quadratic
GCL       anharmonic environment, shift coupling      V(Q - c*A), V even polynomial
GCL2      same Hamiltonian as GCL; tagged separately because its closed-form
          strong-coupling state needs no environment partition function
ZWANZIG   spring coupling with a free well            U(Q) + (c/2)(Q - A)^2
ZWANZIG_CV  same spring coupling, but the system itself is a grid particle

Units: Hartree atomic units, hbar = 1, masses default to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .operators import (
    CompositeDims,
    PreconditionError,
    ProjectorFamily,
    hermitize,
    kron,
)

FAMILY_CL = "CL"
FAMILY_GCL = "GCL"
FAMILY_GCL2 = "GCL2"
FAMILY_ZWANZIG = "ZWANZIG"
FAMILY_ZWANZIG_CV = "ZWANZIG_CV"
FAMILIES = (FAMILY_CL, FAMILY_GCL, FAMILY_GCL2, FAMILY_ZWANZIG, FAMILY_ZWANZIG_CV)

DEFAULT_CLUSTER_TOL = 1e-8


@dataclass(frozen=True)
class SystemModel:
    """Free system Hamiltonian plus the operator through which it couples."""

    h_sys: np.ndarray
    coupling_op: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h_sys", hermitize(self.h_sys))
        object.__setattr__(self, "coupling_op", hermitize(self.coupling_op))
        if self.h_sys.shape != self.coupling_op.shape:
            raise PreconditionError("system Hamiltonian and coupling operator differ in shape")

    @property
    def dim(self) -> int:
        return self.h_sys.shape[0]


def default_qutrit_system() -> SystemModel:
    """The three-level benchmark system used by the bundled sweeps."""
    h = np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, -1.0]])
    a = np.diag([1.0, 0.0, -0.5])
    return SystemModel(h_sys=h, coupling_op=a)


@dataclass(frozen=True)
class EnvGrid:
    """Hard-wall position grid for one environment (or grid-system) particle."""

    q_min: float
    q_max: float
    n_points: int
    mass: float = 1.0

    def __post_init__(self):
        if not self.q_max > self.q_min:
            raise PreconditionError(f"q_max must exceed q_min, got [{self.q_min}, {self.q_max}]")
        if self.n_points < 3:
            raise PreconditionError(f"need at least 3 grid points, got {self.n_points}")
        if not self.mass > 0:
            raise PreconditionError(f"mass must be positive, got {self.mass}")

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n_points)


@dataclass(frozen=True)
class PolynomialPotential:
    """Even polynomial well a2*x^2 + a4*x^4 + a6*x^6 with nonnegative coefficients."""

    a2: float = 0.0
    a4: float = 0.0
    a6: float = 0.0

    def __post_init__(self):
        coeffs = (self.a2, self.a4, self.a6)
        if any(a < 0 for a in coeffs):
            raise PreconditionError(f"coefficients must be >= 0 (bounded below), got {coeffs}")
        if not any(a > 0 for a in coeffs):
            raise PreconditionError("at least one coefficient must be positive")

    def __call__(self, x):
        x2 = np.square(np.asarray(x, dtype=float))
        return x2 * (self.a2 + x2 * (self.a4 + x2 * self.a6))

    @property
    def coeffs(self) -> tuple:
        return (self.a2, self.a4, self.a6)


@dataclass(frozen=True)
class MorsePotential:
    """(1 - exp(-x))^2: bounded plateau for x -> +inf, steep wall for x -> -inf."""

    def __call__(self, x):
        return np.square(1.0 - np.exp(-np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class ZeroPotential:
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


Potential = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ZwanzigEnvSpec:
    """Free well of a spring-coupled environment particle.

    ``u_free`` is the particle's own potential; ``spring_min`` is the minimum
    position of the quadratic coupling well, so the environment particle sits
    near (coupling eigenvalue + spring_min) at strong coupling.
    """

    u_free: Potential = field(default_factory=MorsePotential)
    spring_min: float = 0.0


@dataclass(frozen=True)
class CvSystem:
    """A grid particle acting as the system: kinetic term from grid.mass plus a potential."""

    grid: EnvGrid
    potential: Potential


@dataclass(frozen=True)
class CvEnvMode:
    """One spring-coupled environment particle for the grid-system model."""

    mass: float = 1.0
    u_free: Potential = field(default_factory=MorsePotential)
    shift: float = 0.0


@dataclass(frozen=True)
class ModelSpec:
    """One fully specified model: family tag, system data, environment grid,
    potential payload, coupling strength and inverse temperature."""

    family: str
    system: Union[SystemModel, CvSystem]
    env: EnvGrid
    potential: Union[PolynomialPotential, ZwanzigEnvSpec]
    coupling: float
    beta: float
    cluster_tol: float = DEFAULT_CLUSTER_TOL

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PreconditionError(f"unknown family {self.family!r}; valid: {FAMILIES}")
        if self.coupling < 0:
            raise PreconditionError(f"coupling must be >= 0, got {self.coupling}")
        if not self.beta > 0:
            raise PreconditionError(f"beta must be positive, got {self.beta}")
        if self.family in (FAMILY_CL, FAMILY_GCL, FAMILY_GCL2):
            if not isinstance(self.potential, PolynomialPotential):
                raise PreconditionError(f"family {self.family} needs a PolynomialPotential")
            if self.family == FAMILY_CL and (
                self.potential.a2 <= 0 or self.potential.a4 != 0 or self.potential.a6 != 0
            ):
                raise PreconditionError("CL requires a purely quadratic potential (a2 only)")
            if not isinstance(self.system, SystemModel):
                raise PreconditionError(f"family {self.family} needs a SystemModel")
        elif self.family == FAMILY_ZWANZIG:
            if not isinstance(self.potential, ZwanzigEnvSpec):
                raise PreconditionError("ZWANZIG needs a ZwanzigEnvSpec")
            if not isinstance(self.system, SystemModel):
                raise PreconditionError("ZWANZIG needs a SystemModel")
        elif self.family == FAMILY_ZWANZIG_CV:
            if not isinstance(self.potential, ZwanzigEnvSpec):
                raise PreconditionError("ZWANZIG_CV needs a ZwanzigEnvSpec")
            if not isinstance(self.system, CvSystem):
                raise PreconditionError("ZWANZIG_CV needs a CvSystem")


def cluster_coupling_operator(a, tol: float = DEFAULT_CLUSTER_TOL) -> ProjectorFamily:
    """Group the eigenvalues of a coupling operator into degeneracy clusters.

    Eigenvalues are scanned in ascending order; a gap <= tol joins the running
    cluster. Each cluster gets the mean eigenvalue and the projector onto the
    span of its eigenvectors. A tolerance wider than the whole spectral range
    yields a single cluster with ``single_cluster_warning`` set.
    """
    if tol < 0:
        raise PreconditionError(f"tolerance must be >= 0, got {tol}")
    a = hermitize(a)
    w, v = np.linalg.eigh(a)
    spectral_range = float(w[-1] - w[0])
    clusters = [[0]]
    for i in range(1, w.shape[0]):
        if w[i] - w[i - 1] <= tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    values = np.array([float(np.mean(w[idx])) for idx in clusters])
    projectors = []
    for idx in clusters:
        vec = v[:, idx]
        projectors.append(vec @ vec.conj().T)
    return ProjectorFamily(
        values=values,
        projectors=tuple(projectors),
        tolerance=tol,
        single_cluster_warning=bool(tol >= spectral_range),
    )


def build_grid_operators(grid: EnvGrid) -> tuple:
    """Position operator and central-difference kinetic operator on a hard-wall grid.

    Q = diag(q_j); K has 1/(M dq^2) on the diagonal and -1/(2 M dq^2) on the
    first off-diagonals (Dirichlet walls beyond the endpoints).
    """
    q = grid.points
    dq = grid.spacing
    q_mat = np.diag(q)
    n = grid.n_points
    scale = 1.0 / (grid.mass * dq * dq)
    k_mat = scale * np.eye(n) - 0.5 * scale * (np.eye(n, k=1) + np.eye(n, k=-1))
    return q_mat, k_mat


def _embed_env_diagonal_interaction(u_sys: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Assemble sum_s U[:,s] w[s,j] U[:,s]^dag on the product space, diagonal in env.

    ``w[s, j]`` is the interaction value for system eigenbranch s at grid point j.
    """
    ds = u_sys.shape[0]
    de = w.shape[1]
    blocks = np.einsum("is,sj,ks->ikj", u_sys, w, u_sys.conj())
    out = np.zeros((ds * de, ds * de), dtype=blocks.dtype)
    view = out.reshape(ds, de, ds, de)
    for j in range(de):
        view[:, j, :, j] = blocks[:, :, j]
    return out


def build_gcl_hamiltonian(spec: ModelSpec) -> tuple:
    """Full Hamiltonian for the CL/GCL/GCL2 families: H_S + K + V(Q - c*A).

    The interaction is evaluated exactly by rotating to the coupling operator's
    eigenbasis, where Q - c*A is diagonal with entries q_j - c*a_s, applying the
    potential elementwise and rotating back.
    """
    if spec.family not in (FAMILY_CL, FAMILY_GCL, FAMILY_GCL2):
        raise PreconditionError(f"family {spec.family} is not a CL/GCL/GCL2 model")
    system: SystemModel = spec.system
    q_mat, k_mat = build_grid_operators(spec.env)
    q = spec.env.points
    a_vals, u_sys = np.linalg.eigh(system.coupling_op)
    w = spec.potential(q[None, :] - spec.coupling * a_vals[:, None])
    ds, de = system.dim, spec.env.n_points
    h = kron(system.h_sys, np.eye(de)) + kron(np.eye(ds), k_mat)
    h = h + _embed_env_diagonal_interaction(u_sys, w)
    return hermitize(h), CompositeDims(ds, de)


def build_zwanzig_hamiltonian(spec: ModelSpec) -> tuple:
    """Full Hamiltonian for the spring-coupled family: H_S + K + U(Q) + (c/2)(Q - A)^2.

    No counter term is added; any renormalization of the free system is physical.
    """
    if spec.family != FAMILY_ZWANZIG:
        raise PreconditionError(f"family {spec.family} is not a ZWANZIG model")
    system: SystemModel = spec.system
    env_spec: ZwanzigEnvSpec = spec.potential
    q_mat, k_mat = build_grid_operators(spec.env)
    u_free_q = np.asarray(env_spec.u_free(spec.env.points), dtype=float)
    if not np.all(np.isfinite(u_free_q)):
        raise PreconditionError("free environment potential is not finite on the grid")
    ds, de = system.dim, spec.env.n_points
    x = kron(np.eye(ds), q_mat) - kron(system.coupling_op, np.eye(de))
    h = (
        kron(system.h_sys, np.eye(de))
        + kron(np.eye(ds), k_mat + np.diag(u_free_q))
        + 0.5 * spec.coupling * (x @ x)
    )
    return hermitize(h), CompositeDims(ds, de)


def build_cv_zwanzig_hamiltonian(
    sys_grid: EnvGrid,
    sys_potential: Potential,
    env_grid: EnvGrid,
    env_spec: ZwanzigEnvSpec,
    coupling: float,
) -> tuple:
    """Spring-coupled pair of grid particles: system grid (x) environment grid."""
    qs_mat, ks_mat = build_grid_operators(sys_grid)
    qe_mat, ke_mat = build_grid_operators(env_grid)
    v_sys = np.asarray(sys_potential(sys_grid.points), dtype=float)
    u_env = np.asarray(env_spec.u_free(env_grid.points), dtype=float)
    if not (np.all(np.isfinite(v_sys)) and np.all(np.isfinite(u_env))):
        raise PreconditionError("potential is not finite on the grid")
    ns, ne = sys_grid.n_points, env_grid.n_points
    x = kron(np.eye(ns), qe_mat) - kron(qs_mat, np.eye(ne))
    h = (
        kron(ks_mat + np.diag(v_sys), np.eye(ne))
        + kron(np.eye(ns), ke_mat + np.diag(u_env))
        + 0.5 * coupling * (x @ x)
    )
    return hermitize(h), CompositeDims(ns, ne)


def build_hamiltonian(spec: ModelSpec) -> tuple:
    """Dispatch to the family's assembly routine."""
    if spec.family in (FAMILY_CL, FAMILY_GCL, FAMILY_GCL2):
        return build_gcl_hamiltonian(spec)
    if spec.family == FAMILY_ZWANZIG:
        return build_zwanzig_hamiltonian(spec)
    if spec.family == FAMILY_ZWANZIG_CV:
        return build_cv_zwanzig_hamiltonian(
            spec.system.grid, spec.system.potential, spec.env, spec.potential, spec.coupling
        )
    raise PreconditionError(f"unknown family {spec.family!r}")


def default_env_grid(
    family: str, system: SystemModel, coupling: float, n_points: int = 64, mass: float = 1.0
) -> EnvGrid:
    """Family default box: wide enough that every coupling well stays inside.

    Shift-coupled families put wells at Q = c*a_i, so the box tracks the
    coupling strength; the spring family pins wells near the coupling
    eigenvalues themselves.
    """
    a_vals = np.linalg.eigvalsh(system.coupling_op)
    if family in (FAMILY_CL, FAMILY_GCL, FAMILY_GCL2):
        half = 8.0 + abs(coupling) * float(np.max(np.abs(a_vals)))
        return EnvGrid(-half, half, n_points, mass)
    if family == FAMILY_ZWANZIG:
        return EnvGrid(float(a_vals[0]) - 6.0, float(a_vals[-1]) + 6.0, n_points, mass)
    raise PreconditionError(f"no default environment grid for family {family!r}")
