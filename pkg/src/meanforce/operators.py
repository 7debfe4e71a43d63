"""Dense Hermitian linear algebra: eigendecompositions, Boltzmann kernels,
tensor products, partial traces, trace distance and block-diagonal projection.

All matrices are plain ``numpy`` arrays (real symmetric or complex Hermitian).
Everything here is a pure function of its inputs; nothing is mutated.
Energies are in Hartree atomic units with hbar = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_RTOL = 1e-12
PROJECTOR_ATOL = 1e-10


class PreconditionError(ValueError):
    """A numerical precondition was violated (non-Hermitian input, bad grid, ...)."""


def _as_square(m) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {m.shape}")
    return m


def max_asymmetry(m) -> float:
    """Largest entrywise deviation of m from its conjugate transpose."""
    m = _as_square(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def hermitize(m, rtol: float = HERMITICITY_RTOL) -> np.ndarray:
    """Return (m + m†)/2 after checking m is Hermitian to relative tolerance.

    Assembly round-off (~1e-16) is repaired silently; anything above
    ``rtol * max|m|`` is rejected with the measured asymmetry.
    """
    m = _as_square(m)
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    asym = max_asymmetry(m)
    if asym > rtol * max(scale, 1.0):
        raise PreconditionError(
            f"matrix is not Hermitian: max asymmetry {asym:.3e} "
            f"exceeds {rtol:.1e} * max|entry| = {rtol * max(scale, 1.0):.3e}"
        )
    out = 0.5 * (m + m.conj().T)
    if np.isrealobj(m) or np.max(np.abs(out.imag)) == 0.0:
        return np.ascontiguousarray(out.real)
    return out


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvector columns of a Hermitian matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eig(h) -> SpectralDecomposition:
    """Full eigendecomposition of a Hermitian matrix.

    Non-Hermitian input is rejected with a diagnostic of the maximum asymmetry.
    """
    h = hermitize(h)
    w, v = np.linalg.eigh(h)
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v)


@dataclass(frozen=True)
class BoltzmannKernel:
    """exp(-beta*H) stored as ``exp(log_scale) * mat`` to keep entries overflow-safe.

    ``mat`` is exp(-beta*(H - E0)) for E0 the smallest eigenvalue, so its
    largest eigenvalue is exactly 1 and ``log_scale = -beta*E0``.
    Normalized states built from the kernel never need ``log_scale``.
    """

    mat: np.ndarray
    log_scale: float

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def log_trace(self) -> float:
        """log Tr exp(-beta*H), including the stored prefactor."""
        return self.log_scale + float(np.log(np.trace(self.mat).real))

    def full(self) -> np.ndarray:
        """The literal exp(-beta*H); may overflow for large beta*|E0|."""
        return np.exp(self.log_scale) * self.mat


def boltzmann_exp(h, beta: float) -> BoltzmannKernel:
    """exp(-beta*H) via spectral decomposition, shifted by the ground energy.

    beta must be finite and positive.
    """
    if not (np.isfinite(beta) and beta > 0):
        raise PreconditionError(f"beta must be finite and positive, got {beta}")
    dec = hermitian_eig(h)
    e0 = float(dec.eigenvalues[0])
    weights = np.exp(-beta * (dec.eigenvalues - e0))
    v = dec.eigenvectors
    mat = (v * weights) @ v.conj().T
    mat = 0.5 * (mat + mat.conj().T)
    if np.isrealobj(v):
        mat = np.ascontiguousarray(mat.real)
    return BoltzmannKernel(mat=mat, log_scale=-beta * e0)


def kron(a, b) -> np.ndarray:
    """Kronecker product with the system factor first."""
    return np.kron(_as_square(a), _as_square(b))


@dataclass(frozen=True)
class CompositeDims:
    """Tensor-factor bookkeeping for system (x) environment operators, system first."""

    sys_dim: int
    env_dim: int

    def __post_init__(self):
        if self.sys_dim < 1 or self.env_dim < 1:
            raise PreconditionError(
                f"dimensions must be positive, got ({self.sys_dim}, {self.env_dim})"
            )

    @property
    def total(self) -> int:
        return self.sys_dim * self.env_dim


def partial_trace_env(rho, dims: CompositeDims) -> np.ndarray:
    """Trace out the environment factor: out[a,b] = sum_k rho[(a,k),(b,k)]."""
    rho = _as_square(rho)
    if rho.shape[0] != dims.total:
        raise PreconditionError(
            f"operator dimension {rho.shape[0]} != sys_dim*env_dim = {dims.total}"
        )
    r4 = rho.reshape(dims.sys_dim, dims.env_dim, dims.sys_dim, dims.env_dim)
    return np.einsum("akbk->ab", r4)


def trace_distance(rho, sigma) -> float:
    """(1/2) * sum |eigenvalues(rho - sigma)| for Hermitian rho, sigma."""
    rho = _as_square(rho)
    sigma = _as_square(sigma)
    if rho.shape != sigma.shape:
        raise PreconditionError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    diff = rho - sigma
    diff = 0.5 * (diff + diff.conj().T)
    # Fix the overall sign from the first nonzero entry so both argument orders
    # diagonalize the identical matrix (keeps the metric's symmetry bit-exact).
    flat = diff.ravel()
    nonzero = np.flatnonzero(flat)
    if nonzero.size == 0:
        return 0.0
    lead = flat[nonzero[0]]
    if lead.real < 0 or (lead.real == 0 and lead.imag < 0):
        diff = -diff
    vals = np.linalg.eigvalsh(diff)
    return float(min(max(0.5 * np.sum(np.abs(vals)), 0.0), 1.0))


@dataclass(frozen=True)
class ProjectorFamily:
    """Orthogonal spectral projectors of a coupling operator, one per eigenvalue cluster.

    ``values`` are the cluster eigenvalues in strictly increasing order with
    pairwise gaps above ``tolerance``; the projectors are idempotent, mutually
    orthogonal and resolve the identity. ``single_cluster_warning`` is set when
    the clustering tolerance swallowed the whole spectrum.
    """

    values: np.ndarray
    projectors: tuple
    tolerance: float
    single_cluster_warning: bool = field(default=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if self.tolerance < 0:
            raise PreconditionError("cluster tolerance must be >= 0")
        if len(self.projectors) != vals.shape[0]:
            raise PreconditionError("one projector required per cluster value")
        gaps = np.diff(vals)
        if vals.size > 1 and not np.all(gaps > self.tolerance):
            raise PreconditionError(
                f"cluster values must increase with gaps > {self.tolerance}: {vals}"
            )
        dim = self.dim
        total = np.zeros((dim, dim), dtype=complex)
        for i, p in enumerate(self.projectors):
            if p.shape != (dim, dim):
                raise PreconditionError("projectors must share one dimension")
            if max_asymmetry(p) > PROJECTOR_ATOL:
                raise PreconditionError(f"projector {i} is not Hermitian")
            if np.max(np.abs(p @ p - p)) > PROJECTOR_ATOL:
                raise PreconditionError(f"projector {i} is not idempotent")
            for j in range(i):
                if np.max(np.abs(self.projectors[j] @ p)) > PROJECTOR_ATOL:
                    raise PreconditionError(f"projectors {j} and {i} are not orthogonal")
            total += p
        if np.max(np.abs(total - np.eye(dim))) > PROJECTOR_ATOL:
            raise PreconditionError("projectors do not sum to the identity")

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def n_clusters(self) -> int:
        return len(self.projectors)


def project_block_diagonal(h, family: ProjectorFamily) -> np.ndarray:
    """sum_i P_i H P_i: the part of H that is block diagonal over the clusters."""
    h = _as_square(h)
    if h.shape[0] != family.dim:
        raise PreconditionError(
            f"dimension mismatch: operator {h.shape[0]} vs projectors {family.dim}"
        )
    out = np.zeros_like(np.asarray(h, dtype=complex))
    for p in family.projectors:
        out += p @ h @ p
    if np.isrealobj(h) and np.isrealobj(family.projectors[0]):
        out = np.ascontiguousarray(out.real)
    return hermitize(out, rtol=1e-10)


def assert_density_matrix(rho, trace_atol: float = 1e-10, eig_atol: float = 1e-10) -> None:
    """Raise unless rho is Hermitian, unit trace and positive semidefinite."""
    rho = _as_square(rho)
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_atol:
        raise PreconditionError(f"trace {tr} deviates from 1 by more than {trace_atol}")
    if max_asymmetry(rho) > 1e-10 * max(1.0, float(np.max(np.abs(rho)))):
        raise PreconditionError("density matrix is not Hermitian")
    lo = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if lo < -eig_atol:
        raise PreconditionError(f"smallest eigenvalue {lo:.3e} below -{eig_atol}")
