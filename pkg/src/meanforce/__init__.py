"""meanforce: exact and closed-form strong-coupling equilibrium states for a
quantum system coupled to a grid-discretized anharmonic environment.

The package computes the reduced thermal state Tr_env[exp(-beta*H_SE)]/Z by
dense diagonalization, evaluates the closed-form states that this reduced
state approaches as the system-environment coupling grows, and reproduces the
distance-versus-coupling experiments and scalar inequality benches at desk
scale. Hartree atomic units, hbar = 1.
"""

__version__ = "0.1.0"

from .operators import (  # noqa: F401
    BoltzmannKernel,
    CompositeDims,
    PreconditionError,
    ProjectorFamily,
    SpectralDecomposition,
    assert_density_matrix,
    boltzmann_exp,
    hermitian_eig,
    hermitize,
    kron,
    partial_trace_env,
    project_block_diagonal,
    trace_distance,
)
from .models import (  # noqa: F401
    FAMILIES,
    CvEnvMode,
    CvSystem,
    EnvGrid,
    ModelSpec,
    MorsePotential,
    PolynomialPotential,
    SystemModel,
    ZeroPotential,
    ZwanzigEnvSpec,
    build_cv_zwanzig_hamiltonian,
    build_gcl_hamiltonian,
    build_grid_operators,
    build_hamiltonian,
    build_zwanzig_hamiltonian,
    cluster_coupling_operator,
    default_env_grid,
    default_qutrit_system,
)
from .engine import (  # noqa: F401
    ConvergenceReport,
    ConvergenceStage,
    compute_gibbs,
    compute_mfgs,
    compute_mfgs_for,
    converge_mfgs,
    grid_schedule,
)
from .usc import (  # noqa: F401
    DiagonalState,
    EnvModeSpec,
    UscState,
    usc_cl_cv,
    usc_cl_gcl2,
    usc_gcl,
    usc_state_for,
    usc_zwanzig_cv,
    usc_zwanzig_discrete,
)
