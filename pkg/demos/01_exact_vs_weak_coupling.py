"""How far does the exact reduced state drift from the textbook thermal state?

Couples the three-level benchmark system to a single grid-discretized
anharmonic oscillator and reduces exp(-beta*H_SE) over the environment.
At zero coupling the reduced state is the plain Gibbs state; as the coupling
grows it migrates toward the strong-coupling pinned state instead.
"""

import numpy as np

from meanforce import (
    EnvGrid,
    ModelSpec,
    PolynomialPotential,
    compute_gibbs,
    compute_mfgs_for,
    default_qutrit_system,
    trace_distance,
    usc_cl_gcl2,
)

beta = 5.0
system = default_qutrit_system()
gibbs = compute_gibbs(system.h_sys, beta)
pinned = usc_cl_gcl2(system, beta).state

print("three-level system, quartic environment well, beta = 5")
print(f"{'c':>6} {'d(rho, Gibbs)':>14} {'d(rho, pinned)':>15}")
for c in (0.0, 0.5, 2.0, 6.0, 12.0):
    grid = EnvGrid(-8.0 - c, 8.0 + c, 128)
    spec = ModelSpec("GCL2", system, grid, PolynomialPotential(a4=1.0), c, beta)
    rho = compute_mfgs_for(spec)
    print(
        f"{c:6.1f} {trace_distance(rho, gibbs):14.6f} "
        f"{trace_distance(rho, pinned):15.6f}"
    )

print()
print("populations in the coupling eigenbasis at c = 12:")
grid = EnvGrid(-20.0, 20.0, 128)
rho = compute_mfgs_for(ModelSpec("GCL2", system, grid, PolynomialPotential(a4=1.0), 12.0, beta))
print("  exact :", np.round(np.diag(rho).real, 5))
print("  pinned:", np.round(np.diag(pinned).real, 5))
