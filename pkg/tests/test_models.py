import numpy as np
import pytest

from meanforce.models import (
    EnvGrid,
    ModelSpec,
    MorsePotential,
    PolynomialPotential,
    SystemModel,
    ZwanzigEnvSpec,
    build_cv_zwanzig_hamiltonian,
    build_grid_operators,
    build_gcl_hamiltonian,
    build_hamiltonian,
    build_zwanzig_hamiltonian,
    cluster_coupling_operator,
    default_env_grid,
    default_qutrit_system,
)
from meanforce.operators import PreconditionError, kron, max_asymmetry

from linalg_helpers import rand_hermitian


class TestClusterCouplingOperator:
    def test_qutrit_coupling_clusters(self):
        fam = cluster_coupling_operator(np.diag([1.0, 0.0, -0.5]), 1e-8)
        assert np.allclose(fam.values, [-0.5, 0.0, 1.0])
        assert all(abs(np.trace(p) - 1.0) < 1e-12 for p in fam.projectors)
        assert not fam.single_cluster_warning

    def test_full_degeneracy(self):
        fam = cluster_coupling_operator(np.eye(3), 1e-8)
        assert fam.n_clusters == 1
        assert np.max(np.abs(fam.projectors[0] - np.eye(3))) <= 1e-12
        assert fam.single_cluster_warning

    def test_gap_below_threshold_merges(self):
        tol = 1e-6
        fam = cluster_coupling_operator(np.diag([1.0, 1.0 + tol / 2, 2.0]), tol)
        assert fam.n_clusters == 2
        assert fam.values[0] == pytest.approx(1.0 + tol / 4)
        assert np.trace(fam.projectors[0]).real == pytest.approx(2.0)
        assert fam.values[1] == pytest.approx(2.0)

    def test_tolerance_swallowing_spectrum_warns(self):
        fam = cluster_coupling_operator(np.diag([0.0, 1.0]), tol=2.0)
        assert fam.n_clusters == 1
        assert fam.single_cluster_warning

    def test_non_diagonal_coupling(self, rng):
        a = rand_hermitian(rng, 4)
        fam = cluster_coupling_operator(a, 1e-10)
        rebuilt = sum(v * p for v, p in zip(fam.values, fam.projectors))
        assert np.max(np.abs(rebuilt - a)) <= 1e-10


class TestGridOperators:
    def test_three_point_instance(self):
        q, k = build_grid_operators(EnvGrid(-1.0, 1.0, 3, mass=1.0))
        assert np.array_equal(np.diag(q), [-1.0, 0.0, 1.0])
        assert np.allclose(np.diag(k), 1.0)
        assert np.allclose(np.diag(k, 1), -0.5)
        assert np.allclose(np.diag(k, -1), -0.5)

    def test_interior_row_sums_vanish(self):
        _, k = build_grid_operators(EnvGrid(-3.0, 5.0, 20, mass=2.0))
        sums = k.sum(axis=1)
        assert np.max(np.abs(sums[1:-1])) <= 1e-12

    def test_harmonic_ground_energy(self):
        # analytic ground energy omega/2 with omega = 1
        grid = EnvGrid(-10.0, 10.0, 400, mass=1.0)
        q, k = build_grid_operators(grid)
        h = k + 0.5 * q @ q
        e0 = np.linalg.eigvalsh(h)[0]
        assert e0 == pytest.approx(0.5, abs=1e-4)

    def test_refinement_is_second_order(self):
        # Halving dq at a fixed box moves the lowest eigenvalues by O(dq^2).
        # The potential must confine the tested levels: the implicit hard wall
        # sits one spacing beyond the endpoints, so wall-grazing box states
        # pick up an O(dq) wall shift instead.
        morse = MorsePotential()
        box = (-6.5, 7.0)

        def lowest(n):
            grid = EnvGrid(box[0], box[1], n, mass=1.0)
            q, k = build_grid_operators(grid)
            h = k + np.diag(morse(grid.points) + 1.5 * (grid.points - 1.0) ** 2)
            return np.linalg.eigvalsh(h)[:10]

        ref = lowest(2049)
        ns = [65, 129, 257]
        errs = [np.max(np.abs(lowest(n) - ref)) for n in ns]
        dqs = [(box[1] - box[0]) / (n - 1) for n in ns]
        slope = np.polyfit(np.log(dqs), np.log(errs), 1)[0]
        assert slope >= 1.8


def _gcl_oracle(system, grid, potential, c):
    """Entrywise assembly by explicit index loops, for a diagonal coupling op."""
    a_diag = np.diag(system.coupling_op).real
    q = grid.points
    _, k = build_grid_operators(grid)
    ds, de = system.dim, grid.n_points
    h = np.zeros((ds * de, ds * de), dtype=complex)
    for i in range(ds):
        for j in range(de):
            for m in range(ds):
                for n in range(de):
                    val = 0.0j
                    if j == n:
                        val += system.h_sys[i, m]
                    if i == m:
                        val += k[j, n]
                    if i == m and j == n:
                        val += potential(q[j] - c * a_diag[i])
                    h[i * de + j, m * de + n] = val
    return h


def _zwanzig_oracle(system, grid, u_free, c):
    a = system.coupling_op
    q = grid.points
    _, k = build_grid_operators(grid)
    ds, de = system.dim, grid.n_points
    h = np.zeros((ds * de, ds * de), dtype=complex)
    a2 = (a @ a).real
    for i in range(ds):
        for j in range(de):
            for m in range(ds):
                for n in range(de):
                    val = 0.0j
                    if j == n:
                        val += system.h_sys[i, m]
                        # spring cross terms: -c q A + (c/2) A^2
                        val += -c * q[j] * a[i, m] if j == n else 0.0
                        val += 0.5 * c * a2[i, m]
                    if i == m:
                        val += k[j, n]
                    if i == m and j == n:
                        val += u_free(q[j]) + 0.5 * c * q[j] ** 2
                    h[i * de + j, m * de + n] = val
    return h


class TestGclHamiltonian:
    def test_zero_coupling_is_separable(self):
        system = default_qutrit_system()
        grid = EnvGrid(-6.0, 6.0, 9)
        pot = PolynomialPotential(a4=1.0)
        spec = ModelSpec("GCL2", system, grid, pot, coupling=0.0, beta=5.0)
        h, dims = build_gcl_hamiltonian(spec)
        q, k = build_grid_operators(grid)
        expected = kron(system.h_sys, np.eye(9)) + kron(
            np.eye(3), k + np.diag(pot(grid.points))
        )
        assert np.max(np.abs(h - expected)) <= 1e-12

    def test_scalar_system_shifts_the_well(self):
        # a 1-dim system with coupling eigenvalue a: environment well at c*a
        a_val, c = 0.75, 2.0
        system = SystemModel(h_sys=np.array([[0.3]]), coupling_op=np.array([[a_val]]))
        grid = EnvGrid(-5.0, 5.0, 11)
        pot = PolynomialPotential(a2=1.0)
        spec = ModelSpec("GCL2", system, grid, pot, coupling=c, beta=5.0)
        h, _ = build_gcl_hamiltonian(spec)
        q, k = build_grid_operators(grid)
        expected = 0.3 * np.eye(11) + k + np.diag((grid.points - c * a_val) ** 2)
        assert np.max(np.abs(h - expected)) <= 1e-12

    def test_matches_loop_oracle(self):
        system = default_qutrit_system()
        grid = EnvGrid(-6.0, 6.0, 5)
        pot = PolynomialPotential(a4=1.0)
        spec = ModelSpec("GCL2", system, grid, pot, coupling=2.0, beta=5.0)
        h, dims = build_gcl_hamiltonian(spec)
        oracle = _gcl_oracle(system, grid, pot, 2.0)
        assert h.shape == (15, 15)
        assert np.max(np.abs(h - oracle)) <= 1e-12

    def test_non_diagonal_coupling_matches_projector_route(self, rng):
        # independent route: sum_s P_s (x) V(q - c a_s) over coupling eigenbranches
        system = SystemModel(h_sys=rand_hermitian(rng, 3), coupling_op=rand_hermitian(rng, 3))
        grid = EnvGrid(-4.0, 4.0, 7)
        pot = PolynomialPotential(a2=0.5, a4=1.0)
        c = 1.3
        spec = ModelSpec("GCL", system, grid, pot, coupling=c, beta=2.0)
        h, _ = build_gcl_hamiltonian(spec)
        a_vals, vecs = np.linalg.eigh(system.coupling_op)
        q, k = build_grid_operators(grid)
        expected = kron(system.h_sys, np.eye(7)) + kron(np.eye(3), k)
        for s in range(3):
            p_s = np.outer(vecs[:, s], vecs[:, s].conj())
            expected = expected + kron(p_s, np.diag(pot(grid.points - c * a_vals[s])))
        assert np.max(np.abs(h - expected)) <= 1e-11

    def test_cl_requires_quadratic(self):
        system = default_qutrit_system()
        grid = EnvGrid(-6.0, 6.0, 5)
        with pytest.raises(PreconditionError, match="quadratic"):
            ModelSpec("CL", system, grid, PolynomialPotential(a4=1.0), 1.0, 5.0)

    def test_cl_oscillator_parameterization_matches_quadratic_gcl(self):
        # m*omega^2 = 2*a2 and c_k = 2*a2*c give the identical matrix
        system = default_qutrit_system()
        grid = EnvGrid(-7.0, 7.0, 6)
        a2, c = 1.7, 2.5
        spec = ModelSpec("GCL", system, grid, PolynomialPotential(a2=a2), c, 5.0)
        h, _ = build_gcl_hamiltonian(spec)

        m_osc = grid.mass
        omega_sq = 2.0 * a2 / m_osc
        c_k = 2.0 * a2 * c
        alpha = c_k / (m_osc * omega_sq)
        q, k = build_grid_operators(grid)
        a_diag = np.diag(system.coupling_op).real
        cl = kron(system.h_sys, np.eye(6)) + kron(np.eye(3), k)
        for i in range(3):
            p_i = np.zeros((3, 3))
            p_i[i, i] = 1.0
            well = 0.5 * m_osc * omega_sq * (grid.points - alpha * a_diag[i]) ** 2
            cl = cl + kron(p_i, np.diag(well))
        assert np.max(np.abs(h - cl)) <= 1e-11

    def test_negative_coefficients_rejected(self):
        with pytest.raises(PreconditionError, match=">= 0"):
            PolynomialPotential(a2=-1.0)


class TestZwanzigHamiltonian:
    def test_zero_coupling_is_separable(self):
        system = default_qutrit_system()
        grid = EnvGrid(-5.0, 8.0, 9)
        env = ZwanzigEnvSpec()
        spec = ModelSpec("ZWANZIG", system, grid, env, coupling=0.0, beta=5.0)
        h, _ = build_zwanzig_hamiltonian(spec)
        q, k = build_grid_operators(grid)
        expected = kron(system.h_sys, np.eye(9)) + kron(
            np.eye(3), k + np.diag(env.u_free(grid.points))
        )
        assert np.max(np.abs(h - expected)) <= 1e-12

    def test_zero_coupling_operator_gives_scalar_shift(self):
        system = SystemModel(
            h_sys=default_qutrit_system().h_sys, coupling_op=np.zeros((3, 3))
        )
        grid = EnvGrid(-5.0, 8.0, 9)
        env = ZwanzigEnvSpec()
        spec = ModelSpec("ZWANZIG", system, grid, env, coupling=2.0, beta=5.0)
        h, _ = build_zwanzig_hamiltonian(spec)
        q, k = build_grid_operators(grid)
        well = env.u_free(grid.points) + grid.points**2
        expected = kron(system.h_sys, np.eye(9)) + kron(np.eye(3), k + np.diag(well))
        assert np.max(np.abs(h - expected)) <= 1e-12

    def test_matches_loop_oracle(self):
        system = default_qutrit_system()
        grid = EnvGrid(-5.0, 8.0, 5)
        env = ZwanzigEnvSpec()
        spec = ModelSpec("ZWANZIG", system, grid, env, coupling=5.0, beta=5.0)
        h, dims = build_zwanzig_hamiltonian(spec)
        oracle = _zwanzig_oracle(system, grid, env.u_free, 5.0)
        assert h.shape == (15, 15)
        assert np.max(np.abs(h - oracle)) <= 1e-12

    def test_interaction_part_bounded_below_by_well_minimum(self):
        system = default_qutrit_system()
        grid = EnvGrid(-6.5, 7.0, 48)
        env = ZwanzigEnvSpec()
        spec = ModelSpec("ZWANZIG", system, grid, env, coupling=3.0, beta=5.0)
        h, _ = build_zwanzig_hamiltonian(spec)
        interaction = h - kron(system.h_sys, np.eye(48))
        floor = float(np.min(env.u_free(grid.points)))
        assert np.linalg.eigvalsh(interaction)[0] >= floor - 1e-10
        assert floor >= 0.0


class TestCvZwanzigHamiltonian:
    def test_zero_coupling_is_separable(self):
        sg = EnvGrid(-3.0, 3.0, 8, mass=1.0)
        eg = EnvGrid(-3.0, 3.0, 8, mass=1.5)
        pot = PolynomialPotential(a4=1.0)
        env = ZwanzigEnvSpec()
        h, dims = build_cv_zwanzig_hamiltonian(sg, pot, eg, env, coupling=0.0)
        qs, ks = build_grid_operators(sg)
        qe, ke = build_grid_operators(eg)
        expected = kron(ks + np.diag(pot(sg.points)), np.eye(8)) + kron(
            np.eye(8), ke + np.diag(env.u_free(eg.points))
        )
        assert np.max(np.abs(h - expected)) <= 1e-12

    def test_large_mass_freezes_system_blocks(self):
        sg = EnvGrid(-3.0, 3.0, 8, mass=1e12)
        eg = EnvGrid(-3.0, 3.0, 8, mass=1.0)
        h, dims = build_cv_zwanzig_hamiltonian(
            sg, PolynomialPotential(a2=1.0), eg, ZwanzigEnvSpec(), coupling=2.0
        )
        off_block = h.reshape(8, 8, 8, 8).copy()
        for i in range(8):
            off_block[i, :, i, :] = 0.0
        assert np.max(np.abs(off_block)) <= 1e-9

    def test_matches_loop_oracle(self):
        sg = EnvGrid(-2.0, 2.0, 8, mass=1.0)
        eg = EnvGrid(-1.5, 2.5, 8, mass=2.0)
        pot = PolynomialPotential(a2=0.5)
        env = ZwanzigEnvSpec()
        c = 3.0
        h, dims = build_cv_zwanzig_hamiltonian(sg, pot, eg, env, c)
        qs, ks = build_grid_operators(sg)
        qe, ke = build_grid_operators(eg)
        oracle = np.zeros((64, 64))
        for i in range(8):
            for j in range(8):
                for m in range(8):
                    for n in range(8):
                        val = 0.0
                        if j == n:
                            val += ks[i, m]
                        if i == m:
                            val += ke[j, n]
                        if i == m and j == n:
                            val += pot(sg.points[i]) + env.u_free(eg.points[j])
                            val += 0.5 * c * (eg.points[j] - sg.points[i]) ** 2
                        oracle[i * 8 + j, m * 8 + n] = val
        assert np.max(np.abs(h - oracle)) <= 1e-12


class TestSpecValidation:
    def test_assembled_hamiltonians_are_hermitian(self, rng):
        system = SystemModel(h_sys=rand_hermitian(rng, 3), coupling_op=rand_hermitian(rng, 3))
        grid = EnvGrid(-6.0, 6.0, 24)
        for family, pot, c in [
            ("CL", PolynomialPotential(a2=1.0), 2.0),
            ("GCL", PolynomialPotential(a4=1.0), 3.0),
            ("GCL2", PolynomialPotential(a6=1.0), 1.0),
            ("ZWANZIG", ZwanzigEnvSpec(), 4.0),
        ]:
            spec = ModelSpec(family, system, grid, pot, c, 5.0)
            h, dims = build_hamiltonian(spec)
            assert max_asymmetry(h) <= 1e-12 * max(1.0, np.max(np.abs(h)))
            assert dims.total == h.shape[0]

    def test_family_payload_mismatch_rejected(self):
        system = default_qutrit_system()
        grid = EnvGrid(-6.0, 6.0, 8)
        with pytest.raises(PreconditionError):
            ModelSpec("ZWANZIG", system, grid, PolynomialPotential(a2=1.0), 1.0, 5.0)
        with pytest.raises(PreconditionError):
            ModelSpec("GCL2", system, grid, ZwanzigEnvSpec(), 1.0, 5.0)
        with pytest.raises(PreconditionError, match="family"):
            ModelSpec("GCL3", system, grid, PolynomialPotential(a2=1.0), 1.0, 5.0)

    def test_negative_coupling_rejected(self):
        system = default_qutrit_system()
        grid = EnvGrid(-6.0, 6.0, 8)
        with pytest.raises(PreconditionError, match="coupling"):
            ModelSpec("GCL2", system, grid, PolynomialPotential(a2=1.0), -1.0, 5.0)

    def test_default_grids_cover_the_wells(self):
        system = default_qutrit_system()
        g = default_env_grid("GCL2", system, coupling=16.0)
        assert g.q_min <= -16.0 - 0.5 and g.q_max >= 16.0 + 0.5
        g = default_env_grid("ZWANZIG", system, coupling=100.0)
        assert g.q_min == pytest.approx(-6.5) and g.q_max == pytest.approx(7.0)

    def test_grid_validation(self):
        with pytest.raises(PreconditionError):
            EnvGrid(1.0, -1.0, 8)
        with pytest.raises(PreconditionError):
            EnvGrid(-1.0, 1.0, 2)
        with pytest.raises(PreconditionError):
            EnvGrid(-1.0, 1.0, 8, mass=0.0)
