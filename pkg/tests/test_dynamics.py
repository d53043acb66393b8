import math

import numpy as np
import pytest

from spinshuttle.dynamics import (
    EPS_DELTA,
    LindbladSpec,
    assert_valid_state,
    auto_substeps,
    build_hamiltonian,
    initial_shuttle_state,
    local_valley_eigensystem,
    product_state,
    propagate,
)
from spinshuttle.errors import DomainError, IntegrationError, ValleyDegeneracyError
from spinshuttle.params import PhysicalParams, TimeGrid
from spinshuttle.trajectory import Trajectory
from spinshuttle.valleymap import ValleyMap

PHYS = PhysicalParams()


def constant_map(dr, di, x_min=-500.0, x_max=2500.0):
    n = 301
    return ValleyMap(x_min, (x_max - x_min) / (n - 1), np.full(n, dr), np.full(n, di))


def static_trajectory(n=1001, dt=0.1, x=0.0):
    grid = TimeGrid(dt, n)
    return Trajectory(np.full(n, x), np.zeros(n), grid)


def test_hamiltonian_structure():
    phys = PhysicalParams(delta_g_over_g=0.0)
    terms = build_hamiltonian(2.0, -1.0, phys)
    assert np.allclose(terms.h_vs, 0.0)
    # H_S acts on the spin only, H_V on the valley only
    assert np.allclose(terms.h_s, terms.h_s.conj().T)
    assert np.allclose(terms.h_v[:2, :2], 0.0)
    assert np.trace(terms.h_vs) == pytest.approx(0.0)


def test_hamiltonian_pure_valley_spectrum():
    phys = PhysicalParams(b_z=0.0)
    terms = build_hamiltonian(3.0, 0.0, phys)
    evals = np.linalg.eigvalsh(terms.total)
    assert evals == pytest.approx([-3.0, -3.0, 3.0, 3.0])


def test_hamiltonian_spectrum_closed_form():
    # simultaneous eigenbasis of tau_z_local and sigma_z gives
    # lambda(v, s) = v |Delta| + s E_Z / 2 - kappa_z v s for v, s = +-1
    phys = PhysicalParams(delta_g_over_g=0.1, b_z=0.05)
    delta_r, delta_i = 1.0, 1.0
    mag = math.hypot(delta_r, delta_i)
    e_z, kz = phys.zeeman_energy, phys.valley_spin_coupling
    expected = sorted(
        v * mag + s * e_z / 2 - kz * v * s for v in (-1, 1) for s in (-1, 1)
    )
    evals = np.linalg.eigvalsh(build_hamiltonian(delta_r, delta_i, phys).total)
    assert evals == pytest.approx(expected, abs=1e-12)


def test_hamiltonian_degenerate_valley():
    with pytest.raises(ValleyDegeneracyError):
        build_hamiltonian(0.0, 0.0, PHYS)


def test_local_eigensystem():
    basis = local_valley_eigensystem(5.0, 0.0)
    assert basis.ground == pytest.approx(np.array([1.0, -1.0]) / math.sqrt(2))
    for dr, di in ((5.0, 0.0), (1.0, -2.0), (-3.0, 0.4)):
        b = local_valley_eigensystem(dr, di)
        assert b.tau_z_local @ b.excited == pytest.approx(b.excited)
        assert b.tau_z_local @ b.ground == pytest.approx(-b.ground)
        assert b.ground[0].real > 0 and abs(b.ground[0].imag) < 1e-15
        h_v = np.array([[0, dr - 1j * di], [dr + 1j * di, 0]])
        assert h_v @ b.ground == pytest.approx(-math.hypot(dr, di) * b.ground)
    with pytest.raises(ValleyDegeneracyError):
        local_valley_eigensystem(0.0, EPS_DELTA / 10)


def test_dissipator_gauge_invariance():
    rng = np.random.default_rng(0)
    rho = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    rho = rho @ rho.conj().T
    rho /= np.trace(rho)
    L = local_valley_eigensystem(1.0, 2.0).lowering_full

    def dissipator(op):
        return op @ rho @ op.conj().T - 0.5 * (
            op.conj().T @ op @ rho + rho @ op.conj().T @ op
        )

    for alpha in (0.3, 1.7, -2.2):
        assert np.abs(dissipator(np.exp(1j * alpha) * L) - dissipator(L)).max() < 1e-12


def test_propagate_purity_preserved_commuting():
    vmap = constant_map(20.0, 5.0)
    traj = static_trajectory(2001)
    rho0 = initial_shuttle_state(vmap)
    res = propagate(rho0, traj, vmap, PHYS, LindbladSpec(float("inf")))
    purities = np.real(np.einsum("nab,nba->n", res.states, res.states))
    assert np.abs(purities - 1.0).max() < 1e-8


def test_propagate_exponential_decay():
    vmap = constant_map(5.0, 1.0)
    traj = static_trajectory(1001)
    basis = local_valley_eigensystem(5.0, 1.0)
    up = np.array([1.0, 0.0])
    rho0 = product_state(basis.excited, up)
    res = propagate(rho0, traj, vmap, PHYS, LindbladSpec(100.0))
    e_full = np.kron(basis.excited, up)
    p_e = float(np.real(e_full.conj() @ res.final_state @ e_full))
    assert abs(p_e - math.exp(-1.0)) / math.exp(-1.0) < 1e-6


def test_propagate_matches_matrix_exponential():
    vmap = constant_map(1.0, 1.0)
    traj = static_trajectory(101)
    phys = PhysicalParams(delta_g_over_g=0.1)
    rng = np.random.default_rng(2)
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    psi /= np.linalg.norm(psi)
    rho0 = np.outer(psi, psi.conj())
    res = propagate(rho0, traj, vmap, phys, LindbladSpec(float("inf")), rtol=1e-10)
    h = build_hamiltonian(1.0, 1.0, phys).total
    evals, vecs = np.linalg.eigh(h)
    u = (vecs * np.exp(-1j * evals * traj.grid.t_final / phys.hbar)) @ vecs.conj().T
    assert np.abs(res.final_state - u @ rho0 @ u.conj().T).max() < 1e-8


def test_propagate_invariants_and_result_fields():
    vmap = constant_map(6.0, -2.0)
    traj = static_trajectory(501)
    rho0 = initial_shuttle_state(vmap)
    res = propagate(rho0, traj, vmap, PHYS, LindbladSpec(200.0))
    traces = np.einsum("nii->n", res.states)
    assert np.abs(traces - 1.0).max() < 1e-9
    herm = np.abs(res.states - np.conj(np.swapaxes(res.states, 1, 2))).max()
    assert herm < 1e-10
    assert res.min_eigenvalue >= -1e-8
    assert res.substeps >= 1
    assert res.frozen_samples == 0


def test_fourth_order_convergence():
    # moving dot over a smooth map; reference at a very fine step
    n = 201
    grid = TimeGrid(0.1, n)
    x = 20.0 * grid.times()
    traj = Trajectory(x, np.full(n, 20.0), grid)
    xs = np.arange(-100.0, 600.0, 1.0)
    vmap = ValleyMap(
        -100.0,
        1.0,
        8.0 + 3.0 * np.sin(2 * np.pi * xs / 180.0),
        2.0 + 1.5 * np.cos(2 * np.pi * xs / 140.0),
    )
    rho0 = initial_shuttle_state(vmap)
    lind = LindbladSpec(500.0)

    def final(substeps):
        # loose positivity gate: the coarse runs are intentionally inaccurate
        return propagate(
            rho0, traj, vmap, PHYS, lind, substeps=substeps, rtol=1e-2
        ).final_state

    ref = final(64)
    e1 = np.abs(final(4) - ref).max()
    e2 = np.abs(final(8) - ref).max()
    assert e1 / e2 > 8.0  # 4th order would give ~16x


def test_purity_monotone_under_pure_dissipation_window():
    # B_z = 0 and dg/g = 0: the Hamiltonian commutes with the local basis,
    # purity decay is dissipation-only over the early window
    phys = PhysicalParams(b_z=0.0, delta_g_over_g=0.0)
    vmap = constant_map(3.0, 1.0)
    t_1v = 100.0
    traj = static_trajectory(501)  # 50 ns = 0.5 T_1v
    basis = local_valley_eigensystem(3.0, 1.0)
    sup = (basis.ground + basis.excited) / np.linalg.norm(basis.ground + basis.excited)
    rho0 = product_state(sup, np.array([1.0, 0.0]))
    res = propagate(rho0, traj, vmap, phys, LindbladSpec(t_1v))
    purity = np.real(np.einsum("nab,nba->n", res.states, res.states))
    assert purity.max() <= 1 + 1e-9
    assert np.all(np.diff(purity) <= 1e-12)


def test_degeneracy_freeze_counts_samples():
    xs = np.arange(-400.0, 2401.0, 1.0)
    dr = np.where(np.abs(xs - 1000.0) < 5.0, 0.0, 10.0)
    vmap = ValleyMap(-400.0, 1.0, dr, np.zeros_like(xs))
    grid = TimeGrid(0.1, 1001)
    x = 20.0 * grid.times()
    traj = Trajectory(x, np.full_like(x, 20.0), grid)
    rho0 = initial_shuttle_state(vmap)
    res = propagate(rho0, traj, vmap, PHYS, LindbladSpec(1e6), rtol=1e-5,
                    budget="observable")
    assert res.frozen_samples > 0
    assert abs(np.trace(res.final_state).real - 1.0) < 1e-9


def test_initial_state_degenerate_position():
    vmap = constant_map(0.0, 0.0)
    with pytest.raises(ValleyDegeneracyError):
        initial_shuttle_state(vmap)


def test_unstable_step_raises_integration_error():
    vmap = constant_map(40.0, 0.0)  # theta = dt * span / hbar ~ 13 >> stability
    traj = static_trajectory(301)
    rho0 = initial_shuttle_state(vmap)
    with pytest.raises(IntegrationError):
        propagate(rho0, traj, vmap, PHYS, LindbladSpec(1e6), substeps=1)


def test_trajectory_outside_map_extent():
    vmap = constant_map(5.0, 0.0, x_min=0.0, x_max=100.0)
    grid = TimeGrid(0.1, 101)
    x = 20.0 * grid.times()  # reaches 200 nm
    traj = Trajectory(x, np.full(101, 20.0), grid)
    with pytest.raises(DomainError):
        propagate(initial_shuttle_state(vmap, 0.0), traj, vmap, PHYS, LindbladSpec(1e6))


def test_assert_valid_state():
    rho = np.eye(4, dtype=complex) / 4
    assert_valid_state(rho)
    with pytest.raises(DomainError):
        assert_valid_state(rho * 1.5)
    bad = rho.copy()
    bad[0, 1] = 0.5
    with pytest.raises(DomainError):
        assert_valid_state(bad)


def test_auto_substeps_scaling():
    s_state = auto_substeps(5000, 0.1, 100.0, 1e-8, "state")
    s_obs = auto_substeps(5000, 0.1, 100.0, 1e-8, "observable")
    assert s_state >= s_obs >= math.ceil(10.0 / 2.5)
    assert auto_substeps(5000, 0.1, 100.0, 1e-4, "state") < s_state
    with pytest.raises(DomainError):
        auto_substeps(100, 0.1, 10.0, 1e-6, "bogus")
