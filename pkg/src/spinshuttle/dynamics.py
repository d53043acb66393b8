"""Spin-valley Hamiltonian assembly and Lindblad propagation.

Basis: the fixed product basis |valley-z> (x) |spin>, ordered
(+z up, +z down, -z up, -z down), index = 2 v + s. Energies in ueV, times
in ns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, IntegrationError, ValleyDegeneracyError
from .params import PhysicalParams
from .trajectory import Trajectory
from .valleymap import ValleyMap

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

#: Below this |Delta| (ueV) the local valley axis is considered degenerate.
EPS_DELTA = 1e-6

# Spec tolerances for state invariants.
TRACE_TOL = 1e-9
HERMITICITY_TOL = 1e-10
POSITIVITY_TOL = -1e-8


@dataclass(frozen=True)
class HamiltonianTerms:
    """The three Hamiltonian contributions at one dot position (ueV)."""

    h_s: np.ndarray
    h_v: np.ndarray
    h_vs: np.ndarray
    e_z: float
    kappa_z: float

    @property
    def total(self) -> np.ndarray:
        return self.h_s + self.h_v + self.h_vs


@dataclass(frozen=True)
class LindbladSpec:
    """Valley relaxation channel with lifetime t_1v (ns)."""

    t_1v: float

    def __post_init__(self):
        if self.t_1v <= 0 and not math.isinf(self.t_1v):
            raise DomainError("t_1v must be positive (or inf for no relaxation)")

    @property
    def rate(self) -> float:
        return 0.0 if math.isinf(self.t_1v) else 1.0 / self.t_1v


@dataclass(frozen=True)
class LocalValleyBasis:
    """Valley eigensystem at one position, gauge-fixed so the first
    component of each eigenvector is real positive."""

    ground: np.ndarray  # eigenvalue -|Delta|
    excited: np.ndarray  # eigenvalue +|Delta|
    tau_z_local: np.ndarray  # 2x2
    lowering: np.ndarray  # |g><e|, 2x2

    @property
    def lowering_full(self) -> np.ndarray:
        return np.kron(self.lowering, IDENTITY_2)


def build_hamiltonian(delta_r: float, delta_i: float, params: PhysicalParams) -> HamiltonianTerms:
    """Assemble H = H_S + H_V + H_VS at intervalley coupling (delta_r, delta_i).

    H_S is the Zeeman term, H_V the valley coupling, and H_VS the
    valley-dependent g-factor term -kappa_z tau_z_local (x) sigma_z, which
    requires |Delta| > 0.
    """
    e_z = params.zeeman_energy
    kappa_z = params.valley_spin_coupling
    mag = math.hypot(delta_r, delta_i)
    if mag <= 0.0:
        raise ValleyDegeneracyError("|Delta| = 0: the local valley axis is undefined")
    h_s = 0.5 * e_z * np.kron(IDENTITY_2, SIGMA_Z)
    h_v = np.kron(delta_r * SIGMA_X + delta_i * SIGMA_Y, IDENTITY_2)
    tau_z_local = (delta_r * SIGMA_X + delta_i * SIGMA_Y) / mag
    h_vs = -kappa_z * np.kron(tau_z_local, SIGMA_Z)
    return HamiltonianTerms(h_s=h_s, h_v=h_v, h_vs=h_vs, e_z=e_z, kappa_z=kappa_z)


def local_valley_eigensystem(
    delta_r: float, delta_i: float, eps: float = EPS_DELTA
) -> LocalValleyBasis:
    """Local valley eigenbasis of delta_r tau_x + delta_i tau_y."""
    mag = math.hypot(delta_r, delta_i)
    if mag < eps:
        raise ValleyDegeneracyError(
            f"|Delta| = {mag:.3g} ueV below the degeneracy threshold {eps:.3g} ueV"
        )
    phase = complex(delta_r, delta_i) / mag
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    ground = np.array([inv_sqrt2, -inv_sqrt2 * phase], dtype=complex)
    excited = np.array([inv_sqrt2, inv_sqrt2 * phase], dtype=complex)
    tau_z_local = np.array(
        [[0.0, np.conj(phase)], [phase, 0.0]], dtype=complex
    )
    lowering = np.outer(ground, excited.conj())
    return LocalValleyBasis(ground, excited, tau_z_local, lowering)


def product_state(valley: np.ndarray, spin: np.ndarray) -> np.ndarray:
    """Density matrix of |valley> (x) |spin> (both normalized 2-vectors)."""
    psi = np.kron(np.asarray(valley, dtype=complex), np.asarray(spin, dtype=complex))
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def initial_shuttle_state(vmap: ValleyMap, x: float = 0.0) -> np.ndarray:
    """Default initial state: local valley ground at x, spin on the equator.

    The equator spin state (|up> + |down>) / sqrt(2) is maximally sensitive
    to the valley-dependent dephasing this toolkit studies.
    """
    dr, di = vmap.sample(x)
    basis = local_valley_eigensystem(float(dr), float(di))
    spin = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    return product_state(basis.ground, spin)


def assert_valid_state(
    rho: np.ndarray,
    trace_tol: float = TRACE_TOL,
    herm_tol: float = HERMITICITY_TOL,
    psd_tol: float = POSITIVITY_TOL,
) -> None:
    if rho.shape != (4, 4):
        raise DomainError("state must be a 4x4 density matrix")
    if abs(np.trace(rho).real - 1.0) > trace_tol or abs(np.trace(rho).imag) > trace_tol:
        raise DomainError(f"state trace {np.trace(rho)} deviates from 1")
    if np.abs(rho - rho.conj().T).max() > herm_tol:
        raise DomainError("state is not Hermitian within tolerance")
    if np.linalg.eigvalsh(rho).min() < psd_tol:
        raise DomainError("state has a negative eigenvalue beyond tolerance")


@dataclass
class PropagationResult:
    states: np.ndarray  # (n, 4, 4) at the grid points
    times: np.ndarray
    substeps: int
    frozen_samples: int
    min_eigenvalue: float

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def spectral_rate_bound(
    max_abs_delta: float, params: PhysicalParams, lindblad: LindbladSpec
) -> float:
    """Upper bound on the fastest coherence frequency (rad/ns)."""
    span = 2.0 * max_abs_delta + params.zeeman_energy + 2.0 * params.valley_spin_coupling
    return span / params.hbar + 2.0 * lindblad.rate


def auto_substeps(
    n_steps: int, dt: float, rate_bound: float, rtol: float, budget: str = "state"
) -> int:
    """Substep count from RK4 stability (theta < 2.5) plus accumulated
    truncation-error budgets of roughly rtol over the whole run.

    budget="state" bounds the full state error including the coherent phase
    of the fastest mode (theta^5/120 per substep). budget="observable"
    bounds only the positivity/purity deviation of the non-CP truncation
    (~1e-3 theta^6 per substep, constant calibrated on notch-map runs);
    phase errors are common-mode for ensemble statistics such as purity,
    valley population and the clustering fidelity, so observable-grade runs
    can take far larger steps at the same reported accuracy."""
    theta = dt * rate_bound
    if theta <= 0:
        return 1
    if budget not in ("state", "observable"):
        raise DomainError(f"unknown error budget {budget!r}")
    s_stab = math.ceil(theta / 2.5)
    s_psd = math.ceil((5e-3 * n_steps * theta**6 / rtol) ** 0.2)
    if budget == "state":
        s_phase = math.ceil((n_steps * theta**5 / (120.0 * rtol)) ** 0.25)
    else:
        s_phase = 1
    return max(1, s_stab, s_phase, s_psd)


def propagate(
    rho0: np.ndarray,
    traj: Trajectory,
    vmap: ValleyMap,
    params: PhysicalParams,
    lindblad: LindbladSpec | None = None,
    substeps: int | None = None,
    rtol: float = 1e-8,
    budget: str = "state",
    check_stride: int | None = None,
) -> PropagationResult:
    """Integrate the Lindblad master equation along the trajectory.

    Classic fixed-step RK4 on the vectorized equation; the Hamiltonian and
    the collapse operator are sampled at substep start/mid/end points via
    linear interpolation of the trajectory and the valley map. With
    substeps=None the count is chosen from the spectral bound of the map
    region the trajectory visits and the rtol budget (see auto_substeps for
    the state vs observable budget semantics).

    Near valley degeneracies (|Delta| < EPS_DELTA) the local axis entering
    H_VS and the collapse operator is frozen at its last well-defined value;
    the number of frozen samples is reported in the result.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    assert_valid_state(rho0)
    if lindblad is None:
        lindblad = LindbladSpec(t_1v=params.t_1v)

    x = np.ascontiguousarray(traj.x, dtype=float)
    margin = 2.0 * vmap.dx
    if x.min() < vmap.x_min - margin or x.max() > vmap.x_max + margin:
        raise DomainError(
            f"trajectory range [{x.min():.1f}, {x.max():.1f}] nm leaves the map "
            f"extent [{vmap.x_min:.1f}, {vmap.x_max:.1f}] nm"
        )

    lo = max(0, int((x.min() - vmap.x_min) / vmap.dx) - 1)
    hi = min(vmap.n_points, int((x.max() - vmap.x_min) / vmap.dx) + 3)
    max_abs = float(np.hypot(vmap.delta_r[lo:hi], vmap.delta_i[lo:hi]).max())
    n_steps = x.size - 1
    if substeps is None:
        bound = spectral_rate_bound(max_abs, params, lindblad)
        substeps = auto_substeps(n_steps, traj.grid.dt, bound, rtol, budget)
    if substeps < 1:
        raise DomainError("substeps must be >= 1")

    dr0, di0 = vmap.sample(float(x[0]))
    mag0 = math.hypot(float(dr0), float(di0))
    if mag0 < EPS_DELTA:
        raise ValleyDegeneracyError(
            "valley coupling degenerate at the initial position; no reference axis"
        )

    states = np.empty((x.size, 4, 4), dtype=complex)
    frozen = _kernels.rk4_lindblad(
        rho0,
        x,
        traj.grid.dt,
        substeps,
        vmap.x_min,
        1.0 / vmap.dx,
        vmap.delta_r,
        vmap.delta_i,
        params.zeeman_energy,
        params.valley_spin_coupling,
        params.hbar,
        lindblad.rate,
        EPS_DELTA,
        float(dr0) / mag0,
        float(di0) / mag0,
        states,
    )

    if not np.all(np.isfinite(states.view(float))):
        raise IntegrationError(
            "state diverged (non-finite entries); the step exceeds the RK4 "
            "stability bound, use more substeps"
        )
    traces = np.einsum("nii->n", states)
    if np.abs(traces - 1.0).max() > TRACE_TOL:
        raise IntegrationError(
            f"trace drifted by {np.abs(traces - 1.0).max():.2e} (> {TRACE_TOL}); "
            "reduce the step (more substeps)"
        )
    herm = np.abs(states - np.conj(np.swapaxes(states, 1, 2))).max()
    if herm > HERMITICITY_TOL:
        raise IntegrationError(
            f"Hermiticity drifted by {herm:.2e} (> {HERMITICITY_TOL}); "
            "reduce the step (more substeps)"
        )
    if check_stride is None:
        check_stride = max(1, x.size // 50)
    checked = list(range(0, x.size, check_stride))
    if checked[-1] != x.size - 1:
        checked.append(x.size - 1)
    min_eig = float(min(np.linalg.eigvalsh(states[i]).min() for i in checked))
    # The positivity gate scales with the requested accuracy (10x headroom
    # over the step-rule target); it catches runaway integration, while the
    # reported min_eigenvalue lets callers assert the tight default-accuracy
    # tolerance on their own runs.
    psd_gate = min(POSITIVITY_TOL, -10.0 * rtol)
    if min_eig < psd_gate:
        raise IntegrationError(
            f"state positivity violated (min eigenvalue {min_eig:.2e} < {psd_gate:.1e}); "
            "reduce the step (more substeps)"
        )
    return PropagationResult(
        states=states,
        times=traj.grid.times(),
        substeps=int(substeps),
        frozen_samples=int(frozen),
        min_eigenvalue=min_eig,
    )
