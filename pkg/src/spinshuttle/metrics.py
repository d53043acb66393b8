"""Spin purity, excited-valley population, and ensemble shuttling fidelity.

The fidelity is a clustering measure: each final state is unrotated into
the frame co-rotating with the spin in the valley ground state, reduced to
the spin, and compared against the pure state aligned with the ensemble's
mean Bloch coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import SIGMA_X, SIGMA_Y, SIGMA_Z, local_valley_eigensystem
from .errors import DomainError
from .params import PhysicalParams


def partial_trace_valley(rho: np.ndarray) -> np.ndarray:
    """Reduced 2x2 spin state Tr_V rho (works on stacked (..., 4, 4) input)."""
    rho = np.asarray(rho)
    return rho[..., :2, :2] + rho[..., 2:, 2:]


def partial_trace_spin(rho: np.ndarray) -> np.ndarray:
    """Reduced 2x2 valley state Tr_s rho."""
    rho = np.asarray(rho)
    return rho[..., 0::2, 0::2] + rho[..., 1::2, 1::2]


def spin_purity(rho: np.ndarray) -> float:
    """Tr[(Tr_V rho)^2] for a single 4x4 state."""
    rs = partial_trace_valley(rho)
    return float(np.real(np.trace(rs @ rs)))


def ensemble_spin_purity(states) -> float:
    """Purity of the noise-averaged state: average the density matrices
    first, then reduce to the spin and square."""
    states = np.asarray(states)
    if states.ndim != 3 or states.shape[0] < 1:
        raise DomainError("need at least one 4x4 state")
    return spin_purity(states.mean(axis=0))


def excited_valley_population(rho: np.ndarray, delta_r: float, delta_i: float) -> float:
    """Occupation of the local excited valley eigenstate at (delta_r, delta_i)."""
    basis = local_valley_eigensystem(delta_r, delta_i)
    rv = partial_trace_spin(np.asarray(rho))
    e = basis.excited
    return float(np.real(e.conj() @ rv @ e))


def unrotate(rho: np.ndarray, t: float, params: PhysicalParams) -> np.ndarray:
    """Undo the spin precession frame: (I (x) U)^dag rho (I (x) U) with
    U = exp(-i (E_Z/2 + gamma) sigma_z t / hbar)."""
    if t < 0:
        raise DomainError("t must be non-negative")
    alpha = (0.5 * params.zeeman_energy + params.frame_offset) / params.hbar
    u = np.exp(np.array([-1j, 1j]) * alpha * t)
    u4 = np.concatenate([u, u])
    return np.conj(u4)[:, None] * np.asarray(rho) * u4[None, :]


def bloch_vector(rho_s: np.ndarray) -> np.ndarray:
    """Re Tr(rho sigma) for a 2x2 spin state."""
    return np.array(
        [
            np.real(np.trace(rho_s @ SIGMA_X)),
            np.real(np.trace(rho_s @ SIGMA_Y)),
            np.real(np.trace(rho_s @ SIGMA_Z)),
        ]
    )


def center_state_from_bloch(r_center: np.ndarray, degenerate_tol: float = 1e-9):
    """Map mean Bloch coordinates to a pure state via theta = arccos(z),
    phi = atan2(y, x).

    Returns (theta, phi, psi, degenerate). A vanishing center falls back to
    the (theta = pi/2, phi = 0) convention.
    """
    r_center = np.asarray(r_center, dtype=float)
    degenerate = bool(np.linalg.norm(r_center) < degenerate_tol)
    if degenerate:
        theta, phi = 0.5 * math.pi, 0.0
    else:
        theta = math.acos(min(1.0, max(-1.0, float(r_center[2]))))
        phi = math.atan2(float(r_center[1]), float(r_center[0]))
    psi = np.array([math.cos(theta / 2.0), np.exp(1j * phi) * math.sin(theta / 2.0)])
    return theta, phi, psi, degenerate


@dataclass
class FidelityReport:
    """Ensemble fidelity statistics over noise realizations."""

    f_mean: float
    f_std: float
    f_values: np.ndarray
    bloch_vectors: np.ndarray
    r_center: np.ndarray
    theta: float
    phi: float
    center_state: np.ndarray
    degenerate_center: bool


@dataclass
class EnsembleResult:
    """Final joint states of an ensemble of noise realizations at t_f."""

    final_states: np.ndarray  # (N, 4, 4)
    t_f: float

    def __post_init__(self):
        self.final_states = np.asarray(self.final_states, dtype=complex)
        if self.final_states.ndim != 3 or self.final_states.shape[1:] != (4, 4):
            raise DomainError("final_states must have shape (N, 4, 4)")
        if self.n_noise < 1:
            raise DomainError("an ensemble needs at least one realization")

    @property
    def n_noise(self) -> int:
        return self.final_states.shape[0]

    def spin_purities(self) -> np.ndarray:
        rs = partial_trace_valley(self.final_states)
        return np.real(np.einsum("nab,nba->n", rs, rs))


def ensemble_fidelity(
    result: EnsembleResult,
    params: PhysicalParams,
    center_result: EnsembleResult | None = None,
) -> FidelityReport:
    """Fidelity of each realization against the ensemble center state.

    The center is derived from ``center_result`` when given (held-out
    variant: previously unseen realizations define the center) and from the
    scored ensemble itself otherwise (in-sample variant).
    """
    spins = _unrotated_spins(result, params)
    blochs = np.stack([bloch_vector(rs) for rs in spins])
    if center_result is None:
        center_blochs = blochs
    else:
        center_blochs = np.stack(
            [bloch_vector(rs) for rs in _unrotated_spins(center_result, params)]
        )
    r_center = center_blochs.mean(axis=0)
    theta, phi, psi, degenerate = center_state_from_bloch(r_center)
    f_values = np.real(np.einsum("i,nij,j->n", psi.conj(), spins, psi))
    return FidelityReport(
        f_mean=float(f_values.mean()),
        f_std=float(f_values.std()),  # population std over realizations
        f_values=f_values,
        bloch_vectors=blochs,
        r_center=r_center,
        theta=theta,
        phi=phi,
        center_state=psi,
        degenerate_center=degenerate,
    )


def _unrotated_spins(result: EnsembleResult, params: PhysicalParams) -> np.ndarray:
    return np.stack(
        [
            partial_trace_valley(unrotate(rho, result.t_f, params))
            for rho in result.final_states
        ]
    )
