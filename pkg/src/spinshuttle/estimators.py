"""Closed-form system estimators: analog power scaling and the
surface-code shuttling duty cycle."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError


def power_estimate(c_eq: float, v_pp: float, f: float) -> float:
    """Order-of-magnitude analog dissipation P = C_eq V_pp^2 f, in uW.

    c_eq in farad, v_pp in volt, f in Hz. Scaling-only: full circuit
    simulation of the reference design reports a few times more at the same
    operating point.
    """
    if c_eq <= 0 or v_pp <= 0 or f <= 0:
        raise DomainError("c_eq, v_pp and f must all be positive")
    return c_eq * v_pp * v_pp * f * 1e6


@dataclass(frozen=True)
class BudgetInputs:
    """Surface-code cycle timing inputs, all in us."""

    t_shuttle: float
    t_1q: float
    t_2q: float
    t_readout: float

    def __post_init__(self):
        if min(self.t_1q, self.t_2q, self.t_readout) <= 0 or self.t_shuttle < 0:
            raise DomainError("budget times must be positive (t_shuttle may be 0)")


@dataclass(frozen=True)
class BudgetReport:
    t_sc: float  # us
    duty_cycle: float


def surface_code_budget(inputs: BudgetInputs) -> BudgetReport:
    """Cycle time t_SC = 22 t_shuttle + 14 t_1q + 8 t_2q + t_readout and the
    shuttling duty cycle D = 22 t_shuttle / t_SC."""
    t_sc = (
        22.0 * inputs.t_shuttle
        + 14.0 * inputs.t_1q
        + 8.0 * inputs.t_2q
        + inputs.t_readout
    )
    return BudgetReport(t_sc=t_sc, duty_cycle=22.0 * inputs.t_shuttle / t_sc)
