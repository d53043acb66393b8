import pytest

from spinshuttle.errors import DomainError
from spinshuttle.estimators import BudgetInputs, power_estimate, surface_code_budget


def test_power_estimate_reference_point():
    assert power_estimate(1e-12, 0.2, 50e6) == pytest.approx(2.0)
    # linear in f
    assert power_estimate(1e-12, 0.2, 100e6) == pytest.approx(4.0)
    # formula ratio across the velocity range vs the circuit-simulated 3.77
    ratio = power_estimate(1e-12, 0.2, 50e6) / power_estimate(1e-12, 0.2, 12.5e6)
    assert ratio == pytest.approx(4.0)


def test_power_estimate_domain():
    with pytest.raises(DomainError):
        power_estimate(0.0, 0.2, 1e6)
    with pytest.raises(DomainError):
        power_estimate(1e-12, 0.2, -1.0)


def test_surface_code_budget_reference_inputs():
    report = surface_code_budget(BudgetInputs(0.5, 0.2, 0.08, 10.0))
    assert report.t_sc == pytest.approx(24.44)
    assert report.duty_cycle == pytest.approx(0.4501, abs=5e-5)


def test_budget_zero_shuttle():
    report = surface_code_budget(BudgetInputs(0.0, 0.2, 0.08, 10.0))
    assert report.duty_cycle == 0.0


def test_budget_scale_invariance():
    a = surface_code_budget(BudgetInputs(0.5, 0.2, 0.08, 10.0))
    b = surface_code_budget(BudgetInputs(1.5, 0.6, 0.24, 30.0))
    assert b.duty_cycle == pytest.approx(a.duty_cycle)
    assert b.t_sc == pytest.approx(3 * a.t_sc)


def test_budget_domain():
    with pytest.raises(DomainError):
        BudgetInputs(0.5, 0.0, 0.08, 10.0)
    with pytest.raises(DomainError):
        BudgetInputs(-0.1, 0.2, 0.08, 10.0)
