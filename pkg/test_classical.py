#!/usr/bin/env python3
"""
Tests for classical solutions: Euler-Lagrange residuals, multistart Newton,
selection of the realized history and the order of the action shift
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from action_core import ActionValue, ComplexPotential, LatticeConfig, action
from classical import (
    STATUS_CONVERGED,
    STATUS_DIVERGED,
    euler_lagrange_residual,
    find_classical_solutions,
    initial_guesses,
    newton_solve,
    saddle_shift_order,
    select_realized,
    stationary_action_shift,
)
from errors import ConfigurationError, FitError, NoClassicalSolutionError


def double_well_setup():
    """Double well with Im V = -(x + 1)^2 / 4, which vanishes at the left minimum."""
    cfg = LatticeConfig(n_t=40, dt=0.1, x_min=-2.5, dx=0.1, n_x=51)
    pot = ComplexPotential.double_well() + ComplexPotential.from_parts(imag=[-0.25, -0.5, -0.25])
    return cfg, pot


def test_residual_vanishes_on_a_free_straight_line():
    cfg = LatticeConfig(n_t=10, dt=0.1, x_min=-1.0, dx=0.1, n_x=21)
    line = np.linspace(-0.5, 0.8, cfg.n_t + 1)
    np.testing.assert_allclose(euler_lagrange_residual(line, cfg, ComplexPotential.free()), 0.0, atol=1e-12)


def test_residual_of_midpoint():
    cfg = LatticeConfig(n_t=2, dt=1.0, x_min=0.0, dx=1.0, n_x=3)
    np.testing.assert_array_equal(euler_lagrange_residual([0.0, 1.0, 2.0], cfg, ComplexPotential.free()), [0.0])


def test_harmonic_residual_is_second_order_in_dt():
    cfg = LatticeConfig(n_t=40, dt=0.05, x_min=-2.0, dx=0.1, n_x=41)
    t = cfg.dt * np.arange(cfg.n_t + 1)
    residual = euler_lagrange_residual(np.cos(t), cfg, ComplexPotential.harmonic(1.0))
    # cos(t) * dt^2 / 12 to leading order
    assert np.max(np.abs(residual)) <= 1.01 * cfg.dt**2 / 12.0
    assert np.max(np.abs(residual)) >= 0.5 * cfg.dt**2 / 12.0


def test_residual_rejects_wrong_length():
    cfg = LatticeConfig(n_t=4, dt=0.1, x_min=0.0, dx=0.1, n_x=11)
    with pytest.raises(ConfigurationError, match="positions"):
        euler_lagrange_residual([0.0, 1.0], cfg, ComplexPotential.free())


def test_free_particle_has_one_solution():
    cfg = LatticeConfig(n_t=20, dt=0.1, x_min=-2.0, dx=0.1, n_x=41)
    solutions = find_classical_solutions((0.0, 1.0), cfg, ComplexPotential.free(), n_seeds=8, seed=3)
    assert len(solutions) == 1
    np.testing.assert_allclose(solutions[0].positions, np.linspace(0.0, 1.0, cfg.n_t + 1), atol=1e-9)
    assert solutions[0].residual_norm <= 1e-10
    assert solutions.failures == []


def test_double_well_selection():
    cfg, pot = double_well_setup()
    solutions = find_classical_solutions((-1.0, -1.0), cfg, pot, n_seeds=16, seed=0)
    assert len(solutions) >= 2
    assert all(s.residual_norm <= 1e-10 for s in solutions)

    selected = select_realized(solutions.solutions)
    # the path resting in the left well accrues no imaginary action
    assert np.max(np.abs(np.asarray(solutions[selected].positions) + 1.0)) < 1e-8
    assert solutions[selected].s_i == pytest.approx(0.0, abs=1e-12)
    assert all(s.s_i > 0 for k, s in enumerate(solutions) if k != selected)

    flipped = [action(s.path(), cfg, pot.flip_imag()).s_i for s in solutions]
    flipped_index = select_realized(flipped)
    assert flipped_index != selected
    assert flipped[flipped_index] < 0


def test_solutions_are_independent_of_workers():
    cfg, pot = double_well_setup()
    serial = find_classical_solutions((-1.0, -1.0), cfg, pot, n_seeds=9, seed=5, workers=1)
    pooled = find_classical_solutions((-1.0, -1.0), cfg, pot, n_seeds=9, seed=5, workers=3)
    assert [s.positions for s in serial] == [s.positions for s in pooled]
    assert [s.action for s in serial] == [s.action for s in pooled]


def test_no_converged_seed_raises():
    cfg = LatticeConfig(n_t=20, dt=0.1, x_min=-2.0, dx=0.1, n_x=41)
    with pytest.raises(NoClassicalSolutionError) as excinfo:
        find_classical_solutions((0.0, 1.0), cfg, ComplexPotential.harmonic(), n_seeds=3, max_iterations=0)
    assert excinfo.value.exit_code == 4


def test_newton_records_failure_status():
    cfg = LatticeConfig(n_t=20, dt=0.1, x_min=-2.0, dx=0.1, n_x=41)
    line = np.linspace(0.0, 1.0, cfg.n_t + 1)
    pot = ComplexPotential.harmonic()
    assert newton_solve(line, cfg, pot, max_iterations=0).status == STATUS_DIVERGED
    outcome = newton_solve(line, cfg, pot)
    assert outcome.status == STATUS_CONVERGED
    assert outcome.residual_norm <= 1e-10


def test_initial_guesses_are_seeded():
    cfg = LatticeConfig(n_t=20, dt=0.1, x_min=-2.0, dx=0.1, n_x=41)
    first = initial_guesses((0.0, 1.0), cfg, 7, seed=11)
    again = initial_guesses((0.0, 1.0), cfg, 7, seed=11)
    other = initial_guesses((0.0, 1.0), cfg, 7, seed=12)
    assert len(first) == 7
    np.testing.assert_allclose(first[0], np.linspace(0.0, 1.0, cfg.n_t + 1))
    for a, b in zip(first, again):
        np.testing.assert_array_equal(a, b)
    assert any(not np.array_equal(a, b) for a, b in zip(first[1:], other[1:]))
    for guess in first:
        assert guess[0] == 0.0 and guess[-1] == pytest.approx(1.0, abs=1e-12)


def test_select_realized_examples():
    assert select_realized([3.0, 1.0, 2.0]) == 1
    assert select_realized([1.0, 1.0]) == 0
    assert select_realized([ActionValue(5.0, 0.5), ActionValue(-1.0, 0.2)]) == 1
    with pytest.raises(ConfigurationError):
        select_realized([])


@settings(deadline=None, max_examples=100)
@given(
    values=st.lists(st.integers(min_value=-1000, max_value=1000), min_size=1, max_size=20, unique=True),
    scale=st.integers(min_value=1, max_value=100),
    shift=st.integers(min_value=-1000, max_value=1000),
)
def test_selection_is_invariant_under_positive_rescaling(values, scale, shift):
    s_i = [float(v) for v in values]
    assert select_realized([scale * v + shift for v in s_i]) == select_realized(s_i)
    assert select_realized([-v for v in s_i]) == int(np.argmax(s_i))


def test_shift_is_second_order_on_harmonic_benchmark():
    cfg = LatticeConfig(n_t=50, dt=0.05, x_min=-2.0, dx=0.1, n_x=41)
    fit = saddle_shift_order(cfg, ComplexPotential.harmonic(1.0), ComplexPotential.from_parts(imag=[0.0, 1.0]))
    assert 1.8 <= fit.slope <= 2.2
    assert len(fit.epsilons) == 5
    assert fit.dropped == ()


def test_shift_order_validation():
    cfg = LatticeConfig(n_t=50, dt=0.05, x_min=-2.0, dx=0.1, n_x=41)
    pot = ComplexPotential.harmonic(1.0)
    direction = ComplexPotential.from_parts(imag=[0.0, 1.0])
    with pytest.raises(ConfigurationError, match="epsilons"):
        saddle_shift_order(cfg, pot, direction, epsilons=[1e-3, 1e-2, 1e-1])
    with pytest.raises(FitError):
        saddle_shift_order(cfg, pot, direction, epsilons=[1e-1, 1e-2])


def harmonic_benchmark():
    cfg = LatticeConfig(n_t=50, dt=0.05, x_min=-2.0, dx=0.1, n_x=41)
    return cfg, ComplexPotential.harmonic(1.0)


def test_zero_epsilon_gives_zero_shift():
    cfg, pot = harmonic_benchmark()
    direction = ComplexPotential.from_parts(imag=[0.0, 1.0])
    assert stationary_action_shift(cfg, pot, direction, 0.0) == 0.0
    assert stationary_action_shift(cfg, pot, direction, 1e-2) != 0.0


@pytest.mark.parametrize("imag", [[0.0], [0.7]], ids=["zero", "constant"])
def test_forceless_perturbation_does_not_move_the_action(imag):
    cfg, pot = harmonic_benchmark()
    direction = ComplexPotential.from_parts(imag=imag)
    assert stationary_action_shift(cfg, pot, direction, 1e-1) == 0.0

    fit = saddle_shift_order(cfg, pot, direction)
    assert not fit.order_defined
    assert fit.order_label == "n/a"
    assert math.isnan(fit.slope)
    assert fit.shifts == (0.0,) * 5
    assert fit.dropped == ()


def test_defined_order_label():
    cfg, pot = harmonic_benchmark()
    fit = saddle_shift_order(cfg, pot, ComplexPotential.from_parts(imag=[0.0, 1.0]))
    assert fit.order_defined
    assert fit.order_label == f"{fit.slope:.3f}"
