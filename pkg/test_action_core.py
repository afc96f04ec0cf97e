#!/usr/bin/env python3
"""
Tests for the action core: lattice configs, complex potentials, the discrete
action and path weights
"""

import math
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from action_core import (
    ActionValue,
    ComplexPotential,
    LatticeConfig,
    Path,
    action,
    log_weight,
    normalized_weights,
    segment_action,
    weight,
    weight_from_action,
)
from errors import ConfigurationError

coefficient = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)


def small_lattice(n_t: int = 4) -> LatticeConfig:
    # sites 0..4 sit at -1, -0.5, 0, 0.5, 1
    return LatticeConfig(n_t=n_t, dt=0.1, x_min=-1.0, dx=0.5, n_x=5)


def test_constant_path_at_origin_has_zero_action():
    cfg = small_lattice()
    av = action(Path((2, 2, 2, 2, 2)), cfg, ComplexPotential.free())
    assert av == ActionValue(0.0, 0.0)


def test_hand_summed_two_step_path():
    cfg = LatticeConfig(n_t=2, dt=1.0, x_min=0.0, dx=1.0, n_x=2)
    pot = ComplexPotential.from_parts(imag=[0.0, 0.0, 1.0])
    av = action(Path((0, 1, 0)), cfg, pot)
    assert av.s_r == pytest.approx(1.0, abs=1e-15)
    assert av.s_i == pytest.approx(-1.0, abs=1e-15)


@settings(deadline=None, max_examples=50)
@given(
    sites=st.lists(st.integers(min_value=0, max_value=4), min_size=5, max_size=5),
    real=st.lists(coefficient, min_size=1, max_size=7),
)
def test_real_potential_gives_unit_weight(sites, real):
    cfg = small_lattice()
    pot = ComplexPotential.from_parts(real=real)
    path = Path(tuple(sites))
    assert action(path, cfg, pot).s_i == 0.0
    assert weight(path, cfg, pot) == 1.0


@settings(deadline=None, max_examples=50)
@given(
    positions=st.lists(coefficient, min_size=2, max_size=12),
    imag=st.lists(coefficient, min_size=1, max_size=5),
    data=st.data(),
)
def test_action_is_additive_over_segments(positions, imag, data):
    pot = ComplexPotential.from_parts(real=[0.3, -0.2, 0.1], imag=imag)
    split = data.draw(st.integers(min_value=0, max_value=len(positions) - 1))
    whole = segment_action(positions, 0.1, 1.0, pot)
    left = segment_action(positions[: split + 1], 0.1, 1.0, pot)
    right = segment_action(positions[split:], 0.1, 1.0, pot)
    assert whole.s_r == pytest.approx(left.s_r + right.s_r, rel=1e-12, abs=1e-12)
    assert whole.s_i == pytest.approx(left.s_i + right.s_i, rel=1e-12, abs=1e-12)


def test_weight_examples():
    assert weight_from_action(ActionValue(0.0, 0.0)) == 1.0
    assert weight_from_action(ActionValue(0.0, math.log(2.0) / 2.0)) == pytest.approx(0.5, rel=1e-15)
    assert weight_from_action(ActionValue(0.0, 10.0)) == pytest.approx(2.061e-9, abs=1e-12)
    # hbar rescales the exponent
    assert weight_from_action(ActionValue(0.0, 1.0), hbar=2.0) == pytest.approx(math.exp(-1.0))


def test_weight_is_clamped_instead_of_overflowing():
    assert weight_from_action(ActionValue(0.0, -1e6)) == sys.float_info.max


def test_weight_decreases_with_imaginary_action():
    values = [weight_from_action(ActionValue(0.0, s)) for s in (-1.0, 0.0, 0.5, 3.0)]
    assert values == sorted(values, reverse=True)


def test_flip_imag_negates_imaginary_action():
    cfg = small_lattice()
    pot = ComplexPotential.from_parts(real=[0.1, 0.2], imag=[0.5, -0.3, 0.7])
    path = Path((0, 1, 3, 4, 2))
    assert action(path, cfg, pot.flip_imag()).s_i == pytest.approx(-action(path, cfg, pot).s_i)
    assert action(path, cfg, pot.flip_imag()).s_r == action(path, cfg, pot).s_r
    assert log_weight(path, cfg, pot) == pytest.approx(-2.0 * action(path, cfg, pot).s_i)


def test_higgs_mode_imaginary_action():
    cfg = LatticeConfig(n_t=10, dt=0.1, x_min=-5.0, dx=0.1, n_x=101)
    phi = math.sqrt(10.0)
    path = Path.continuous([phi] * 11)
    av = action(path, cfg, ComplexPotential.higgs_mode(0.0, 1.0))
    assert av.s_i == pytest.approx(10.0, rel=1e-12)
    assert av.s_r == pytest.approx(0.0, abs=1e-12)


def test_potential_derivatives():
    pot = ComplexPotential.double_well()
    x = np.array([-1.0, 0.0, 0.5, 1.0])
    np.testing.assert_allclose(pot.real_values(x), 0.25 * (x * x - 1.0) ** 2)
    np.testing.assert_allclose(pot.real_derivative(x), x * (x * x - 1.0))
    np.testing.assert_allclose(pot.real_second_derivative(x), 3.0 * x * x - 1.0)


def test_potential_arithmetic():
    pot = ComplexPotential.harmonic(2.0) + ComplexPotential.from_parts(imag=[1.0])
    assert pot(0.0) == pytest.approx(1j)
    assert pot(1.0) == pytest.approx(1.0 + 1j)
    assert pot.real_part().is_real
    assert not pot.imag_part().is_real
    np.testing.assert_allclose(pot.scale_imag(3.0).imag_coefficients, [3.0, 0.0, 0.0])


def test_potential_degree_limit():
    with pytest.raises(ConfigurationError, match="degree 7"):
        ComplexPotential.from_parts(real=[1.0] * 8)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        (dict(n_t=4, dt=0.1, x_min=0.0, dx=0.5, n_x=1), "n_x"),
        (dict(n_t=0, dt=0.1, x_min=0.0, dx=0.5, n_x=5), "n_t"),
        (dict(n_t=4, dt=0.0, x_min=0.0, dx=0.5, n_x=5), "dt"),
        (dict(n_t=4, dt=0.1, x_min=0.0, dx=-0.5, n_x=5), "dx"),
        (dict(n_t=4, dt=0.1, x_min=0.0, dx=0.5, n_x=5, hbar=float("nan")), "hbar"),
        (dict(n_t=True, dt=0.1, x_min=0.0, dx=0.5, n_x=5), "n_t"),
    ],
)
def test_lattice_validation(kwargs, field):
    with pytest.raises(ConfigurationError) as excinfo:
        LatticeConfig(**kwargs)
    assert excinfo.value.field == field


def test_lattice_geometry():
    cfg = small_lattice()
    np.testing.assert_allclose(cfg.grid(), [-1.0, -0.5, 0.0, 0.5, 1.0])
    assert cfg.x_max == 1.0
    assert cfg.total_time == pytest.approx(0.4)
    assert cfg.with_steps(7).n_t == 7


def test_path_validation():
    cfg = small_lattice()
    with pytest.raises(ConfigurationError, match="n_t=4"):
        action(Path((0, 1, 2)), cfg, ComplexPotential.free())
    with pytest.raises(ConfigurationError, match="outside"):
        action(Path((0, 1, 2, 3, 5)), cfg, ComplexPotential.free())


def test_normalized_weights_handle_large_log_weights():
    probabilities = normalized_weights([1000.0, 1000.0 + math.log(3.0)])
    np.testing.assert_allclose(probabilities, [0.25, 0.75])
    assert normalized_weights([-2000.0, 0.0])[1] == 1.0
