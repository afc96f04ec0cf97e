#!/usr/bin/env python3
"""
Tests for the end-to-end scenarios: double-slit visibility against an
imaginary-action gap, the Higgs toy and dominance sweeps
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from action_core import LatticeConfig
from errors import ConfigurationError
from scenarios import (
    DoubleSlitSetup,
    HiggsBranch,
    HiggsToySetup,
    double_slit_sweep,
    dominance_sweep,
    higgs_suppression,
    interference_pattern,
    point_branch_visibility,
    slit_amplitudes,
    two_beam_pattern,
    visibility,
)

GAPS = [0.0, 0.5, 1.0, 2.0]


def double_slit(gap: float = 0.0) -> DoubleSlitSetup:
    lattice = LatticeConfig(n_t=60, dt=0.02, x_min=-8.0, dx=0.1, n_x=161)
    setup = DoubleSlitSetup.symmetric(
        lattice, slit_time=25, separation=20, width=3, duration=5, source_width=1.0, screen_half_width=15
    )
    return setup.with_gap(gap)


def higgs(m2_i: float = 1.0) -> HiggsToySetup:
    lattice = LatticeConfig(n_t=10, dt=0.1, x_min=-5.0, dx=0.1, n_x=101)
    on = math.sqrt(10.0)
    branches = (HiggsBranch("machine-off", (0.0, 0.0)), HiggsBranch("machine-on", (on, on)))
    return HiggsToySetup(lattice, m2_r=0.0, m2_i=m2_i, branches=branches)


@pytest.mark.parametrize("delta", [0.0, 0.25, 1.0, 3.0])
def test_point_branch_visibility_formula(delta):
    r = math.exp(-delta)
    assert point_branch_visibility(delta) == pytest.approx(2.0 * r / (1.0 + r * r), abs=1e-6)


def test_point_branch_visibility_at_unit_gap():
    assert point_branch_visibility(1.0) == pytest.approx(0.6481, abs=1e-4)
    assert point_branch_visibility(2.0, hbar=2.0) == pytest.approx(point_branch_visibility(1.0))


def test_two_beam_pattern_extremes():
    pattern = two_beam_pattern(0.5)
    assert pattern.max() == pytest.approx(2.25)
    assert pattern.min() == pytest.approx(0.25)


def test_visibility_of_simple_patterns():
    assert visibility([1.0, 3.0, 1.0, 3.0, 1.0]).value == pytest.approx(0.5)
    flat = visibility([2.0, 2.0, 2.0])
    assert flat.value == 0.0 and flat.flat
    dark = visibility([0.0, 0.0])
    assert dark.flat
    ramp = visibility([1.0, 2.0, 3.0])
    assert not ramp.fringes_resolved
    assert visibility([5.0, 1.0, 3.0, 1.0, 5.0], window=(1, 4)).value == pytest.approx(0.5)
    with pytest.raises(ConfigurationError, match="window"):
        visibility([1.0, 2.0], window=(1, 1))


def test_symmetric_slits_mirror_each_other():
    setup = double_slit()
    assert setup.window_b == frozenset(160 - s for s in setup.window_a)
    assert setup.window_a == frozenset({69, 70, 71})
    assert setup.source_site == 80
    assert setup.screen() == (65, 96)
    amp_a, amp_b = slit_amplitudes(setup)
    scale = np.max(np.abs(amp_a))
    np.testing.assert_allclose(amp_b, amp_a[::-1], rtol=1e-9, atol=1e-12 * scale)


def test_gap_scales_slit_b_exactly():
    free_a, free_b = slit_amplitudes(double_slit(0.0))
    setup = double_slit(1.0)
    assert setup.depth == pytest.approx(10.0)
    amp_a, amp_b = slit_amplitudes(setup)
    r = setup.suppression
    assert r == pytest.approx(math.exp(-1.0))
    np.testing.assert_array_equal(amp_a, free_a)
    scale = np.max(np.abs(free_b))
    np.testing.assert_allclose(amp_b, r * free_b, rtol=1e-9, atol=1e-12 * scale)
    pattern = interference_pattern(setup)
    np.testing.assert_allclose(pattern, np.abs(free_a + r * free_b) ** 2, rtol=1e-8, atol=1e-12 * scale**2)


def test_large_gap_leaves_one_slit():
    setup = double_slit(20.0)
    amp_a, _ = slit_amplitudes(setup)
    start, stop = setup.screen()
    pattern = interference_pattern(setup)
    np.testing.assert_allclose(pattern[start:stop], np.abs(amp_a[start:stop]) ** 2, rtol=1e-6)


def test_fixed_gap_fixes_suppression():
    depths, ratios = [], []
    for duration in (2, 5, 10):
        setup = replace(double_slit(), duration=duration).with_gap(1.0)
        _, amp_b = slit_amplitudes(setup)
        _, amp_b_free = slit_amplitudes(setup.with_depth(0.0))
        depths.append(setup.depth)
        ratios.append(np.linalg.norm(amp_b) / np.linalg.norm(amp_b_free))
    assert depths == pytest.approx([25.0, 10.0, 5.0])
    np.testing.assert_allclose(ratios, math.exp(-1.0), rtol=1e-8)


def test_visibility_is_monotone_in_gap():
    rows = double_slit_sweep(double_slit(), GAPS)
    assert [row["gap"] for row in rows] == pytest.approx(GAPS)
    values = [row["visibility"] for row in rows]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(values, values[1:]))
    assert values[0] > 0.5
    assert not any(row["flat"] for row in rows)
    for row in rows:
        r = row["suppression"]
        assert row["point_branch_visibility"] == pytest.approx(2.0 * r / (1.0 + r * r), abs=1e-6)


def test_sweep_is_independent_of_workers():
    assert double_slit_sweep(double_slit(), [0.0, 1.0], workers=1) == double_slit_sweep(
        double_slit(), [0.0, 1.0], workers=2
    )


def test_double_slit_validation():
    lattice = LatticeConfig(n_t=20, dt=0.02, x_min=-2.0, dx=0.1, n_x=41)
    with pytest.raises(ConfigurationError, match="disjoint"):
        DoubleSlitSetup(lattice, 5, {10, 11}, {11, 12})
    with pytest.raises(ConfigurationError, match="slit_time"):
        DoubleSlitSetup(lattice, 15, {10}, {30}, duration=6)
    with pytest.raises(ConfigurationError, match="depth"):
        DoubleSlitSetup(lattice, 5, {10}, {30}, depth=-1.0)
    with pytest.raises(ConfigurationError, match="gap"):
        DoubleSlitSetup(lattice, 5, {10}, {30}).with_gap(-0.5)
    with pytest.raises(ConfigurationError, match="gaps"):
        double_slit_sweep(DoubleSlitSetup(lattice, 5, {10}, {30}), [])



def test_higgs_toy_prefers_machine_off():
    report = higgs_suppression(higgs(1.0))
    assert report.selected_label == "machine-off"
    assert report.delta_s_i == pytest.approx(10.0, rel=1e-12)
    assert report.weight_ratio == pytest.approx(2.061e-9, abs=1e-12)
    assert report.field_norms[1] == pytest.approx(10.0, rel=1e-12)


def test_higgs_toy_sign_and_tie():
    assert higgs_suppression(higgs(-1.0)).selected_label == "machine-on"
    tie = higgs_suppression(higgs(0.0))
    assert tie.selected_index == 0
    assert tie.delta_s_i == 0.0
    assert tie.weight_ratio == 1.0


def test_higgs_toy_validation():
    lattice = LatticeConfig(n_t=10, dt=0.1, x_min=-5.0, dx=0.1, n_x=101)
    with pytest.raises(ConfigurationError, match="branches"):
        HiggsToySetup(lattice, 0.0, 1.0, (HiggsBranch("only", (0.0, 0.0)),))
    with pytest.raises(ConfigurationError, match="unique"):
        HiggsToySetup(lattice, 0.0, 1.0, (HiggsBranch("a", (0.0, 0.0)), HiggsBranch("a", (1.0, 1.0))))


def test_dominance_sweep():
    rows = dominance_sweep([0.0, 1.0, 10.0])
    assert [row["delta_s_i"] for row in rows] == [0.0, 1.0, 10.0]
    assert rows[0]["weight_ratio"] == 1.0
    assert rows[2]["weight_ratio"] == pytest.approx(2.061e-9, abs=1e-12)
    with pytest.raises(ConfigurationError):
        dominance_sweep([])
