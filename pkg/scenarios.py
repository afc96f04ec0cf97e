"""
Scenarios module for the complex-action lab
End-to-end experiments built on the engines: double-slit visibility against
an imaginary-action gap, the single-mode Higgs toy and dominance sweeps
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from action_core import ComplexPotential, LatticeConfig, is_integer
from classical import find_classical_solutions, select_realized
from errors import ConfigurationError
from parallel import ordered_map
from propagator import ENGINE_SPLIT_STEP, ENGINES, PathConstraint, PotentialWindow, propagate_state

logger = logging.getLogger(__name__)

FLAT_TOLERANCE = 1e-12
DEFAULT_PHASE_SAMPLES = 256
DEFAULT_FRINGES = 2


@dataclass(frozen=True)
class Visibility:
    """Fringe contrast over a screen window."""

    value: float
    flat: bool = False
    fringes_resolved: bool = True


@dataclass(frozen=True)
class DoubleSlitSetup:
    """
    Two-slit lattice experiment.

    Each slit is a channel: the path is held inside its window for the
    `duration` steps starting at `slit_time`. Slit B additionally carries an
    imaginary potential of the given depth during the same steps, so every
    path through B accrues depth*duration*dt of extra imaginary action.

    The source is a Gaussian of width source_width centred on source_site,
    or a single site when source_width is 0.
    """

    lattice: LatticeConfig
    slit_time: int
    window_a: FrozenSet[int]
    window_b: FrozenSet[int]
    depth: float = 0.0
    duration: int = 1
    source_site: Optional[int] = None
    source_width: float = 0.0
    potential: ComplexPotential = field(default_factory=ComplexPotential.free)
    engine: str = ENGINE_SPLIT_STEP
    screen_window: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        object.__setattr__(self, "window_a", frozenset(int(s) for s in self.window_a))
        object.__setattr__(self, "window_b", frozenset(int(s) for s in self.window_b))
        cfg = self.lattice
        if not self.window_a or not self.window_b:
            raise ConfigurationError("slit windows must not be empty", field="windows")
        if self.window_a & self.window_b:
            raise ConfigurationError("slit windows must be disjoint", field="windows")
        if any(not 0 <= s < cfg.n_x for s in self.window_a | self.window_b):
            raise ConfigurationError("slit windows must lie inside the grid", field="windows")
        if not is_integer(self.duration) or self.duration < 1:
            raise ConfigurationError(f"must be an integer >= 1, got {self.duration!r}", field="duration")
        if not is_integer(self.slit_time) or self.slit_time < 0 or self.slit_time + self.duration > cfg.n_t:
            raise ConfigurationError(
                f"slit steps [{self.slit_time}, {self.slit_time + self.duration}) must fit in [0, {cfg.n_t})",
                field="slit_time",
            )
        if not (math.isfinite(self.depth) and self.depth >= 0):
            raise ConfigurationError(f"must be a finite number >= 0, got {self.depth!r}", field="depth")
        if not (math.isfinite(self.source_width) and self.source_width >= 0):
            raise ConfigurationError(f"must be >= 0, got {self.source_width!r}", field="source_width")
        if self.source_site is not None and not (is_integer(self.source_site) and 0 <= self.source_site < cfg.n_x):
            raise ConfigurationError(f"site {self.source_site!r} outside the grid", field="source_site")
        if self.engine not in ENGINES:
            raise ConfigurationError(f"unknown engine {self.engine!r}", field="engine")
        if self.screen_window is not None:
            start, stop = self.screen_window
            if not 0 <= start < stop <= cfg.n_x:
                raise ConfigurationError(f"window {self.screen_window} outside [0, {cfg.n_x}]", field="screen_window")

    @classmethod
    def symmetric(
        cls,
        lattice: LatticeConfig,
        slit_time: int,
        separation: int,
        width: int,
        depth: float = 0.0,
        duration: int = 1,
        source_width: float = 0.0,
        engine: str = ENGINE_SPLIT_STEP,
        screen_half_width: Optional[int] = None,
    ) -> "DoubleSlitSetup":
        """
        Slits mirrored about the grid centre with the source on the centre site.

        separation is the distance in sites between the slit centres; the grid
        needs an odd number of sites for an exact mirror. screen_half_width
        narrows the visibility window to the sites within that many of the centre.
        """
        centre = (lattice.n_x - 1) // 2
        half = separation // 2
        offsets = range(-(width // 2), width - width // 2)
        window_a = frozenset(centre - half + o for o in offsets)
        window_b = frozenset(lattice.n_x - 1 - s for s in window_a)
        screen = None
        if screen_half_width is not None:
            screen = (centre - screen_half_width, centre + screen_half_width + 1)
        return cls(
            lattice=lattice,
            slit_time=slit_time,
            window_a=window_a,
            window_b=window_b,
            depth=depth,
            duration=duration,
            source_site=centre,
            source_width=source_width,
            engine=engine,
            screen_window=screen,
        )

    @property
    def gap(self) -> float:
        """Extra imaginary action depth*duration*dt of every path through slit B."""
        return self.depth * self.duration * self.lattice.dt

    @property
    def suppression(self) -> float:
        """Amplitude factor r = exp(-gap/hbar) picked up by slit B."""
        return math.exp(-self.gap / self.lattice.hbar)

    def with_depth(self, depth: float) -> "DoubleSlitSetup":
        return replace(self, depth=depth)

    def with_gap(self, gap: float) -> "DoubleSlitSetup":
        """Same setup with the window depth chosen so slit B trails by gap."""
        if not (math.isfinite(gap) and gap >= 0):
            raise ConfigurationError(f"must be a finite number >= 0, got {gap!r}", field="gap")
        return replace(self, depth=gap / (self.duration * self.lattice.dt))

    def initial_state(self) -> np.ndarray:
        cfg = self.lattice
        site = self.source_site if self.source_site is not None else (cfg.n_x - 1) // 2
        psi = np.zeros(cfg.n_x, dtype=complex)
        if self.source_width == 0:
            psi[site] = 1.0
            return psi
        x = cfg.grid() - cfg.site_position(site)
        psi[:] = np.exp(-0.25 * (x / self.source_width) ** 2)
        return psi / np.linalg.norm(psi)

    def screen(self) -> Tuple[int, int]:
        """Visibility window, by default the central third of the grid."""
        if self.screen_window is not None:
            return self.screen_window
        third = self.lattice.n_x // 3
        return third, self.lattice.n_x - third


def _channel(window: FrozenSet[int], start: int, n_steps: int) -> List[PathConstraint]:
    return [PathConstraint(t, window) for t in range(start, start + n_steps)]


def slit_amplitudes(setup: DoubleSlitSetup) -> Tuple[np.ndarray, np.ndarray]:
    """Screen amplitudes of the paths through slit A and through slit B."""
    cfg = setup.lattice
    psi0 = setup.initial_state()
    channel_a = _channel(setup.window_a, setup.slit_time, setup.duration)
    channel_b = _channel(setup.window_b, setup.slit_time, setup.duration)
    windows = []
    if setup.depth > 0:
        windows.append(PotentialWindow.imaginary(setup.slit_time, setup.duration, setup.window_b, setup.depth))

    amp_a = propagate_state(psi0, cfg, setup.potential, channel_a, (), setup.engine)
    amp_b = propagate_state(psi0, cfg, setup.potential, channel_b, windows, setup.engine)
    for name, amp in (("A", amp_a), ("B", amp_b)):
        if not np.any(amp):
            logger.warning("Degenerate double-slit setup: no amplitude reaches the screen through slit %s", name)
    return amp_a, amp_b


def interference_pattern(setup: DoubleSlitSetup) -> np.ndarray:
    """Screen intensity |amp_A + amp_B|^2 at every final site."""
    amp_a, amp_b = slit_amplitudes(setup)
    return np.abs(amp_a + amp_b) ** 2


def _has_fringes(values: np.ndarray) -> bool:
    if values.size < 3:
        return False
    inner = values[1:-1]
    maxima = np.any((inner > values[:-2]) & (inner >= values[2:]))
    minima = np.any((inner < values[:-2]) & (inner <= values[2:]))
    return bool(maxima and minima)


def visibility(intensity: Sequence[float], window: Optional[Tuple[int, int]] = None) -> Visibility:
    """
    Fringe contrast (I_max - I_min)/(I_max + I_min) over a window of sites.

    window is a (start, stop) slice and defaults to the whole array. A flat
    window gives visibility 0 with the flat flag set; a window without an
    interior local maximum and minimum is reported as unresolved.
    """
    values = np.asarray(intensity, dtype=float)
    if window is not None:
        start, stop = window
        values = values[start:stop]
    if values.size == 0:
        raise ConfigurationError("empty visibility window", field="window")

    high, low = float(values.max()), float(values.min())
    if high <= 0 or high - low <= FLAT_TOLERANCE * high:
        return Visibility(0.0, flat=True, fringes_resolved=False)

    resolved = _has_fringes(values)
    if not resolved:
        logger.warning("Visibility window does not cover a full fringe")
    return Visibility((high - low) / (high + low), flat=False, fringes_resolved=resolved)


def two_beam_pattern(
    r: float, n_phase: int = DEFAULT_PHASE_SAMPLES, n_fringes: int = DEFAULT_FRINGES
) -> np.ndarray:
    """
    Point-branch reduction: |a + r*a*exp(i*theta)|^2 with a = 1.

    theta runs over n_fringes full turns in n_phase samples and hits both 0
    and pi when n_phase is a multiple of 2*n_fringes.
    """
    theta = 2.0 * np.pi * n_fringes * np.arange(n_phase) / n_phase
    return np.abs(1.0 + r * np.exp(1j * theta)) ** 2


def point_branch_visibility(delta_eff: float, hbar: float = 1.0) -> float:
    """Visibility of two point branches whose imaginary actions differ by delta_eff."""
    r = math.exp(-delta_eff / hbar)
    return visibility(two_beam_pattern(r)).value


def double_slit_sweep(setup: DoubleSlitSetup, gaps: Sequence[float], workers: int = 1) -> List[Dict]:
    """Visibility of the lattice pattern for every imaginary-action gap, rows in input order."""
    if len(gaps) == 0:
        raise ConfigurationError("at least one gap is required", field="gaps")
    points = [setup.with_gap(float(g)) for g in gaps]

    def run(point: DoubleSlitSetup) -> Dict:
        result = visibility(interference_pattern(point), point.screen())
        return {
            "gap": point.gap,
            "depth": point.depth,
            "suppression": point.suppression,
            "visibility": result.value,
            "point_branch_visibility": point_branch_visibility(point.gap, point.lattice.hbar),
            "flat": result.flat,
        }

    return ordered_map(run, points, workers)


@dataclass(frozen=True)
class HiggsBranch:
    """A history of the mode fixed by its boundary values."""

    label: str
    boundary: Tuple[float, float]


@dataclass(frozen=True)
class HiggsToySetup:
    """Single field mode with complex mass squared and competing driven histories."""

    lattice: LatticeConfig
    m2_r: float
    m2_i: float
    branches: Tuple[HiggsBranch, ...] = (
        HiggsBranch("machine-off", (0.0, 0.0)),
        HiggsBranch("machine-on", (1.0, 1.0)),
    )

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if len(self.branches) < 2:
            raise ConfigurationError("at least two branches are required", field="branches")
        labels = [b.label for b in self.branches]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"labels must be unique, got {labels}", field="branches")
        for name in ("m2_r", "m2_i"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError("must be finite", field=name)

    @property
    def duration(self) -> float:
        return self.lattice.total_time

    def potential(self) -> ComplexPotential:
        return ComplexPotential.higgs_mode(self.m2_r, self.m2_i)


@dataclass(frozen=True)
class HiggsReport:
    """Realized history of the Higgs toy and its dominance over the runner-up."""

    selected_label: str
    selected_index: int
    delta_s_i: float
    weight_ratio: float
    branch_actions: Tuple[float, ...]
    field_norms: Tuple[float, ...]


def higgs_suppression(setup: HiggsToySetup, n_seeds: int = 4, seed: int = 0, workers: int = 1) -> HiggsReport:
    """
    Select the realized history of the Higgs toy.

    Every branch history is the classical solution of the mode's real
    dynamics between its boundary values; its imaginary action is
    m2_i * sum dt*phi^2. The realized branch has the smallest S_I and delta_s_i
    is the gap to the runner-up.
    """
    cfg = setup.lattice
    pot = setup.potential()
    histories = []
    for branch in setup.branches:
        solutions = find_classical_solutions(branch.boundary, cfg, pot, n_seeds, seed=seed, workers=workers)
        histories.append(solutions[select_realized(solutions.solutions)])

    actions = tuple(h.s_i for h in histories)
    norms = tuple(math.fsum(cfg.dt * np.asarray(h.positions[:-1]) ** 2) for h in histories)
    selected = select_realized(list(actions))
    delta = min(a - actions[selected] for i, a in enumerate(actions) if i != selected)
    report = HiggsReport(
        selected_label=setup.branches[selected].label,
        selected_index=selected,
        delta_s_i=delta,
        weight_ratio=math.exp(-2.0 * delta / cfg.hbar),
        branch_actions=actions,
        field_norms=norms,
    )
    logger.info("Higgs toy selects %s (delta S_I=%g)", report.selected_label, delta)
    return report


def dominance_sweep(deltas: Sequence[float], hbar: float = 1.0) -> List[Dict]:
    """Weight ratio exp(-2*delta/hbar) of a history trailing by delta in imaginary action."""
    if len(deltas) == 0:
        raise ConfigurationError("at least one value is required", field="deltas")
    rows = []
    for d in deltas:
        d = float(d)
        if not math.isfinite(d):
            raise ConfigurationError(f"must be finite, got {d!r}", field="deltas")
        rows.append({"delta_s_i": d, "weight_ratio": math.exp(-2.0 * d / hbar)})
    return rows
