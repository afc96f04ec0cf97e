"""
Propagator module for the complex-action lab
Exact lattice path integrals: brute-force enumeration (the oracle) and
complex transfer-matrix products (the fast path), class weights and
total-probability checks
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal

from action_core import ComplexPotential, LatticeConfig, is_integer
from errors import ConfigurationError, OracleTooLargeError
from parallel import ordered_map

logger = logging.getLogger(__name__)

ENGINE_ACTION = "action"
ENGINE_SPLIT_STEP = "split_step"
ENGINES = (ENGINE_ACTION, ENGINE_SPLIT_STEP)

DEFAULT_ENUMERATION_CAP = 10_000_000
MAX_TRANSFER_SITES = 4096

# Fixed chunk size keeps the brute-force reduction tree independent of workers
ENUMERATION_CHUNK = 1 << 15


@dataclass(frozen=True)
class PathConstraint:
    """Restricts paths to a set of grid sites at one time index (e.g. a slit)."""

    time_index: int
    allowed_sites: FrozenSet[int]

    def __post_init__(self):
        object.__setattr__(self, "allowed_sites", frozenset(int(s) for s in self.allowed_sites))

    def validate(self, cfg: LatticeConfig) -> None:
        if not is_integer(self.time_index) or not 0 <= self.time_index <= cfg.n_t:
            raise ConfigurationError(f"time index {self.time_index!r} outside [0, {cfg.n_t}]", field="constraints")
        bad = [s for s in self.allowed_sites if not 0 <= s < cfg.n_x]
        if bad:
            raise ConfigurationError(f"sites {sorted(bad)} outside the grid", field="constraints")


@dataclass(frozen=True)
class PotentialWindow:
    """A complex potential added on some sites during a range of time steps."""

    start_step: int
    n_steps: int
    sites: FrozenSet[int]
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "sites", frozenset(int(s) for s in self.sites))
        object.__setattr__(self, "value", complex(self.value))

    @classmethod
    def imaginary(cls, start_step: int, n_steps: int, sites: Iterable[int], depth: float) -> "PotentialWindow":
        """Window of value -i*depth: each step spent inside adds depth*dt to S_I."""
        return cls(start_step, n_steps, frozenset(sites), complex(0.0, -depth))

    def covers(self, step: int) -> bool:
        return self.start_step <= step < self.start_step + self.n_steps

    def validate(self, cfg: LatticeConfig) -> None:
        if not is_integer(self.n_steps) or self.n_steps < 1:
            raise ConfigurationError(f"window needs at least one step, got {self.n_steps!r}", field="windows")
        if not is_integer(self.start_step) or self.start_step < 0 or self.start_step + self.n_steps > cfg.n_t:
            raise ConfigurationError(
                f"steps [{self.start_step}, {self.start_step + self.n_steps}) outside [0, {cfg.n_t})",
                field="windows",
            )
        bad = [s for s in self.sites if not 0 <= s < cfg.n_x]
        if bad:
            raise ConfigurationError(f"sites {sorted(bad)} outside the grid", field="windows")


@dataclass(frozen=True)
class TransferMatrix:
    """One-step propagation matrix; entry (k', k) maps site k at step j to k' at j+1."""

    entries: np.ndarray
    engine: str

    @property
    def n_x(self) -> int:
        return self.entries.shape[0]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.entries @ psi


def _validate_common(
    cfg: LatticeConfig,
    constraints: Sequence[PathConstraint],
    windows: Sequence[PotentialWindow],
    engine: str,
) -> None:
    if engine not in ENGINES:
        raise ConfigurationError(f"unknown engine {engine!r}, expected one of {ENGINES}", field="engine")
    for c in constraints:
        c.validate(cfg)
    for w in windows:
        w.validate(cfg)


def _validate_site(site: int, cfg: LatticeConfig, name: str) -> None:
    if not is_integer(site) or not 0 <= site < cfg.n_x:
        raise ConfigurationError(f"site {site!r} outside [0, {cfg.n_x})", field=name)


def step_potential(
    cfg: LatticeConfig, pot: ComplexPotential, step: int, windows: Sequence[PotentialWindow] = ()
) -> np.ndarray:
    """Potential on every grid site during one step, windows included."""
    values = np.asarray(pot(cfg.grid()), dtype=complex)
    for w in windows:
        if w.covers(step) and w.sites:
            idx = np.fromiter(sorted(w.sites), dtype=int)
            values[idx] += w.value
    return values


def _kinetic_phase(cfg: LatticeConfig) -> np.ndarray:
    """dt * (mass/2) * ((x_k' - x_k)/dt)^2 for every pair (k', k)."""
    x = cfg.grid()
    velocity = (x[:, None] - x[None, :]) / cfg.dt
    return cfg.dt * 0.5 * cfg.mass * velocity * velocity


@lru_cache(maxsize=32)
def _kinetic_half_step(n_x: int, dx: float, mass: float, hbar: float, dt: float) -> np.ndarray:
    # Hard-wall finite-difference kinetic operator, diagonalized exactly
    diag = np.full(n_x, hbar * hbar / (mass * dx * dx))
    off = np.full(n_x - 1, -hbar * hbar / (2.0 * mass * dx * dx))
    energies, vectors = eigh_tridiagonal(diag, off)
    phases = np.exp(-0.5j * dt * energies / hbar)
    half = (vectors * phases[None, :]) @ vectors.T
    half.setflags(write=False)
    return half


def action_transfer_matrix(
    cfg: LatticeConfig, pot: ComplexPotential, step: int = 0, windows: Sequence[PotentialWindow] = ()
) -> TransferMatrix:
    """
    Action-faithful matrix: entry (k', k) = exp(i/hbar * dt * [(m/2)((x_k' - x_k)/dt)^2 - V(x_k)]).

    Its n_t-fold product reproduces the brute-force sum over lattice paths
    exactly; it is not unitary even for a real potential.
    """
    v = step_potential(cfg, pot, step, windows)
    phase = _kinetic_phase(cfg) - cfg.dt * v[None, :]
    return TransferMatrix(np.exp(1j * phase / cfg.hbar), ENGINE_ACTION)


def _potential_kick(
    cfg: LatticeConfig, pot: ComplexPotential, step: int, windows: Sequence[PotentialWindow]
) -> np.ndarray:
    return np.exp(-1j * cfg.dt * step_potential(cfg, pot, step, windows) / cfg.hbar)


def split_step_transfer_matrix(
    cfg: LatticeConfig, pot: ComplexPotential, step: int = 0, windows: Sequence[PotentialWindow] = ()
) -> TransferMatrix:
    """
    Split-step matrix K_half * P * K_half.

    K_half is the exact half-step of the hard-wall kinetic operator and P the
    diagonal potential kick exp(-i dt V / hbar); the product is unitary when
    V is real.
    """
    half = _kinetic_half_step(cfg.n_x, cfg.dx, cfg.mass, cfg.hbar, cfg.dt)
    kick = _potential_kick(cfg, pot, step, windows)
    return TransferMatrix(half @ (kick[:, None] * half), ENGINE_SPLIT_STEP)


def transfer_matrix(
    cfg: LatticeConfig,
    pot: ComplexPotential,
    engine: str = ENGINE_ACTION,
    step: int = 0,
    windows: Sequence[PotentialWindow] = (),
) -> TransferMatrix:
    _validate_common(cfg, (), windows, engine)
    if engine == ENGINE_ACTION:
        return action_transfer_matrix(cfg, pot, step, windows)
    return split_step_transfer_matrix(cfg, pot, step, windows)


def unitarity_defect(matrix: TransferMatrix) -> float:
    """max |T^dagger T - 1| over all entries."""
    t = matrix.entries
    return float(np.max(np.abs(t.conj().T @ t - np.eye(t.shape[0]))))


def _constraint_masks(cfg: LatticeConfig, constraints: Sequence[PathConstraint]) -> Dict[int, np.ndarray]:
    """Allowed-site masks per constrained time; several constraints at one time intersect."""
    masks: Dict[int, np.ndarray] = {}
    for c in constraints:
        mask = np.zeros(cfg.n_x, dtype=bool)
        if c.allowed_sites:
            mask[np.fromiter(sorted(c.allowed_sites), dtype=int)] = True
        else:
            logger.debug("Empty constraint at t=%d, class amplitude vanishes", c.time_index)
        if c.time_index in masks:
            masks[c.time_index] &= mask
        else:
            masks[c.time_index] = mask
    return masks


def _evolve(
    psi: np.ndarray,
    cfg: LatticeConfig,
    pot: ComplexPotential,
    constraints: Sequence[PathConstraint],
    windows: Sequence[PotentialWindow],
    engine: str,
) -> np.ndarray:
    masks = _constraint_masks(cfg, constraints)
    window_steps = {j for w in windows for j in range(w.start_step, w.start_step + w.n_steps)}
    column = (slice(None),) + (None,) * (psi.ndim - 1)

    if engine == ENGINE_ACTION:
        base = action_transfer_matrix(cfg, pot).entries
        for j in range(cfg.n_t):
            if j in masks:
                psi = psi * masks[j][column]
            entries = action_transfer_matrix(cfg, pot, j, windows).entries if j in window_steps else base
            psi = entries @ psi
    else:
        half = _kinetic_half_step(cfg.n_x, cfg.dx, cfg.mass, cfg.hbar, cfg.dt)
        base_kick = _potential_kick(cfg, pot, 0, ())
        for j in range(cfg.n_t):
            psi = half @ psi
            kick = _potential_kick(cfg, pot, j, windows) if j in window_steps else base_kick
            psi = psi * kick[column]
            # constraints of time j act at the potential slice of step j
            if j in masks:
                psi = psi * masks[j][column]
            psi = half @ psi

    if cfg.n_t in masks:
        psi = psi * masks[cfg.n_t][column]
    return psi


def propagate(
    x_i: int,
    cfg: LatticeConfig,
    pot: ComplexPotential,
    constraints: Sequence[PathConstraint] = (),
    windows: Sequence[PotentialWindow] = (),
    engine: str = ENGINE_ACTION,
) -> np.ndarray:
    """
    Amplitudes at every final site for paths starting at x_i.

    Returns:
        Complex vector of length n_x with K(x_f, x_i) for every x_f
    """
    _validate_common(cfg, constraints, windows, engine)
    _validate_site(x_i, cfg, "x_i")
    if cfg.n_x > MAX_TRANSFER_SITES:
        raise ConfigurationError(f"transfer matrices support at most {MAX_TRANSFER_SITES} sites", field="n_x")
    psi = np.zeros(cfg.n_x, dtype=complex)
    psi[x_i] = 1.0
    return _evolve(psi, cfg, pot, constraints, windows, engine)


def propagate_state(
    psi0: np.ndarray,
    cfg: LatticeConfig,
    pot: ComplexPotential,
    constraints: Sequence[PathConstraint] = (),
    windows: Sequence[PotentialWindow] = (),
    engine: str = ENGINE_ACTION,
) -> np.ndarray:
    """Evolve an initial amplitude vector; linear in psi0, so it equals K @ psi0."""
    _validate_common(cfg, constraints, windows, engine)
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape != (cfg.n_x,):
        raise ConfigurationError(f"expected a vector of {cfg.n_x} amplitudes, got shape {psi.shape}", field="psi0")
    if cfg.n_x > MAX_TRANSFER_SITES:
        raise ConfigurationError(f"transfer matrices support at most {MAX_TRANSFER_SITES} sites", field="n_x")
    return _evolve(psi.copy(), cfg, pot, constraints, windows, engine)


def propagator_matrix(
    cfg: LatticeConfig,
    pot: ComplexPotential,
    constraints: Sequence[PathConstraint] = (),
    windows: Sequence[PotentialWindow] = (),
    engine: str = ENGINE_ACTION,
) -> np.ndarray:
    """Full propagator K(x_f, x_i) as an n_x by n_x matrix (columns are start sites)."""
    _validate_common(cfg, constraints, windows, engine)
    if cfg.n_x > MAX_TRANSFER_SITES:
        raise ConfigurationError(f"transfer matrices support at most {MAX_TRANSFER_SITES} sites", field="n_x")
    return _evolve(np.eye(cfg.n_x, dtype=complex), cfg, pot, constraints, windows, engine)


def transfer_matrix_amplitude(
    x_i: int,
    x_f: int,
    cfg: LatticeConfig,
    pot: ComplexPotential,
    constraints: Sequence[PathConstraint] = (),
    windows: Sequence[PotentialWindow] = (),
    engine: str = ENGINE_ACTION,
) -> complex:
    """
    Constrained amplitude from x_i to x_f by repeated transfer-matrix application.

    Projections onto allowed sites are inserted at every constrained time.
    """
    _validate_site(x_f, cfg, "x_f")
    return complex(propagate(x_i, cfg, pot, constraints, windows, engine)[x_f])


def _allowed_sites(cfg: LatticeConfig, constraints: Sequence[PathConstraint]) -> List[np.ndarray]:
    masks = _constraint_masks(cfg, constraints)
    sites = np.arange(cfg.n_x)
    return [sites[masks[t]] if t in masks else sites for t in range(cfg.n_t + 1)]


def count_enumerated_paths(
    x_i: int, x_f: int, cfg: LatticeConfig, constraints: Sequence[PathConstraint] = ()
) -> int:
    """Number of lattice paths the brute-force oracle would visit."""
    allowed = _allowed_sites(cfg, constraints)
    if x_i not in allowed[0] or x_f not in allowed[cfg.n_t]:
        return 0
    return math.prod(len(a) for a in allowed[1:cfg.n_t])


def brute_force_amplitude(
    x_i: int,
    x_f: int,
    cfg: LatticeConfig,
    pot: ComplexPotential,
    constraints: Sequence[PathConstraint] = (),
    windows: Sequence[PotentialWindow] = (),
    cap: int = DEFAULT_ENUMERATION_CAP,
    workers: int = 1,
) -> complex:
    """
    Sum exp(i S[path] / hbar) over every constrained lattice path with fixed endpoints.

    Paths are visited in lexicographic order of their interior sites, in
    fixed-size chunks. Each chunk is summed with math.fsum and the chunk
    sums are combined in chunk order, so the result does not depend on the
    number of workers.

    Raises:
        OracleTooLargeError: If the number of paths exceeds cap
    """
    _validate_common(cfg, constraints, windows, ENGINE_ACTION)
    _validate_site(x_i, cfg, "x_i")
    _validate_site(x_f, cfg, "x_f")

    allowed = _allowed_sites(cfg, constraints)
    if x_i not in allowed[0] or x_f not in allowed[cfg.n_t]:
        return 0j
    interior = allowed[1:cfg.n_t]
    n_paths = math.prod(len(a) for a in interior)
    if n_paths > cap:
        raise OracleTooLargeError(n_paths, cap)
    if n_paths == 0:
        return 0j

    kinetic = _kinetic_phase(cfg)
    potential = np.stack([step_potential(cfg, pot, j, windows) for j in range(cfg.n_t)])
    shape = tuple(len(a) for a in interior)
    steps = np.arange(cfg.n_t)

    def chunk_sum(start: int) -> Tuple[float, float]:
        stop = min(start + ENUMERATION_CHUNK, n_paths)
        count = stop - start
        sites = np.empty((count, cfg.n_t + 1), dtype=int)
        sites[:, 0] = x_i
        sites[:, -1] = x_f
        if interior:
            digits = np.unravel_index(np.arange(start, stop), shape)
            for t, (choices, d) in enumerate(zip(interior, digits), start=1):
                sites[:, t] = choices[d]
        src, dst = sites[:, :-1], sites[:, 1:]
        phase = np.sum(kinetic[dst, src] - cfg.dt * potential[steps[None, :], src], axis=1)
        terms = np.exp(1j * phase / cfg.hbar)
        return math.fsum(terms.real), math.fsum(terms.imag)

    partials = ordered_map(chunk_sum, range(0, n_paths, ENUMERATION_CHUNK), workers)
    logger.debug("Brute force summed %d paths in %d chunks", n_paths, len(partials))
    return complex(math.fsum(p[0] for p in partials), math.fsum(p[1] for p in partials))


def class_weight(
    class_constraints: Sequence[PathConstraint],
    x_i: int,
    cfg: LatticeConfig,
    pot: ComplexPotential,
    x_f: Optional[int] = None,
    windows: Sequence[PotentialWindow] = (),
    engine: str = ENGINE_ACTION,
) -> float:
    """
    Probability measure of a history class: |sum over class paths of exp(i S / hbar)|^2.

    With x_f given this is the fixed-endpoint weight; with x_f None the
    squared amplitudes are summed over every final site.
    """
    amplitudes = propagate(x_i, cfg, pot, class_constraints, windows, engine)
    if x_f is not None:
        _validate_site(x_f, cfg, "x_f")
        return float(abs(amplitudes[x_f]) ** 2)
    return math.fsum(np.abs(amplitudes) ** 2)


def total_probability(
    cfg: LatticeConfig,
    pot: ComplexPotential,
    windows: Sequence[PotentialWindow] = (),
    engine: str = ENGINE_SPLIT_STEP,
) -> np.ndarray:
    """sum_f |K(x_f, x_i)|^2 for every start site x_i."""
    k = propagator_matrix(cfg, pot, (), windows, engine)
    return np.sum(np.abs(k) ** 2, axis=0)
