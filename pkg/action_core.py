"""
Action core module for the complex-action lab
Lattice discretization of a 1-D particle, complex polynomial potentials,
the complex action functional and per-path weights exp(-2 S_I / hbar)
"""

import logging
import math
import sys
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import logsumexp

from errors import ConfigurationError

logger = logging.getLogger(__name__)

MAX_DEGREE = 6
LOG_FLOAT_MAX = math.log(sys.float_info.max)


def is_integer(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def _require_positive(value: float, name: str) -> None:
    numeric = isinstance(value, (int, float, np.floating, np.integer)) and not isinstance(value, bool)
    if not (numeric and math.isfinite(value) and value > 0):
        raise ConfigurationError(f"must be a finite positive number, got {value!r}", field=name)


@dataclass(frozen=True)
class LatticeConfig:
    """Discretization of a 1-D particle: time steps, spatial grid, mass and hbar."""

    n_t: int
    dt: float
    x_min: float
    dx: float
    n_x: int
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not is_integer(self.n_t) or self.n_t < 1:
            raise ConfigurationError(f"must be an integer >= 1, got {self.n_t!r}", field="n_t")
        if not is_integer(self.n_x) or self.n_x < 2:
            raise ConfigurationError(f"must be an integer >= 2, got {self.n_x!r}", field="n_x")
        _require_positive(self.dt, "dt")
        _require_positive(self.dx, "dx")
        _require_positive(self.mass, "mass")
        _require_positive(self.hbar, "hbar")
        if not isinstance(self.x_min, (int, float, np.integer, np.floating)) or not math.isfinite(self.x_min):
            raise ConfigurationError(f"must be finite, got {self.x_min!r}", field="x_min")

    @property
    def x_max(self) -> float:
        return self.x_min + (self.n_x - 1) * self.dx

    @property
    def total_time(self) -> float:
        return self.n_t * self.dt

    def grid(self) -> np.ndarray:
        """Positions of all grid sites, x_min + k*dx for k in [0, n_x)."""
        return self.x_min + np.arange(self.n_x) * self.dx

    def site_position(self, site: int) -> float:
        return self.x_min + site * self.dx

    def with_steps(self, n_t: int) -> "LatticeConfig":
        """Same lattice with a different number of time steps."""
        return replace(self, n_t=n_t)


@dataclass(frozen=True)
class ComplexPotential:
    """
    Polynomial potential V(x) = sum_k (a_k + i*b_k) x^k with degree <= 6.

    The imaginary coefficients b_k are the only source of imaginary action.
    """

    coefficients: Tuple[Tuple[float, float], ...] = ((0.0, 0.0),)

    def __post_init__(self):
        try:
            coeffs = tuple((float(re), float(im)) for re, im in self.coefficients)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"expected (real, imag) pairs: {e}", field="coefficients")
        if not coeffs:
            raise ConfigurationError("at least one coefficient is required", field="coefficients")
        if len(coeffs) > MAX_DEGREE + 1:
            raise ConfigurationError(
                f"degree {len(coeffs) - 1} exceeds the maximum degree {MAX_DEGREE}", field="coefficients"
            )
        if not all(math.isfinite(re) and math.isfinite(im) for re, im in coeffs):
            raise ConfigurationError("coefficients must be finite", field="coefficients")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def from_parts(cls, real: Sequence[float] = (), imag: Sequence[float] = ()) -> "ComplexPotential":
        """Build from separate real and imaginary coefficient lists (lowest power first)."""
        n = max(len(real), len(imag), 1)
        real = list(real) + [0.0] * (n - len(real))
        imag = list(imag) + [0.0] * (n - len(imag))
        return cls(tuple(zip(real, imag)))

    @classmethod
    def free(cls) -> "ComplexPotential":
        return cls()

    @classmethod
    def harmonic(cls, spring: float = 1.0) -> "ComplexPotential":
        """V = spring * x^2 / 2."""
        return cls.from_parts(real=[0.0, 0.0, spring / 2.0])

    @classmethod
    def double_well(cls, minimum: float = 1.0, scale: float = 0.25) -> "ComplexPotential":
        """V = scale * (x^2 - minimum^2)^2, the default being (x^2 - 1)^2 / 4."""
        a2 = minimum * minimum
        return cls.from_parts(real=[scale * a2 * a2, 0.0, -2.0 * scale * a2, 0.0, scale])

    @classmethod
    def higgs_mode(cls, m2_r: float, m2_i: float) -> "ComplexPotential":
        """
        Single-mode toy with complex mass squared.

        The Lagrangian carries -m2_r*phi^2/2 + i*m2_i*phi^2, so
        V = m2_r*phi^2/2 - i*m2_i*phi^2 and S_I = m2_i * sum dt*phi^2.
        """
        return cls.from_parts(real=[0.0, 0.0, m2_r / 2.0], imag=[0.0, 0.0, -m2_i])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def real_coefficients(self) -> np.ndarray:
        return np.array([re for re, _ in self.coefficients])

    @property
    def imag_coefficients(self) -> np.ndarray:
        return np.array([im for _, im in self.coefficients])

    @property
    def is_real(self) -> bool:
        return all(im == 0.0 for _, im in self.coefficients)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return P.polyval(x, self.real_coefficients) + 1j * P.polyval(x, self.imag_coefficients)

    def real_values(self, x) -> np.ndarray:
        return P.polyval(np.asarray(x, dtype=float), self.real_coefficients)

    def imag_values(self, x) -> np.ndarray:
        return P.polyval(np.asarray(x, dtype=float), self.imag_coefficients)

    def real_derivative(self, x) -> np.ndarray:
        """V_R'(x)."""
        return P.polyval(np.asarray(x, dtype=float), P.polyder(self.real_coefficients))

    def real_second_derivative(self, x) -> np.ndarray:
        """V_R''(x)."""
        return P.polyval(np.asarray(x, dtype=float), P.polyder(self.real_coefficients, 2))

    def real_part(self) -> "ComplexPotential":
        return ComplexPotential.from_parts(real=self.real_coefficients.tolist())

    def imag_part(self) -> "ComplexPotential":
        return ComplexPotential.from_parts(imag=self.imag_coefficients.tolist())

    def scale_imag(self, factor: float) -> "ComplexPotential":
        return ComplexPotential.from_parts(
            real=self.real_coefficients.tolist(), imag=(factor * self.imag_coefficients).tolist()
        )

    def flip_imag(self) -> "ComplexPotential":
        return self.scale_imag(-1.0)

    def __add__(self, other: "ComplexPotential") -> "ComplexPotential":
        n = max(len(self.coefficients), len(other.coefficients))
        mine = list(self.coefficients) + [(0.0, 0.0)] * (n - len(self.coefficients))
        theirs = list(other.coefficients) + [(0.0, 0.0)] * (n - len(other.coefficients))
        return ComplexPotential(tuple((a + c, b + d) for (a, b), (c, d) in zip(mine, theirs)))


@dataclass(frozen=True)
class Path:
    """
    A trajectory of n_t+1 points.

    Lattice paths hold grid indices; continuous paths (used by the classical
    solver) hold real positions.
    """

    sites: Tuple[Union[int, float], ...]
    is_continuous: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))

    @classmethod
    def continuous(cls, positions: Iterable[float]) -> "Path":
        return cls(tuple(float(x) for x in positions), is_continuous=True)

    def __len__(self) -> int:
        return len(self.sites)

    def validate(self, cfg: LatticeConfig) -> None:
        if len(self.sites) != cfg.n_t + 1:
            raise ConfigurationError(
                f"path has {len(self.sites)} points but n_t={cfg.n_t} needs {cfg.n_t + 1}", field="path"
            )
        if self.is_continuous:
            if not all(math.isfinite(x) for x in self.sites):
                raise ConfigurationError("positions must be finite", field="path")
            return
        for k in self.sites:
            if not is_integer(k) or not 0 <= k < cfg.n_x:
                raise ConfigurationError(f"site {k!r} outside [0, {cfg.n_x})", field="path")

    def positions(self, cfg: LatticeConfig) -> np.ndarray:
        if self.is_continuous:
            return np.array(self.sites, dtype=float)
        return cfg.x_min + np.array(self.sites, dtype=float) * cfg.dx


@dataclass(frozen=True)
class ActionValue:
    """Real and imaginary parts of the action, in units of hbar."""

    s_r: float
    s_i: float

    @property
    def value(self) -> complex:
        return complex(self.s_r, self.s_i)


def segment_action(positions: Sequence[float], dt: float, mass: float, pot: ComplexPotential) -> ActionValue:
    """
    Discretized action of a trajectory segment of any length >= 1 point.

    S = sum_j dt * [ (mass/2) * ((x_{j+1} - x_j)/dt)^2 - V(x_j) ] with the
    potential evaluated at the left point of every step. Both parts are summed
    with math.fsum so splitting a path into segments is additive to rounding.
    """
    x = np.asarray(positions, dtype=float)
    if x.size < 2:
        return ActionValue(0.0, 0.0)

    velocity = np.diff(x) / dt
    kinetic = dt * 0.5 * mass * velocity * velocity
    left = x[:-1]
    s_r = math.fsum(np.concatenate([kinetic, -dt * pot.real_values(left)]))
    if pot.is_real:
        s_i = 0.0
    else:
        s_i = math.fsum(-dt * pot.imag_values(left))
    return ActionValue(s_r, s_i)


def action(path: Path, cfg: LatticeConfig, pot: ComplexPotential) -> ActionValue:
    """
    Complex action of a path on the lattice.

    Args:
        path: Path with n_t+1 points
        cfg: Lattice configuration
        pot: Complex potential

    Returns:
        ActionValue with s_r = Re S and s_i = Im S = -sum dt*Im V(x_j)

    Raises:
        ConfigurationError: If the path does not fit the lattice
    """
    path.validate(cfg)
    return segment_action(path.positions(cfg), cfg.dt, cfg.mass, pot)


def log_weight_from_action(av: ActionValue, hbar: float = 1.0) -> float:
    """log |exp(i S / hbar)|^2 = -2 s_i / hbar."""
    return -2.0 * av.s_i / hbar


def weight_from_action(av: ActionValue, hbar: float = 1.0) -> float:
    """|exp(i S / hbar)|^2, clamped to the largest float instead of overflowing."""
    lw = log_weight_from_action(av, hbar)
    if lw > LOG_FLOAT_MAX:
        logger.debug("Weight exp(%g) clamped to float max", lw)
        return sys.float_info.max
    return math.exp(lw)


def log_weight(path: Path, cfg: LatticeConfig, pot: ComplexPotential) -> float:
    return log_weight_from_action(action(path, cfg, pot), cfg.hbar)


def weight(path: Path, cfg: LatticeConfig, pot: ComplexPotential) -> float:
    """Squared modulus of the path integrand, exp(-2 S_I / hbar)."""
    return weight_from_action(action(path, cfg, pot), cfg.hbar)


def normalized_weights(log_weights: Sequence[float]) -> np.ndarray:
    """Normalize a set of log-weights to probabilities with log-sum-exp."""
    lw = np.asarray(log_weights, dtype=float)
    return np.exp(lw - logsumexp(lw))
