"""
Classical solutions module for the complex-action lab
Solves the discrete Euler-Lagrange equations of the real action by damped
Newton iteration from many seeds, evaluates S_I on every solution, selects
the realized history and measures the order of the imaginary-part shift
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from action_core import ActionValue, ComplexPotential, LatticeConfig, Path, action
from errors import ConfigurationError, FitError, NoClassicalSolutionError, NumericalError
from parallel import make_rng, ordered_map, trial_seed

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
MAX_ITERATIONS = 200
MAX_HALVINGS = 30
DEDUP_TOLERANCE = 1e-6
ESCAPE_MARGIN_SITES = 10
DEFAULT_EPSILONS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
PERTURBATION_MODES = 3

STATUS_CONVERGED = "converged"
STATUS_DIVERGED = "diverged"
STATUS_ESCAPED = "escaped"
STATUS_STALLED = "stalled"
STATUS_SINGULAR = "singular"


@dataclass(frozen=True)
class ClassicalSolution:
    """A stationary path of the real action with its full complex action."""

    positions: Tuple[float, ...]
    residual_norm: float
    action: ActionValue
    seed_index: int = 0
    iterations: int = 0

    @property
    def s_i(self) -> float:
        return self.action.s_i

    def path(self) -> Path:
        return Path.continuous(self.positions)


@dataclass
class NewtonOutcome:
    """Result of one damped Newton solve from one initial guess."""

    seed_index: int
    status: str
    positions: np.ndarray
    residual_norm: float
    iterations: int

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED


@dataclass
class SolutionSet:
    """Deduplicated classical solutions plus the seeds that failed."""

    solutions: List[ClassicalSolution] = field(default_factory=list)
    failures: List[NewtonOutcome] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self) -> Iterator[ClassicalSolution]:
        return iter(self.solutions)

    def __getitem__(self, index: int) -> ClassicalSolution:
        return self.solutions[index]


@dataclass(frozen=True)
class ShiftOrderFit:
    """
    Least-squares fit of log|shift| against log(epsilon).

    When the perturbation leaves the action unchanged at every epsilon the
    shifts are all zero and slope and intercept are NaN.
    """

    slope: float
    intercept: float
    epsilons: Tuple[float, ...]
    shifts: Tuple[float, ...]
    dropped: Tuple[float, ...] = ()

    @property
    def order_defined(self) -> bool:
        return math.isfinite(self.slope)

    @property
    def order_label(self) -> str:
        return f"{self.slope:.3f}" if self.order_defined else "n/a"


def euler_lagrange_residual(positions: Sequence[float], cfg: LatticeConfig, pot_real: ComplexPotential) -> np.ndarray:
    """
    Discrete Euler-Lagrange residual at the interior points.

    Component j is mass*(x_{j+1} - 2x_j + x_{j-1})/dt^2 + V_R'(x_j); it is
    -1/dt times the derivative of the discrete action with respect to x_j,
    so a zero residual is a stationary path. Only the real part of the
    potential enters.
    """
    x = np.asarray(positions, dtype=float)
    if x.size != cfg.n_t + 1:
        raise ConfigurationError(f"expected {cfg.n_t + 1} positions, got {x.size}", field="positions")
    interior = x[1:-1]
    laplacian = (x[2:] - 2.0 * interior + x[:-2]) / (cfg.dt * cfg.dt)
    return cfg.mass * laplacian + pot_real.real_derivative(interior)


def _jacobian_bands(x: np.ndarray, cfg: LatticeConfig, pot_real: ComplexPotential) -> np.ndarray:
    n = x.size - 2
    coupling = cfg.mass / (cfg.dt * cfg.dt)
    bands = np.zeros((3, n))
    bands[0, 1:] = coupling
    bands[1, :] = -2.0 * coupling + pot_real.real_second_derivative(x[1:-1])
    bands[2, :-1] = coupling
    return bands


def newton_solve(
    initial: Sequence[float],
    cfg: LatticeConfig,
    pot_real: ComplexPotential,
    seed_index: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
    max_halvings: int = MAX_HALVINGS,
) -> NewtonOutcome:
    """
    Damped Newton iteration on the interior points with fixed endpoints.

    A step is halved until the max-norm residual decreases (at most
    max_halvings times). The solve fails as diverged after max_iterations,
    as stalled when no halving helps, and as escaped when an iterate leaves
    the grid by more than ten sites.
    """
    x = np.array(initial, dtype=float)
    lower = cfg.x_min - ESCAPE_MARGIN_SITES * cfg.dx
    upper = cfg.x_max + ESCAPE_MARGIN_SITES * cfg.dx

    residual = euler_lagrange_residual(x, cfg, pot_real)
    norm = float(np.max(np.abs(residual))) if residual.size else 0.0

    for iteration in range(max_iterations + 1):
        if norm <= tolerance:
            return NewtonOutcome(seed_index, STATUS_CONVERGED, x, norm, iteration)
        if iteration == max_iterations:
            break

        try:
            step = solve_banded((1, 1), _jacobian_bands(x, cfg, pot_real), -residual)
        except (LinAlgError, ValueError):
            return NewtonOutcome(seed_index, STATUS_SINGULAR, x, norm, iteration)

        scale = 1.0
        for _ in range(max_halvings + 1):
            trial = x.copy()
            trial[1:-1] += scale * step
            trial_residual = euler_lagrange_residual(trial, cfg, pot_real)
            trial_norm = float(np.max(np.abs(trial_residual)))
            if math.isfinite(trial_norm) and trial_norm < norm:
                break
            scale *= 0.5
        else:
            return NewtonOutcome(seed_index, STATUS_STALLED, x, norm, iteration)

        x, residual, norm = trial, trial_residual, trial_norm
        if np.any(x < lower) or np.any(x > upper):
            return NewtonOutcome(seed_index, STATUS_ESCAPED, x, norm, iteration + 1)

    return NewtonOutcome(seed_index, STATUS_DIVERGED, x, norm, max_iterations)


def initial_guesses(
    boundary: Tuple[float, float], cfg: LatticeConfig, n_seeds: int, seed: int = 0
) -> List[np.ndarray]:
    """
    Deterministic Newton starting paths.

    Guess 0 is the straight line between the endpoints. Guess k >= 1 adds a
    sine perturbation of mode 1 + (k-1) mod 3 whose amplitude is drawn,
    stratified over [-span, span] with span half the grid width, from the
    generator seeded with (seed, k).
    """
    x_start, x_end = boundary
    j = np.arange(cfg.n_t + 1)
    line = x_start + (x_end - x_start) * j / cfg.n_t
    span = 0.5 * (cfg.x_max - cfg.x_min)
    n_strata = max(1, math.ceil((n_seeds - 1) / PERTURBATION_MODES))

    guesses = [line]
    for k in range(1, n_seeds):
        mode = 1 + (k - 1) % PERTURBATION_MODES
        stratum = (k - 1) // PERTURBATION_MODES
        u = (stratum + make_rng(trial_seed(seed, k)).uniform()) / n_strata
        amplitude = span * (2.0 * u - 1.0)
        guesses.append(line + amplitude * np.sin(mode * np.pi * j / cfg.n_t))
    return guesses


def find_classical_solutions(
    boundary: Tuple[float, float],
    cfg: LatticeConfig,
    pot: ComplexPotential,
    n_seeds: int,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
    dedup_tolerance: float = DEDUP_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
    max_halvings: int = MAX_HALVINGS,
    workers: int = 1,
) -> SolutionSet:
    """
    Find stationary paths of the real action between fixed endpoints.

    Seeds are solved independently (concurrently when workers > 1) and the
    converged paths are deduplicated in seed order with a max-norm distance
    threshold. Each kept solution carries the full complex action of the
    path under the complex potential.

    Raises:
        ConfigurationError: If n_seeds < 1
        NoClassicalSolutionError: If no seed converged
    """
    if n_seeds < 1:
        raise ConfigurationError(f"must be >= 1, got {n_seeds}", field="n_seeds")

    pot_real = pot.real_part()
    guesses = initial_guesses(boundary, cfg, n_seeds, seed)

    def solve(k: int) -> NewtonOutcome:
        return newton_solve(guesses[k], cfg, pot_real, k, tolerance, max_iterations, max_halvings)

    outcomes = ordered_map(solve, range(n_seeds), workers)

    result = SolutionSet()
    for outcome in outcomes:
        if not outcome.converged:
            logger.debug("Seed %d did not converge: %s", outcome.seed_index, outcome.status)
            result.failures.append(outcome)
            continue
        duplicate = any(
            np.max(np.abs(outcome.positions - np.asarray(s.positions))) < dedup_tolerance
            for s in result.solutions
        )
        if duplicate:
            continue
        result.solutions.append(
            ClassicalSolution(
                positions=tuple(float(v) for v in outcome.positions),
                residual_norm=outcome.residual_norm,
                action=action(Path.continuous(outcome.positions), cfg, pot),
                seed_index=outcome.seed_index,
                iterations=outcome.iterations,
            )
        )

    if not result.solutions:
        raise NoClassicalSolutionError(f"no classical solution found from {n_seeds} seeds")
    logger.info(
        "Found %d distinct classical solutions (%d seeds failed)", len(result.solutions), len(result.failures)
    )
    return result


def _imaginary_action(item) -> float:
    if isinstance(item, ClassicalSolution):
        return item.action.s_i
    if isinstance(item, ActionValue):
        return item.s_i
    return float(item)


def select_realized(solutions: Sequence) -> int:
    """
    Index of the realized history: the solution with the smallest S_I.

    Accepts ClassicalSolution objects, ActionValue objects or bare S_I values.
    Ties go to the lowest index.
    """
    if len(solutions) == 0:
        raise ConfigurationError("cannot select from an empty list of solutions", field="solutions")
    values = np.array([_imaginary_action(s) for s in solutions])
    return int(np.argmin(values))


def _solve_from(initial: np.ndarray, cfg: LatticeConfig, pot_real: ComplexPotential, tolerance: float) -> np.ndarray:
    outcome = newton_solve(initial, cfg, pot_real, tolerance=tolerance)
    if not outcome.converged:
        raise NumericalError(f"Newton solve {outcome.status} after {outcome.iterations} iterations")
    return outcome.positions


def stationary_action_shift(
    cfg: LatticeConfig,
    pot_real: ComplexPotential,
    direction: ComplexPotential,
    epsilon: float,
    boundary: Tuple[float, float] = (0.0, 1.0),
    tolerance: float = DEFAULT_TOLERANCE,
) -> float:
    """
    Change of the real action when the equations of motion pick up a first-order term.

    The imaginary coefficients of direction, read as a real polynomial W,
    perturb the real potential to V_R + epsilon*W. The stationary path of the
    perturbed problem is found by continuation from the unperturbed one and
    the unperturbed real action is compared on both paths.
    """
    base_pot = pot_real.real_part()
    perturbation = ComplexPotential.from_parts(real=direction.imag_coefficients.tolist())
    perturbed_pot = base_pot + ComplexPotential.from_parts(real=(epsilon * perturbation.real_coefficients).tolist())

    line = boundary[0] + (boundary[1] - boundary[0]) * np.arange(cfg.n_t + 1) / cfg.n_t
    base_path = _solve_from(line, cfg, base_pot, tolerance)
    shifted_path = _solve_from(base_path, cfg, perturbed_pot, tolerance)

    base_action = action(Path.continuous(base_path), cfg, base_pot).s_r
    shifted_action = action(Path.continuous(shifted_path), cfg, base_pot).s_r
    return shifted_action - base_action


def saddle_shift_order(
    cfg: LatticeConfig,
    pot_real: ComplexPotential,
    pot_imag_direction: ComplexPotential,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    boundary: Tuple[float, float] = (0.0, 1.0),
    tolerance: float = DEFAULT_TOLERANCE,
) -> ShiftOrderFit:
    """
    Fit the order of the real-action shift caused by a first-order perturbation.

    Stationarity of the unperturbed path makes the shift second order, so
    the fitted slope of log|shift| against log(epsilon) is close to 2. A
    perturbation that exerts no force leaves every shift at exactly zero;
    that is reported as a fit without an order rather than an error.

    Raises:
        ConfigurationError: If epsilons is not a strictly decreasing positive sequence
        FitError: If fewer than three epsilons survive
    """
    eps = [float(e) for e in epsilons]
    if not eps or any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
        raise ConfigurationError("must be a strictly decreasing sequence of positive numbers", field="epsilons")

    kept: List[float] = []
    shifts: List[float] = []
    dropped: List[float] = []
    unmoved: List[float] = []
    for e in eps:
        try:
            shift = stationary_action_shift(cfg, pot_real, pot_imag_direction, e, boundary, tolerance)
        except NumericalError as err:
            logger.warning("Dropping epsilon=%g: %s", e, err)
            dropped.append(e)
            continue
        if shift == 0.0:
            unmoved.append(e)
            continue
        kept.append(e)
        shifts.append(shift)

    if unmoved and not kept:
        logger.info("The perturbation does not move the action at any epsilon; no order to fit")
        return ShiftOrderFit(math.nan, math.nan, tuple(unmoved), (0.0,) * len(unmoved), tuple(dropped))
    if unmoved:
        logger.warning("Dropping epsilons %s: the perturbation does not move the action", unmoved)
        dropped.extend(unmoved)
        dropped.sort(reverse=True)

    if len(kept) < 3:
        raise FitError(f"order fit needs at least 3 epsilons, {len(kept)} survived")
    slope, intercept = np.polyfit(np.log(kept), np.log(np.abs(shifts)), 1)
    return ShiftOrderFit(float(slope), float(intercept), tuple(kept), tuple(shifts), tuple(dropped))
