"""
Selection module for the complex-action lab
Measurement as enhancement: every outcome branch carries an amplitude, a base
imaginary action and a random future imaginary action; the branch with the
largest total weight is the one realized
"""

import cmath
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from scipy import integrate, stats

from action_core import is_integer
from errors import ConfigurationError
from parallel import make_rng, ordered_map, trial_seed

logger = logging.getLogger(__name__)

NOISE_NONE = "none"
NOISE_GAUSSIAN = "gaussian"
NOISE_GUMBEL = "gumbel"
NOISE_CASCADE = "cascade"
NOISE_KINDS = (NOISE_NONE, NOISE_GAUSSIAN, NOISE_GUMBEL, NOISE_CASCADE)

TRIALS_PER_CHUNK = 2048


@dataclass(frozen=True)
class NoiseModel:
    """
    Distribution of the future imaginary action of one branch.

    gaussian draws N(location, scale) and cascade sums n_stages independent
    N(0, scale) draws; both are imaginary actions in units of hbar. gumbel
    draws Gumbel(location, scale) in log-weight units: the draw is added to
    the selection score as it is.
    """

    kind: str = NOISE_NONE
    location: float = 0.0
    scale: float = 1.0
    n_stages: int = 1

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigurationError(f"unknown noise kind {self.kind!r}, expected one of {NOISE_KINDS}", field="noise")
        if not math.isfinite(self.location):
            raise ConfigurationError("location must be finite", field="noise")
        if self.kind != NOISE_NONE and not (math.isfinite(self.scale) and self.scale > 0):
            raise ConfigurationError(f"scale must be positive, got {self.scale!r}", field="noise")
        if self.kind == NOISE_CASCADE and (not is_integer(self.n_stages) or self.n_stages < 1):
            raise ConfigurationError(f"n_stages must be an integer >= 1, got {self.n_stages!r}", field="noise")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(NOISE_NONE)

    @classmethod
    def gaussian(cls, mean: float = 0.0, sigma: float = 1.0) -> "NoiseModel":
        return cls(NOISE_GAUSSIAN, location=mean, scale=sigma)

    @classmethod
    def gumbel(cls, location: float = 0.0, scale: float = 1.0) -> "NoiseModel":
        return cls(NOISE_GUMBEL, location=location, scale=scale)

    @classmethod
    def cascade(cls, n_stages: int, per_stage_sigma: float = 1.0) -> "NoiseModel":
        return cls(NOISE_CASCADE, scale=per_stage_sigma, n_stages=n_stages)

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind == NOISE_NONE:
            return 0.0
        if self.kind == NOISE_GAUSSIAN:
            return float(rng.normal(self.location, self.scale))
        if self.kind == NOISE_GUMBEL:
            return float(rng.gumbel(self.location, self.scale))
        return float(rng.normal(0.0, self.scale, size=self.n_stages).sum())

    def kick(self, draw: float, hbar: float = 1.0) -> float:
        """Contribution of one draw to the log-weight score."""
        if self.kind == NOISE_GUMBEL:
            return draw
        return -2.0 * draw / hbar

    def kick_distribution(self, hbar: float = 1.0):
        """Frozen scipy distribution of the score kick, or None for a point mass at zero."""
        if self.kind == NOISE_NONE:
            return None
        if self.kind == NOISE_GUMBEL:
            return stats.gumbel_r(loc=self.location, scale=self.scale)
        if self.kind == NOISE_GAUSSIAN:
            return stats.norm(loc=-2.0 * self.location / hbar, scale=2.0 * self.scale / hbar)
        return stats.norm(loc=0.0, scale=2.0 * self.scale * math.sqrt(self.n_stages) / hbar)


@dataclass(frozen=True)
class Branch:
    """One possible measurement outcome."""

    label: str
    amplitude: complex = 1.0
    base_s_i: float = 0.0
    noise: NoiseModel = field(default_factory=NoiseModel.none)

    def __post_init__(self):
        if not isinstance(self.label, str) or not self.label:
            raise ConfigurationError("must be a non-empty string", field="label")
        if not cmath.isfinite(complex(self.amplitude)):
            raise ConfigurationError(f"must be finite, got {self.amplitude!r}", field="amplitude")
        if not math.isfinite(self.base_s_i):
            raise ConfigurationError(f"must be finite, got {self.base_s_i!r}", field="base_s_i")

    @property
    def log_born_weight(self) -> float:
        """log |amplitude|^2, -inf for a zero amplitude."""
        modulus = abs(complex(self.amplitude))
        return 2.0 * math.log(modulus) if modulus > 0 else -math.inf

    def log_weight(self, hbar: float = 1.0) -> float:
        return self.log_born_weight - 2.0 * self.base_s_i / hbar


def _check_branches(branches: Sequence[Branch], minimum: int = 1) -> None:
    if len(branches) < minimum:
        raise ConfigurationError(f"at least {minimum} branch(es) required, got {len(branches)}", field="branches")
    labels = [b.label for b in branches]
    if len(set(labels)) != len(labels):
        raise ConfigurationError(f"labels must be unique, got {labels}", field="branches")


def sample_future_si(branch: Branch, seed) -> float:
    """One draw of the branch's future imaginary action from an explicit seed."""
    return branch.noise.draw(make_rng(seed))


def selection_scores(branches: Sequence[Branch], draws: Sequence[float], hbar: float = 1.0) -> np.ndarray:
    """
    Log-weight score of every branch for one set of noise draws.

    score = log|A|^2 - 2*(base_s_i + future_s_i)/hbar, with a gumbel draw
    entering the score directly.
    """
    return np.array([b.log_weight(hbar) + b.noise.kick(d, hbar) for b, d in zip(branches, draws)])


def realized_outcome(branches: Sequence[Branch], seed, hbar: float = 1.0) -> str:
    """
    Label of the branch that wins one trial.

    One generator is built from the seed and every branch draws from it in
    branch order. Ties go to the earlier branch.
    """
    _check_branches(branches)
    rng = make_rng(seed)
    draws = [b.noise.draw(rng) for b in branches]
    scores = selection_scores(branches, draws, hbar)
    return branches[int(np.argmax(scores))].label


def dominance_ratio(branches: Sequence[Branch], hbar: float = 1.0) -> float:
    """
    Ratio of the second-largest to the largest deterministic branch weight.

    Weights are |A|^2 * exp(-2*base_s_i/hbar), compared in log space so huge
    imaginary-action gaps do not underflow before the ratio is taken.
    """
    _check_branches(branches, minimum=2)
    log_weights = sorted((b.log_weight(hbar) for b in branches), reverse=True)
    if log_weights[0] == -math.inf:
        return 1.0
    return math.exp(log_weights[1] - log_weights[0])


def born_probabilities(branches: Sequence[Branch]) -> Dict[str, float]:
    """|A_b|^2 / sum |A_c|^2 for every branch."""
    _check_branches(branches)
    weights = np.array([abs(complex(b.amplitude)) ** 2 for b in branches])
    total = weights.sum()
    if total == 0:
        raise ConfigurationError("all amplitudes are zero", field="branches")
    return {b.label: float(w / total) for b, w in zip(branches, weights)}


def win_probability(branches: Sequence[Branch], hbar: float = 1.0) -> float:
    """
    Exact probability that the first of two branches is realized.

    The first branch wins when its kick k1 satisfies k2 - k1 <= d, d being
    the difference of the deterministic scores; the probability is the
    integral of pdf_1(u) * cdf_2(u + d) over u.
    """
    _check_branches(branches, minimum=2)
    if len(branches) != 2:
        raise ConfigurationError(f"exactly 2 branches required, got {len(branches)}", field="branches")
    first, second = branches
    d = first.log_weight(hbar) - second.log_weight(hbar)
    if math.isnan(d):
        return 1.0
    dist_1 = first.noise.kick_distribution(hbar)
    dist_2 = second.noise.kick_distribution(hbar)

    if dist_1 is None and dist_2 is None:
        return 1.0 if d >= 0 else 0.0
    if dist_1 is None:
        return float(dist_2.cdf(d))
    if dist_2 is None:
        return float(dist_1.sf(-d))

    value, _ = integrate.quad(lambda u: dist_1.pdf(u) * dist_2.cdf(u + d), -np.inf, np.inf, limit=200)
    return float(min(1.0, max(0.0, value)))


def outcome_distribution(
    branches: Sequence[Branch], n_trials: int, seed: int, hbar: float = 1.0, workers: int = 1
) -> Dict[str, float]:
    """
    Empirical frequency of every branch over independent trials.

    Trial t draws from SeedSequence([seed, t]). Trials are grouped into
    chunks for the worker pool; the integer counts make the result
    independent of the worker count.

    Args:
        branches: Branch set, at least one branch
        n_trials: Number of trials (>= 1)
        seed: Master seed
        hbar: Reduced Planck constant
        workers: Worker threads

    Returns:
        Dictionary label -> frequency in branch order
    """
    _check_branches(branches)
    if not is_integer(n_trials) or n_trials < 1:
        raise ConfigurationError(f"must be an integer >= 1, got {n_trials!r}", field="n_trials")

    def run_chunk(start: int) -> Counter:
        stop = min(start + TRIALS_PER_CHUNK, n_trials)
        return Counter(realized_outcome(branches, trial_seed(seed, t), hbar) for t in range(start, stop))

    counts: Counter = Counter()
    for chunk in ordered_map(run_chunk, range(0, n_trials, TRIALS_PER_CHUNK), workers):
        counts.update(chunk)

    logger.debug("Outcome counts over %d trials: %s", n_trials, dict(counts))
    return {b.label: counts[b.label] / n_trials for b in branches}


def outcome_counts_table(frequencies: Dict[str, float], n_trials: int) -> List[Dict]:
    """Rows (label, count, frequency, binomial standard error) for CSV output."""
    rows = []
    for label, p in frequencies.items():
        rows.append(
            {
                "label": label,
                "count": int(round(p * n_trials)),
                "frequency": p,
                "std_error": math.sqrt(p * (1.0 - p) / n_trials),
            }
        )
    return rows
